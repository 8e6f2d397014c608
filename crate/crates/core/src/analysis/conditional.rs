use super::functional::entropy_unchecked;
use super::StateFunction;
use crate::error::{invalid, Result};
use crate::{Real, TupleSpace};

fn check_args<T>(space: &TupleSpace, f: &[T], i: usize) -> Result<()> {
    if f.len() != space.size() {
        return Err(invalid!("function has {} values for {} tuples", f.len(), space.size()));
    }
    if i >= space.k() {
        return Err(invalid!("coordinate {i} out of range for k = {}", space.k()));
    }
    Ok(())
}

/// Indices of `{x : x_i = c}` listed in the order of the smaller space
/// `Θ_{k−1,N−1}`, obtained by deleting coordinate `i` and closing the gap at `c`.
fn slice_indices(space: &TupleSpace, i: usize, c: u32) -> Result<Vec<usize>> {
    let k = space.k();
    if k == 1 {
        return Ok(vec![space.index_of(&[c])]);
    }
    let sub = TupleSpace::new(k - 1, space.colors() - 1)?;
    let mut small = vec![0u32; k - 1];
    let mut full = vec![0u32; k];
    let mut out = Vec::with_capacity(sub.size());
    for idx in 0..sub.size() {
        sub.values_at(idx, &mut small);
        for (j, slot) in full.iter_mut().enumerate() {
            *slot = match j.cmp(&i) {
                std::cmp::Ordering::Less => small[j],
                std::cmp::Ordering::Equal => c,
                std::cmp::Ordering::Greater => small[j - 1],
            };
            if j != i && *slot >= c {
                *slot += 1;
            }
        }
        out.push(space.index_of(&full));
    }
    Ok(out)
}

/// Restriction `f_{i,c}` of `f` to the tuples with `x_i = c`, as a function on `Θ_{k−1,N−1}`.
pub fn restrict_conditional<T: Real>(space: &TupleSpace, f: &[T], i: usize, c: u32) -> Result<StateFunction<T>> {
    check_args(space, f, i)?;
    if c >= space.colors() {
        return Err(invalid!("color {c} out of range for N = {}", space.colors()));
    }
    let values = slice_indices(space, i, c)?.into_iter().map(|x| f[x]).collect();
    StateFunction::new(values)
}

/// `F_i(c)`: the average of `f` over the tuples with `x_i = c`, for each color `c`.
pub fn marginal<T: Real>(space: &TupleSpace, f: &[T], i: usize) -> Result<StateFunction<T>> {
    check_args(space, f, i)?;
    let values = (0..space.colors())
        .map(|c| {
            let slice = restrict_conditional(space, f, i, c)?;
            Ok(slice.iter().copied().sum::<T>() / T::from_usize_lossy(slice.len()))
        })
        .collect::<Result<Vec<T>>>()?;
    StateFunction::new(values)
}

/// `|Ent(f) − E_c[Ent(f_{i,c})] − Ent(F_i)|` under uniform measures.
pub fn chain_rule_residual<T: Real>(space: &TupleSpace, f: &[T], i: usize) -> Result<T> {
    check_args(space, f, i)?;
    if f.iter().any(|v| *v < T::zero()) {
        return Err(invalid!("chain rule needs a nonnegative function"));
    }
    let uniform = |m: usize| vec![T::one() / T::from_usize_lossy(m); m];
    let total = entropy_unchecked(&uniform(f.len()), f);
    let colors = space.colors() as usize;
    let mut conditional = T::zero();
    let mut means = Vec::with_capacity(colors);
    for c in 0..space.colors() {
        let slice = restrict_conditional(space, f, i, c)?;
        let pi = uniform(slice.len());
        conditional = conditional + entropy_unchecked(&pi, &slice);
        means.push(slice.iter().copied().sum::<T>() / T::from_usize_lossy(slice.len()));
    }
    conditional = conditional / T::from_usize_lossy(colors);
    let marginal_ent = entropy_unchecked(&uniform(colors), &means);
    Ok((total - conditional - marginal_ent).abs())
}
