use super::{Family, Kernel, KernelMeta};
use crate::error::{invalid, Result, StateCap};
use crate::Scalar;

/// Product chain: pick a factor uniformly and move it, leaving the others.
///
/// States are indexed in mixed radix with the first factor most significant.
pub fn product_kernel<T: Scalar>(factors: &[Kernel<T>], cap: StateCap) -> Result<Kernel<T>> {
    match factors {
        [] => return Err(invalid!("product of zero factors")),
        [only] => return Ok(only.clone()),
        _ => {}
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.size()).collect();
    let total = sizes.iter().try_fold(1u128, |acc, &s| acc.checked_mul(s as u128)).unwrap_or(u128::MAX);
    let size = cap.check(total)?;
    let mut strides = vec![1usize; factors.len()];
    for i in (0..factors.len() - 1).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let weight = T::ratio(1, factors.len() as u64);
    let mut rows = Vec::with_capacity(size);
    let mut stationary = Vec::with_capacity(size);
    for x in 0..size {
        let mut row = Vec::new();
        let mut pi = T::from_count(1);
        for (i, f) in factors.iter().enumerate() {
            let digit = (x / strides[i]) % sizes[i];
            pi = pi * f.stationary()[digit].clone();
            let base = x - digit * strides[i];
            let (cols, vals) = f.row(digit);
            for (&c, v) in cols.iter().zip(vals) {
                row.push((base + c * strides[i], weight.clone() * v.clone()));
            }
        }
        rows.push(row);
        stationary.push(pi);
    }
    Kernel::from_rows(KernelMeta::new(Family::Product), rows, stationary)
}
