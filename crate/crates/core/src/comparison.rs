//! The randomized path map Δ from uniform-clique-coloring moves to paths of
//! standard-clique-coloring moves, its exact congestion, and the resulting
//! Dirichlet-form comparison.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::dirichlet_form;
use crate::chains::{build_kernel, cc_move, ucc_move, ChainSpec, Kernel};
use crate::error::{invalid, Result};
use crate::primitives::falling_factorial;
use crate::{ColorTuple, Rational, Real, StateCap, TupleSpace};

/// A walk given by its visited states; consecutive states form the edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    states: Vec<ColorTuple>,
}

impl Path {
    pub fn states(&self) -> &[ColorTuple] {
        &self.states
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> &ColorTuple {
        &self.states[0]
    }

    pub fn end(&self) -> &ColorTuple {
        self.states.last().expect("paths have at least one state")
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ColorTuple, &ColorTuple)> {
        self.states.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Edges as index pairs in `space`.
    pub fn edge_indices(&self, space: &TupleSpace) -> Result<Vec<(usize, usize)>> {
        self.edges().map(|(a, b)| Ok((space.index(a)?, space.index(b)?))).collect()
    }

    /// True when every edge is a move of the standard coloring chain.
    pub fn is_cc_path(&self) -> bool {
        self.edges().all(|(a, b)| is_cc_edge(a, b))
    }
}

/// Whether `b` is reachable from `a` in one standard-coloring move (self-loops included).
pub fn is_cc_edge(a: &ColorTuple, b: &ColorTuple) -> bool {
    if a.k() != b.k() || a.colors() != b.colors() {
        return false;
    }
    let diff: Vec<usize> = (0..a.k()).filter(|&i| a.get(i) != b.get(i)).collect();
    match diff.as_slice() {
        [] => true,
        [i] => !a.contains(b.get(*i)),
        _ => false,
    }
}

fn swap_partner(x: &ColorTuple, i: usize, l: u32) -> Result<Option<usize>> {
    if i >= x.k() || l >= x.colors() {
        return Err(invalid!("move ({i}, {l}) out of range for {x:?}"));
    }
    Ok(x.position(l).filter(|&j| j != i))
}

/// Δ(x, x^{i,l}) with the free color `l_prime` fixed.
///
/// `l_prime` is ignored (and may be `None`) unless `l` is held by another entry.
pub fn delta_path_with(x: &ColorTuple, i: usize, l: u32, l_prime: Option<u32>) -> Result<Path> {
    let Some(j) = swap_partner(x, i, l)? else {
        return Ok(Path { states: vec![x.clone(), ucc_move(x, i, l)?] });
    };
    let lp = l_prime.ok_or_else(|| invalid!("swap move needs a free color"))?;
    if lp >= x.colors() || x.contains(lp) {
        return Err(invalid!("color {lp} is not free in {x:?}"));
    }
    let y = cc_move(x, i, lp)?;
    let z = cc_move(&y, j, x.get(i))?;
    let w = cc_move(&z, i, x.get(j))?;
    Ok(Path { states: vec![x.clone(), y, z, w] })
}

/// All equiprobable realizations of Δ(x, x^{i,l}).
pub fn delta_path_realizations(x: &ColorTuple, i: usize, l: u32) -> Result<Vec<Path>> {
    if swap_partner(x, i, l)?.is_none() {
        return Ok(vec![delta_path_with(x, i, l, None)?]);
    }
    let free: Vec<u32> = x.unused().collect();
    if free.is_empty() {
        return Err(invalid!("no free color: swap paths need k < N"));
    }
    free.into_iter().map(|lp| delta_path_with(x, i, l, Some(lp))).collect()
}

/// Δ(x, x^{i,l}) with the free color drawn uniformly.
pub fn delta_path<R: Rng + ?Sized>(x: &ColorTuple, i: usize, l: u32, rng: &mut R) -> Result<Path> {
    if swap_partner(x, i, l)?.is_none() {
        return delta_path_with(x, i, l, None);
    }
    let free = x.colors() as usize - x.k();
    if free == 0 {
        return Err(invalid!("no free color: swap paths need k < N"));
    }
    let lp = x.unused().nth(rng.random_range(0..free)).expect("index below free count");
    delta_path_with(x, i, l, Some(lp))
}

/// Exact congestion A(Δ) of the path map on Θ_{k,N}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Congestion {
    pub k: usize,
    #[serde(rename = "N")]
    pub colors: u32,
    /// A(Δ) = num / den in lowest terms.
    pub num: u64,
    pub den: u64,
    /// Most loaded standard-coloring edge.
    pub argmax: (Vec<u32>, Vec<u32>),
}

impl Congestion {
    pub fn exact(&self) -> Rational {
        Rational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn value<T: Real>(&self) -> T {
        T::lit(self.num as f64) / T::lit(self.den as f64)
    }
}

/// `(N−k+1)/N · (1 + 9(k−1)/(N−k))`, exact.
pub fn formula_bound(k: usize, colors: u32) -> Result<Rational> {
    let (k, n) = (k as i64, colors as i64);
    if k == 0 || n < 2 || k > n || (k >= 2 && k == n) {
        return Err(invalid!("formula bound needs 1 ≤ k < N"));
    }
    if k == 1 {
        return Ok(Rational::from_integer(BigInt::from(1)));
    }
    let num = (n - k + 1) * (n - k + 9 * (k - 1));
    let den = n * (n - k);
    Ok(Rational::new(BigInt::from(num), BigInt::from(den)))
}

/// Constant bound on A(Δ) for `k ≤ N/2`.
pub const CONGESTION_BOUND: u64 = 19;

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact A(Δ), maximized over every standard-coloring edge including self-loops.
///
/// Each uniform move has weight `1/(kN)`; each swap path is one of `N−k`
/// equiprobable realizations of length 3. Loads are accumulated in integer
/// units of `1/(kN(N−k))`, so the result is exact.
pub fn congestion_delta(k: usize, colors: u32, cap: StateCap) -> Result<Congestion> {
    if k == 0 || colors < 2 || k >= colors as usize {
        return Err(invalid!("congestion needs 1 ≤ k < N, got k = {k}, N = {colors}"));
    }
    cap.check(falling_factorial(colors as u64, k as u64))?;
    let space = TupleSpace::new(k, colors)?;
    // realizations per swap move; k = 1 has no swaps
    let d: u64 = if k == 1 { 1 } else { (colors as usize - k) as u64 };
    let loads: HashMap<(usize, usize), u64> = (0..space.size())
        .into_par_iter()
        .fold(HashMap::new, |mut acc, x| {
            let tx = space.tuple(x).expect("index in range");
            for i in 0..k {
                for l in 0..colors {
                    let paths = delta_path_realizations(&tx, i, l).expect("valid move");
                    let unit = if paths[0].len() == 1 { d } else { 3 };
                    for p in &paths {
                        for e in p.edge_indices(&space).expect("tuples in space") {
                            *acc.entry(e).or_insert(0) += unit;
                        }
                    }
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (e, v) in b {
                *a.entry(e).or_insert(0) += v;
            }
            a
        });
    // P_cc(a,b) is 1/(k(N−k+1)) off the diagonal and 1/(N−k+1) on it
    let ((a, b), load, mult) = loads
        .iter()
        .map(|(&e, &v)| (e, v, if e.0 == e.1 { k as u64 } else { 1 }))
        .max_by(|p, q| (p.1 as u128 * q.2 as u128).cmp(&(q.1 as u128 * p.2 as u128)).then(q.0.cmp(&p.0)))
        .ok_or_else(|| invalid!("no edges"))?;
    let num = load as u128 * (colors as u128 - k as u128 + 1);
    let den = colors as u128 * d as u128 * mult as u128;
    let g = gcd(num, den);
    Ok(Congestion {
        k,
        colors,
        num: (num / g) as u64,
        den: (den / g) as u64,
        argmax: (space.tuple(a)?.into_values(), space.tuple(b)?.into_values()),
    })
}

/// Kernels and congestion needed to test `E_ucc(f,f) ≤ A(Δ)·E_cc(f,f)` repeatedly.
#[derive(Clone, Debug)]
pub struct ComparisonContext<T> {
    pub ucc: Kernel<T>,
    pub cc: Kernel<T>,
    pub congestion: Congestion,
}

impl<T: Real> ComparisonContext<T> {
    pub fn new(k: usize, colors: u32, cap: StateCap) -> Result<Self> {
        Ok(Self {
            ucc: build_kernel(&ChainSpec::Ucc { k, colors }, cap)?,
            cc: build_kernel(&ChainSpec::Cc { k, colors }, cap)?,
            congestion: congestion_delta(k, colors, cap)?,
        })
    }

    /// `max(0, E_ucc(f,f) − A(Δ)·E_cc(f,f))`.
    pub fn residual(&self, f: &[T]) -> Result<T> {
        let upper = dirichlet_form(&self.ucc, f)?;
        let lower = dirichlet_form(&self.cc, f)?;
        Ok((upper - self.congestion.value::<T>() * lower).max(T::zero()))
    }
}

/// One-shot form of [`ComparisonContext::residual`].
pub fn dirichlet_comparison_residual<T: Real>(f: &[T], k: usize, colors: u32, cap: StateCap) -> Result<T> {
    ComparisonContext::new(k, colors, cap)?.residual(f)
}
