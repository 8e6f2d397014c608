use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::functional::{dirichlet_form, entropy_unchecked, StateFunction};
use crate::chains::Kernel;
use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;
use crate::scalar::CompensatedSum;
use crate::Real;

/// Largest kernel the gradient search accepts.
pub const SEARCH_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub restarts: usize,
    /// Relative improvement below which a descent run stops.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { restarts: 200, tol: 1e-10, max_iters: 500, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<T> {
    /// Smallest `E(√f,√f)/Ent(f)` found, an upper bound on the log-Sobolev constant.
    pub best_ratio: T,
    /// The minimizing `f`, scaled so that `E_π f = 1`.
    pub witness: StateFunction<T>,
    pub best_restart: usize,
    pub restarts: usize,
    /// Restarts that collapsed to a constant function.
    pub degenerate: usize,
}

struct Objective<'a, T> {
    kernel: &'a Kernel<T>,
}

impl<T: Real> Objective<'_, T> {
    fn pi(&self) -> &[T] {
        self.kernel.stationary()
    }

    /// Rescales `g` so that `Σ π g² = 1`; false if `g` vanishes.
    fn normalize(&self, g: &mut [T]) -> bool {
        let norm: CompensatedSum<T> = self.pi().iter().zip(g.iter()).map(|(&p, &v)| p * v * v).collect();
        let norm = norm.value();
        if !(norm > T::zero()) || !norm.is_finite() {
            return false;
        }
        let s = norm.sqrt().recip();
        g.iter_mut().for_each(|v| *v = *v * s);
        true
    }

    fn ratio(&self, g: &[T]) -> Option<(T, T, T)> {
        let f: Vec<T> = g.iter().map(|&v| v * v).collect();
        let ent = entropy_unchecked(self.pi(), &f);
        if !(ent > T::zero()) {
            return None;
        }
        let e = dirichlet_form(self.kernel, g).ok()?;
        Some((e / ent, e, ent))
    }

    fn gradient(&self, g: &[T], e: T, ent: T, out: &mut [T]) {
        let pi = self.pi();
        out.iter_mut().for_each(|v| *v = T::zero());
        let mut grad_e = vec![T::zero(); g.len()];
        for (x, y, &p) in self.kernel.entries() {
            let w = pi[x] * p * (g[x] - g[y]);
            grad_e[x] = grad_e[x] + w;
            grad_e[y] = grad_e[y] - w;
        }
        // Σ π g² = 1 after normalization, so the mean of f is one.
        let inv = ent.recip();
        for z in 0..g.len() {
            let f = g[z] * g[z];
            let grad_ent = if f > T::zero() { T::lit(2.0) * g[z] * pi[z] * f.ln() } else { T::zero() };
            out[z] = (grad_e[z] - e * inv * grad_ent) * inv;
        }
    }

    /// Projected descent with backtracking; returns the final ratio and point.
    fn descend(&self, mut g: Vec<T>, opts: &SearchOptions) -> Option<(T, Vec<T>)> {
        if !self.normalize(&mut g) {
            return None;
        }
        let (mut r, mut e, mut ent) = self.ratio(&g)?;
        let mut grad = vec![T::zero(); g.len()];
        let mut cand = vec![T::zero(); g.len()];
        let mut step: Option<T> = None;
        for _ in 0..opts.max_iters {
            self.gradient(&g, e, ent, &mut grad);
            let gmax = grad.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if !(gmax > T::zero()) {
                break;
            }
            let mut s = step.unwrap_or_else(|| T::lit(0.1) / gmax);
            let mut accepted = None;
            while s * gmax > T::lit(1e-14) {
                for ((c, &v), &d) in cand.iter_mut().zip(&g).zip(&grad) {
                    *c = (v - s * d).max(T::zero());
                }
                if self.normalize(&mut cand) {
                    if let Some(next) = self.ratio(&cand) {
                        if next.0 < r {
                            accepted = Some(next);
                            break;
                        }
                    }
                }
                s = s * T::lit(0.5);
            }
            let Some((nr, ne, nent)) = accepted else { break };
            std::mem::swap(&mut g, &mut cand);
            let improvement = r - nr;
            r = nr;
            e = ne;
            ent = nent;
            step = Some(s * T::lit(2.0));
            if improvement <= T::lit(opts.tol) * r {
                break;
            }
        }
        Some((r, g))
    }
}

/// A centered function close to the slowest-decaying eigenvector, via
/// deflated power iteration on the lazy kernel.
fn slow_direction<T: Real>(kernel: &Kernel<T>, seed: u64) -> Vec<T> {
    let n = kernel.size();
    let pi = kernel.stationary();
    let mut rng = stream_rng(seed, u64::MAX);
    let mut v: Vec<T> = (0..n).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect();
    let mut next = vec![T::zero(); n];
    let iters = 200 + 20 * n.min(500);
    for _ in 0..iters {
        let mean: T = pi.iter().zip(&v).map(|(&p, &x)| p * x).sum();
        v.iter_mut().for_each(|x| *x = *x - mean);
        for (x, out) in next.iter_mut().enumerate() {
            let (cols, vals) = kernel.row(x);
            let pv: T = cols.iter().zip(vals).map(|(&y, &p)| p * v[y]).sum();
            *out = (v[x] + pv) * T::lit(0.5);
        }
        let scale = next.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if !(scale > T::zero()) {
            break;
        }
        for (a, b) in v.iter_mut().zip(&next) {
            *a = *b / scale;
        }
    }
    let mean: T = pi.iter().zip(&v).map(|(&p, &x)| p * x).sum();
    v.iter_mut().for_each(|x| *x = *x - mean);
    v
}

enum Start {
    SlowDirection,
    Indicator(usize),
    Random,
    Perturb,
}

/// Multi-start projected gradient descent on `E(√f,√f)/Ent(f)` over `f ≥ 0`.
///
/// Restarts run in parallel with one random stream each; the result does not
/// depend on the thread count. The first half of the restarts explores
/// (slow-eigenvector, indicator and random starts), the second half perturbs
/// the best point of the first half multiplicatively.
pub fn lsc_search<T: Real>(kernel: &Kernel<T>, opts: &SearchOptions) -> Result<SearchOutcome<T>> {
    let n = kernel.size();
    if n > SEARCH_LIMIT {
        return Err(invalid!("{n} states exceed the search limit of {SEARCH_LIMIT}"));
    }
    if n < 2 {
        return Err(invalid!("log-Sobolev search needs at least two states"));
    }
    if opts.restarts == 0 {
        return Err(invalid!("at least one restart is required"));
    }
    let obj = Objective { kernel };
    let explore = opts.restarts.div_ceil(2);
    let indicators = 4.min(n).min(explore.saturating_sub(1));
    let slow = slow_direction(kernel, opts.seed);
    let slow_scale = slow.iter().fold(T::zero(), |m, x| m.max(x.abs()));

    let run = |r: usize, start: Start, base: Option<&[T]>| -> Option<(T, Vec<T>)> {
        let mut rng = stream_rng(opts.seed, r as u64);
        let g: Vec<T> = match start {
            Start::SlowDirection => {
                if !(slow_scale > T::zero()) {
                    return None;
                }
                let eps = T::lit(1e-5) / slow_scale;
                slow.iter().map(|&v| T::one() + eps * v).collect()
            }
            Start::Indicator(x) => (0..n).map(|y| if y == x { T::one() } else { T::zero() }).collect(),
            Start::Random => {
                let spread = rng.random_range(0.05..3.0);
                (0..n).map(|_| T::lit((spread * (rng.random::<f64>() - 0.5)).exp())).collect()
            }
            Start::Perturb => {
                let spread = rng.random_range(0.01..0.5);
                base?.iter().map(|&v| v * T::lit((spread * (rng.random::<f64>() - 0.5)).exp())).collect()
            }
        };
        obj.descend(g, opts)
    };

    let first: Vec<Option<(T, Vec<T>)>> = (0..explore)
        .into_par_iter()
        .map(|r| {
            let start = match r {
                0 => Start::SlowDirection,
                r if r <= indicators => Start::Indicator((r - 1) * n / indicators.max(1)),
                _ => Start::Random,
            };
            run(r, start, None)
        })
        .collect();
    let pick = |results: &[Option<(T, Vec<T>)>], offset: usize| {
        results
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.as_ref().map(|(r, _)| (i + offset, *r)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite ratios").then(a.0.cmp(&b.0)))
    };
    let best_first = pick(&first, 0);
    let base = best_first.map(|(i, _)| first[i].as_ref().expect("present").1.clone());
    let second: Vec<Option<(T, Vec<T>)>> =
        (explore..opts.restarts).into_par_iter().map(|r| run(r, Start::Perturb, base.as_deref())).collect();

    let degenerate = first.iter().chain(&second).filter(|o| o.is_none()).count();
    let best_second = pick(&second, explore);
    let best = match (best_first, best_second) {
        (Some(a), Some(b)) if b.1 < a.1 => b,
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(Error::InvalidArgument("every restart degenerated to a constant function".into())),
    };
    let (ratio, g) = if best.0 < explore { first[best.0].clone() } else { second[best.0 - explore].clone() }
        .expect("best restart has a result");
    let witness = StateFunction::new(g.iter().map(|&v| v * v).collect())?;
    Ok(SearchOutcome { best_ratio: ratio, witness, best_restart: best.0, restarts: opts.restarts, degenerate })
}
