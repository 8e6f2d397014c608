use rayon::prelude::*;
use serde::Serialize;

use super::{pointwise_relative_error, tv_distance, Distribution};
use crate::chains::{build_kernel, ChainSpec, Kernel};
use crate::error::{invalid, Error, Result};
use crate::{GateMeasure, Real, StateCap};

/// Which start states a worst-case mixing quantity ranges over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Starts {
    All,
    /// A subset, e.g. a single state for vertex-transitive chains.
    Only(Vec<usize>),
}

impl Starts {
    fn resolve(&self, size: usize) -> Result<Vec<usize>> {
        match self {
            Starts::All => Ok((0..size).collect()),
            Starts::Only(v) => {
                if v.is_empty() {
                    return Err(invalid!("at least one start state is required"));
                }
                if let Some(&bad) = v.iter().find(|&&x| x >= size) {
                    return Err(invalid!("start state {bad} out of range 0..{size}"));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Exact `t`-step distribution from a point mass.
pub fn evolve<T: Real>(kernel: &Kernel<T>, start: usize, t: usize) -> Result<Distribution<T>> {
    let mut p = Distribution::point_mass(kernel.size(), start)?.into_vec();
    let mut next = vec![T::zero(); p.len()];
    for _ in 0..t {
        kernel.left_apply(&p, &mut next);
        std::mem::swap(&mut p, &mut next);
    }
    Ok(Distribution::new_unchecked(p))
}

/// Worst case over the start states at one time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingPoint<T> {
    pub t: usize,
    /// `max_x TV(p_x^t, π)`.
    pub tv: T,
    /// `max_x max_y |p_x^t(y) − π(y)| / π(y)`.
    pub pointwise: T,
}

struct Evolution<'a, T> {
    kernel: &'a Kernel<T>,
    dists: Vec<Vec<T>>,
    scratch: Vec<Vec<T>>,
    t: usize,
}

impl<'a, T: Real> Evolution<'a, T> {
    fn new(kernel: &'a Kernel<T>, starts: &Starts) -> Result<Self> {
        let n = kernel.size();
        let dists = starts
            .resolve(n)?
            .into_iter()
            .map(|x| Distribution::point_mass(n, x).map(Distribution::into_vec))
            .collect::<Result<Vec<_>>>()?;
        let scratch = vec![vec![T::zero(); n]; dists.len()];
        Ok(Self { kernel, dists, scratch, t: 0 })
    }

    fn point(&self) -> MixingPoint<T> {
        let pi = self.kernel.stationary();
        let (tv, pointwise) = self
            .dists
            .par_iter()
            .map(|p| (tv_distance(p, pi).expect("aligned"), pointwise_relative_error(p, pi).expect("aligned")))
            .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        MixingPoint { t: self.t, tv, pointwise }
    }

    fn step(&mut self) {
        let kernel = self.kernel;
        self.dists.par_iter_mut().zip(self.scratch.par_iter_mut()).for_each(|(p, next)| {
            kernel.left_apply(p, next);
            std::mem::swap(p, next);
        });
        self.t += 1;
    }
}

/// The series `t = 0..=t_max` of worst-case distances to stationarity.
pub fn mixing_series<T: Real>(kernel: &Kernel<T>, starts: &Starts, t_max: usize) -> Result<Vec<MixingPoint<T>>> {
    let mut ev = Evolution::new(kernel, starts)?;
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(ev.point());
    for _ in 0..t_max {
        ev.step();
        out.push(ev.point());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRun<T> {
    /// `τ_ε`: first `t` with worst-case TV at most ε.
    pub tau: usize,
    /// Series for `t = 0..=tau`.
    pub series: Vec<MixingPoint<T>>,
}

/// `τ_ε = min{t : max_x TV(p_x^t, π) ≤ ε}` by exact evolution.
pub fn mixing_time_exact<T: Real>(
    kernel: &Kernel<T>,
    epsilon: T,
    starts: &Starts,
    max_t: usize,
) -> Result<MixingRun<T>> {
    if !(epsilon > T::zero()) {
        return Err(invalid!("epsilon must be positive"));
    }
    let mut ev = Evolution::new(kernel, starts)?;
    let mut series = vec![ev.point()];
    while series.last().expect("nonempty").tv > epsilon {
        if ev.t >= max_t {
            return Err(Error::Invariant(format!("TV still above {epsilon} after {max_t} steps")));
        }
        ev.step();
        series.push(ev.point());
    }
    Ok(MixingRun { tau: ev.t, series })
}

fn circuit_kernel(n: usize, k: usize, mode: GateMeasure, cap: StateCap) -> Result<Kernel<f64>> {
    build_kernel(&ChainSpec::Rev { k, n, mode }, cap)
}

/// Exact ε for which `t` random gates form an ε-approximate k-wise
/// independent permutation: the worst TV over the start tuples.
pub fn kwise_tv_exact(n: usize, k: usize, t: usize, mode: GateMeasure, starts: &Starts, cap: StateCap) -> Result<f64> {
    Ok(kwise_tv_series(n, k, t, mode, starts, cap)?.last().expect("nonempty").tv)
}

/// [`kwise_tv_exact`] for every gate count `0..=t_max`.
pub fn kwise_tv_series(
    n: usize,
    k: usize,
    t_max: usize,
    mode: GateMeasure,
    starts: &Starts,
    cap: StateCap,
) -> Result<Vec<MixingPoint<f64>>> {
    let kernel = circuit_kernel(n, k, mode, cap)?;
    mixing_series(&kernel, starts, t_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kern(spec: ChainSpec) -> Kernel<f64> {
        build_kernel(&spec, StateCap::DEFAULT).unwrap()
    }

    fn rev32() -> Kernel<f64> {
        kern(ChainSpec::Rev { k: 2, n: 3, mode: GateMeasure::ParameterUniform })
    }

    #[test]
    fn evolution_basics() {
        let kn = kern(ChainSpec::Complete { colors: 5 });
        assert_eq!(&evolve(&kn, 2, 0).unwrap()[..], &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(evolve(&kn, 2, 1).unwrap().iter().all(|&p| (p - 0.2).abs() < 1e-15));
        let p = evolve(&rev32(), 0, 5).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(evolve(&kn, 5, 1).is_err());
    }

    #[test]
    fn complete_graph_mixes_in_one_step() {
        let kn = kern(ChainSpec::Complete { colors: 6 });
        // TV at t = 0 is 5/6
        for eps in [0.01, 0.5, 0.8] {
            assert_eq!(mixing_time_exact(&kn, eps, &Starts::All, 10).unwrap().tau, 1);
        }
    }

    #[test]
    fn rev_mixing_is_monotone() {
        let k = rev32();
        let run = mixing_time_exact(&k, 0.25, &Starts::All, 10_000).unwrap();
        let series = mixing_series(&k, &Starts::All, 2 * run.tau).unwrap();
        assert!(series.windows(2).all(|w| w[1].tv <= w[0].tv + 1e-15));
        let taus: Vec<usize> = [0.5, 0.25, 0.1, 0.01]
            .iter()
            .map(|&e| mixing_time_exact(&k, e, &Starts::All, 10_000).unwrap().tau)
            .collect();
        assert!(taus.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kwise_at_time_zero_is_point_mass_distance() {
        let tv = kwise_tv_exact(3, 2, 0, GateMeasure::ParameterUniform, &Starts::All, StateCap::DEFAULT).unwrap();
        assert!((tv - (1.0 - 1.0 / 56.0)).abs() < 1e-15);
    }

    #[test]
    fn kwise_single_string_matches_tuple_chain() {
        // lazy walk on the 3-cube, second eigenvalue 2/3
        let series = kwise_tv_series(3, 1, 60, GateMeasure::ParameterUniform, &Starts::All, StateCap::DEFAULT).unwrap();
        assert!(series.last().unwrap().tv < 1e-9);
        let direct =
            mixing_series(&kern(ChainSpec::Rev { k: 1, n: 3, mode: GateMeasure::ParameterUniform }), &Starts::All, 60)
                .unwrap();
        assert_eq!(series, direct);
    }

    #[test]
    fn bad_starts() {
        let k = rev32();
        assert!(mixing_series(&k, &Starts::Only(vec![]), 1).is_err());
        assert!(mixing_series(&k, &Starts::Only(vec![56]), 1).is_err());
        assert!(mixing_time_exact(&k, 0.0, &Starts::All, 10).is_err());
    }
}
