use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::tv_distance;
use crate::chains::{step_cc, step_rev_words, step_ucc, ChainSpec, Kernel};
use crate::error::{invalid, Result};
use crate::primitives::GateSampler;
use crate::rng::{stream_rng, StreamRng};
use crate::TupleSpace;

const CHUNK: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalPoint {
    pub t: usize,
    /// TV between the empirical law of the walk at time `t` and π.
    pub tv: f64,
}

enum Walker<'a> {
    Coloring { space: TupleSpace, uniform: bool },
    Circuit { space: TupleSpace, sampler: GateSampler },
    Rows(&'a Kernel<f64>),
}

impl Walker<'_> {
    fn step(&self, x: usize, rng: &mut StreamRng) -> usize {
        match self {
            Walker::Coloring { space, uniform } => {
                let t = space.tuple(x).expect("state in range");
                let y = if *uniform { step_ucc(&t, rng) } else { step_cc(&t, rng) };
                space.index(&y).expect("same space")
            }
            Walker::Circuit { space, sampler } => {
                let mut vals = vec![0u32; space.k()];
                space.values_at(x, &mut vals);
                let mut words: Vec<u64> = vals.iter().map(|&v| v as u64).collect();
                step_rev_words(&mut words, sampler, rng);
                vals.iter_mut().zip(&words).for_each(|(v, &w)| *v = w as u32);
                space.index_of(&vals)
            }
            Walker::Rows(kernel) => {
                let (cols, vals) = kernel.row(x);
                let mut u: f64 = rng.random();
                for (&y, &p) in cols.iter().zip(vals) {
                    if u < p {
                        return y;
                    }
                    u -= p;
                }
                *cols.last().expect("rows are nonempty")
            }
        }
    }
}

/// Empirical TV to stationarity at each `t` in `times`, from `samples`
/// independent walks started at `start`.
///
/// Coloring and circuit chains are simulated with their own step samplers;
/// other families sample the kernel rows. The estimate carries an upward
/// bias of order `sqrt(states / samples)`.
pub fn empirical_tv_series(
    spec: &ChainSpec,
    kernel: &Kernel<f64>,
    start: usize,
    times: &[usize],
    samples: u64,
    seed: u64,
) -> Result<Vec<EmpiricalPoint>> {
    let size = kernel.size();
    if start >= size {
        return Err(invalid!("start state {start} out of range 0..{size}"));
    }
    if samples == 0 {
        return Err(invalid!("zero samples"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid!("times must be strictly increasing"));
    }
    let walker = match spec {
        ChainSpec::Cc { k, colors } => Walker::Coloring { space: TupleSpace::new(*k, *colors)?, uniform: false },
        ChainSpec::Ucc { k, colors } => Walker::Coloring { space: TupleSpace::new(*k, *colors)?, uniform: true },
        ChainSpec::Complete { colors } => Walker::Coloring { space: TupleSpace::new(1, *colors)?, uniform: true },
        ChainSpec::Rev { k, n, mode } => {
            Walker::Circuit { space: TupleSpace::new(*k, 1u32 << n)?, sampler: GateSampler::new(*n, *mode)? }
        }
        _ => Walker::Rows(kernel),
    };
    let counts = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let mut local = vec![vec![0u64; size]; times.len()];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let mut x = start;
                let mut t = 0;
                for (slot, &target) in times.iter().enumerate() {
                    while t < target {
                        x = walker.step(x, &mut rng);
                        t += 1;
                    }
                    local[slot][x] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![vec![0u64; size]; times.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
                }
                a
            },
        );
    times
        .iter()
        .zip(counts)
        .map(|(&t, row)| {
            let p: Vec<f64> = row.iter().map(|&c| c as f64 / samples as f64).collect();
            Ok(EmpiricalPoint { t, tv: tv_distance(&p, kernel.stationary())? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::build_kernel;
    use crate::mixing::{mixing_series, Starts};
    use crate::{GateMeasure, StateCap};

    #[test]
    fn tracks_exact_series() {
        for spec in [
            ChainSpec::Ucc { k: 2, colors: 4 },
            ChainSpec::Cc { k: 2, colors: 4 },
            ChainSpec::Rev { k: 1, n: 3, mode: GateMeasure::ParameterUniform },
        ] {
            let kernel: Kernel<f64> = build_kernel(&spec, StateCap::DEFAULT).unwrap();
            let exact = mixing_series(&kernel, &Starts::Only(vec![0]), 6).unwrap();
            let times = [0, 1, 2, 6];
            let emp = empirical_tv_series(&spec, &kernel, 0, &times, 200_000, 5).unwrap();
            for (e, &t) in emp.iter().zip(&times) {
                // bias ≈ sqrt(states / samples) plus noise
                assert!((e.tv - exact[t].tv).abs() < 0.02, "{spec:?} t={t}: {} vs {}", e.tv, exact[t].tv);
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = ChainSpec::Complete { colors: 3 };
        let kernel: Kernel<f64> = build_kernel(&spec, StateCap::DEFAULT).unwrap();
        assert!(empirical_tv_series(&spec, &kernel, 3, &[1], 10, 0).is_err());
        assert!(empirical_tv_series(&spec, &kernel, 0, &[2, 1], 10, 0).is_err());
        assert!(empirical_tv_series(&spec, &kernel, 0, &[1], 0, 0).is_err());
    }
}
