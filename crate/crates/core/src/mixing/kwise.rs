use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::step_rev_words;
use crate::error::{invalid, Error, Result};
use crate::primitives::GateSampler;
use crate::rng::{stream_rng, StreamRng};
use crate::stats::chi_square_gof;
use crate::GateMeasure;

const CHUNK: u64 = 1024;
/// Adjacent cells are pooled until each expects at least this many counts.
const MIN_EXPECTED: f64 = 5.0;

/// Projection of a k-tuple of strings whose law under uniform distinct tuples is known exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// Hamming weight of the first string.
    HammingWeight,
    /// Low bits of `y₁ ⊕ y₂`.
    XorProfile,
    /// Lowest bit of every string, packed into a k-bit index.
    LowBits,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::HammingWeight => "hamming-weight",
            Statistic::XorProfile => "xor-profile",
            Statistic::LowBits => "low-bits",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming-weight" => Ok(Statistic::HammingWeight),
            "xor-profile" => Ok(Statistic::XorProfile),
            "low-bits" => Ok(Statistic::LowBits),
            _ => Err(invalid!("unknown statistic {s:?}")),
        }
    }
}

/// Where the sampled tuples come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KwiseSource {
    /// A fresh random circuit applied to the tuple `(0, 1, …, k−1)`.
    Circuit,
    /// Uniform distinct tuples, the positive control.
    Uniform,
}

impl FromStr for KwiseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit" => Ok(KwiseSource::Circuit),
            "uniform" => Ok(KwiseSource::Uniform),
            _ => Err(invalid!("unknown source {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KwiseTestConfig {
    pub n: usize,
    pub k: usize,
    pub gates: usize,
    pub samples: u64,
    pub statistic: Statistic,
    /// Cell count for `xor-profile`, a power of two at most `2^n`.
    pub bins: usize,
    pub seed: u64,
    pub gate_mode: GateMeasure,
    pub source: KwiseSource,
}

impl Default for KwiseTestConfig {
    fn default() -> Self {
        Self {
            n: 12,
            k: 2,
            gates: 2000,
            samples: 100_000,
            statistic: Statistic::XorProfile,
            bins: 64,
            seed: 0,
            gate_mode: GateMeasure::ParameterUniform,
            source: KwiseSource::Circuit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KwiseTestReport {
    pub n: usize,
    pub k: usize,
    pub gates: usize,
    #[serde(rename = "M")]
    pub samples: u64,
    pub statistic: Statistic,
    pub bins: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub seed: u64,
    pub gate_mode: GateMeasure,
    pub source: KwiseSource,
}

impl KwiseTestReport {
    pub fn rejects(&self, significance: f64) -> bool {
        self.p_value < significance
    }
}

/// `∏_{i<c} (a − i)/(b − i)`.
fn falling_ratio(a: f64, b: f64, c: usize) -> f64 {
    (0..c).map(|i| (a - i as f64) / (b - i as f64)).product()
}

impl KwiseTestConfig {
    fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if !(3..=64).contains(&n) {
            return Err(invalid!("n must lie in 3..=64, got {n}"));
        }
        if k == 0 || (n < 64 && k as u128 > 1u128 << n) {
            return Err(invalid!("k = {k} must lie in 1..=2^{n}"));
        }
        if self.samples == 0 {
            return Err(invalid!("zero samples"));
        }
        match self.statistic {
            Statistic::HammingWeight => {}
            Statistic::XorProfile => {
                if k < 2 {
                    return Err(invalid!("xor-profile needs k ≥ 2"));
                }
                if !self.bins.is_power_of_two() || self.bins < 2 || (n < 64 && self.bins as u128 > 1u128 << n) {
                    return Err(invalid!("xor-profile bins must be a power of two in 2..=2^n, got {}", self.bins));
                }
            }
            Statistic::LowBits => {
                if k > 16 {
                    return Err(invalid!("low-bits supports k ≤ 16"));
                }
            }
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        match self.statistic {
            Statistic::HammingWeight => self.n + 1,
            Statistic::XorProfile => self.bins,
            Statistic::LowBits => 1 << self.k,
        }
    }

    fn bin(&self, words: &[u64]) -> usize {
        match self.statistic {
            Statistic::HammingWeight => words[0].count_ones() as usize,
            Statistic::XorProfile => ((words[0] ^ words[1]) & (self.bins as u64 - 1)) as usize,
            Statistic::LowBits => words.iter().enumerate().map(|(i, w)| ((w & 1) as usize) << i).sum(),
        }
    }
}

/// Exact cell probabilities of the statistic under uniform distinct k-tuples.
pub fn statistic_law(config: &KwiseTestConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let (n, k) = (config.n, config.k);
    let size = 2f64.powi(n as i32);
    Ok(match config.statistic {
        Statistic::HammingWeight => {
            // one coordinate of a uniform distinct tuple is uniform
            let mut row = vec![1.0f64];
            for _ in 0..n {
                let mut next = vec![0.0; row.len() + 1];
                for (w, &p) in row.iter().enumerate() {
                    next[w] += 0.5 * p;
                    next[w + 1] += 0.5 * p;
                }
                row = next;
            }
            row
        }
        Statistic::XorProfile => {
            // y₁ ⊕ y₂ is uniform over the nonzero strings
            let per_bin = size / config.bins as f64;
            let mut law = vec![per_bin / (size - 1.0); config.bins];
            law[0] = (per_bin - 1.0) / (size - 1.0);
            law
        }
        Statistic::LowBits => {
            let half = size / 2.0;
            (0..1usize << k)
                .map(|cell| {
                    let ones = cell.count_ones() as usize;
                    let zeros = k - ones;
                    // falling(half, zeros)·falling(half, ones) / falling(size, k), interleaved
                    falling_ratio(half, size, zeros) * falling_ratio(half, size - zeros as f64, ones)
                })
                .collect()
        }
    })
}

fn sample_uniform_tuple(n: usize, k: usize, rng: &mut StreamRng, out: &mut [u64]) {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut filled = 0;
    while filled < k {
        let v = rng.random::<u64>() & mask;
        if !out[..filled].contains(&v) {
            out[filled] = v;
            filled += 1;
        }
    }
}

/// Pools neighbouring positive-probability cells so each expects at least
/// [`MIN_EXPECTED`] counts. Zero-probability cells are kept apart.
fn pool_cells(observed: &[u64], probs: &[f64], total: f64) -> (Vec<u64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut prob = Vec::new();
    let (mut o_acc, mut p_acc) = (0u64, 0.0f64);
    for (&o, &p) in observed.iter().zip(probs) {
        if p == 0.0 {
            obs.push(o);
            prob.push(0.0);
            continue;
        }
        o_acc += o;
        p_acc += p;
        if p_acc * total >= MIN_EXPECTED {
            obs.push(o_acc);
            prob.push(p_acc);
            (o_acc, p_acc) = (0, 0.0);
        }
    }
    if p_acc > 0.0 {
        match prob.iter().rposition(|&p| p > 0.0) {
            Some(last) => {
                obs[last] += o_acc;
                prob[last] += p_acc;
            }
            None => {
                obs.push(o_acc);
                prob.push(p_acc);
            }
        }
    }
    (obs, prob)
}

/// Samples `M` independent `gates`-gate circuits (or uniform tuples), bins the
/// statistic of each output tuple and tests the counts against the exact law.
///
/// Sample `s` uses stream `s / 1024`, so results do not depend on the thread count.
pub fn kwise_stat_mc(config: &KwiseTestConfig) -> Result<KwiseTestReport> {
    let law = statistic_law(config)?;
    let sampler = match config.source {
        KwiseSource::Circuit => Some(GateSampler::new(config.n, config.gate_mode)?),
        KwiseSource::Uniform => None,
    };
    let cells = config.cells();
    let chunks = config.samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(config.seed, c);
            let mut local = vec![0u64; cells];
            let mut words = vec![0u64; config.k];
            for _ in 0..CHUNK.min(config.samples - c * CHUNK) {
                match &sampler {
                    Some(s) => {
                        words.iter_mut().enumerate().for_each(|(i, w)| *w = i as u64);
                        for _ in 0..config.gates {
                            step_rev_words(&mut words, s, &mut rng);
                        }
                    }
                    None => sample_uniform_tuple(config.n, config.k, &mut rng, &mut words),
                }
                local[config.bin(&words)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let (obs, probs) = pool_cells(&counts, &law, config.samples as f64);
    let test = chi_square_gof(&obs, &probs)?;
    Ok(KwiseTestReport {
        n: config.n,
        k: config.k,
        gates: config.gates,
        samples: config.samples,
        statistic: config.statistic,
        bins: cells,
        chi2: test.statistic,
        dof: test.dof,
        p_value: test.p_value,
        seed: config.seed,
        gate_mode: config.gate_mode,
        source: config.source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::falling_factorial;

    fn cfg(statistic: Statistic) -> KwiseTestConfig {
        KwiseTestConfig { n: 8, k: 3, samples: 4000, statistic, bins: 16, gates: 400, ..Default::default() }
    }

    #[test]
    fn laws_sum_to_one_and_match_enumeration() {
        for s in [Statistic::HammingWeight, Statistic::XorProfile, Statistic::LowBits] {
            let c = KwiseTestConfig { n: 4, k: 3, bins: 4, statistic: s, ..Default::default() };
            let law = statistic_law(&c).unwrap();
            assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // brute force over all distinct triples of 4-bit strings
            let mut counts = vec![0u64; law.len()];
            for a in 0..16u64 {
                for b in (0..16).filter(|&b| b != a) {
                    for d in (0..16).filter(|&d| d != a && d != b) {
                        counts[c.bin(&[a, b, d])] += 1;
                    }
                }
            }
            let total = falling_factorial(16, 3) as f64;
            for (cnt, p) in counts.iter().zip(&law) {
                assert!((*cnt as f64 / total - p).abs() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn controls() {
        for s in [Statistic::HammingWeight, Statistic::XorProfile, Statistic::LowBits] {
            let none = kwise_stat_mc(&KwiseTestConfig { gates: 0, ..cfg(s) }).unwrap();
            assert!(none.rejects(0.001), "{s}");
            let uni = kwise_stat_mc(&KwiseTestConfig { source: KwiseSource::Uniform, ..cfg(s) }).unwrap();
            assert!(!uni.rejects(0.001), "{s}: {uni:?}");
            let mixed = kwise_stat_mc(&cfg(s)).unwrap();
            assert!(!mixed.rejects(0.001), "{s}: {mixed:?}");
        }
    }

    #[test]
    fn harness_calibration() {
        // rejection rate at 5% over 200 uniform runs stays within 3σ
        let runs = 200;
        let rejections = (0..runs)
            .filter(|&seed| {
                let c =
                    KwiseTestConfig { source: KwiseSource::Uniform, samples: 2000, seed, ..cfg(Statistic::XorProfile) };
                kwise_stat_mc(&c).unwrap().rejects(0.05)
            })
            .count() as f64;
        let mean = runs as f64 * 0.05;
        let sd = (runs as f64 * 0.05 * 0.95).sqrt();
        assert!((rejections - mean).abs() <= 3.0 * sd, "{rejections}");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = cfg(Statistic::LowBits);
        let one =
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| kwise_stat_mc(&c).unwrap());
        let many =
            rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| kwise_stat_mc(&c).unwrap());
        assert_eq!(one, many);
    }

    #[test]
    fn validation() {
        assert!(kwise_stat_mc(&KwiseTestConfig { k: 1, ..cfg(Statistic::XorProfile) }).is_err());
        assert!(kwise_stat_mc(&KwiseTestConfig { bins: 12, ..cfg(Statistic::XorProfile) }).is_err());
        assert!(kwise_stat_mc(&KwiseTestConfig { samples: 0, ..cfg(Statistic::HammingWeight) }).is_err());
        assert!(kwise_stat_mc(&KwiseTestConfig { n: 2, ..cfg(Statistic::HammingWeight) }).is_err());
    }

    #[test]
    fn pooling_keeps_mass() {
        let (o, p) = pool_cells(&[1, 2, 3, 50, 1], &[0.01, 0.02, 0.0, 0.9, 0.07], 100.0);
        assert_eq!(o.iter().sum::<u64>(), 57);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.contains(&0.0));
    }
}
