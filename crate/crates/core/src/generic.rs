//! Generic-state partitions and the product structure of the generic chain.
//!
//! A state of k strings is generic when no two rows agree on any of the
//! designated blocks `C_1..C_p`; agreement on the remainder `C` is allowed.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::spectral_gap;
use crate::chains::{build_kernel, build_tgrev_kernel, product_kernel, ChainSpec, Kernel};
use crate::error::{invalid, Result, StateCap};
use crate::primitives::{falling_factorial, BitString, TupleSpace};
use crate::rng::stream_rng;
use crate::stats::wilson_interval;

/// Logarithm base in the block-width formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            _ => Err(invalid!("log base must be \"2\" or \"e\", got {s:?}")),
        }
    }
}

/// Partition of the wires into `p` contiguous blocks of width `w` and a remainder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub n: usize,
    pub k: usize,
    pub w: usize,
    pub p: usize,
    pub blocks: Vec<Vec<usize>>,
    pub remainder: Vec<usize>,
    /// `None` for explicit overrides.
    pub log_base: Option<LogBase>,
}

impl Partition {
    /// Width `⌈10·(log k + log n)⌉` and `⌈n / 2w⌉` blocks.
    pub fn standard(n: usize, k: usize, base: LogBase) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(invalid!("n and k must be positive"));
        }
        let w = (10.0 * (base.log(k as f64) + base.log(n as f64))).ceil() as usize;
        if w == 0 {
            return Err(invalid!("block width evaluates to zero for n={n}, k={k}"));
        }
        let p = n.div_ceil(2 * w);
        Self::build(n, k, w, p, Some(base))
    }

    /// Explicit `(w, p)`, for instances small enough to enumerate.
    pub fn with_override(n: usize, k: usize, w: usize, p: usize) -> Result<Self> {
        if n == 0 || k == 0 || w == 0 {
            return Err(invalid!("n, k and w must be positive"));
        }
        Self::build(n, k, w, p, None)
    }

    fn build(n: usize, k: usize, w: usize, p: usize, log_base: Option<LogBase>) -> Result<Self> {
        if p == 0 && log_base.is_some() {
            return Err(invalid!("default partition has no blocks"));
        }
        if p.checked_mul(w).is_none_or(|used| used > n) {
            return Err(invalid!("{p} blocks of width {w} do not fit in {n} wires"));
        }
        let blocks = (0..p).map(|t| (t * w..(t + 1) * w).collect()).collect();
        let remainder = (p * w..n).collect();
        Ok(Self { n, k, w, p, blocks, remainder, log_base })
    }

    /// Preconditions for building or stepping the product chain.
    pub fn check_product_chain(&self) -> Result<()> {
        if self.p == 0 {
            return Err(invalid!("product chain needs at least one block"));
        }
        if self.remainder.is_empty() {
            return Err(invalid!("product chain needs a nonempty remainder"));
        }
        if self.w > 63 || (self.k as u128) > (1u128 << self.w) {
            return Err(invalid!("k = {} distinct blocks do not fit in width {}", self.k, self.w));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub fn make_partition(n: usize, k: usize, overrides: Option<(usize, usize)>, base: LogBase) -> Result<Partition> {
    match overrides {
        Some((w, p)) => Partition::with_override(n, k, w, p),
        None => Partition::standard(n, k, base),
    }
}

pub fn is_generic(state: &[BitString], partition: &Partition) -> Result<bool> {
    if let Some(bad) = state.iter().find(|s| s.len() != partition.n) {
        return Err(invalid!("string of {} bits in a partition of {} wires", bad.len(), partition.n));
    }
    for t in 0..partition.p {
        let mut seen = HashSet::with_capacity(state.len());
        for s in state {
            if !seen.insert(s.segment(t * partition.w, partition.w)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Word-level check for `n ≤ 64`.
pub fn is_generic_words(words: &[u64], partition: &Partition) -> bool {
    (0..partition.p).all(|t| {
        let mask = block_mask(partition.w, t);
        (0..words.len()).all(|i| (i + 1..words.len()).all(|j| (words[i] ^ words[j]) & mask != 0))
    })
}

fn block_mask(w: usize, t: usize) -> u64 {
    let ones = if w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
    ones << (t * w)
}

/// Indexing of the generic states of a product-chain partition: one digit
/// per block (a distinct k-tuple of w-bit values), then one binary digit per
/// remainder bit, rows outermost. The first digit is most significant.
#[derive(Clone, Debug)]
pub struct GenericSpace {
    partition: Partition,
    block: TupleSpace,
    rem_bits: usize,
    size: usize,
}

impl GenericSpace {
    pub fn new(partition: &Partition, cap: StateCap) -> Result<Self> {
        partition.check_product_chain()?;
        if partition.n > 64 || partition.w > 24 {
            return Err(invalid!("exact generic-state enumeration needs n ≤ 64 and w ≤ 24"));
        }
        let per_block = falling_factorial(1u64 << partition.w, partition.k as u64);
        let rem_bits = partition.k * partition.remainder.len();
        let mut total: u128 = 1;
        for _ in 0..partition.p {
            total = total.saturating_mul(per_block);
        }
        total = if rem_bits >= 100 { u128::MAX } else { total.saturating_mul(1u128 << rem_bits) };
        let size = cap.check(total)?;
        let block = TupleSpace::new(partition.k, 1u32 << partition.w)?;
        Ok(Self { partition: partition.clone(), block, rem_bits, size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn block_space(&self) -> &TupleSpace {
        &self.block
    }

    pub fn decode(&self, idx: usize) -> Vec<u64> {
        let part = &self.partition;
        let k = part.k;
        let mut words = vec![0u64; k];
        let mut rem = idx & ((1usize << self.rem_bits) - 1);
        let mut digits = idx >> self.rem_bits;
        for pos in (0..self.rem_bits).rev() {
            let (row, ci) = (pos / part.remainder.len(), pos % part.remainder.len());
            words[row] |= ((rem & 1) as u64) << part.remainder[ci];
            rem >>= 1;
        }
        let mut vals = vec![0u32; k];
        for t in (0..part.p).rev() {
            let d = digits % self.block.size();
            digits /= self.block.size();
            self.block.values_at(d, &mut vals);
            for (w, &v) in words.iter_mut().zip(&vals) {
                *w |= (v as u64) << (t * part.w);
            }
        }
        words
    }

    /// Index of a state known to be generic with all bits inside `0..n`.
    pub fn encode_unchecked(&self, words: &[u64]) -> usize {
        let part = &self.partition;
        let low = (1u64 << part.w) - 1;
        let mut idx = 0usize;
        let mut vals = vec![0u32; part.k];
        for t in 0..part.p {
            for (v, w) in vals.iter_mut().zip(words) {
                *v = ((w >> (t * part.w)) & low) as u32;
            }
            idx = idx * self.block.size() + self.block.index_of(&vals);
        }
        for w in words {
            for &c in &part.remainder {
                idx = (idx << 1) | ((w >> c) & 1) as usize;
            }
        }
        idx
    }

    pub fn encode(&self, words: &[u64]) -> Result<usize> {
        let part = &self.partition;
        if words.len() != part.k {
            return Err(invalid!("expected {} rows, got {}", part.k, words.len()));
        }
        if part.n < 64 && words.iter().any(|w| w >> part.n != 0) {
            return Err(invalid!("state has bits beyond wire {}", part.n));
        }
        if !is_generic_words(words, part) {
            return Err(invalid!("state is not generic"));
        }
        Ok(self.encode_unchecked(words))
    }
}

/// Monte Carlo estimate of the generic fraction with a 95% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericFraction {
    pub samples: u64,
    pub hits: u64,
    pub fraction: f64,
    pub lower: f64,
    pub upper: f64,
}

const WILSON_Z: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 1024;

/// Fraction of uniformly random distinct k-tuples of n-bit strings that are generic.
pub fn generic_fraction_mc(partition: &Partition, samples: u64, seed: u64) -> Result<GenericFraction> {
    if samples == 0 {
        return Err(invalid!("zero samples"));
    }
    let (n, k) = (partition.n, partition.k);
    if n < 128 && (k as u128) > (1u128 << n) {
        return Err(invalid!("no {k} distinct strings of {n} bits exist"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0;
            for _ in 0..count {
                let state = loop {
                    let rows: Vec<BitString> = (0..k).map(|_| BitString::random(n, &mut rng).expect("n > 0")).collect();
                    let distinct: HashSet<&BitString> = rows.iter().collect();
                    if distinct.len() == k {
                        break rows;
                    }
                };
                if is_generic(&state, partition).expect("lengths match") {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let (lower, upper) = wilson_interval(hits, samples, WILSON_Z)?;
    Ok(GenericFraction { samples, hits, fraction: hits as f64 / samples as f64, lower, upper })
}

/// Exact `(generic, total)` counts over all distinct k-tuples, for tiny n.
pub fn generic_fraction_exact(partition: &Partition, cap: StateCap) -> Result<(u64, u64)> {
    let (n, k) = (partition.n, partition.k);
    if n > 24 {
        return Err(invalid!("exact enumeration needs n ≤ 24"));
    }
    let total = cap.check(falling_factorial(1u64 << n, k as u64))?;
    let hits = crate::chains::generic_tuple_states(k, n, partition, cap)?.len();
    Ok((hits as u64, total as u64))
}

/// Union-bound lower bound on the generic fraction:
/// `1 − p·C(k,2)·Pr[two distinct strings agree on a block]`.
pub fn union_bound_fraction(partition: &Partition) -> f64 {
    let pairs = (partition.k * partition.k.saturating_sub(1) / 2) as f64;
    let (n, w) = (partition.n as i32, partition.w as i32);
    let agree = (2f64.powi(-w) - 2f64.powi(-n)) / (1.0 - 2f64.powi(-n));
    (1.0 - partition.p as f64 * pairs * agree).max(0.0)
}

/// Outcome of checking that the generic product chain decomposes as claimed.
#[derive(Clone, Debug, Serialize)]
pub struct ProductStructureReport {
    pub states: usize,
    /// Largest entrywise gap between the direct kernel and ½·blocks + ½·remainder.
    pub mixture_deviation: f64,
    /// Largest entrywise gap between an extracted block factor and the cc kernel on 2^w colors.
    pub block_factor_deviation: f64,
    /// Largest entrywise gap between an extracted remainder factor and the all-½ 2×2 kernel.
    pub remainder_factor_deviation: f64,
    pub gap_direct: f64,
    pub gap_block_chain: f64,
    pub gap_remainder_chain: f64,
    pub gap_predicted: f64,
    pub gap_deviation: f64,
    pub pass: bool,
}

pub const PRODUCT_ENTRY_TOL: f64 = 1e-12;
pub const PRODUCT_GAP_TOL: f64 = 1e-9;

pub fn verify_tgrev_product_structure(partition: &Partition, cap: StateCap) -> Result<ProductStructureReport> {
    let space = GenericSpace::new(partition, cap)?;
    let direct: Kernel<f64> = build_tgrev_kernel(partition, cap)?;
    let (k, p, w) = (partition.k, partition.p, partition.w);
    let rest = partition.remainder.len();

    let cc: Kernel<f64> = build_kernel(&ChainSpec::Cc { k, colors: 1 << w }, cap)?;
    let k2: Kernel<f64> = build_kernel(&ChainSpec::Complete { colors: 2 }, cap)?;
    let block_chain = product_kernel(&vec![cc.clone(); p], cap)?;
    let remainder_chain = product_kernel(&vec![k2; k * rest], cap)?;
    let mixture = product_kernel(&[block_chain.clone(), remainder_chain.clone()], cap)?;

    let mut mixture_deviation: f64 = 0.0;
    for (x, y, v) in direct.entries() {
        mixture_deviation = mixture_deviation.max((v - mixture.get(x, y)).abs());
    }
    for (x, y, v) in mixture.entries() {
        mixture_deviation = mixture_deviation.max((v - direct.get(x, y)).abs());
    }

    // Factor extraction around the reference state whose other digits are all zero.
    let reference = space.decode(0);
    let mut block_factor_deviation: f64 = 0.0;
    let bs = space.block_space();
    for t in 0..p {
        let embed = |digit: usize| {
            let mut words = reference.clone();
            let mut vals = vec![0u32; k];
            bs.values_at(digit, &mut vals);
            let mask = block_mask(w, t);
            for (word, &v) in words.iter_mut().zip(&vals) {
                *word = (*word & !mask) | ((v as u64) << (t * w));
            }
            space.encode_unchecked(&words)
        };
        for a in 0..bs.size() {
            let xa = embed(a);
            let mut off = 0.0;
            for b in 0..bs.size() {
                if a == b {
                    continue;
                }
                let est = direct.get(xa, embed(b)) * 2.0 * p as f64;
                off += est;
                block_factor_deviation = block_factor_deviation.max((est - cc.get(a, b)).abs());
            }
            block_factor_deviation = block_factor_deviation.max(((1.0 - off) - cc.get(a, a)).abs());
        }
    }

    let mut remainder_factor_deviation: f64 = 0.0;
    let x0 = space.encode_unchecked(&reference);
    for r in 0..k {
        for &c in &partition.remainder {
            let mut flipped = reference.clone();
            flipped[r] ^= 1 << c;
            let off = direct.get(x0, space.encode_unchecked(&flipped)) * 2.0 * (k * rest) as f64;
            remainder_factor_deviation =
                remainder_factor_deviation.max((off - 0.5).abs()).max(((1.0 - off) - 0.5).abs());
        }
    }

    let gap_direct = spectral_gap(&direct)?;
    let gap_block_chain = spectral_gap(&block_chain)?;
    let gap_remainder_chain = spectral_gap(&remainder_chain)?;
    let gap_predicted = 0.5 * gap_block_chain.min(gap_remainder_chain);
    let gap_deviation = (gap_direct - gap_predicted).abs();
    let pass = mixture_deviation <= PRODUCT_ENTRY_TOL
        && block_factor_deviation <= PRODUCT_ENTRY_TOL
        && remainder_factor_deviation <= PRODUCT_ENTRY_TOL
        && gap_deviation <= PRODUCT_GAP_TOL;
    Ok(ProductStructureReport {
        states: space.size(),
        mixture_deviation,
        block_factor_deviation,
        remainder_factor_deviation,
        gap_direct,
        gap_block_chain,
        gap_remainder_chain,
        gap_predicted,
        gap_deviation,
        pass,
    })
}
