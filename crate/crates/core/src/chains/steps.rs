use rand::Rng;

use crate::error::{invalid, Result};
use crate::generic::Partition;
use crate::primitives::{BitString, ColorTuple, GateSampler};

/// `x^{i,l}`: give entry `i` the value `l`, swapping with the entry that
/// currently holds `l`, if any.
pub fn ucc_move(x: &ColorTuple, i: usize, l: u32) -> Result<ColorTuple> {
    if i >= x.k() || l >= x.colors() {
        return Err(invalid!("move ({i}, {l}) out of range for {x:?}"));
    }
    let mut v = x.values().to_vec();
    if let Some(j) = x.position(l) {
        v[j] = v[i];
    }
    v[i] = l;
    ColorTuple::new(v, x.colors())
}

/// Recolor entry `i` with `l`, which must be unused or equal to `x_i`.
pub fn cc_move(x: &ColorTuple, i: usize, l: u32) -> Result<ColorTuple> {
    if i >= x.k() || l >= x.colors() {
        return Err(invalid!("move ({i}, {l}) out of range for {x:?}"));
    }
    match x.position(l) {
        Some(j) if j != i => Err(invalid!("color {l} is held by entry {j}")),
        _ => {
            let mut v = x.values().to_vec();
            v[i] = l;
            ColorTuple::new(v, x.colors())
        }
    }
}

pub fn step_ucc<R: Rng + ?Sized>(x: &ColorTuple, rng: &mut R) -> ColorTuple {
    let i = rng.random_range(0..x.k());
    let l = rng.random_range(0..x.colors());
    ucc_move(x, i, l).expect("draw is in range")
}

pub fn step_cc<R: Rng + ?Sized>(x: &ColorTuple, rng: &mut R) -> ColorTuple {
    let i = rng.random_range(0..x.k());
    let available = x.colors() as usize - x.k() + 1;
    let slot = rng.random_range(0..available);
    let l = if slot == 0 { x.get(i) } else { x.unused().nth(slot - 1).expect("slot within unused colors") };
    cc_move(x, i, l).expect("draw is available")
}

/// One circuit step: a single gate applied to every string.
pub fn step_rev<R: Rng + ?Sized>(x: &[BitString], sampler: &GateSampler, rng: &mut R) -> Result<Vec<BitString>> {
    if x.iter().any(|s| s.len() != sampler.wires()) {
        return Err(invalid!("state strings must have {} bits", sampler.wires()));
    }
    let g = sampler.sample(rng);
    x.iter().map(|s| g.apply(s)).collect()
}

/// Word-level circuit step for `n ≤ 64`, in place.
#[inline]
pub fn step_rev_words<R: Rng + ?Sized>(x: &mut [u64], sampler: &GateSampler, rng: &mut R) {
    let g = sampler.sample(rng);
    for s in x.iter_mut() {
        *s = g.apply_word(*s);
    }
}

/// One step of the product chain on generic states.
pub fn step_tgrev<R: Rng + ?Sized>(x: &[BitString], partition: &Partition, rng: &mut R) -> Result<Vec<BitString>> {
    partition.check_product_chain()?;
    if x.len() != partition.k || x.iter().any(|s| s.len() != partition.n) {
        return Err(invalid!("state must hold {} strings of {} bits", partition.k, partition.n));
    }
    let mut y = x.to_vec();
    if rng.random_bool(0.5) {
        if rng.random_bool(0.5) {
            return Ok(y);
        }
        let c = partition.remainder[rng.random_range(0..partition.remainder.len())];
        let r = rng.random_range(0..partition.k);
        y[r].flip(c);
        return Ok(y);
    }
    let t = rng.random_range(0..partition.p);
    let r = rng.random_range(0..partition.k);
    let start = t * partition.w;
    let taken: Vec<Vec<u64>> = (0..partition.k).filter(|&i| i != r).map(|i| x[i].segment(start, partition.w)).collect();
    // rejection sampling over {0,1}^w minus the other rows' blocks
    let words = partition.w.div_ceil(64);
    let u = loop {
        let mut u = vec![0u64; words];
        for (j, word) in u.iter_mut().enumerate() {
            let bits = (partition.w - 64 * j).min(64);
            *word = if bits == 64 { rng.random() } else { rng.random_range(0..1u64 << bits) };
        }
        if !taken.contains(&u) {
            break u;
        }
    };
    y[r].set_segment(start, partition.w, &u);
    Ok(y)
}
