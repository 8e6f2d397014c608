//! Step samplers against exact kernel rows.

use std::collections::HashSet;

use kwm::chains::{build_kernel, step_cc, step_rev, step_tgrev, step_ucc, ChainSpec};
use kwm::generic::{is_generic, GenericSpace};
use kwm::primitives::GateSampler;
use kwm::rng::{stream_rng, StreamRng};
use kwm::stats::chi_square_gof;
use kwm::{BitString, GateMeasure, KernelF64, Partition, StateCap, TupleSpace};

const SAMPLES: u64 = 1_000_000;
const SIGNIFICANCE: f64 = 0.001;

fn assert_row_matches(kernel: &KernelF64, x: usize, mut draw: impl FnMut(&mut StreamRng) -> usize, seed: u64) {
    let mut rng = stream_rng(seed, 0);
    let mut counts = vec![0u64; kernel.size()];
    for _ in 0..SAMPLES {
        counts[draw(&mut rng)] += 1;
    }
    let probs: Vec<f64> = (0..kernel.size()).map(|y| kernel.get(x, y)).collect();
    let test = chi_square_gof(&counts, &probs).unwrap();
    assert!(!test.rejects(SIGNIFICANCE), "{} row {x}: {test:?}", kernel.meta().id());
}

#[test]
fn coloring_steps_match_kernels() {
    let space = TupleSpace::new(2, 5).unwrap();
    let ucc: KernelF64 = build_kernel(&ChainSpec::Ucc { k: 2, colors: 5 }, StateCap::DEFAULT).unwrap();
    let cc: KernelF64 = build_kernel(&ChainSpec::Cc { k: 2, colors: 5 }, StateCap::DEFAULT).unwrap();
    let x = 7;
    let t = space.tuple(x).unwrap();
    assert_row_matches(&ucc, x, |rng| space.index(&step_ucc(&t, rng)).unwrap(), 1);
    assert_row_matches(&cc, x, |rng| space.index(&step_cc(&t, rng)).unwrap(), 2);
}

#[test]
fn circuit_steps_match_kernel() {
    for mode in [GateMeasure::ParameterUniform, GateMeasure::SetUniform] {
        let space = TupleSpace::new(2, 8).unwrap();
        let rev: KernelF64 = build_kernel(&ChainSpec::Rev { k: 2, n: 3, mode }, StateCap::DEFAULT).unwrap();
        let sampler = GateSampler::new(3, mode).unwrap();
        let x = space.index_of(&[0, 7]);
        let state = [BitString::from_word(0, 3).unwrap(), BitString::from_word(7, 3).unwrap()];
        assert_row_matches(
            &rev,
            x,
            |rng| {
                let y = step_rev(&state, &sampler, rng).unwrap();
                let vals: Vec<u32> = y.iter().map(|s| s.to_word().unwrap() as u32).collect();
                space.index_of(&vals)
            },
            3,
        );
    }
}

#[test]
fn product_chain_steps_match_kernel() {
    let partition = Partition::with_override(3, 2, 2, 1).unwrap();
    let space = GenericSpace::new(&partition, StateCap::DEFAULT).unwrap();
    let kernel: KernelF64 =
        build_kernel(&ChainSpec::Tgrev { partition: partition.clone() }, StateCap::DEFAULT).unwrap();
    for x in [0, space.size() - 1] {
        let words = space.decode(x);
        let state: Vec<BitString> = words.iter().map(|&w| BitString::from_word(w, 3).unwrap()).collect();
        assert_row_matches(
            &kernel,
            x,
            |rng| {
                let y = step_tgrev(&state, &partition, rng).unwrap();
                let w: Vec<u64> = y.iter().map(|s| s.to_word().unwrap()).collect();
                space.encode(&w).unwrap()
            },
            4 + x as u64,
        );
    }
}

#[test]
fn product_chain_stays_generic() {
    let partition = Partition::with_override(7, 3, 3, 2).unwrap();
    let mut rng = stream_rng(9, 0);
    let mut state: Vec<BitString> =
        [0b000_0000u64, 0b001_0001, 0b010_0010].iter().map(|&w| BitString::from_word(w, 7).unwrap()).collect();
    assert!(is_generic(&state, &partition).unwrap());
    for _ in 0..SAMPLES {
        state = step_tgrev(&state, &partition, &mut rng).unwrap();
        assert!(is_generic(&state, &partition).unwrap());
    }
}

#[test]
fn circuit_steps_keep_rows_distinct() {
    let sampler = GateSampler::new(6, GateMeasure::ParameterUniform).unwrap();
    let mut rng = stream_rng(10, 0);
    let mut state: Vec<BitString> = (0..4).map(|w| BitString::from_word(w, 6).unwrap()).collect();
    for _ in 0..10_000 {
        state = step_rev(&state, &sampler, &mut rng).unwrap();
        assert_eq!(state.iter().collect::<HashSet<_>>().len(), 4);
    }
}
