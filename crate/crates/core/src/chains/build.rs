use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Kernel, KernelMeta};
use crate::error::{invalid, Error, Result, StateCap};
use crate::generic::{is_generic_words, GenericSpace, Partition};
use crate::primitives::{falling_factorial, Gate, GateMeasure, TupleSpace};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rev,
    Cc,
    Ucc,
    Grev,
    Tgrev,
    Complete,
    Product,
    Custom,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rev => "rev",
            Family::Cc => "cc",
            Family::Ucc => "ucc",
            Family::Grev => "grev",
            Family::Tgrev => "tgrev",
            Family::Complete => "complete",
            Family::Product => "product",
            Family::Custom => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rev" => Family::Rev,
            "cc" => Family::Cc,
            "ucc" => Family::Ucc,
            "grev" => Family::Grev,
            "tgrev" => Family::Tgrev,
            "complete" => Family::Complete,
            _ => return Err(invalid!("unknown chain family {s:?}")),
        })
    }
}

/// Which chain to build, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ChainSpec {
    /// Reversible-circuit walk on k distinct n-bit strings.
    Rev { k: usize, n: usize, mode: GateMeasure },
    /// Standard clique coloring: recolor with an unused color or keep.
    Cc {
        k: usize,
        #[serde(rename = "N")]
        colors: u32,
    },
    /// Uniform clique coloring: recolor with any color, swapping on collision.
    Ucc {
        k: usize,
        #[serde(rename = "N")]
        colors: u32,
    },
    /// Circuit walk restricted to generic states and renormalized.
    Grev { k: usize, n: usize, partition: Partition, mode: GateMeasure },
    /// Product chain on generic states.
    Tgrev { partition: Partition },
    /// Complete graph with self-loops on N states.
    Complete {
        #[serde(rename = "N")]
        colors: u32,
    },
}

impl ChainSpec {
    pub fn family(&self) -> Family {
        match self {
            ChainSpec::Rev { .. } => Family::Rev,
            ChainSpec::Cc { .. } => Family::Cc,
            ChainSpec::Ucc { .. } => Family::Ucc,
            ChainSpec::Grev { .. } => Family::Grev,
            ChainSpec::Tgrev { .. } => Family::Tgrev,
            ChainSpec::Complete { .. } => Family::Complete,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChainSpec::Rev { k, n, .. } | ChainSpec::Grev { k, n, .. } => {
                if !(3..=24).contains(n) {
                    return Err(invalid!("exact circuit kernels need 3..=24 wires, got {n}"));
                }
                if *k == 0 || (*k as u128) > (1u128 << n) {
                    return Err(invalid!("k = {k} must lie in 1..=2^{n}"));
                }
                if let ChainSpec::Grev { partition, .. } = self {
                    if partition.n != *n || partition.k != *k {
                        return Err(invalid!(
                            "partition is for (n={}, k={}), chain is (n={n}, k={k})",
                            partition.n,
                            partition.k
                        ));
                    }
                }
            }
            ChainSpec::Cc { k, colors } | ChainSpec::Ucc { k, colors } => {
                if *k == 0 || *k > *colors as usize {
                    return Err(invalid!("k = {k} must lie in 1..=N = {colors}"));
                }
            }
            ChainSpec::Tgrev { partition } => partition.check_product_chain()?,
            ChainSpec::Complete { colors } => {
                if *colors == 0 {
                    return Err(invalid!("complete graph needs at least one state"));
                }
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> KernelMeta {
        let mut m = KernelMeta::new(self.family());
        match self {
            ChainSpec::Rev { k, n, mode } | ChainSpec::Grev { k, n, mode, .. } => {
                m.k = Some(*k);
                m.n = Some(*n);
                m.mode = Some(*mode);
            }
            ChainSpec::Cc { k, colors } | ChainSpec::Ucc { k, colors } => {
                m.k = Some(*k);
                m.colors = Some(*colors);
            }
            ChainSpec::Tgrev { partition } => {
                m.k = Some(partition.k);
                m.n = Some(partition.n);
            }
            ChainSpec::Complete { colors } => m.colors = Some(*colors),
        }
        m
    }
}

/// Exact kernel for `spec`. Probabilities are ratios of integer counts;
/// the stationary vector is uniform except for `grev`.
pub fn build_kernel<T: Scalar>(spec: &ChainSpec, cap: StateCap) -> Result<Kernel<T>> {
    spec.validate()?;
    match spec {
        ChainSpec::Rev { k, n, mode } => build_rev(*k, *n, *mode, cap),
        ChainSpec::Cc { k, colors } => build_coloring(*k, *colors, false, cap),
        ChainSpec::Ucc { k, colors } => build_coloring(*k, *colors, true, cap),
        ChainSpec::Complete { colors } => Ok(build_coloring::<T>(1, *colors, true, cap)?.with_meta(spec.meta())),
        ChainSpec::Grev { k, n, partition, mode } => build_grev_kernel(*k, *n, partition, *mode, cap),
        ChainSpec::Tgrev { partition } => build_tgrev_kernel(partition, cap),
    }
}

fn merge_counts(mut row: Vec<(usize, u64)>) -> Vec<(usize, u64)> {
    row.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(usize, u64)> = Vec::with_capacity(row.len());
    for (c, n) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += n,
            _ => out.push((c, n)),
        }
    }
    out
}

fn build_coloring<T: Scalar>(k: usize, colors: u32, uniform: bool, cap: StateCap) -> Result<Kernel<T>> {
    cap.check(falling_factorial(colors as u64, k as u64))?;
    let space = TupleSpace::new(k, colors)?;
    let meta = KernelMeta {
        k: Some(k),
        colors: Some(colors),
        ..KernelMeta::new(if uniform { super::Family::Ucc } else { super::Family::Cc })
    };
    let rows: Vec<Vec<(usize, u64)>> = (0..space.size())
        .into_par_iter()
        .map(|x| {
            let mut vals = vec![0u32; k];
            space.values_at(x, &mut vals);
            let mut row = Vec::with_capacity(k * colors as usize);
            let mut y = vals.clone();
            for i in 0..k {
                for l in 0..colors {
                    y.copy_from_slice(&vals);
                    match vals.iter().position(|&v| v == l) {
                        Some(j) if j != i => {
                            if !uniform {
                                continue;
                            }
                            y[j] = vals[i];
                            y[i] = l;
                        }
                        _ => y[i] = l,
                    }
                    row.push((space.index_of(&y), 1));
                }
            }
            merge_counts(row)
        })
        .collect();
    let per_row = if uniform { k as u64 * colors as u64 } else { k as u64 * (colors as u64 - k as u64 + 1) };
    let totals = vec![per_row; rows.len()];
    let stationary = Kernel::<T>::uniform_stationary(rows.len());
    Kernel::from_counts(meta, rows, &totals, stationary)
}

fn circuit_space(k: usize, n: usize, cap: StateCap) -> Result<TupleSpace> {
    cap.check(falling_factorial(1u64 << n, k as u64))?;
    TupleSpace::new(k, 1u32 << n)
}

fn rev_counts(space: &TupleSpace, gates: &[(Gate, u64)], x: usize) -> Vec<(usize, u64)> {
    let k = space.k();
    let mut vals = vec![0u32; k];
    space.values_at(x, &mut vals);
    let mut y = vec![0u32; k];
    let row = gates
        .iter()
        .map(|(g, w)| {
            for (dst, &src) in y.iter_mut().zip(&vals) {
                *dst = g.apply_word(src as u64) as u32;
            }
            (space.index_of(&y), *w)
        })
        .collect();
    merge_counts(row)
}

fn build_rev<T: Scalar>(k: usize, n: usize, mode: GateMeasure, cap: StateCap) -> Result<Kernel<T>> {
    let space = circuit_space(k, n, cap)?;
    let gates = mode.weighted_gates(n)?;
    let total: u64 = gates.iter().map(|(_, w)| w).sum();
    let rows: Vec<_> = (0..space.size()).into_par_iter().map(|x| rev_counts(&space, &gates, x)).collect();
    let totals = vec![total; rows.len()];
    let stationary = Kernel::<T>::uniform_stationary(rows.len());
    let meta = ChainSpec::Rev { k, n, mode }.meta();
    Kernel::from_counts(meta, rows, &totals, stationary)
}

/// Indices (in the tuple space over `2^n` values) of the generic states, ascending.
pub fn generic_tuple_states(k: usize, n: usize, partition: &Partition, cap: StateCap) -> Result<Vec<usize>> {
    if partition.n != n || partition.k != k {
        return Err(invalid!("partition is for (n={}, k={}), requested (n={n}, k={k})", partition.n, partition.k));
    }
    let space = circuit_space(k, n, cap)?;
    Ok((0..space.size())
        .into_par_iter()
        .filter(|&x| {
            let mut vals = vec![0u32; k];
            space.values_at(x, &mut vals);
            let words: Vec<u64> = vals.iter().map(|&v| v as u64).collect();
            is_generic_words(&words, partition)
        })
        .collect())
}

/// Circuit kernel restricted to generic states, each row renormalized by its
/// generic-successor mass. The stationary vector comes from power iteration.
pub fn build_grev_kernel<T: Scalar>(
    k: usize,
    n: usize,
    partition: &Partition,
    mode: GateMeasure,
    cap: StateCap,
) -> Result<Kernel<T>> {
    let spec = ChainSpec::Grev { k, n, partition: partition.clone(), mode };
    spec.validate()?;
    let space = circuit_space(k, n, cap)?;
    let states = generic_tuple_states(k, n, partition, cap)?;
    if states.is_empty() {
        return Err(invalid!("partition admits no generic states"));
    }
    let gates = mode.weighted_gates(n)?;
    let rows: Vec<(Vec<(usize, u64)>, u64)> = states
        .par_iter()
        .map(|&x| {
            let row: Vec<(usize, u64)> = rev_counts(&space, &gates, x)
                .into_iter()
                .filter_map(|(y, c)| states.binary_search(&y).ok().map(|pos| (pos, c)))
                .collect();
            let mass = row.iter().map(|e| e.1).sum();
            (row, mass)
        })
        .collect();
    if let Some(pos) = rows.iter().position(|(_, mass)| *mass == 0) {
        let t = space.tuple(states[pos])?;
        return Err(Error::Invariant(format!(
            "generic state {t:?} has no generic successor; renormalization undefined"
        )));
    }
    let (rows, totals): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let placeholder = Kernel::<T>::uniform_stationary(rows.len());
    let kernel = Kernel::<T>::from_counts(spec.meta(), rows, &totals, placeholder)?;
    let pi = kernel.to_f64().power_iteration_stationary(1e-15, 1_000_000)?;
    kernel.with_stationary(pi.into_iter().map(T::from_f64_lossy).collect())
}

/// Product chain on generic states: hold with probability 1/4, flip a
/// remainder bit with probability 1/4, resample one block of one row
/// (avoiding the other rows) with probability 1/2.
pub fn build_tgrev_kernel<T: Scalar>(partition: &Partition, cap: StateCap) -> Result<Kernel<T>> {
    partition.check_product_chain()?;
    let space = GenericSpace::new(partition, cap)?;
    let (k, p, w, rest) = (partition.k, partition.p, partition.w, partition.remainder.len());
    let free = (1u64 << w) - k as u64 + 1;
    let hold = k as u64 * rest as u64 * p as u64 * free;
    let flip = p as u64 * free;
    let block = 2 * rest as u64;
    let total = 4 * hold;
    let rows: Vec<Vec<(usize, u64)>> = (0..space.size())
        .into_par_iter()
        .map(|x| {
            let words = space.decode(x);
            let mut row = vec![(x, hold)];
            let mut y = words.clone();
            for r in 0..k {
                for &c in &partition.remainder {
                    y[r] ^= 1 << c;
                    row.push((space.encode_unchecked(&y), flip));
                    y[r] = words[r];
                }
            }
            for t in 0..p {
                let start = t * w;
                let mask = ((1u64 << w) - 1) << start;
                for r in 0..k {
                    for u in 0..1u64 << w {
                        let collides = (0..k).any(|i| i != r && (words[i] & mask) >> start == u);
                        if collides {
                            continue;
                        }
                        y[r] = (words[r] & !mask) | (u << start);
                        row.push((space.encode_unchecked(&y), block));
                    }
                    y[r] = words[r];
                }
            }
            merge_counts(row)
        })
        .collect();
    let totals = vec![total; rows.len()];
    let stationary = Kernel::<T>::uniform_stationary(rows.len());
    Kernel::from_counts(ChainSpec::Tgrev { partition: partition.clone() }.meta(), rows, &totals, stationary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn ucc(k: usize, colors: u32) -> Kernel<Rational> {
        build_kernel(&ChainSpec::Ucc { k, colors }, StateCap::DEFAULT).unwrap()
    }

    fn cc(k: usize, colors: u32) -> Kernel<Rational> {
        build_kernel(&ChainSpec::Cc { k, colors }, StateCap::DEFAULT).unwrap()
    }

    #[test]
    fn ucc_with_one_vertex_is_the_complete_graph() {
        let kern = ucc(1, 3);
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(kern.get(x, y), Rational::ratio(1, 3));
            }
        }
        let complete: Kernel<Rational> = build_kernel(&ChainSpec::Complete { colors: 3 }, StateCap::DEFAULT).unwrap();
        assert_eq!(complete.to_dense(), kern.to_dense());
        assert_eq!(complete.meta().family, Family::Complete);
    }

    #[test]
    fn closed_form_self_loops() {
        let u = ucc(2, 4);
        let c = cc(2, 4);
        for x in 0..u.size() {
            assert_eq!(u.self_loop(x), Rational::ratio(1, 4));
            assert_eq!(c.self_loop(x), Rational::ratio(1, 3));
        }
    }

    #[test]
    fn coloring_kernels_are_exactly_symmetric_and_stochastic() {
        for kern in [ucc(2, 4), cc(2, 4), ucc(3, 5), cc(3, 5)] {
            assert!(kern.is_symmetric());
            assert_eq!(kern.max_row_sum_error(), 0.0);
        }
    }

    #[test]
    fn cc_edges_are_ucc_edges_but_not_conversely() {
        let (u, c) = (ucc(2, 5), cc(2, 5));
        let mut swap_edges = 0;
        for (x, y, _) in c.entries() {
            assert!(u.get(x, y) > Rational::from_count(0));
        }
        for (x, y, _) in u.entries() {
            if c.get(x, y) == Rational::from_count(0) {
                swap_edges += 1;
            }
        }
        // one swap neighbour per state for k = 2
        assert_eq!(swap_edges, u.size());
    }

    #[test]
    fn rev_kernel_is_exactly_symmetric() {
        for mode in [GateMeasure::ParameterUniform, GateMeasure::SetUniform] {
            let kern: Kernel<Rational> = build_kernel(&ChainSpec::Rev { k: 2, n: 3, mode }, StateCap::DEFAULT).unwrap();
            assert_eq!(kern.size(), 56);
            assert!(kern.is_symmetric());
            assert_eq!(kern.max_row_sum_error(), 0.0);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_kernel::<f64>(&ChainSpec::Ucc { k: 3, colors: 8 }, StateCap(100)).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { states: 336, cap: 100 }));
    }

    #[test]
    fn spec_validation() {
        assert!(build_kernel::<f64>(&ChainSpec::Cc { k: 5, colors: 4 }, StateCap::DEFAULT).is_err());
        assert!(build_kernel::<f64>(&ChainSpec::Rev { k: 2, n: 2, mode: GateMeasure::default() }, StateCap::DEFAULT)
            .is_err());
    }

    #[test]
    fn spec_serializes_with_family_tag() {
        let spec = ChainSpec::Ucc { k: 2, colors: 6 };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"family":"ucc","k":2,"N":6}"#);
        let back: ChainSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
