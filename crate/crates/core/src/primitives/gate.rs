use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BitString;
use crate::error::{invalid, Result};

/// Boolean function on two bits, stored as a 4-bit truth table:
/// `h(a, b) = (table >> (2a + b)) & 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolFn2(u8);

impl BoolFn2 {
    pub const ZERO: BoolFn2 = BoolFn2(0b0000);
    pub const ONE: BoolFn2 = BoolFn2(0b1111);
    pub const AND: BoolFn2 = BoolFn2(0b1000);
    pub const OR: BoolFn2 = BoolFn2(0b1110);
    pub const XOR: BoolFn2 = BoolFn2(0b0110);
    pub const NAND: BoolFn2 = BoolFn2(0b0111);

    pub fn new(table: u8) -> Result<Self> {
        if table >= 16 {
            return Err(invalid!("truth table {table} is not in 0..16"));
        }
        Ok(Self(table))
    }

    pub fn table(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        (self.0 >> (2 * a as u8 + b as u8)) & 1 == 1
    }
}

/// Width-2 simple permutation: XOR `h(x[control1], x[control2])` into
/// `x[target]`. Wire indices are 0-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gate {
    target: usize,
    control1: usize,
    control2: usize,
    h: BoolFn2,
}

impl Gate {
    /// `control1 == control2` is allowed; only the target must differ from both.
    pub fn new(target: usize, control1: usize, control2: usize, h: BoolFn2) -> Result<Self> {
        if target == control1 || target == control2 {
            return Err(invalid!("target wire {target} coincides with a control ({control1}, {control2})"));
        }
        Ok(Self { target, control1, control2, h })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn controls(&self) -> (usize, usize) {
        (self.control1, self.control2)
    }

    pub fn function(&self) -> BoolFn2 {
        self.h
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 3 {
            return Err(invalid!("circuits need at least 3 wires, got {n}"));
        }
        let max = self.target.max(self.control1).max(self.control2);
        if max >= n {
            return Err(invalid!("wire index {max} out of range for {n} wires"));
        }
        Ok(())
    }

    /// Action on a word; caller guarantees the wire indices are below 64.
    #[inline]
    pub fn apply_word(&self, x: u64) -> u64 {
        let a = (x >> self.control1) & 1 == 1;
        let b = (x >> self.control2) & 1 == 1;
        x ^ ((self.h.eval(a, b) as u64) << self.target)
    }

    pub fn apply(&self, x: &BitString) -> Result<BitString> {
        self.validate(x.len())?;
        let mut y = x.clone();
        if self.h.eval(x.get(self.control1), x.get(self.control2)) {
            y.flip(self.target);
        }
        Ok(y)
    }

    /// Full action on `{0,1}^n` as a lookup table.
    pub fn permutation_table(&self, n: usize) -> Result<Vec<u32>> {
        self.validate(n)?;
        if n > 24 {
            return Err(invalid!("permutation tables are limited to 24 wires, got {n}"));
        }
        Ok((0..1u64 << n).map(|x| self.apply_word(x) as u32).collect())
    }

    /// Key identifying the permutation this gate induces. Two gates act
    /// identically iff their keys agree: the action is `x ↦ x ⊕ g(x)·e_target`
    /// with `g(x) = h(x[c1], x[c2])`, and `g` is reduced to the variables it
    /// actually depends on.
    fn action_key(&self) -> ActionKey {
        let (lo, hi) = (self.control1.min(self.control2), self.control1.max(self.control2));
        // truth table of g over (x[lo], x[hi]) indexed by 2*x[lo] + x[hi]
        let mut t = 0u8;
        for a in 0..2u8 {
            for b in 0..2u8 {
                let (xl, xh) = (a == 1, b == 1);
                let v = if lo == hi {
                    if xl != xh {
                        // unreachable assignment when both controls are one wire
                        continue;
                    }
                    self.h.eval(xl, xl)
                } else if self.control1 == lo {
                    self.h.eval(xl, xh)
                } else {
                    self.h.eval(xh, xl)
                };
                t |= (v as u8) << (2 * a + b);
            }
        }
        if lo == hi {
            // only the diagonal entries (0,0) and (1,1) are meaningful
            let v0 = t & 1;
            let v1 = (t >> 3) & 1;
            return match (v0, v1) {
                (0, 0) => ActionKey::Identity,
                (1, 1) => ActionKey::Const { target: self.target },
                _ => ActionKey::One { target: self.target, var: lo, negated: v0 == 1 },
            };
        }
        let g = |a: u8, b: u8| (t >> (2 * a + b)) & 1;
        let depends_lo = (0..2).any(|b| g(0, b) != g(1, b));
        let depends_hi = (0..2).any(|a| g(a, 0) != g(a, 1));
        match (depends_lo, depends_hi) {
            (false, false) if g(0, 0) == 0 => ActionKey::Identity,
            (false, false) => ActionKey::Const { target: self.target },
            (true, false) => ActionKey::One { target: self.target, var: lo, negated: g(0, 0) == 1 },
            (false, true) => ActionKey::One { target: self.target, var: hi, negated: g(0, 0) == 1 },
            (true, true) => ActionKey::Two { target: self.target, lo, hi, table: t },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum ActionKey {
    Identity,
    Const { target: usize },
    One { target: usize, var: usize, negated: bool },
    Two { target: usize, lo: usize, hi: usize, table: u8 },
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gate(x{} ^= h{:04b}(x{}, x{}))", self.target, self.h.0, self.control1, self.control2)
    }
}

pub fn apply_gate(x: &BitString, g: &Gate) -> Result<BitString> {
    g.apply(x)
}

/// Number of parameter tuples `(target, control1, control2, h)` on `n` wires.
pub fn gate_count(n: usize) -> usize {
    16 * n * (n - 1) * (n - 1)
}

fn decode_gate(n: usize, idx: usize) -> Gate {
    let h = (idx % 16) as u8;
    let rest = idx / 16;
    let c2 = rest % (n - 1);
    let rest = rest / (n - 1);
    let c1 = rest % (n - 1);
    let target = rest / (n - 1);
    // controls skip the target wire
    let lift = |c: usize| if c >= target { c + 1 } else { c };
    Gate { target, control1: lift(c1), control2: lift(c2), h: BoolFn2(h) }
}

/// All gate parameter tuples, ordered by target, then control1, control2, h.
pub fn enumerate_gates(n: usize) -> Result<Vec<Gate>> {
    if n < 3 {
        return Err(invalid!("circuits need at least 3 wires, got {n}"));
    }
    if n > 64 {
        return Err(invalid!("at most 64 wires are supported, got {n}"));
    }
    Ok((0..gate_count(n)).map(|idx| decode_gate(n, idx)).collect())
}

/// A distinct permutation induced by the gate set, with the number of
/// parameter tuples inducing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinctGate {
    pub representative: Gate,
    pub multiplicity: usize,
}

/// Distinct permutations induced by [`enumerate_gates`], in order of first
/// occurrence.
pub fn dedupe_gates(n: usize) -> Result<Vec<DistinctGate>> {
    let gates = enumerate_gates(n)?;
    let mut slot: HashMap<ActionKey, usize> = HashMap::new();
    let mut out: Vec<DistinctGate> = Vec::new();
    for g in gates {
        let key = g.action_key();
        match slot.get(&key) {
            Some(&s) => out[s].multiplicity += 1,
            None => {
                slot.insert(key, out.len());
                out.push(DistinctGate { representative: g, multiplicity: 1 });
            }
        }
    }
    Ok(out)
}

/// How a "uniformly random gate" is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMeasure {
    /// Uniform over the `16·n·(n−1)²` parameter tuples.
    #[default]
    ParameterUniform,
    /// Uniform over the distinct permutations the tuples induce.
    SetUniform,
}

impl GateMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            GateMeasure::ParameterUniform => "parameter-uniform",
            GateMeasure::SetUniform => "set-uniform",
        }
    }

    /// Gates with integer weights proportional to their probability.
    pub fn weighted_gates(self, n: usize) -> Result<Vec<(Gate, u64)>> {
        Ok(dedupe_gates(n)?
            .into_iter()
            .map(|d| {
                let w = match self {
                    GateMeasure::ParameterUniform => d.multiplicity as u64,
                    GateMeasure::SetUniform => 1,
                };
                (d.representative, w)
            })
            .collect())
    }
}

impl fmt::Display for GateMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GateMeasure {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parameter-uniform" | "parameter" => Ok(GateMeasure::ParameterUniform),
            "set-uniform" | "set" => Ok(GateMeasure::SetUniform),
            _ => Err(invalid!("unknown gate measure {s:?}")),
        }
    }
}

/// Draws gates on `n` wires under a [`GateMeasure`].
#[derive(Clone, Debug)]
pub struct GateSampler {
    n: usize,
    measure: GateMeasure,
    distinct: Vec<Gate>,
}

impl GateSampler {
    pub fn new(n: usize, measure: GateMeasure) -> Result<Self> {
        if !(3..=64).contains(&n) {
            return Err(invalid!("gate sampling needs 3..=64 wires, got {n}"));
        }
        let distinct = match measure {
            GateMeasure::ParameterUniform => Vec::new(),
            GateMeasure::SetUniform => dedupe_gates(n)?.into_iter().map(|d| d.representative).collect(),
        };
        Ok(Self { n, measure, distinct })
    }

    pub fn wires(&self) -> usize {
        self.n
    }

    pub fn measure(&self) -> GateMeasure {
        self.measure
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Gate {
        match self.measure {
            GateMeasure::ParameterUniform => decode_gate(self.n, rng.random_range(0..gate_count(self.n))),
            GateMeasure::SetUniform => self.distinct[rng.random_range(0..self.distinct.len())],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(b: &[u8]) -> BitString {
        BitString::from_bits(b).unwrap()
    }

    #[test]
    fn worked_examples() {
        // (i=1, j1=2, j2=3) in 1-based notation
        let and = Gate::new(0, 1, 2, BoolFn2::AND).unwrap();
        assert_eq!(apply_gate(&bits(&[0, 1, 1]), &and).unwrap(), bits(&[1, 1, 1]));
        let xor = Gate::new(0, 1, 2, BoolFn2::XOR).unwrap();
        assert_eq!(apply_gate(&bits(&[1, 0, 1]), &xor).unwrap(), bits(&[0, 0, 1]));
        let zero = Gate::new(2, 0, 1, BoolFn2::ZERO).unwrap();
        let x = bits(&[1, 1, 0, 1]);
        assert_eq!(apply_gate(&x, &zero).unwrap(), x);
    }

    #[test]
    fn validation_errors() {
        assert!(Gate::new(1, 1, 2, BoolFn2::AND).is_err());
        assert!(BoolFn2::new(16).is_err());
        let g = Gate::new(0, 1, 3, BoolFn2::AND).unwrap();
        assert!(g.apply(&bits(&[0, 1, 1])).is_err());
        let short = Gate::new(0, 1, 1, BoolFn2::AND).unwrap();
        assert!(short.apply(&bits(&[0, 1])).is_err());
        assert!(enumerate_gates(2).is_err());
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_gates(3).unwrap().len(), 192);
        assert_eq!(enumerate_gates(4).unwrap().len(), 576);
        let gates = enumerate_gates(3).unwrap();
        assert!(gates.iter().any(|g| g.target() == 0 && g.controls() == (1, 1)));
        let mut sorted = gates.clone();
        sorted.sort();
        assert_eq!(sorted, gates);
    }

    #[test]
    fn word_and_bitstring_actions_agree() {
        for g in enumerate_gates(4).unwrap() {
            for x in 0..16u64 {
                let via_bits = g.apply(&BitString::from_word(x, 4).unwrap()).unwrap();
                assert_eq!(via_bits.to_word(), Some(g.apply_word(x)));
            }
        }
    }

    fn distinct_by_tables(n: usize) -> usize {
        let mut tables: Vec<Vec<u32>> =
            enumerate_gates(n).unwrap().iter().map(|g| g.permutation_table(n).unwrap()).collect();
        tables.sort();
        tables.dedup();
        tables.len()
    }

    #[test]
    fn dedupe_matches_full_action_hashing() {
        // 46 and 149 were also obtained by an external brute-force enumeration.
        for (n, expected) in [(3, 46), (4, 149), (5, 5 * (1 + 8 + 60) + 1)] {
            let distinct = dedupe_gates(n).unwrap();
            assert_eq!(distinct.len(), expected, "n = {n}");
            assert_eq!(distinct_by_tables(n), expected, "n = {n}");
            assert_eq!(distinct.iter().map(|d| d.multiplicity).sum::<usize>(), gate_count(n));
        }
    }

    #[test]
    fn identity_appears_once_with_full_multiplicity() {
        let distinct = dedupe_gates(3).unwrap();
        let ids: Vec<_> = distinct
            .iter()
            .filter(|d| d.representative.permutation_table(3).unwrap() == (0..8).collect::<Vec<u32>>())
            .collect();
        assert_eq!(ids.len(), 1);
        // 12 with h ≡ 0, plus 18 with j1 = j2 and h vanishing on the diagonal
        assert_eq!(ids[0].multiplicity, 30);
        assert!(distinct.len() < 192);
    }
}
