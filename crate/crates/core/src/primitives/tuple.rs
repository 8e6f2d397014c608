use std::fmt;

use crate::error::{invalid, Result};

/// Ordered k-tuple of pairwise distinct values from `0..colors`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorTuple {
    values: Vec<u32>,
    colors: u32,
}

impl ColorTuple {
    pub fn new(values: Vec<u32>, colors: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("tuples need at least one entry"));
        }
        if values.len() > colors as usize {
            return Err(invalid!("k = {} exceeds the ground set size {colors}", values.len()));
        }
        for (pos, &v) in values.iter().enumerate() {
            if v >= colors {
                return Err(invalid!("value {v} outside 0..{colors}"));
            }
            if values[..pos].contains(&v) {
                return Err(invalid!("value {v} repeated"));
            }
        }
        Ok(Self { values, colors })
    }

    pub(crate) fn new_unchecked(values: Vec<u32>, colors: u32) -> Self {
        debug_assert!(Self::new(values.clone(), colors).is_ok());
        Self { values, colors }
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, i: usize) -> u32 {
        self.values[i]
    }

    pub fn position(&self, color: u32) -> Option<usize> {
        self.values.iter().position(|&v| v == color)
    }

    pub fn contains(&self, color: u32) -> bool {
        self.values.contains(&color)
    }

    /// Colors not used by any entry, ascending.
    pub fn unused(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.colors).filter(move |c| !self.values.contains(c))
    }

    pub fn into_values(self) -> Vec<u32> {
        self.values
    }
}

impl fmt::Debug for ColorTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{}", self.values, self.colors)
    }
}

/// N(N-1)...(N-k+1), saturating at `u128::MAX`.
pub fn falling_factorial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul((n - j) as u128);
    }
    acc
}

/// Lexicographic ranking of the k-tuples with distinct entries from `0..colors`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleSpace {
    k: usize,
    colors: u32,
    size: usize,
    // weights[i] = number of completions once positions 0..=i are fixed
    weights: Vec<usize>,
}

impl TupleSpace {
    pub fn new(k: usize, colors: u32) -> Result<Self> {
        if k == 0 {
            return Err(invalid!("k must be positive"));
        }
        if k > colors as usize {
            return Err(invalid!("k = {k} exceeds N = {colors}"));
        }
        let size = falling_factorial(colors as u64, k as u64);
        if size > usize::MAX as u128 / 2 {
            return Err(invalid!("tuple space of size {size} is not indexable"));
        }
        let weights =
            (0..k).map(|i| falling_factorial(colors as u64 - i as u64 - 1, (k - i - 1) as u64) as usize).collect();
        Ok(Self { k, colors, size: size as usize, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Rank of a tuple given as raw values; entries must be distinct and in range.
    pub fn index_of(&self, values: &[u32]) -> usize {
        debug_assert_eq!(values.len(), self.k);
        let mut idx = 0;
        for (i, &v) in values.iter().enumerate() {
            let smaller_used = values[..i].iter().filter(|&&u| u < v).count() as u32;
            idx += (v - smaller_used) as usize * self.weights[i];
        }
        idx
    }

    /// Writes the tuple of rank `idx` into `out` (length k).
    pub fn values_at(&self, mut idx: usize, out: &mut [u32]) {
        debug_assert!(idx < self.size);
        debug_assert_eq!(out.len(), self.k);
        for i in 0..self.k {
            let digit = idx / self.weights[i];
            idx %= self.weights[i];
            // digit-th value not among out[..i]
            let mut v = digit as u32;
            let mut used: Vec<u32> = out[..i].to_vec();
            used.sort_unstable();
            for u in used {
                if u <= v {
                    v += 1;
                }
            }
            out[i] = v;
        }
    }

    pub fn index(&self, t: &ColorTuple) -> Result<usize> {
        if t.k() != self.k || t.colors() != self.colors {
            return Err(invalid!(
                "tuple {t:?} does not belong to the space of {}-tuples over {} values",
                self.k,
                self.colors
            ));
        }
        Ok(self.index_of(t.values()))
    }

    pub fn tuple(&self, idx: usize) -> Result<ColorTuple> {
        if idx >= self.size {
            return Err(invalid!("index {idx} out of range 0..{}", self.size));
        }
        let mut out = vec![0; self.k];
        self.values_at(idx, &mut out);
        Ok(ColorTuple::new_unchecked(out, self.colors))
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.size).map(move |idx| {
            let mut out = vec![0; self.k];
            self.values_at(idx, &mut out);
            out
        })
    }
}

pub fn tuple_index(t: &ColorTuple) -> Result<usize> {
    TupleSpace::new(t.k(), t.colors())?.index(t)
}

pub fn tuple_unindex(idx: usize, k: usize, colors: u32) -> Result<ColorTuple> {
    TupleSpace::new(k, colors)?.tuple(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_tuple_and_size() {
        // (1,2) in 1-based notation is (0,1) here
        let t = ColorTuple::new(vec![0, 1], 3).unwrap();
        assert_eq!(tuple_index(&t).unwrap(), 0);
        assert_eq!(TupleSpace::new(2, 3).unwrap().size(), 6);
    }

    #[test]
    fn roundtrip_matches_lexicographic_enumeration() {
        // Oracle: permutations of 0..5 of length 3 in lexicographic order.
        let mut expected = Vec::new();
        for a in 0..5u32 {
            for b in 0..5u32 {
                for c in 0..5u32 {
                    if a != b && b != c && a != c {
                        expected.push(vec![a, b, c]);
                    }
                }
            }
        }
        let space = TupleSpace::new(3, 5).unwrap();
        assert_eq!(space.size(), 60);
        assert_eq!(expected.len(), 60);
        for (idx, values) in expected.iter().enumerate() {
            let t = ColorTuple::new(values.clone(), 5).unwrap();
            assert_eq!(space.index(&t).unwrap(), idx);
            assert_eq!(tuple_unindex(idx, 3, 5).unwrap(), t);
        }
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(ColorTuple::new(vec![1, 1], 3).is_err());
        assert!(ColorTuple::new(vec![0, 3], 3).is_err());
        assert!(ColorTuple::new(vec![0, 1, 2], 2).is_err());
        assert!(tuple_unindex(6, 2, 3).is_err());
        let other = ColorTuple::new(vec![0, 1], 4).unwrap();
        assert!(TupleSpace::new(2, 3).unwrap().index(&other).is_err());
    }
}
