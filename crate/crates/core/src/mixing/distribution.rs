use std::ops::Deref;

use crate::error::{invalid, Result};
use crate::scalar::CompensatedSum;
use crate::Real;

/// Probability vector over an indexed state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

impl<T: Real> Distribution<T> {
    /// Validates nonnegativity and unit mass within 1e-12.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(invalid!("probabilities must be finite and nonnegative"));
        }
        let total: CompensatedSum<T> = probs.iter().copied().collect();
        if (total.value() - T::one()).abs() > T::lit(1e-12) {
            return Err(invalid!("probabilities sum to {}, not 1", total.value()));
        }
        Ok(Self { probs })
    }

    pub(crate) fn new_unchecked(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn point_mass(size: usize, state: usize) -> Result<Self> {
        if state >= size {
            return Err(invalid!("state {state} out of range 0..{size}"));
        }
        let mut probs = vec![T::zero(); size];
        probs[state] = T::one();
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        Self { probs: vec![T::one() / T::from_usize_lossy(size); size] }
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }
}

impl<T> Deref for Distribution<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.probs
    }
}

/// `(1/2) Σ |p − q|`.
pub fn tv_distance<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(invalid!("distributions have {} and {} entries", p.len(), q.len()));
    }
    let acc: CompensatedSum<T> = p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).collect();
    Ok(acc.value() * T::lit(0.5))
}

/// `max_y |p(y) − π(y)| / π(y)` over the support of π.
pub fn pointwise_relative_error<T: Real>(p: &[T], pi: &[T]) -> Result<T> {
    if p.len() != pi.len() {
        return Err(invalid!("distributions have {} and {} entries", p.len(), pi.len()));
    }
    Ok(p.iter().zip(pi).filter(|(_, &s)| s > T::zero()).fold(T::zero(), |m, (&a, &s)| m.max((a - s).abs() / s)))
}
