use std::ops::{Deref, DerefMut};

use crate::chains::Kernel;
use crate::error::{invalid, Result};
use crate::scalar::CompensatedSum;
use crate::Real;

/// A real value per state of some kernel's state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateFunction<T> {
    values: Vec<T>,
}

impl<T: Real> StateFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("state functions must be finite"));
        }
        Ok(Self { values })
    }

    pub fn constant(size: usize, value: T) -> Self {
        Self { values: vec![value; size] }
    }

    /// Indicator of a single state.
    pub fn indicator(size: usize, state: usize) -> Self {
        let mut values = vec![T::zero(); size];
        values[state] = T::one();
        Self { values }
    }

    pub fn sqrt(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.sqrt()).collect() }
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }
}

impl<T> Deref for StateFunction<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.values
    }
}

impl<T> DerefMut for StateFunction<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
}

/// `(1/2) Σ_{x,y} (f(x) − f(y))² π(x) P(x,y)`.
pub fn dirichlet_form<T: Real>(kernel: &Kernel<T>, f: &[T]) -> Result<T> {
    if f.len() != kernel.size() {
        return Err(invalid!("function has {} values for {} states", f.len(), kernel.size()));
    }
    let pi = kernel.stationary();
    let mut acc = CompensatedSum::new();
    for x in 0..kernel.size() {
        let (cols, vals) = kernel.row(x);
        for (&y, &p) in cols.iter().zip(vals) {
            let d = f[x] - f[y];
            acc.add(d * d * pi[x] * p);
        }
    }
    Ok(acc.value() * T::lit(0.5))
}

/// `(1+δ)·ln(1+δ) − δ`, accurate for small |δ|.
pub(crate) fn entropy_kernel<T: Real>(delta: T) -> T {
    if delta.abs() < T::lit(1e-3) {
        // Σ_{j≥2} (−1)^j δ^j / (j(j−1))
        let mut term = delta * delta;
        let mut acc = T::zero();
        for j in 2..12 {
            let jj = T::from_usize_lossy(j * (j - 1));
            acc = acc + term / jj;
            term = -term * delta;
        }
        acc
    } else if delta <= -T::one() {
        T::one()
    } else {
        (T::one() + delta) * delta.ln_1p() - delta
    }
}

/// Entropy with `0·log 0 = 0`; zero when the mean vanishes.
pub(crate) fn entropy_unchecked<T: Real>(pi: &[T], f: &[T]) -> T {
    let mean = pi.iter().zip(f).map(|(&p, &v)| p * v).collect::<CompensatedSum<T>>().value();
    if mean <= T::zero() {
        return T::zero();
    }
    let acc: CompensatedSum<T> = pi.iter().zip(f).map(|(&p, &v)| p * entropy_kernel((v - mean) / mean)).collect();
    (acc.value() * mean).max(T::zero())
}

/// `Σ_x π(x) f(x) ln(f(x) / E_π f)`.
pub fn entropy<T: Real>(pi: &[T], f: &[T]) -> Result<T> {
    if pi.len() != f.len() {
        return Err(invalid!("distribution has {} entries, function {}", pi.len(), f.len()));
    }
    if f.iter().any(|v| *v < T::zero() || !v.is_finite()) {
        return Err(invalid!("entropy needs a finite nonnegative function"));
    }
    if pi.iter().zip(f).all(|(&p, &v)| p * v == T::zero()) {
        return Err(invalid!("entropy needs a positive mean"));
    }
    Ok(entropy_unchecked(pi, f))
}

/// `E(√f, √f) / Ent_π(f)`; any value is an upper bound on the log-Sobolev constant.
pub fn lsc_ratio<T: Real>(kernel: &Kernel<T>, f: &[T]) -> Result<T> {
    let ent = entropy(kernel.stationary(), f)?;
    if ent <= T::zero() {
        return Err(invalid!("function is constant on the support; entropy vanishes"));
    }
    let roots: Vec<T> = f.iter().map(|v| v.sqrt()).collect();
    Ok(dirichlet_form(kernel, &roots)? / ent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_kernel, ChainSpec};
    use crate::StateCap;

    fn k2() -> Kernel<f64> {
        build_kernel(&ChainSpec::Complete { colors: 2 }, StateCap::DEFAULT).unwrap()
    }

    #[test]
    fn dirichlet_closed_forms() {
        let k = k2();
        assert_eq!(dirichlet_form(&k, &[3.0, 3.0]).unwrap(), 0.0);
        assert!((dirichlet_form(&k, &[0.0, 1.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(dirichlet_form(&k, &[0.0]).is_err());
    }

    #[test]
    fn dirichlet_matches_double_sum() {
        let k: Kernel<f64> = build_kernel(&ChainSpec::Ucc { k: 2, colors: 4 }, StateCap::DEFAULT).unwrap();
        let f: Vec<f64> = (0..k.size()).map(|i| ((i * 7919) % 13) as f64 / 3.0).collect();
        let dense = k.to_dense();
        let mut oracle = 0.0;
        for x in 0..k.size() {
            for y in 0..k.size() {
                oracle += 0.5 * (f[x] - f[y]).powi(2) * k.stationary()[x] * dense[x][y];
            }
        }
        assert!((dirichlet_form(&k, &f).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn entropy_closed_forms() {
        assert_eq!(entropy(&[0.5, 0.5], &[4.0, 4.0]).unwrap(), 0.0);
        let e = entropy(&[0.5, 0.5], &[2.0, 0.0]).unwrap();
        assert!((e - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(entropy(&[0.5, 0.5], &[-1.0, 2.0]).is_err());
        assert!(entropy(&[0.5, 0.5], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn entropy_kernel_is_continuous_across_branches() {
        for d in [-0.9, -1e-3, -0.99e-3, 1e-3, 1.01e-3, 0.5, 3.0] {
            let direct = (1.0 + d) * f64::ln_1p(d) - d;
            assert!((entropy_kernel(d) - direct).abs() <= 1e-12 * direct.abs(), "{d}");
        }
        assert!((entropy_kernel(1e-6f64) / (0.5e-12 - 1e-18 / 6.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_rejects_constant_functions() {
        let k = k2();
        assert!(lsc_ratio(&k, &[1.0, 1.0]).is_err());
        assert!(lsc_ratio(&k, &[1.0, 2.0]).unwrap() > 0.0);
    }
}
