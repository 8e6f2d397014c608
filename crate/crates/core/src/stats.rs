//! Goodness-of-fit and interval helpers.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn rejects(&self, significance: f64) -> bool {
        self.p_value < significance
    }
}

/// Pearson chi-square test of observed counts against exact cell probabilities.
///
/// Cells with zero expected probability must have zero counts; they are
/// dropped from the degrees of freedom. A count in such a cell makes the
/// statistic infinite.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(invalid!("{} counts but {} probabilities", observed.len(), probs.len()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid!("cell probabilities must be finite and nonnegative"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(invalid!("no observations"));
    }
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p == 0.0 {
            if o > 0 {
                stat = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = n * p;
        let d = o as f64 - e;
        stat += d * d / e;
    }
    if cells < 2 {
        return Err(invalid!("need at least two cells with positive probability"));
    }
    let dof = cells - 1;
    let p_value = if stat.is_infinite() {
        0.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| invalid!("{e}"))?;
        dist.sf(stat)
    };
    Ok(ChiSquareTest { statistic: stat, dof, p_value })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid!("zero trials"));
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    let lower = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let upper = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_reference_values() {
        // Reference: scipy.stats.chisquare([28, 31, 40, 35])
        let t = chi_square_gof(&[28, 31, 40, 35], &[0.25; 4]).unwrap();
        assert!((t.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert!((t.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
        assert_eq!(t.dof, 3);
    }

    #[test]
    fn mass_in_impossible_cell_rejects() {
        let t = chi_square_gof(&[5, 5, 1], &[0.5, 0.5, 0.0]).unwrap();
        assert!(t.rejects(1e-9));
    }

    #[test]
    fn wilson_all_hits() {
        let (lo, hi) = wilson_interval(10_000, 10_000, 1.96).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.999 && lo < 1.0);
        assert!(wilson_interval(0, 0, 1.96).is_err());
    }
}
