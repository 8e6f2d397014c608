use nalgebra::{DMatrix, RealField};
use num_traits::Float;

use super::verify_reversible;
use crate::chains::Kernel;
use crate::error::{invalid, Error, Result};
use crate::Real;

/// Largest state space handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 10_000;

// Looser than the report threshold: stationary vectors from power iteration
// carry ~1e-13 relative error.
const GAP_REVERSIBILITY_TOL: f64 = 1e-9;

/// Eigenvalues of `D^{1/2} P D^{-1/2}` (symmetric for reversible P), descending.
pub fn eigenvalues<T: Real + RealField>(kernel: &Kernel<T>) -> Result<Vec<T>> {
    let n = kernel.size();
    if n > DENSE_LIMIT {
        return Err(invalid!("{n} states exceed the dense eigensolver limit of {DENSE_LIMIT}"));
    }
    let report = verify_reversible(kernel);
    if report.max_violation > GAP_REVERSIBILITY_TOL {
        return Err(Error::InvalidArgument(format!(
            "kernel is not reversible (detailed-balance violation {:e} at {:?})",
            report.max_violation, report.worst_pair
        )));
    }
    let pi = kernel.stationary();
    if pi.iter().any(|&p| p <= T::zero()) {
        return Err(invalid!("stationary distribution must be strictly positive"));
    }
    let roots: Vec<T> = pi.iter().map(|&p| Float::sqrt(p)).collect();
    let mut s = DMatrix::<T>::zeros(n, n);
    for (x, y, &p) in kernel.entries() {
        let v = roots[x] * p / roots[y];
        s[(x, y)] += v * T::lit(0.5);
        s[(y, x)] += v * T::lit(0.5);
    }
    let mut ev: Vec<T> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(ev)
}

/// `1 − λ₂` for a reversible kernel.
pub fn spectral_gap<T: Real + RealField>(kernel: &Kernel<T>) -> Result<T> {
    if kernel.size() < 2 {
        return Err(invalid!("spectral gap needs at least two states"));
    }
    let ev = eigenvalues(kernel)?;
    Ok(T::one() - ev[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_kernel, product_kernel, ChainSpec, Family, KernelMeta};
    use crate::StateCap;

    fn kern(spec: ChainSpec) -> Kernel<f64> {
        build_kernel(&spec, StateCap::DEFAULT).unwrap()
    }

    #[test]
    fn complete_graph_gap_is_one() {
        for n in [2, 3, 7] {
            assert!((spectral_gap(&kern(ChainSpec::Complete { colors: n })).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_gap_scales_by_factor_count() {
        let k2 = kern(ChainSpec::Complete { colors: 2 });
        let k3 = kern(ChainSpec::Complete { colors: 3 });
        let prod = product_kernel(&[k2.clone(), k3], StateCap::DEFAULT).unwrap();
        assert!((spectral_gap(&prod).unwrap() - 0.5).abs() < 1e-12);
        let ucc = kern(ChainSpec::Ucc { k: 2, colors: 4 });
        let g = spectral_gap(&ucc).unwrap();
        let triple = product_kernel(&[ucc.clone(), ucc.clone(), ucc], StateCap::DEFAULT).unwrap();
        assert!((spectral_gap(&triple).unwrap() - g / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ucc_small_gap() {
        // numpy.linalg.eigvalsh on the explicit 12×12 matrix gives 0.5
        let g = spectral_gap(&kern(ChainSpec::Ucc { k: 2, colors: 4 })).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let k: Kernel<f32> = build_kernel(&ChainSpec::Ucc { k: 2, colors: 4 }, StateCap::DEFAULT).unwrap();
        assert!((spectral_gap(&k).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_reversible() {
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let k = Kernel::from_rows(KernelMeta::new(Family::Custom), rows, vec![1.0 / 3.0; 3]).unwrap();
        // cyclic walk: uniform is stationary but detailed balance fails
        assert!(spectral_gap(&k).is_err());
    }
}
