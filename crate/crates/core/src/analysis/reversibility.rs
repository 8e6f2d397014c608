use serde::Serialize;

use crate::chains::Kernel;
use crate::Scalar;

pub const REVERSIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReversibilityReport {
    /// `max |π(x)P(x,y) − π(y)P(y,x)|` over all pairs.
    pub max_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub pass: bool,
}

/// Largest detailed-balance violation; passes when it is at most [`REVERSIBILITY_TOL`].
pub fn verify_reversible<T: Scalar>(kernel: &Kernel<T>) -> ReversibilityReport {
    let pi = kernel.stationary();
    let mut max_violation = 0.0;
    let mut worst_pair = None;
    // Every pair with a nonzero flow in either direction is reached from its nonzero side.
    for (x, y, p) in kernel.entries() {
        let forward = pi[x].clone() * p.clone();
        let backward = pi[y].clone() * kernel.get(y, x);
        let v = forward.abs_diff(&backward).to_f64_lossy();
        if v > max_violation {
            max_violation = v;
            worst_pair = Some((x, y));
        }
    }
    ReversibilityReport { max_violation, worst_pair, pass: max_violation <= REVERSIBILITY_TOL }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_kernel, ChainSpec, Family, KernelMeta};
    use crate::{GateMeasure, Rational, StateCap};

    #[test]
    fn symmetric_kernels_balance_exactly() {
        let ucc: Kernel<Rational> = build_kernel(&ChainSpec::Ucc { k: 2, colors: 4 }, StateCap::DEFAULT).unwrap();
        let r = verify_reversible(&ucc);
        assert_eq!(r.max_violation, 0.0);
        assert!(r.pass);
        let rev: Kernel<f64> =
            build_kernel(&ChainSpec::Rev { k: 2, n: 3, mode: GateMeasure::ParameterUniform }, StateCap::DEFAULT)
                .unwrap();
        assert!(verify_reversible(&rev).max_violation <= 1e-12);
    }

    #[test]
    fn perturbed_kernel_is_flagged() {
        let rows = vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.25), (1, 0.75)]];
        let k = Kernel::from_rows(KernelMeta::new(Family::Custom), rows, vec![0.5, 0.5]).unwrap();
        let r = verify_reversible(&k);
        assert!(!r.pass);
        assert!((r.max_violation - 0.125).abs() < 1e-15);
        assert!(matches!(r.worst_pair, Some((0, 1)) | Some((1, 0))));
    }
}
