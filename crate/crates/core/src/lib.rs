//! Exact Markov-chain machinery for random reversible circuits and
//! approximate k-wise independent permutations.
//!
//! The crate builds explicit transition kernels for the reversible-circuit
//! walk and the clique-coloring walks it is compared against, evaluates
//! Dirichlet forms, entropies and log-Sobolev ratios on them, computes the
//! exact congestion of the swap-to-recolor path map, and runs exact and
//! Monte Carlo mixing experiments.
//!
//! Numerical code is generic over the scalar type. [`Scalar`] covers
//! anything kernels can be stored in (including exact rationals), while
//! [`Real`] adds the floating-point operations needed by entropies and
//! eigen-solves. Concrete aliases for the common choices live at the crate
//! root.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chains;
pub mod comparison;
mod error;
pub mod generic;
pub mod io;
pub mod mixing;
pub mod primitives;
pub mod rng;
mod scalar;
pub mod stats;

pub use error::{Error, Result, StateCap};
pub use scalar::{Rational, Real, Scalar};

pub use analysis::StateFunction;
pub use chains::{ChainSpec, Family, Kernel, KernelMeta};
pub use generic::{LogBase, Partition};
pub use mixing::Distribution;
pub use primitives::{BitString, ColorTuple, Gate, GateMeasure, TupleSpace};

/// Double-precision kernel, the default for analysis.
pub type KernelF64 = Kernel<f64>;
/// Single-precision kernel.
pub type KernelF32 = Kernel<f32>;
/// Kernel with exact rational transition probabilities.
pub type ExactKernel = Kernel<Rational>;
/// Double-precision state function.
pub type StateFunctionF64 = StateFunction<f64>;
/// Double-precision distribution.
pub type DistributionF64 = Distribution<f64>;
