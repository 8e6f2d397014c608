//! Transition kernels and step samplers for the circuit and coloring chains.

mod build;
mod kernel;
mod product;
mod steps;

pub use build::{build_grev_kernel, build_kernel, build_tgrev_kernel, generic_tuple_states, ChainSpec, Family};
pub use kernel::{Kernel, KernelMeta};
pub use product::product_kernel;
pub use steps::{cc_move, step_cc, step_rev, step_rev_words, step_tgrev, step_ucc, ucc_move};
