//! Bit strings, distinct tuples, and width-2 gates.

mod bitstring;
mod gate;
mod tuple;

pub use bitstring::BitString;
pub use gate::{
    apply_gate, dedupe_gates, enumerate_gates, gate_count, BoolFn2, DistinctGate, Gate, GateMeasure, GateSampler,
};
pub use tuple::{falling_factorial, tuple_index, tuple_unindex, ColorTuple, TupleSpace};
