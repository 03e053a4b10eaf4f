//! Sequence-guided incremental concolic test generation for RTL designs.

pub mod bv;
pub mod cfg;
pub mod concolic;
pub mod frontend;
pub mod instrument;
pub mod pipeline;
pub mod sequence;
pub mod sim;
pub mod solver;
pub mod symbolic;
pub mod target;
