//! Reverse-mode differentiation over dense matrices, parameter storage, and
//! a finite-difference gradient checker.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{gradcheck, GradcheckOptions, GradcheckReport, ParamCheck};
pub use params::{glorot_uniform, Checkpoint, ParamStore, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use tape::{Bindings, Tape, Var};
