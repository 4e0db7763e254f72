//! Surrogate-assisted multi-objective design optimization of double-V
//! interior permanent-magnet synchronous machines.
//!
//! The classical evaluation path feeds [`machine_model`] measures through
//! [`postprocess`]; the hybrid path replaces the measure source with a
//! trained [`surrogate`] and keeps the post-processing identical. The
//! [`optimizer`] drives either path.

pub mod design_space;
pub mod error;
pub mod evaluator;
pub mod machine_model;
pub mod rng;
pub mod sampling;
pub mod postprocess;
pub mod optimizer;
pub mod surrogate;
