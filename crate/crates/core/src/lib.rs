//! Numerics for the resource theory of imaginarity.
//!
//! `qmat` holds the linear algebra and state types. The remaining modules
//! build on it: scalar measures, real channels, assisted distillation,
//! conversion formulas, an SDP upper bound and channel discrimination games.

pub mod assisted;
pub mod channels;
pub mod convert;
pub mod discrim;
pub mod error;
pub mod measures;
pub mod qmat;
pub mod random;
pub mod sdpbound;

pub use error::{Error, Result};
pub use qmat::{CMat, DensityMatrix, PureState, C64};
