// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curve;
pub mod error;
pub mod field;
pub mod numeric;
pub mod spectral;

pub use curve::{ClosedCurve, PairFrame};
pub use error::{Error, Result};
pub use field::{Field, PrefixIntegral};
pub mod flow;
pub mod io;
pub mod kernels;
pub mod norms;
pub mod quadrature;
pub mod synth;
pub mod variations;
pub mod verify;
