pub mod calib;
pub mod error;
pub mod extalg;
pub mod linalg;
pub mod qdc;
pub mod quatspace;
pub mod scalar;
pub mod su2rep;
pub mod twistor;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Cx, Rational, Scalar};

/// Forms over exact rationals.
pub type ExactForm = extalg::Form<Rational>;
/// Forms over `f64`.
pub type FloatForm = extalg::Form<f64>;
pub type ExactStructure = quatspace::InducedStructure<Rational>;
pub type FloatStructure = quatspace::InducedStructure<f64>;
