//! Effective metrics, autoparallels and variational checks for torsion-free
//! metric-affine geometries given by coordinate expressions.

pub mod connection;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod helmholtz;
pub mod ode;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use expr::{Expression, Jet2, Order};
pub use geometry::{GeometrySpec, NonMetricity, PointFields};
pub use tensor::{Matrix, Tensor3, Tensor4};
