//! Analogue-gravity toolkit: metrics of moving media, ergospheres,
//! characteristic horizons, and wave propagation near them.

pub mod error;
pub mod geometry;
pub mod horizon;
pub mod inverse;
pub mod metric;
pub mod ode;
pub mod rays;
pub mod scenario;
pub mod wave;

pub use error::{Error, Result};
