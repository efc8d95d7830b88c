//! Embedded geodesics on asymptotically conical surfaces.
//!
//! The crate finds the two stable minimizing segments between antipodal
//! points, extracts the mountain-pass segment from a minimized sweepout,
//! computes Morse indices and runs the asymptotic diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod cone;
pub mod curve;
pub mod error;
pub mod exec;
pub mod flow;
pub mod linalg;
pub mod metric;
pub mod minmax;
pub mod selftest;

pub use error::{GeoError, Result};
pub use exec::Exec;
pub use metric::{ChartPoint, Family, MetricTensor2, SurfaceMetric};
