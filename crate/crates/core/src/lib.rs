//! Parametric finite element simulation of solid-state dewetting: an open
//! polygonal interface evolving by surface diffusion with moving contact
//! points on a flat substrate.
//!
//! Time stepping is backward Euler ([`Scheme::Zjb`]), a second-order
//! predictor-corrector ([`Scheme::Pc`]) or BDFk with a predicted reference
//! curve ([`Scheme::Bdf2`] to [`Scheme::Bdf4`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod curve;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod schemes;

pub use curve::{from_shape, Diagnostics, NodalField, Point, PolygonalCurve, ShapeSpec};
pub use error::{Error, Phase, Result};
pub use metrics::{manifold_distance, region_of, wulff_shape, ConvergenceReport, Region};
pub use schemes::{Integrator, Scheme, SchemeParams};
