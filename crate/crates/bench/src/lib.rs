//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use soliton_core::barriers::{BoundaryForm, ConvexBoundaryFunction};
use soliton_core::profiles::{Alpha, PlanarProfile};

pub fn reaper(alpha: f64) -> Arc<PlanarProfile> {
    Arc::new(PlanarProfile::new(Alpha::new(alpha).expect("positive alpha"), 1e-11).expect("profile integrates"))
}

/// `x²` certified on `[-L - 1, L + 1]`.
pub fn parabola(half_length: f64) -> ConvexBoundaryFunction {
    ConvexBoundaryFunction::new(
        BoundaryForm::Poly {
            coeffs: vec![0.0, 0.0, 1.0],
        },
        (-half_length - 1.0, half_length + 1.0),
    )
    .expect("x² is convex")
}
