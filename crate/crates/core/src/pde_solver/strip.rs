//! Direct solve on the truncated strip with convex data on both edges.

use std::sync::Arc;

use super::{solve_dirichlet, Equation, SolutionField, SolveConfig};
use crate::barriers::{chebyshev_abscissae, lower_envelope, ConvexBoundaryFunction, Envelope, DEFAULT_ENVELOPE_POINTS};
use crate::error::{Error, Result};
use crate::mesh::{RectGrid, StencilMesh};
use crate::minimal_graph::{solve_minimal, strip_data, MinimalField};
use crate::profiles::PlanarProfile;
use crate::verify::{check_sandwich, discretization_tolerance, PropertyReport};

#[derive(Debug, Clone)]
pub struct StripSolution {
    pub grid: RectGrid,
    pub field: SolutionField,
    /// The minimal graph with the same data, an upper bound.
    pub minimal: MinimalField,
    /// Lower envelope of touching barriers, the initial guess.
    pub envelope: Envelope,
    pub sandwich: PropertyReport,
}

/// Solves on `[-L, L] × [-m, m]` (from `grid`) with `f` on `y = ±m`.
/// Fails before any solve when no grim-reaper barrier fits the width.
pub fn solve_strip(
    f: &ConvexBoundaryFunction,
    profile: &Arc<PlanarProfile>,
    grid: &RectGrid,
    cfg: &SolveConfig,
) -> Result<StripSolution> {
    cfg.validate()?;
    let m = grid.half_width;
    let d = profile.halfwidth();
    if m >= d {
        return Err(Error::BarrierUnavailable {
            m,
            halfwidth: d,
            d,
            max_m: d,
        });
    }
    let xs = chebyshev_abscissae(DEFAULT_ENVELOPE_POINTS, grid.half_length);
    let envelope = lower_envelope(f, profile, &xs, grid)?;
    let minimal = solve_minimal(f, grid, cfg)?;
    let mesh = Arc::new(StencilMesh::rect(grid));
    let mut init = strip_data(f, grid);
    for &k in &mesh.interior {
        init[k] = envelope.values[k];
    }
    let field = solve_dirichlet(mesh.clone(), init, Equation::Soliton(profile.alpha()), cfg)?;
    let eps = discretization_tolerance(&field);
    let sandwich = check_sandwich(&mesh, &envelope.values, &field.values, minimal.values(), eps);
    Ok(StripSolution {
        grid: *grid,
        field,
        minimal,
        envelope,
        sandwich,
    })
}
