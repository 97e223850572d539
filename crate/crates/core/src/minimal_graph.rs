//! The minimal graph over the truncated strip with the convex data on both
//! edges; the upper bound and starting point of the Perron iteration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::barriers::ConvexBoundaryFunction;
use crate::error::Result;
use crate::mesh::{RectGrid, StencilMesh};
use crate::pde_solver::{solve_dirichlet, Equation, SolutionField, SolveConfig};

/// Dirichlet data on the truncated strip: `f(x)` on `y = ±m` and the
/// constant `f(±L)` on `x = ±L`. Interior entries are zero.
pub fn strip_data(f: &ConvexBoundaryFunction, grid: &RectGrid) -> Vec<f64> {
    let mut data = vec![0.0; grid.len()];
    let left = f.value(grid.x(0));
    let right = f.value(grid.x(grid.nx - 1));
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            data[k] = if j == 0 || j == grid.ny - 1 {
                f.value(grid.x(i))
            } else if i == 0 {
                left
            } else if i == grid.nx - 1 {
                right
            } else {
                0.0
            };
        }
    }
    data
}

#[derive(Debug, Clone)]
pub struct MinimalField {
    pub grid: RectGrid,
    pub field: SolutionField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalReport {
    pub residual: f64,
    pub iterations: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub m: f64,
    pub nx: usize,
    pub ny: usize,
    /// Data on the truncation edges.
    pub truncation: String,
}

impl MinimalField {
    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    pub fn report(&self) -> MinimalReport {
        MinimalReport {
            residual: self.field.report.residual,
            iterations: self.field.report.iterations,
            half_length: self.grid.half_length,
            m: self.grid.half_width,
            nx: self.grid.nx,
            ny: self.grid.ny,
            truncation: "constant f(±L)".into(),
        }
    }
}

/// Solves the minimal surface equation on the grid rectangle starting from
/// the extrusion `f(x)`, itself a subsolution for convex `f`.
pub fn solve_minimal(
    f: &ConvexBoundaryFunction,
    grid: &RectGrid,
    cfg: &SolveConfig,
) -> Result<MinimalField> {
    cfg.validate()?;
    let mesh = Arc::new(StencilMesh::rect(grid));
    let mut init = strip_data(f, grid);
    for &k in &mesh.interior {
        let (i, _) = grid.coords(k);
        init[k] = f.value(grid.x(i));
    }
    let field = solve_dirichlet(mesh, init, Equation::MinimalSurface, cfg)?;
    Ok(MinimalField {
        grid: *grid,
        field,
    })
}
