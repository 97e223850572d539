//! Property checks on computed fields with machine-readable reports.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Geometry, StencilMesh};
use crate::pde_solver::{gradient_field, solve_dirichlet, Equation, SolutionField, SolveConfig};
use crate::profiles::integrate_bowl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub pass: bool,
    /// `max(0, worst signed violation)`.
    pub worst_violation: f64,
    /// Node attaining the worst signed violation (the tightest point when passing).
    pub location: Option<[f64; 2]>,
    pub tolerances: BTreeMap<String, f64>,
    pub detail: String,
}

impl PropertyReport {
    fn from_worst(
        name: &str,
        worst: Option<(f64, usize)>,
        mesh: &StencilMesh,
        tolerances: &[(&str, f64)],
        detail: String,
    ) -> Self {
        let (signed, location) = match worst {
            Some((v, k)) => (v, Some([mesh.nodes[k].x, mesh.nodes[k].y])),
            None => (f64::NEG_INFINITY, None),
        };
        Self {
            name: name.into(),
            pass: !(signed > 0.0) && !signed.is_nan(),
            worst_violation: if signed.is_nan() { f64::INFINITY } else { signed.max(0.0) },
            location,
            tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            detail,
        }
    }
}

/// Index and value of the largest entry of `violation(k)` over `nodes`
/// (NaN wins, first index on ties).
fn worst_of(nodes: impl Iterator<Item = usize>, violation: impl Fn(usize) -> f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for k in nodes {
        let v = violation(k);
        let better = match best {
            None => true,
            Some((b, _)) => v.is_nan() && !b.is_nan() || v > b,
        };
        if better {
            best = Some((v, k));
        }
    }
    best
}

/// `max(1, max |boundary data|)`.
pub fn data_scale(field: &SolutionField) -> f64 {
    field
        .mesh
        .boundary_nodes()
        .map(|k| field.values[k].abs())
        .fold(1.0, f64::max)
}

/// `10 h² · scale`, the tolerance for comparisons between discrete fields.
pub fn discretization_tolerance(field: &SolutionField) -> f64 {
    let h = field.mesh.h_max();
    10.0 * h * h * data_scale(field)
}

/// Radius and center of the disk circumscribing the domain.
fn circumscribed_radius(mesh: &StencilMesh) -> f64 {
    match &mesh.geometry {
        Geometry::Rect(g) => g.half_length.hypot(g.half_width),
        Geometry::Disk(d) => d.radius,
    }
}

/// Lower constant of the a priori bound: `min data − b(R)` for the bowl `b`
/// over the circumscribing disk of radius `R`, or `min data` for the
/// minimal surface equation.
pub fn lower_bound_constant(field: &SolutionField) -> Result<f64> {
    let min = field
        .mesh
        .boundary_nodes()
        .map(|k| field.values[k])
        .fold(f64::INFINITY, f64::min);
    match field.equation {
        Equation::MinimalSurface => Ok(min),
        Equation::Soliton(alpha) => {
            let r = circumscribed_radius(&field.mesh);
            let bowl = integrate_bowl(alpha, r, 1e-10)?;
            Ok(min - bowl.value(r)?)
        }
    }
}

/// `C − ε ≤ u ≤ max data + ε`.
pub fn check_bounds(field: &SolutionField, eps: f64) -> Result<PropertyReport> {
    let mesh = &field.mesh;
    let max = field
        .mesh
        .boundary_nodes()
        .map(|k| field.values[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = lower_bound_constant(field)?;
    let u = &field.values;
    let worst = worst_of(0..mesh.len(), |k| (u[k] - max).max(lower - u[k]) - eps);
    let upper_slack = max - field.max();
    let lower_slack = field.min() - lower;
    Ok(PropertyReport::from_worst(
        "bounds",
        worst,
        mesh,
        &[("eps", eps), ("lower", lower), ("upper", max)],
        format!("upper slack {upper_slack:.6e}, lower slack {lower_slack:.6e}"),
    ))
}

/// Interior maximum of `|Du|` is at most the boundary maximum plus `10 h · scale`.
pub fn check_gradient_boundary(field: &SolutionField) -> PropertyReport {
    let g = gradient_field(field);
    let mesh = &field.mesh;
    let boundary_max = g
        .magnitude
        .iter()
        .zip(&g.on_boundary)
        .filter(|(m, &b)| b && !m.is_nan())
        .map(|(m, _)| *m)
        .fold(0.0, f64::max);
    let tol = 10.0 * mesh.h_max() * data_scale(field);
    let worst = worst_of(
        (0..mesh.len()).filter(|&k| !g.on_boundary[k] && !g.magnitude[k].is_nan()),
        |k| g.magnitude[k] - boundary_max - tol,
    );
    let interior_max = g
        .magnitude
        .iter()
        .zip(&g.on_boundary)
        .filter(|(m, &b)| !b && !m.is_nan())
        .map(|(m, _)| *m)
        .fold(0.0, f64::max);
    PropertyReport::from_worst(
        "gradient_boundary",
        worst,
        mesh,
        &[("tol", tol)],
        format!("boundary max {boundary_max:.6e}, interior max {interior_max:.6e}"),
    )
}

fn same_mesh(a: &SolutionField, b: &SolutionField) -> bool {
    Arc::ptr_eq(&a.mesh, &b.mesh)
        || (a.mesh.geometry == b.mesh.geometry && a.mesh.len() == b.mesh.len())
}

/// `u1 ≤ u2 + ε` for solutions of the same equation with ordered data.
pub fn check_comparison(lower: &SolutionField, upper: &SolutionField, eps: f64) -> Result<PropertyReport> {
    if !same_mesh(lower, upper) {
        return Err(Error::InvalidInput("comparison needs fields on the same mesh".into()));
    }
    if let Some(k) = lower
        .mesh
        .boundary_nodes()
        .find(|&k| lower.values[k] > upper.values[k])
    {
        return Err(Error::InvalidInput(format!(
            "boundary data not ordered at node {k}: {} > {}",
            lower.values[k], upper.values[k]
        )));
    }
    Ok(check_ordered(
        "comparison",
        &lower.mesh,
        &lower.values,
        &upper.values,
        eps,
    ))
}

/// `lower ≤ upper + ε` nodewise.
pub fn check_ordered(name: &str, mesh: &StencilMesh, lower: &[f64], upper: &[f64], eps: f64) -> PropertyReport {
    let worst = worst_of(0..mesh.len(), |k| lower[k] - upper[k] - eps);
    PropertyReport::from_worst(name, worst, mesh, &[("eps", eps)], String::new())
}

/// `lower − ε ≤ u ≤ upper + ε` nodewise.
pub fn check_sandwich(mesh: &StencilMesh, lower: &[f64], u: &[f64], upper: &[f64], eps: f64) -> PropertyReport {
    let worst = worst_of(0..mesh.len(), |k| (lower[k] - u[k]).max(u[k] - upper[k]) - eps);
    let below = (0..mesh.len()).map(|k| lower[k] - u[k]).fold(f64::NEG_INFINITY, f64::max);
    let above = (0..mesh.len()).map(|k| u[k] - upper[k]).fold(f64::NEG_INFINITY, f64::max);
    PropertyReport::from_worst(
        "sandwich",
        worst,
        mesh,
        &[("eps", eps)],
        format!("max(lower - u) {below:.6e}, max(u - upper) {above:.6e}"),
    )
}

/// Fields converged from different starting guesses agree within `tol`.
pub fn check_uniqueness_of(fields: &[SolutionField], tol: f64) -> PropertyReport {
    let first = &fields[0];
    let mut worst: Option<(f64, usize)> = None;
    for other in &fields[1..] {
        let w = worst_of(0..first.mesh.len(), |k| (first.values[k] - other.values[k]).abs());
        if let Some((v, k)) = w {
            if worst.is_none_or(|(b, _)| v > b) {
                worst = Some((v, k));
            }
        }
    }
    let spread = worst.map_or(0.0, |w| w.0);
    PropertyReport::from_worst(
        "uniqueness",
        worst.map(|(v, k)| (v - tol, k)),
        &first.mesh,
        &[("tol", tol)],
        format!("max pairwise difference {spread:.6e} over {} solves", fields.len()),
    )
}

/// Solves from every guess (each carrying the same boundary data) and checks
/// agreement within `tol`. A failed solve makes the report inconclusive.
pub fn check_uniqueness(
    mesh: Arc<StencilMesh>,
    equation: Equation,
    guesses: &[Vec<f64>],
    cfg: &SolveConfig,
    tol: f64,
) -> Result<PropertyReport> {
    if guesses.len() < 2 {
        return Err(Error::InvalidInput("uniqueness check needs at least two guesses".into()));
    }
    let mut fields = Vec::with_capacity(guesses.len());
    for (i, g) in guesses.iter().enumerate() {
        match solve_dirichlet(mesh.clone(), g.clone(), equation, cfg) {
            Ok(f) => fields.push(f),
            Err(e) => {
                return Ok(PropertyReport {
                    name: "uniqueness".into(),
                    pass: false,
                    worst_violation: f64::INFINITY,
                    location: None,
                    tolerances: [("tol".to_string(), tol)].into_iter().collect(),
                    detail: format!("inconclusive: solve from guess {i} failed: {e}"),
                })
            }
        }
    }
    Ok(check_uniqueness_of(&fields, tol))
}
