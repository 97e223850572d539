//! Conservative finite differences for `div(Du/W) = W^{-α}`, `W = √(1+|Du|²)`,
//! and a damped Newton solver for the Dirichlet problem.
//!
//! At an unknown node the divergence is the difference of face fluxes
//! `g_n / W_face`, where `g_n` is the difference quotient across the face and
//! the tangential derivative on the face is the average of the centered
//! derivatives at the two nodes sharing it (or the inner node's alone when the
//! outer node is a circle point without one). The source uses the centered
//! gradient at the node.

mod strip;

pub use strip::{solve_strip, StripSolution};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::mesh::{Geometry, StencilMesh, Stencil3, EAST, NORTH, SOUTH, WEST};
use crate::profiles::Alpha;

/// Which quasilinear equation is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Equation {
    /// `div(Du/W) = W^{-α}`.
    Soliton(Alpha),
    /// `div(Du/W) = 0`.
    MinimalSurface,
}

impl Equation {
    fn exponent(self) -> Option<f64> {
        match self {
            Equation::Soliton(a) => Some(a.value()),
            Equation::MinimalSurface => None,
        }
    }

    pub fn alpha(self) -> Option<Alpha> {
        match self {
            Equation::Soliton(a) => Some(a),
            Equation::MinimalSurface => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Sup-norm of the nodal residual at which Newton stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    /// Smallest step length tried before giving up on sufficient decrease.
    pub min_step: f64,
    /// Armijo constant for the sup-norm decrease test.
    pub sufficient_decrease: f64,
    /// Relative residual accepted from the linear solve.
    pub linear_tol: f64,
    /// Evaluate residuals with rayon. Per-node results do not depend on it.
    pub parallel: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 80,
            backtrack: 0.5,
            min_step: 1e-6,
            sufficient_decrease: 1e-4,
            linear_tol: 1e-8,
            parallel: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.max_iter > 0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.min_step > 0.0
            && self.min_step <= 1.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0
            && self.linear_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid solver configuration {self:?}")))
        }
    }
}

#[inline]
fn face_flux(gn: f64, gt: f64) -> (f64, f64, f64) {
    let w2 = 1.0 + gn * gn + gt * gt;
    let w = w2.sqrt();
    let w3 = w2 * w;
    (gn / w, (1.0 + gt * gt) / w3, -gn * gt / w3)
}

fn tangential(mesh: &StencilMesh, k: usize, dir: usize) -> &Option<Stencil3> {
    if dir < 2 {
        &mesh.nodes[k].dy
    } else {
        &mesh.nodes[k].dx
    }
}

/// Residual at unknown-capable node `k`. When `jac` is given, the partial
/// derivatives with respect to nodal values are appended as `(node, value)`.
fn node_residual(
    mesh: &StencilMesh,
    u: &[f64],
    eq: Equation,
    k: usize,
    mut jac: Option<&mut Vec<(usize, f64)>>,
) -> f64 {
    let node = &mesh.nodes[k];
    let arms = node.arms.as_ref().expect("residual at a Dirichlet node");
    let mut r = 0.0;
    for (plus, minus) in [(EAST, WEST), (NORTH, SOUTH)] {
        let denom = 0.5 * (arms[plus].len + arms[minus].len);
        for (dir, sign) in [(plus, 1.0), (minus, -1.0)] {
            let arm = arms[dir];
            let gn = sign * (u[arm.node] - u[k]) / arm.len;
            let own = tangential(mesh, k, dir).as_ref().expect("unknown has stencils");
            let other = tangential(mesh, arm.node, dir);
            let gt = match other {
                Some(o) => 0.5 * (own.apply(u) + o.apply(u)),
                None => own.apply(u),
            };
            let (flux, d_n, d_t) = face_flux(gn, gt);
            r += sign * flux / denom;
            if let Some(j) = jac.as_deref_mut() {
                let cn = d_n / (arm.len * denom);
                j.push((arm.node, cn));
                j.push((k, -cn));
                let ct = sign * d_t / denom;
                match other {
                    Some(o) => {
                        for s in [own, o] {
                            for q in 0..3 {
                                j.push((s.idx[q], 0.5 * ct * s.w[q]));
                            }
                        }
                    }
                    None => {
                        for q in 0..3 {
                            j.push((own.idx[q], ct * own.w[q]));
                        }
                    }
                }
            }
        }
    }
    if let Some(alpha) = eq.exponent() {
        let (sx, sy) = (node.dx.as_ref().unwrap(), node.dy.as_ref().unwrap());
        let (p, q) = (sx.apply(u), sy.apply(u));
        let g = 1.0 + p * p + q * q;
        let source = g.powf(-0.5 * alpha);
        r -= source;
        if let Some(j) = jac {
            // d(-S)/dp = α p G^{-α/2-1}
            let c = alpha * source / g;
            for t in 0..3 {
                j.push((sx.idx[t], c * p * sx.w[t]));
                j.push((sy.idx[t], c * q * sy.w[t]));
            }
        }
    }
    r
}

/// Nodal residual on every unknown-capable node of `mesh`; zero at Dirichlet nodes.
pub fn residual(mesh: &StencilMesh, u: &[f64], eq: Equation) -> Vec<f64> {
    let mut out = vec![0.0; mesh.len()];
    for &k in &mesh.interior {
        out[k] = node_residual(mesh, u, eq, k, None);
    }
    out
}

fn residual_on(
    mesh: &StencilMesh,
    u: &[f64],
    eq: Equation,
    unknowns: &[usize],
    parallel: bool,
) -> Vec<f64> {
    if parallel {
        unknowns
            .par_iter()
            .map(|&k| node_residual(mesh, u, eq, k, None))
            .collect()
    } else {
        unknowns
            .iter()
            .map(|&k| node_residual(mesh, u, eq, k, None))
            .collect()
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Sup-norm of the residual over `unknowns`.
pub fn residual_norm(mesh: &StencilMesh, u: &[f64], eq: Equation, unknowns: &[usize]) -> f64 {
    sup_norm(&residual_on(mesh, u, eq, unknowns, false))
}

struct Assembly {
    matrix: BandMatrix,
}

fn assemble_jacobian(
    mesh: &StencilMesh,
    u: &[f64],
    eq: Equation,
    unknowns: &[usize],
    column: &[usize],
) -> Assembly {
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(unknowns.len() * 40);
    let mut scratch = Vec::with_capacity(48);
    for (row, &k) in unknowns.iter().enumerate() {
        scratch.clear();
        node_residual(mesh, u, eq, k, Some(&mut scratch));
        for &(node, v) in &scratch {
            let col = column[node];
            if col != usize::MAX && v != 0.0 {
                triplets.push((row, col, v));
            }
        }
    }
    let (mut kl, mut ku) = (0, 0);
    for &(r, c, _) in &triplets {
        if r > c {
            kl = kl.max(r - c);
        } else {
            ku = ku.max(c - r);
        }
    }
    let mut matrix = BandMatrix::zeros(unknowns.len(), kl, ku);
    for (r, c, v) in triplets {
        matrix.add(r, c, v);
    }
    Assembly { matrix }
}

fn column_map(len: usize, unknowns: &[usize]) -> Vec<usize> {
    let mut column = vec![usize::MAX; len];
    for (c, &k) in unknowns.iter().enumerate() {
        column[k] = c;
    }
    column
}

/// Dense Jacobian of the residual over `unknowns` (rows and columns in
/// `unknowns` order); meant for small meshes and tests.
pub fn jacobian_dense(
    mesh: &StencilMesh,
    u: &[f64],
    eq: Equation,
    unknowns: &[usize],
) -> Vec<Vec<f64>> {
    let column = column_map(mesh.len(), unknowns);
    let a = assemble_jacobian(mesh, u, eq, unknowns, &column).matrix;
    let n = unknowns.len();
    (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// Residual sup-norm before the first and after every iteration.
    pub history: Vec<f64>,
}

/// Damped Newton on the residual restricted to `unknowns`; all other nodes of
/// `u` are held fixed. Steps are accepted under an Armijo test on the sup-norm.
pub fn newton(
    mesh: &StencilMesh,
    u: &mut [f64],
    eq: Equation,
    unknowns: &[usize],
    cfg: &SolveConfig,
) -> Result<NewtonReport> {
    cfg.validate()?;
    let column = column_map(mesh.len(), unknowns);
    let mut r = residual_on(mesh, u, eq, unknowns, cfg.parallel);
    let mut norm = sup_norm(&r);
    let mut history = vec![norm];
    let fail = |iterations, residual, history: Vec<f64>| Error::NewtonFailed {
        iterations,
        residual,
        history,
    };
    if !norm.is_finite() {
        return Err(fail(0, norm, history));
    }
    let mut trial = u.to_vec();
    for it in 0..cfg.max_iter {
        if norm <= cfg.tol {
            return Ok(NewtonReport {
                iterations: it,
                residual: norm,
                history,
            });
        }
        let Assembly { matrix } = assemble_jacobian(mesh, u, eq, unknowns, &column);
        let check = matrix.clone();
        let lu = matrix.factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut delta);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::LinearSolve("non-finite Newton direction".into()));
        }
        let jd = check.mul(&delta);
        let lin_res = sup_norm(&jd.iter().zip(&r).map(|(a, b)| a + b).collect::<Vec<_>>());
        if lin_res > cfg.linear_tol * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::LinearSolve(format!(
                "linear residual {lin_res:e} above tolerance at residual {norm:e}"
            )));
        }
        let mut lambda = 1.0;
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        loop {
            trial.copy_from_slice(u);
            for (&k, d) in unknowns.iter().zip(&delta) {
                trial[k] += lambda * d;
            }
            let rt = residual_on(mesh, &trial, eq, unknowns, cfg.parallel);
            let nt = sup_norm(&rt);
            if nt.is_finite() && nt <= (1.0 - cfg.sufficient_decrease * lambda) * norm {
                best = Some((lambda, nt, rt));
                break;
            }
            if nt.is_finite() && nt < best.as_ref().map_or(norm, |b| b.1) {
                best = Some((lambda, nt, rt));
            }
            lambda *= cfg.backtrack;
            if lambda < cfg.min_step {
                break;
            }
        }
        let Some((lambda, nt, rt)) = best else {
            return Err(fail(it, norm, history));
        };
        for (&k, d) in unknowns.iter().zip(&delta) {
            u[k] += lambda * d;
        }
        r = rt;
        norm = nt;
        history.push(norm);
    }
    if norm <= cfg.tol {
        Ok(NewtonReport {
            iterations: cfg.max_iter,
            residual: norm,
            history,
        })
    } else {
        Err(fail(cfg.max_iter, norm, history))
    }
}

/// Discrete harmonic function with the Dirichlet values of `data`
/// (five-point Shortley–Weller Laplacian).
pub fn harmonic_extension(mesh: &StencilMesh, data: &[f64]) -> Result<Vec<f64>> {
    let unknowns = &mesh.interior;
    let column = column_map(mesh.len(), unknowns);
    let mut triplets = Vec::with_capacity(unknowns.len() * 5);
    let mut rhs = vec![0.0; unknowns.len()];
    for (row, &k) in unknowns.iter().enumerate() {
        let arms = mesh.nodes[k].arms.unwrap();
        for (plus, minus) in [(EAST, WEST), (NORTH, SOUTH)] {
            let denom = 0.5 * (arms[plus].len + arms[minus].len);
            for a in [arms[plus], arms[minus]] {
                let c = 1.0 / (a.len * denom);
                triplets.push((row, row, -c));
                match column[a.node] {
                    usize::MAX => rhs[row] -= c * data[a.node],
                    col => triplets.push((row, col, c)),
                }
            }
        }
    }
    let (mut kl, mut ku) = (0, 0);
    for &(r, c, _) in &triplets {
        if r > c {
            kl = kl.max(r - c);
        } else {
            ku = ku.max(c - r);
        }
    }
    let mut a = BandMatrix::zeros(unknowns.len(), kl, ku);
    for (r, c, v) in triplets {
        a.add(r, c, v);
    }
    a.factor()?.solve(&mut rhs);
    let mut out = data.to_vec();
    for (&k, v) in unknowns.iter().zip(rhs) {
        out[k] = v;
    }
    Ok(out)
}

/// A converged discrete solution together with its mesh and solve history.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub mesh: Arc<StencilMesh>,
    pub values: Vec<f64>,
    pub equation: Equation,
    pub report: NewtonReport,
}

impl SolutionField {
    pub fn residual_norm(&self) -> f64 {
        self.report.residual
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Values at the Dirichlet nodes.
    pub fn boundary_values(&self) -> Vec<f64> {
        self.mesh.boundary_nodes().map(|k| self.values[k]).collect()
    }
}

/// Solves the Dirichlet problem on `mesh`. `init` carries the boundary data
/// at Dirichlet nodes and the initial guess elsewhere; data must be finite.
pub fn solve_dirichlet(
    mesh: Arc<StencilMesh>,
    init: Vec<f64>,
    eq: Equation,
    cfg: &SolveConfig,
) -> Result<SolutionField> {
    if init.len() != mesh.len() {
        return Err(Error::InvalidInput(format!(
            "initial field has {} values for {} nodes",
            init.len(),
            mesh.len()
        )));
    }
    if let Some(k) = mesh.boundary_nodes().find(|&k| !init[k].is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite boundary value at node {k} ({}, {})",
            mesh.nodes[k].x, mesh.nodes[k].y
        )));
    }
    let mut values = init;
    let unknowns = mesh.interior.clone();
    let report = newton(&mesh, &mut values, eq, &unknowns, cfg)?;
    Ok(SolutionField {
        mesh,
        values,
        equation: eq,
        report,
    })
}

/// `|Du|` per node and which nodes count as boundary for the gradient
/// maximum check.
#[derive(Debug, Clone)]
pub struct GradientField {
    /// NaN where no gradient is available (circle points of a disk mesh).
    pub magnitude: Vec<f64>,
    pub on_boundary: Vec<bool>,
}

/// Gradient magnitude. On rectangles: centered differences inside, one-sided
/// second-order differences across the edges. On disks the circle points
/// carry no gradient; the unknowns adjacent to the circle stand in for the
/// boundary.
pub fn gradient_field(field: &SolutionField) -> GradientField {
    let mesh = &field.mesh;
    let u = &field.values;
    match &mesh.geometry {
        Geometry::Rect(g) => {
            let (hx, hy) = (g.hx(), g.hy());
            let d = |v0: f64, v1: f64, v2: f64, h: f64| (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * h);
            let mut magnitude = vec![0.0; g.len()];
            let mut on_boundary = vec![false; g.len()];
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let v = |a: usize, b: usize| u[g.index(a, b)];
                    let p = if i == 0 {
                        d(v(0, j), v(1, j), v(2, j), hx)
                    } else if i == g.nx - 1 {
                        -d(v(i, j), v(i - 1, j), v(i - 2, j), hx)
                    } else {
                        (v(i + 1, j) - v(i - 1, j)) / (2.0 * hx)
                    };
                    let q = if j == 0 {
                        d(v(i, 0), v(i, 1), v(i, 2), hy)
                    } else if j == g.ny - 1 {
                        -d(v(i, j), v(i, j - 1), v(i, j - 2), hy)
                    } else {
                        (v(i, j + 1) - v(i, j - 1)) / (2.0 * hy)
                    };
                    let k = g.index(i, j);
                    magnitude[k] = p.hypot(q);
                    on_boundary[k] = g.is_boundary(i, j);
                }
            }
            GradientField {
                magnitude,
                on_boundary,
            }
        }
        Geometry::Disk(_) => {
            let (hx, hy) = mesh.spacing();
            let mut magnitude = vec![f64::NAN; mesh.len()];
            let mut on_boundary = vec![false; mesh.len()];
            for &k in &mesh.interior {
                let n = &mesh.nodes[k];
                let p = n.dx.unwrap().apply(u);
                let q = n.dy.unwrap().apply(u);
                magnitude[k] = p.hypot(q);
                on_boundary[k] = !n.is_regular(&mesh.nodes, hx, hy);
            }
            GradientField {
                magnitude,
                on_boundary,
            }
        }
    }
}
