//! Disk lifting and the monotone Perron iteration from the minimal graph.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{chebyshev_abscissae, lower_envelope, ConvexBoundaryFunction, Envelope, DEFAULT_ENVELOPE_POINTS};
use crate::error::{Error, Result};
use crate::mesh::{DiskDomain, RectGrid, StencilMesh};
use crate::minimal_graph::{solve_minimal, MinimalField};
use crate::pde_solver::{newton, residual_norm, solve_dirichlet, Equation, SolveConfig};
use crate::profiles::{Alpha, PlanarProfile};

/// Disk radius of the default schedule as a fraction of the strip half-width.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.4;

/// Ordered disks covering every interior node of a working grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskSchedule {
    pub disks: Vec<DiskDomain>,
}

impl DiskSchedule {
    /// Staggered lattice of disks of radius `radius_fraction · m` spaced one
    /// radius apart, followed by smaller disks for any node still uncovered.
    /// Sorted row-major by center.
    pub fn lattice(grid: &RectGrid, radius_fraction: f64) -> Result<Self> {
        let (l, m) = (grid.half_length, grid.half_width);
        let r = radius_fraction * m;
        let margin = 0.25 * grid.hx().min(grid.hy());
        let ymax = m - r - margin;
        let xmax = l - r - margin;
        if !(r > 0.0) || ymax < 0.0 || xmax < 0.0 {
            return Err(Error::InvalidInput(format!(
                "disk radius {r} does not fit the {l} x {m} rectangle"
            )));
        }
        let spaced = |half: f64| -> Vec<f64> {
            let n = (2.0 * half / r).ceil() as usize + 1;
            if half == 0.0 || n < 2 {
                return vec![0.0];
            }
            (0..n)
                .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
                .collect()
        };
        let columns = spaced(xmax);
        let step = if columns.len() > 1 { columns[1] - columns[0] } else { 0.0 };
        let mut disks = Vec::new();
        for (row, &cy) in spaced(ymax).iter().enumerate() {
            let shift = if row % 2 == 1 { 0.5 * step } else { 0.0 };
            for &cx in &columns {
                let cx = cx + shift;
                if cx <= xmax {
                    disks.push(DiskDomain::on_grid(grid, cx, cy, r)?);
                }
            }
        }
        let mut schedule = Self { disks };
        schedule.cover(grid, r, margin)?;
        schedule
            .disks
            .sort_by(|a, b| a.cy.total_cmp(&b.cy).then(a.cx.total_cmp(&b.cx)));
        Ok(schedule)
    }

    /// Explicit disks on the lattice of `grid`; each must lie inside the rectangle.
    pub fn from_disks(grid: &RectGrid, disks: &[(f64, f64, f64)]) -> Result<Self> {
        let disks = disks
            .iter()
            .map(|&(cx, cy, r)| {
                let d = DiskDomain::on_grid(grid, cx, cy, r)?;
                if d.inside(grid) {
                    Ok(d)
                } else {
                    Err(Error::InvalidInput(format!("disk ({cx}, {cy}; {r}) leaves the rectangle")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { disks })
    }

    fn cover(&mut self, grid: &RectGrid, r: f64, margin: f64) -> Result<()> {
        let (l, m) = (grid.half_length, grid.half_width);
        let floor = 0.5 * grid.hx().min(grid.hy());
        for k in self.uncovered(grid) {
            let (i, j) = grid.coords(k);
            let (x, y) = (grid.x(i), grid.y(j));
            if self.disks.iter().any(|d| d.contains(x, y)) {
                continue;
            }
            let mut rho = r;
            loop {
                let cx = x.clamp(-l + rho + margin, l - rho - margin);
                let cy = y.clamp(-m + rho + margin, m - rho - margin);
                let d = DiskDomain::on_grid(grid, cx, cy, rho)?;
                if d.contains(x, y) {
                    self.disks.push(d);
                    break;
                }
                rho *= 0.8;
                if rho < floor {
                    return Err(Error::InvalidInput(format!("cannot cover node ({x}, {y})")));
                }
            }
        }
        Ok(())
    }

    /// Interior grid nodes outside every disk.
    pub fn uncovered(&self, grid: &RectGrid) -> Vec<usize> {
        (0..grid.len())
            .filter(|&k| {
                let (i, j) = grid.coords(k);
                !grid.is_boundary(i, j) && !self.disks.iter().any(|d| d.contains(grid.x(i), grid.y(j)))
            })
            .collect()
    }

    /// Same disks in a seeded random order.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut disks = self.disks.clone();
        disks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { disks }
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }
}

/// How the equation is posed on a disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftMode {
    /// Shortley–Weller disk with circle data interpolated bilinearly from
    /// the grid function.
    Embedded,
    /// The working-grid nodes inside the disk are the unknowns of the
    /// rectangle's own discretization; all other nodes are held fixed.
    GridAligned,
}

/// Disk lifting on a fixed working grid.
#[derive(Debug, Clone)]
pub struct Lifter {
    grid: RectGrid,
    mesh: Arc<StencilMesh>,
    equation: Equation,
    mode: LiftMode,
    cfg: SolveConfig,
}

impl Lifter {
    pub fn new(grid: &RectGrid, alpha: Alpha, mode: LiftMode, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid: *grid,
            mesh: Arc::new(StencilMesh::rect(grid)),
            equation: Equation::Soliton(alpha),
            mode,
            cfg: cfg.clone(),
        })
    }

    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &Arc<StencilMesh> {
        &self.mesh
    }

    pub fn mode(&self) -> LiftMode {
        self.mode
    }

    fn node_index(&self, x: f64, y: f64) -> usize {
        let g = &self.grid;
        let i = ((x + g.half_length) / g.hx()).round() as usize;
        let j = ((y + g.half_width) / g.hy()).round() as usize;
        g.index(i, j)
    }

    /// Grid nodes strictly inside `disk`, ordered with the shorter lattice
    /// direction fastest.
    fn disk_nodes(&self, disk: &DiskDomain) -> Vec<usize> {
        let g = &self.grid;
        let span = |c: f64, half: f64, h: f64, n: usize| {
            let lo = (((c - disk.radius + half) / h).floor().max(1.0)) as usize;
            let hi = (((c + disk.radius + half) / h).ceil() as usize).min(n - 2);
            lo..=hi
        };
        let is = span(disk.cx, g.half_length, g.hx(), g.nx);
        let js = span(disk.cy, g.half_width, g.hy(), g.ny);
        let mut out = Vec::new();
        let mut push = |i: usize, j: usize| {
            if disk.contains(g.x(i), g.y(j)) {
                out.push(g.index(i, j));
            }
        };
        if g.hx() >= g.hy() {
            for j in js {
                for i in is.clone() {
                    push(i, j);
                }
            }
        } else {
            for i in is {
                for j in js.clone() {
                    push(i, j);
                }
            }
        }
        out
    }

    /// Replaces `u` inside `disk` by the solution with `u`'s own trace.
    pub fn lift_in_place(&self, u: &mut [f64], disk: &DiskDomain) -> Result<()> {
        if u.len() != self.grid.len() || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid function must be finite on the working grid".into()));
        }
        if !disk.inside(&self.grid) {
            return Err(Error::InvalidInput(format!("disk {disk:?} leaves the working rectangle")));
        }
        match self.mode {
            LiftMode::GridAligned => {
                let unknowns = self.disk_nodes(disk);
                if !unknowns.is_empty() {
                    newton(&self.mesh, u, self.equation, &unknowns, &self.cfg)?;
                }
            }
            LiftMode::Embedded => {
                let mesh = Arc::new(StencilMesh::disk(disk));
                if mesh.interior.is_empty() {
                    return Ok(());
                }
                let init: Vec<f64> = mesh
                    .nodes
                    .iter()
                    .map(|n| match n.arms {
                        Some(_) => u[self.node_index(n.x, n.y)],
                        None => self.grid.bilinear(u, n.x, n.y),
                    })
                    .collect();
                let field = solve_dirichlet(mesh.clone(), init, self.equation, &self.cfg)?;
                for &k in &mesh.interior {
                    let n = &mesh.nodes[k];
                    u[self.node_index(n.x, n.y)] = field.values[k];
                }
            }
        }
        Ok(())
    }

    pub fn lift(&self, u: &[f64], disk: &DiskDomain) -> Result<Vec<f64>> {
        let mut out = u.to_vec();
        self.lift_in_place(&mut out, disk)?;
        Ok(out)
    }
}

/// One-off disk lift on `grid`.
pub fn lift_disk(
    u: &[f64],
    grid: &RectGrid,
    disk: &DiskDomain,
    alpha: Alpha,
    mode: LiftMode,
    cfg: &SolveConfig,
) -> Result<Vec<f64>> {
    Lifter::new(grid, alpha, mode, cfg)?.lift(u, disk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperfunctionCertificate {
    pub pass: bool,
    /// `max(0, max (f − u))` on the rows `y = ±m`.
    pub boundary_violation: f64,
    /// `max(0, max (lift(u) − u))` over all scheduled disks.
    pub lift_violation: f64,
    /// Index into the schedule of the disk with the largest increase.
    pub witness_disk: Option<usize>,
    pub witness_node: Option<[f64; 2]>,
    pub eps: f64,
}

/// Checks `u ≥ f` on the strip edges (up to `1e-12 · scale`) and
/// `lift(u, D) ≤ u + ε` for every disk.
pub fn is_superfunction(
    u: &[f64],
    f: &ConvexBoundaryFunction,
    lifter: &Lifter,
    schedule: &DiskSchedule,
    eps: f64,
) -> Result<SuperfunctionCertificate> {
    let g = lifter.grid();
    let boundary_tol = 1e-12 * f.scale();
    let mut boundary_violation: f64 = 0.0;
    let mut witness_node = None;
    for j in [0, g.ny - 1] {
        for i in 0..g.nx {
            let v = f.value(g.x(i)) - u[g.index(i, j)];
            if v > boundary_violation {
                boundary_violation = v;
                witness_node = Some([g.x(i), g.y(j)]);
            }
        }
    }
    let mut lift_violation: f64 = 0.0;
    let mut witness_disk = None;
    for (n, disk) in schedule.disks.iter().enumerate() {
        let lifted = lifter
            .lift(u, disk)
            .map_err(|e| Error::Lift { disk: n, source: Box::new(e) })?;
        for (k, (a, b)) in lifted.iter().zip(u).enumerate() {
            if a - b > lift_violation {
                lift_violation = a - b;
                witness_disk = Some(n);
                if boundary_violation <= boundary_tol {
                    let (i, j) = g.coords(k);
                    witness_node = Some([g.x(i), g.y(j)]);
                }
            }
        }
    }
    Ok(SuperfunctionCertificate {
        pass: boundary_violation <= boundary_tol && lift_violation <= eps,
        boundary_violation,
        lift_violation,
        witness_disk,
        witness_node,
        eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerronConfig {
    pub max_sweeps: usize,
    /// Stop once a sweep lowers no node by more than `decrease_tol · scale`...
    pub decrease_tol: f64,
    /// ...and the global residual is at most this.
    pub residual_tol: f64,
    pub mode: LiftMode,
    pub keep_snapshots: bool,
}

impl Default for PerronConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 400,
            decrease_tol: 1e-10,
            residual_tol: 1e-6,
            mode: LiftMode::GridAligned,
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Largest nodewise decrease over the sweep.
    pub max_decrease: f64,
    /// Global residual of the iterate after the sweep.
    pub residual: f64,
    /// Smallest nodewise decrease (negative means some node went up).
    pub min_decrease: f64,
    /// `max(0, envelope − ε − u, u − v⁰ − ε)`.
    pub sandwich_violation: f64,
    /// Largest increase caused by a single lift within the sweep; later
    /// lifts of the same sweep may undo it.
    pub lift_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronTrace {
    pub sweeps: Vec<SweepRecord>,
    pub converged: bool,
    /// Tolerance for nodewise increases, `10 · 1e-12 · scale`.
    pub monotonicity_tol: f64,
    #[serde(skip)]
    pub snapshots: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PerronRun {
    pub values: Vec<f64>,
    pub trace: PerronTrace,
    pub minimal: MinimalField,
    pub envelope: Envelope,
}

/// Sweeps the schedule starting from the minimal graph until the decrease
/// and residual criteria hold or `max_sweeps` is reached.
pub fn perron_iterate(
    f: &ConvexBoundaryFunction,
    profile: &Arc<PlanarProfile>,
    grid: &RectGrid,
    schedule: &DiskSchedule,
    pcfg: &PerronConfig,
    cfg: &SolveConfig,
) -> Result<PerronRun> {
    if let Some(&k) = schedule.uncovered(grid).first() {
        let (i, j) = grid.coords(k);
        return Err(Error::InvalidInput(format!(
            "schedule leaves node ({}, {}) uncovered",
            grid.x(i),
            grid.y(j)
        )));
    }
    let xs = chebyshev_abscissae(DEFAULT_ENVELOPE_POINTS, grid.half_length);
    let envelope = lower_envelope(f, profile, &xs, grid)?;
    let minimal = solve_minimal(f, grid, cfg)?;
    let lifter = Lifter::new(grid, profile.alpha(), pcfg.mode, cfg)?;
    let scale = f.scale();
    let monotonicity_tol = 10.0 * 1e-12 * scale;
    let h = grid.h_max();
    let eps = 10.0 * h * h * scale;
    let decrease_tol = pcfg.decrease_tol * scale;

    let mut u = minimal.values().to_vec();
    let mut trace = PerronTrace {
        sweeps: Vec::new(),
        converged: false,
        monotonicity_tol,
        snapshots: Vec::new(),
    };
    let mut before = vec![0.0; u.len()];
    for sweep in 0..pcfg.max_sweeps {
        let start = u.clone();
        let mut lift_increase = 0.0f64;
        for (n, disk) in schedule.disks.iter().enumerate() {
            before.copy_from_slice(&u);
            lifter
                .lift_in_place(&mut u, disk)
                .map_err(|e| Error::Lift { disk: n, source: Box::new(e) })?;
            for (a, b) in u.iter().zip(&before) {
                lift_increase = lift_increase.max(a - b);
            }
        }
        let (mut max_decrease, mut min_decrease) = (0.0f64, f64::INFINITY);
        let mut sandwich_violation = 0.0f64;
        for k in 0..u.len() {
            let d = start[k] - u[k];
            max_decrease = max_decrease.max(d);
            min_decrease = min_decrease.min(d);
            let v = (envelope.values[k] - eps - u[k]).max(u[k] - minimal.values()[k] - eps);
            sandwich_violation = sandwich_violation.max(v);
        }
        let residual = residual_norm(lifter.mesh(), &u, Equation::Soliton(profile.alpha()), &lifter.mesh().interior);
        trace.sweeps.push(SweepRecord {
            max_decrease,
            residual,
            min_decrease,
            sandwich_violation,
            lift_increase,
        });
        if -min_decrease > monotonicity_tol {
            let node = (0..u.len())
                .find(|&k| u[k] - start[k] == -min_decrease)
                .unwrap_or(0);
            return Err(Error::Monotonicity {
                sweep,
                node,
                increase: -min_decrease,
                decreases: trace.sweeps.iter().map(|s| s.max_decrease).collect(),
            });
        }
        if pcfg.keep_snapshots {
            trace.snapshots.push(u.clone());
        }
        if max_decrease < decrease_tol && residual <= pcfg.residual_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(PerronRun {
        values: u,
        trace,
        minimal,
        envelope,
    })
}
