//! Subcommand bodies. Each validates its configuration completely before
//! computing and returns the files it wrote.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use soliton_core::barriers::ConvexBoundaryFunction;
use soliton_core::io::{bowl_csv, field_csv, number, profile_csv};
use soliton_core::mesh::{RectGrid, StencilMesh};
use soliton_core::minimal_graph::MinimalReport;
use soliton_core::pde_solver::{
    harmonic_extension, solve_dirichlet, solve_strip, Equation, NewtonReport, SolutionField, SolveConfig,
};
use soliton_core::perron::{perron_iterate, DiskSchedule, PerronTrace};
use soliton_core::profiles::{halfwidth, integrate_bowl, integrate_profile, PlanarProfile};
use soliton_core::verify::{
    check_bounds, check_comparison, check_gradient_boundary, check_uniqueness, discretization_tolerance,
    PropertyReport,
};

use crate::config::{Domain, RunConfig};
use crate::CliError;

pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// Names of failed property checks.
    pub failed: Vec<String>,
}

fn write(out: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(out, name, &text)
}

#[derive(Serialize)]
struct ProfileSummary {
    alpha: f64,
    halfwidth: Option<f64>,
    covered: f64,
    truncated_at: Option<f64>,
    samples: usize,
    tolerance: f64,
    /// `|z''(1 + z'^2)^{(α−3)/2} − 1|` at the midpoints between samples.
    residual_max: f64,
    residual_mean: f64,
}

fn graph_residuals(p: &PlanarProfile) -> Vec<f64> {
    let a = p.alpha().value();
    p.points()
        .windows(2)
        .filter_map(|w| {
            let y = 0.5 * (w[0].y + w[1].y);
            p.eval(y).ok()
        })
        .map(|j| (j.curvature * (1.0 + j.slope * j.slope).powf(0.5 * (a - 3.0)) - 1.0).abs())
        .collect()
}

pub fn profile(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let opts = &cfg.profile;
    let p = integrate_profile(alpha, opts.phi_stop, opts.tol).map_err(|e| CliError::Config(format!("profile: {e}")))?;
    let res = graph_residuals(&p);
    let summary = ProfileSummary {
        alpha: alpha.value(),
        halfwidth: Some(p.halfwidth()).filter(|d| d.is_finite()),
        covered: p.covered(),
        truncated_at: p.truncated_at(),
        samples: p.points().len(),
        tolerance: p.tolerance(),
        residual_max: res.iter().cloned().fold(0.0, f64::max),
        residual_mean: res.iter().sum::<f64>() / res.len().max(1) as f64,
    };
    Ok(Outcome {
        written: vec![
            write(out, "profile.csv", &profile_csv(&p))?,
            write_json(out, "profile.json", &summary)?,
        ],
        failed: vec![],
    })
}

pub fn halfwidth_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let s = &cfg.halfwidth;
    if s.alpha_min.partial_cmp(&s.alpha_max).is_none_or(|o| o.is_gt()) || s.steps < 2 {
        return Err(CliError::Config(format!(
            "halfwidth: need alpha_min <= alpha_max and steps >= 2, got [{}, {}] with {} steps",
            s.alpha_min, s.alpha_max, s.steps
        )));
    }
    let alphas: Vec<f64> = (0..s.steps)
        .map(|k| s.alpha_min + (s.alpha_max - s.alpha_min) * k as f64 / (s.steps - 1) as f64)
        .collect();
    let alphas = alphas.into_iter().map(|a| cfg.alpha_at(a).map(|v| (a, v))).collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("alpha,d,note\n");
    for (a, alpha) in alphas {
        let d = halfwidth(alpha, s.tol)?;
        let (value, note) = if d.is_infinite() {
            ("inf".to_string(), "divergent")
        } else if a > 1.0 {
            // Finite here although a divergent width is often stated for every alpha > 1.
            (number(d), "finite_above_one")
        } else {
            (number(d), "")
        };
        csv.push_str(&format!("{},{value},{note}\n", number(a)));
    }
    Ok(Outcome {
        written: vec![write(out, "halfwidth.csv", &csv)?],
        failed: vec![],
    })
}

#[derive(Serialize)]
struct BowlSummary {
    alpha: f64,
    radius: f64,
    value_at_radius: f64,
    quartic_coefficient: f64,
    samples: usize,
}

pub fn bowl(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let o = &cfg.bowl;
    if !(o.radius > 0.0 && o.tol > 0.0) {
        return Err(CliError::Config(format!("bowl: radius and tol must be positive, got {} and {}", o.radius, o.tol)));
    }
    let b = integrate_bowl(alpha, o.radius, o.tol)?;
    let summary = BowlSummary {
        alpha: alpha.value(),
        radius: o.radius,
        value_at_radius: b.value(o.radius)?,
        quartic_coefficient: b.quartic_coefficient(),
        samples: b.samples().len(),
    };
    Ok(Outcome {
        written: vec![write(out, "bowl.csv", &bowl_csv(&b))?, write_json(out, "bowl.json", &summary)?],
        failed: vec![],
    })
}

#[derive(Serialize)]
struct SolveReport {
    alpha: f64,
    domain: &'static str,
    nodes: usize,
    unknowns: usize,
    h: f64,
    newton: NewtonReport,
    /// Value at the node nearest the domain center.
    center_value: f64,
    minimal: Option<MinimalReport>,
    envelope_barriers: Option<usize>,
    checks: Vec<PropertyReport>,
}

/// Everything validated up front so no solve starts on a bad config.
struct Problem {
    cfg: SolveConfig,
    f: ConvexBoundaryFunction,
    kind: ProblemKind,
}

enum ProblemKind {
    Strip { grid: RectGrid, profile: Arc<PlanarProfile> },
    Disk { mesh: Arc<StencilMesh> },
}

fn problem(cfg: &RunConfig, deterministic: bool) -> Result<Problem, CliError> {
    let alpha = cfg.alpha()?;
    let solver = cfg.solver(deterministic)?;
    let kind = match cfg.domain {
        Domain::Strip => {
            let grid = cfg.strip_grid()?;
            let profile = Arc::new(
                integrate_profile(alpha, cfg.profile.phi_stop, cfg.profile.tol)
                    .map_err(|e| CliError::Config(format!("profile: {e}")))?,
            );
            ProblemKind::Strip { grid, profile }
        }
        Domain::Disk => ProblemKind::Disk {
            mesh: Arc::new(StencilMesh::disk(&cfg.disk_domain()?)),
        },
    };
    Ok(Problem {
        cfg: solver,
        f: cfg.boundary_function()?,
        kind,
    })
}

fn center_value(field: &SolutionField, center: (f64, f64)) -> f64 {
    let dist = |k: usize| (field.mesh.nodes[k].x - center.0).hypot(field.mesh.nodes[k].y - center.1);
    let k = (0..field.mesh.len())
        .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
        .unwrap_or(0);
    field.values[k]
}

fn solve_and_check(cfg: &RunConfig, deterministic: bool) -> Result<(SolutionField, SolveReport), CliError> {
    let p = problem(cfg, deterministic)?;
    let tol = cfg.verify.uniqueness_tol;
    match p.kind {
        ProblemKind::Strip { grid, profile } => {
            let sol = solve_strip(&p.f, &profile, &grid, &p.cfg)?;
            let field = sol.field;
            let eps = discretization_tolerance(&field);
            let mut envelope_guess = sol.envelope.values.clone();
            for k in field.mesh.boundary_nodes() {
                envelope_guess[k] = field.values[k];
            }
            let checks = vec![
                sol.sandwich,
                check_bounds(&field, eps)?,
                check_gradient_boundary(&field),
                check_comparison(&field, &sol.minimal.field, eps)?,
                check_uniqueness(
                    field.mesh.clone(),
                    field.equation,
                    &[sol.minimal.values().to_vec(), envelope_guess],
                    &p.cfg,
                    tol,
                )?,
            ];
            let report = SolveReport {
                alpha: profile.alpha().value(),
                domain: "strip",
                nodes: field.mesh.len(),
                unknowns: field.mesh.interior.len(),
                h: field.mesh.h_max(),
                newton: field.report.clone(),
                center_value: center_value(&field, (0.0, 0.0)),
                minimal: Some(sol.minimal.report()),
                envelope_barriers: Some(sol.envelope.barriers.len()),
                checks,
            };
            Ok((field, report))
        }
        ProblemKind::Disk { mesh } => {
            let alpha = cfg.alpha()?;
            let eq = Equation::Soliton(alpha);
            let mut data = vec![0.0; mesh.len()];
            for k in mesh.boundary_nodes() {
                data[k] = p.f.value(mesh.nodes[k].x);
            }
            let init = harmonic_extension(&mesh, &data)?;
            let field = solve_dirichlet(mesh.clone(), init.clone(), eq, &p.cfg)?;
            let eps = discretization_tolerance(&field);
            let raised: Vec<f64> = field.values.iter().map(|v| v + 1.0).collect();
            let upper = solve_dirichlet(mesh.clone(), raised, eq, &p.cfg)?;
            let mut perturbed = init.clone();
            for &k in &mesh.interior {
                perturbed[k] += 0.1;
            }
            let checks = vec![
                check_bounds(&field, eps)?,
                check_gradient_boundary(&field),
                check_comparison(&field, &upper, eps)?,
                check_uniqueness(mesh.clone(), eq, &[init, perturbed], &p.cfg, tol)?,
            ];
            let report = SolveReport {
                alpha: alpha.value(),
                domain: "disk",
                nodes: mesh.len(),
                unknowns: mesh.interior.len(),
                h: mesh.h_max(),
                newton: field.report.clone(),
                center_value: center_value(&field, (cfg.disk.cx, cfg.disk.cy)),
                minimal: None,
                envelope_barriers: None,
                checks,
            };
            Ok((field, report))
        }
    }
}

fn failures(checks: &[PropertyReport]) -> Vec<String> {
    checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
}

pub fn solve(cfg: &RunConfig, out: &Path, deterministic: bool) -> Result<Outcome, CliError> {
    let (field, report) = solve_and_check(cfg, deterministic)?;
    Ok(Outcome {
        failed: failures(&report.checks),
        written: vec![
            write(out, "field.csv", &field_csv(&field.mesh, &field.values))?,
            write_json(out, "report.json", &report)?,
        ],
    })
}

pub fn verify(cfg: &RunConfig, out: &Path, deterministic: bool) -> Result<Outcome, CliError> {
    let (_, report) = solve_and_check(cfg, deterministic)?;
    Ok(Outcome {
        failed: failures(&report.checks),
        written: vec![write_json(out, "verify.json", &report.checks)?],
    })
}

#[derive(Serialize)]
struct PerronReport {
    alpha: f64,
    disks: usize,
    shuffle_seed: Option<u64>,
    trace: PerronTrace,
    /// Sup-norm distance from the direct Newton solve.
    cross_solver_difference: f64,
    cross_solver_tol: f64,
    cross_solver_pass: bool,
}

pub fn perron(cfg: &RunConfig, out: &Path, deterministic: bool) -> Result<Outcome, CliError> {
    if cfg.domain != Domain::Strip {
        return Err(CliError::Config("domain: the Perron iteration runs on strips only".into()));
    }
    let p = problem(cfg, deterministic)?;
    let ProblemKind::Strip { grid, profile } = p.kind else {
        unreachable!("strip domain checked above")
    };
    let mut schedule = DiskSchedule::lattice(&grid, cfg.schedule.radius_fraction)
        .map_err(|e| CliError::Config(format!("schedule: {e}")))?;
    if let Some(seed) = cfg.schedule.shuffle_seed {
        schedule = schedule.shuffled(seed);
    }
    let run = perron_iterate(&p.f, &profile, &grid, &schedule, &cfg.perron, &p.cfg)?;
    if !run.trace.converged {
        let last = run.trace.sweeps.last();
        return Err(CliError::NotConverged(format!(
            "Perron iteration stopped after {} sweeps (last decrease {:e}, residual {:e})",
            run.trace.sweeps.len(),
            last.map_or(f64::NAN, |s| s.max_decrease),
            last.map_or(f64::NAN, |s| s.residual)
        )));
    }
    let direct = solve_strip(&p.f, &profile, &grid, &p.cfg)?;
    let diff = run
        .values
        .iter()
        .zip(&direct.field.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tol = cfg.verify.cross_solver_tol;
    let report = PerronReport {
        alpha: profile.alpha().value(),
        disks: schedule.len(),
        shuffle_seed: cfg.schedule.shuffle_seed,
        trace: run.trace,
        cross_solver_difference: diff,
        cross_solver_tol: tol,
        cross_solver_pass: diff < tol,
    };
    let mesh = StencilMesh::rect(&grid);
    Ok(Outcome {
        failed: if diff < tol { vec![] } else { vec!["cross_solver".into()] },
        written: vec![
            write(out, "perron.csv", &field_csv(&mesh, &run.values))?,
            write_json(out, "trace.json", &report)?,
        ],
    })
}
