//! Run configuration read from a TOML file (flat dotted keys or tables).

use std::path::Path;

use serde::Deserialize;
use soliton_core::barriers::{BoundaryForm, ConvexBoundaryFunction};
use soliton_core::mesh::{DiskDomain, RectGrid};
use soliton_core::pde_solver::SolveConfig;
use soliton_core::perron::{PerronConfig, DEFAULT_RADIUS_FRACTION};
use soliton_core::profiles::{halfwidth, Alpha, DEFAULT_PHI_STOP};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Strip,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    pub phi_stop: f64,
    pub tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            phi_stop: DEFAULT_PHI_STOP,
            tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            alpha_min: 0.1,
            alpha_max: 1.9,
            steps: 50,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowlOptions {
    pub radius: f64,
    pub tol: f64,
}

impl Default for BowlOptions {
    fn default() -> Self {
        Self { radius: 1.0, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskOptions {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub h: f64,
}

impl Default for DiskOptions {
    fn default() -> Self {
        Self {
            cx: 0.0,
            cy: 0.0,
            radius: 1.0,
            h: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleOptions {
    pub radius_fraction: f64,
    /// Shuffle the lattice order with this seed.
    pub shuffle_seed: Option<u64>,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            radius_fraction: DEFAULT_RADIUS_FRACTION,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub uniqueness_tol: f64,
    /// Sup-norm bound between the Perron limit and the direct solve.
    pub cross_solver_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            uniqueness_tol: 1e-6,
            cross_solver_tol: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    /// Admit `alpha = 0`, the minimal-surface limit used only as an oracle.
    pub oracle: bool,
    pub m: Option<f64>,
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
    pub domain: Domain,
    pub grid: Option<GridSpec>,
    pub f: Option<BoundaryForm>,
    pub solver: SolveConfig,
    pub profile: ProfileOptions,
    pub halfwidth: SweepOptions,
    pub bowl: BowlOptions,
    pub disk: DiskOptions,
    pub schedule: ScheduleOptions,
    pub perron: PerronConfig,
    pub verify: VerifyOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            oracle: false,
            m: None,
            half_length: None,
            domain: Domain::default(),
            grid: None,
            f: None,
            solver: SolveConfig::default(),
            profile: ProfileOptions::default(),
            halfwidth: SweepOptions::default(),
            bowl: BowlOptions::default(),
            disk: DiskOptions::default(),
            schedule: ScheduleOptions::default(),
            perron: PerronConfig::default(),
            verify: VerifyOptions::default(),
        }
    }
}

fn config_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn require<T: Copy>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| config_error(field, "missing"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn alpha(&self) -> Result<Alpha, CliError> {
        self.alpha_at(self.alpha)
    }

    pub fn alpha_at(&self, value: f64) -> Result<Alpha, CliError> {
        let a = if self.oracle { Alpha::oracle(value) } else { Alpha::new(value) };
        a.map_err(|e| config_error("alpha", e))
    }

    pub fn solver(&self, deterministic: bool) -> Result<SolveConfig, CliError> {
        let mut cfg = self.solver.clone();
        if deterministic {
            cfg.parallel = false;
        }
        cfg.validate().map_err(|e| config_error("solver", e))?;
        Ok(cfg)
    }

    /// Grid for the strip `[-L, L] × [-m, m]`; rejects widths at or above
    /// `d(alpha)` before any solve.
    pub fn strip_grid(&self) -> Result<RectGrid, CliError> {
        let m = require(self.m, "m")?;
        let l = require(self.half_length, "L")?;
        let g = require(self.grid, "grid")?;
        let grid = RectGrid::new(l, m, g.nx, g.ny).map_err(|e| config_error("grid", e))?;
        let d = halfwidth(self.alpha()?, 1e-12).map_err(|e| config_error("alpha", e))?;
        if m >= d {
            return Err(CliError::Core(soliton_core::Error::BarrierUnavailable {
                m,
                halfwidth: d,
                d,
                max_m: d,
            }));
        }
        Ok(grid)
    }

    pub fn disk_domain(&self) -> Result<DiskDomain, CliError> {
        let d = &self.disk;
        DiskDomain::centered(d.cx, d.cy, d.radius, d.h).map_err(|e| config_error("disk", e))
    }

    /// Boundary function certified convex on the window the domain needs.
    pub fn boundary_function(&self) -> Result<ConvexBoundaryFunction, CliError> {
        let form = self.f.clone().ok_or_else(|| config_error("f", "missing"))?;
        let reach = match self.domain {
            Domain::Strip => require(self.half_length, "L")?,
            Domain::Disk => self.disk.cx.abs() + self.disk.radius,
        };
        ConvexBoundaryFunction::new(form, (-reach - 1.0, reach + 1.0)).map_err(|e| config_error("f", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_tables_agree() {
        let flat = RunConfig::parse(
            "alpha = 1.0\nm = 1.0\nL = 6.0\ngrid.nx = 121\ngrid.ny = 41\nf.kind = \"poly\"\nf.coeffs = [0, 0, 1]\n",
        )
        .unwrap();
        let tables = RunConfig::parse(
            "alpha = 1.0\nm = 1.0\nL = 6.0\n[grid]\nnx = 121\nny = 41\n[f]\nkind = \"poly\"\ncoeffs = [0.0, 0.0, 1.0]\n",
        )
        .unwrap();
        assert_eq!(flat, tables);
        assert_eq!(flat.half_length, Some(6.0));
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_location() {
        let err = RunConfig::parse("alpha = 1.0\nsolver.tolerance = 1e-9\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("tolerance"), "{msg}");
    }

    #[test]
    fn nonconvex_data_fail_certification() {
        let cfg = RunConfig::parse("m = 1.0\nL = 3.0\nf.kind = \"poly\"\nf.coeffs = [0, 0, -1]\n").unwrap();
        assert!(matches!(cfg.boundary_function(), Err(CliError::Config(_))));
    }

    #[test]
    fn zero_alpha_needs_oracle_mode() {
        let cfg = RunConfig::parse("alpha = 0.0\n").unwrap();
        assert!(cfg.alpha().is_err());
        let cfg = RunConfig::parse("alpha = 0.0\noracle = true\n").unwrap();
        assert_eq!(cfg.alpha().unwrap().value(), 0.0);
    }

    #[test]
    fn width_is_checked_before_solving() {
        let cfg = RunConfig::parse("m = 2.0\nL = 6.0\ngrid = { nx = 11, ny = 11 }\n").unwrap();
        match cfg.strip_grid() {
            Err(CliError::Core(soliton_core::Error::BarrierUnavailable { max_m, .. })) => {
                assert!((max_m - std::f64::consts::FRAC_PI_2).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }
}
