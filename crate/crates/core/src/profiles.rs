//! One-dimensional soliton profiles: the planar generating curve of the
//! grim reapers, the strip half-width `d(alpha)`, the tilted grim-reaper
//! family and the rotational bowl.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, quintic_hermite, OdeSystem, StepControl, Termination};
use crate::quadrature::sin_power_integral;

/// Default stopping angle for profile construction.
pub const DEFAULT_PHI_STOP: f64 = 15.0 / 16.0 * FRAC_PI_2;

/// The exponent of the soliton equation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    /// Like [`Alpha::new`] but also admits the limit case `alpha = 0`
    /// (constant mean curvature), used only as a test oracle.
    pub fn oracle(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_oracle_only(self) -> bool {
        self.0 == 0.0
    }
}

/// Sample of the arc-length parametrized generating curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
}

/// Height of a profile with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Whether queries past the integrated range may continue along the exact
/// tail (barriers need the large-slope part of the curve).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Strict,
    Barrier,
}

struct PlanarSystem {
    alpha: f64,
}

impl OdeSystem<3> for PlanarSystem {
    fn rhs(&self, _s: f64, u: &[f64; 3]) -> [f64; 3] {
        let (sin, cos) = u[2].sin_cos();
        [cos, sin, cos.max(0.0).powf(self.alpha)]
    }
}

/// The even, convex solution `z(y)` of the graph equation with `z(0) = z'(0) = 0`.
#[derive(Debug, Clone)]
pub struct PlanarProfile {
    alpha: Alpha,
    points: Vec<ProfilePoint>,
    tolerance: f64,
    halfwidth: f64,
    /// Angle reached when integration stopped early on step underflow.
    truncated_at: Option<f64>,
}

// Arc-length cap on accepted steps; the samples double as interpolation
// nodes, so near-linear profiles would otherwise be too sparse.
const PROFILE_MAX_STEP: f64 = 0.01;

/// Integrates `y' = cos φ, z' = sin φ, φ' = cos^α φ` from the origin with
/// `φ(0) = 0` until `φ = phi_stop`.
pub fn integrate_profile(alpha: Alpha, phi_stop: f64, tol: f64) -> Result<PlanarProfile> {
    if !(phi_stop > 0.0 && phi_stop < FRAC_PI_2) {
        return Err(Error::InvalidInput(format!(
            "phi_stop must lie in (0, pi/2), got {phi_stop}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let sys = PlanarSystem {
        alpha: alpha.value(),
    };
    let ctl = StepControl {
        max_step: PROFILE_MAX_STEP,
        ..StepControl::with_tol(tol)
    };
    let (traj, term) = integrate(&sys, 0.0, [0.0; 3], f64::INFINITY, 1e-3, &ctl, |_, u| {
        u[2] - phi_stop
    });
    let truncated_at = match term {
        Termination::Completed => None,
        Termination::StepUnderflow { .. } | Termination::StepLimit { .. } => {
            Some(traj.last().1[2])
        }
    };
    let points = traj
        .t
        .iter()
        .zip(&traj.y)
        .map(|(&s, u)| ProfilePoint {
            s,
            y: u[0],
            z: u[1],
            phi: u[2],
        })
        .collect();
    Ok(PlanarProfile {
        alpha,
        points,
        tolerance: tol,
        halfwidth: halfwidth(alpha, 1e-12)?,
        truncated_at,
    })
}

impl PlanarProfile {
    /// Profile with the default stopping angle.
    pub fn new(alpha: Alpha, tol: f64) -> Result<Self> {
        integrate_profile(alpha, DEFAULT_PHI_STOP, tol)
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn points(&self) -> &[ProfilePoint] {
        &self.points
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `d(alpha)`, possibly infinite.
    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn truncated_at(&self) -> Option<f64> {
        self.truncated_at
    }

    /// Largest `y` reached by the integration.
    pub fn covered(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.y)
    }

    fn angle_derivatives(&self, phi: f64) -> (f64, f64) {
        let a = self.alpha.value();
        let (sin, cos) = phi.sin_cos();
        let dphi = cos.powf(a - 1.0);
        let ddphi = -(a - 1.0) * sin * cos.powf(2.0 * a - 3.0);
        (dphi, ddphi)
    }

    fn height_derivatives(&self, phi: f64) -> (f64, f64) {
        let cos = phi.cos();
        (phi.tan(), cos.powf(self.alpha.value() - 3.0))
    }

    pub fn eval(&self, y: f64) -> Result<Jet> {
        self.eval_mode(y, EvalMode::Strict)
    }

    pub fn eval_mode(&self, y: f64, mode: EvalMode) -> Result<Jet> {
        let ay = y.abs();
        let mut jet = if ay <= self.covered() {
            self.interpolate(ay)
        } else {
            match mode {
                EvalMode::Strict => {
                    return Err(Error::OutsideCoverage {
                        y,
                        covered: self.covered(),
                    })
                }
                EvalMode::Barrier => self.tail(ay)?,
            }
        };
        if y < 0.0 {
            jet.slope = -jet.slope;
        }
        Ok(jet)
    }

    fn interpolate(&self, y: f64) -> Jet {
        let pts = &self.points;
        if pts.len() == 1 {
            return Jet {
                value: 0.0,
                slope: 0.0,
                curvature: 1.0,
            };
        }
        let k = pts.partition_point(|p| p.y <= y).clamp(1, pts.len() - 1) - 1;
        let (p0, p1) = (&pts[k], &pts[k + 1]);
        let h = p1.y - p0.y;
        let (z0d, z0dd) = self.height_derivatives(p0.phi);
        let (z1d, z1dd) = self.height_derivatives(p1.phi);
        let (z, _, _) = quintic_hermite(p0.y, h, p0.z, z0d, z0dd, p1.z, z1d, z1dd, y);
        let (f0d, f0dd) = self.angle_derivatives(p0.phi);
        let (f1d, f1dd) = self.angle_derivatives(p1.phi);
        let (phi, dphi, _) = quintic_hermite(p0.y, h, p0.phi, f0d, f0dd, p1.phi, f1d, f1dd, y);
        let sec = 1.0 / phi.cos();
        Jet {
            value: z,
            slope: phi.tan(),
            curvature: sec * sec * dphi,
        }
    }

    // Continuation past the last sample, parametrized by t = π/2 − φ:
    // y grows by ∫ sin^{1−α} t dt and z by the closed form of ∫ cos t sin^{−α} t dt.
    fn tail(&self, y: f64) -> Result<Jet> {
        if y >= self.halfwidth {
            return Err(Error::OutOfDomain {
                y,
                halfwidth: self.halfwidth,
            });
        }
        let a = self.alpha.value();
        let last = self.points.last().expect("profile has samples");
        let t_end = FRAC_PI_2 - last.phi;
        let beta = 1.0 - a;
        let reach = |t: f64| last.y + sin_power_integral(beta, t.min(t_end), t_end).value;
        // reach(t) decreases in t; bracket in log t.
        let (mut lo, mut hi) = (t_end.ln(), t_end.ln());
        let mut step = 1.0;
        while reach(lo.exp()) < y {
            lo -= step;
            step *= 2.0;
            if lo < -700.0 {
                return Err(Error::OutOfDomain {
                    y,
                    halfwidth: self.halfwidth,
                });
            }
        }
        let mut t = lo.exp();
        for _ in 0..200 {
            let g = reach(t) - y;
            if g > 0.0 {
                lo = t.ln();
            } else {
                hi = t.ln();
            }
            // Newton in log t, safeguarded by the bracket.
            let dg = -t.sin().powf(beta) * t;
            let mut next = t.ln() - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let converged = (next - t.ln()).abs() < 1e-15 || (hi - lo) < 1e-15;
            t = next.exp();
            if converged {
                break;
            }
        }
        let (st, se) = (t.sin(), t_end.sin());
        let dz = if (a - 1.0).abs() < 1e-14 {
            (se / st).ln()
        } else {
            (st.powf(1.0 - a) - se.powf(1.0 - a)) / (a - 1.0)
        };
        Ok(Jet {
            value: last.z + dz,
            slope: 1.0 / t.tan(),
            curvature: st.powf(a - 3.0),
        })
    }
}

/// `d(alpha) = ∫_0^{π/2} cos^{1−α} φ dφ`, or `f64::INFINITY` when the endpoint
/// exponent `1 − α ≤ −1` makes it diverge.
pub fn halfwidth(alpha: Alpha, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let beta = 1.0 - alpha.value();
    if beta <= -1.0 {
        return Ok(f64::INFINITY);
    }
    let q = sin_power_integral(beta, 0.0, FRAC_PI_2);
    if q.error_estimate > tol {
        return Err(Error::InvalidInput(format!(
            "half-width quadrature error {:e} exceeds tolerance {tol:e}",
            q.error_estimate
        )));
    }
    Ok(q.value)
}

/// Half-width `d(α)/cos^α θ` of the strip on which `w_θ` is defined.
pub fn reaper_domain_halfwidth(alpha: Alpha, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let d = halfwidth(alpha, 1e-12)?;
    Ok(scaled_halfwidth(d, alpha, theta))
}

fn scaled_halfwidth(d: f64, alpha: Alpha, theta: f64) -> f64 {
    if d.is_infinite() {
        d
    } else {
        d / theta.cos().powf(alpha.value())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "tilt angle {theta} outside (-pi/2, pi/2)"
        )))
    }
}

/// Value and exact partial derivatives of a grim reaper (`w_xx = w_xy = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReaperJet {
    pub w: f64,
    pub wx: f64,
    pub wy: f64,
    pub wyy: f64,
}

/// `w_θ(x, y) = cos^{−(α+1)}θ · w(cos^α θ · y) + tan θ · x + a`.
#[derive(Debug, Clone)]
pub struct GrimReaper {
    base: Arc<PlanarProfile>,
    theta: f64,
    a: f64,
}

impl GrimReaper {
    pub fn new(base: Arc<PlanarProfile>, theta: f64, a: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { base, theta, a })
    }

    pub fn alpha(&self) -> Alpha {
        self.base.alpha()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn offset(&self) -> f64 {
        self.a
    }

    pub fn base(&self) -> &Arc<PlanarProfile> {
        &self.base
    }

    pub fn domain_halfwidth(&self) -> f64 {
        scaled_halfwidth(self.base.halfwidth(), self.alpha(), self.theta)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.jet(x, y).map(|j| j.w)
    }

    pub fn jet(&self, x: f64, y: f64) -> Result<ReaperJet> {
        let hw = self.domain_halfwidth();
        if y.abs() >= hw {
            return Err(Error::OutOfDomain { y, halfwidth: hw });
        }
        let alpha = self.alpha().value();
        let c = self.theta.cos();
        let ca = c.powf(alpha);
        let scale = 1.0 / (ca * c);
        let z = self.base.eval_mode(ca * y, EvalMode::Barrier)?;
        let tan = self.theta.tan();
        Ok(ReaperJet {
            w: scale * z.value + tan * x + self.a,
            wx: tan,
            wy: z.slope / c,
            wyy: ca / c * z.curvature,
        })
    }

    /// Residual of the soliton equation evaluated from the exact partial
    /// derivatives: `div(Dw/W) − W^{−α}`.
    pub fn pde_residual(&self, x: f64, y: f64) -> Result<f64> {
        let j = self.jet(x, y)?;
        let (p, q) = (j.wx, j.wy);
        let w2 = 1.0 + p * p + q * q;
        let div = (1.0 + p * p) * j.wyy / w2.powf(1.5);
        Ok(div - w2.powf(-0.5 * self.alpha().value()))
    }
}

/// Radial bowl profile `b(r)` with `b(0) = b'(0) = 0`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    alpha: Alpha,
    /// Samples `(r, b, b')`.
    samples: Vec<[f64; 3]>,
    seed_radius: f64,
    quartic: f64,
}

/// Radius below which the bowl is represented by its series.
pub const BOWL_SEED_RADIUS: f64 = 1e-3;

struct RadialSystem {
    alpha: f64,
}

impl RadialSystem {
    fn slope_rate(&self, r: f64, p: f64) -> f64 {
        let g = 1.0 + p * p;
        g.powf(0.5 * (3.0 - self.alpha)) - p * g / r
    }
}

impl OdeSystem<2> for RadialSystem {
    fn rhs(&self, r: f64, u: &[f64; 2]) -> [f64; 2] {
        [u[1], self.slope_rate(r, u[1])]
    }
}

/// Integrates the rotationally symmetric equation
/// `b''/(1+b'^2)^{3/2} + b'/(r√(1+b'^2)) = (1+b'^2)^{−α/2}` on `[0, radius]`.
pub fn integrate_bowl(alpha: Alpha, radius: f64, tol: f64) -> Result<RadialProfile> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("bowl radius must be positive, got {radius}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let sys = RadialSystem {
        alpha: alpha.value(),
    };
    let r0 = BOWL_SEED_RADIUS.min(0.5 * radius);
    // Seed b = r^2/4 + c4 r^4; one Newton step on the residual at r0 fixes c4.
    let seed_residual = |c4: f64| {
        let p = 0.5 * r0 + 4.0 * c4 * r0.powi(3);
        let dp = 0.5 + 12.0 * c4 * r0 * r0;
        dp - sys.slope_rate(r0, p)
    };
    let p = 0.5 * r0;
    let g = 1.0 + p * p;
    let dres = 12.0 * r0 * r0
        - (3.0 - alpha.value()) * g.powf(0.5 * (1.0 - alpha.value())) * p * 4.0 * r0.powi(3)
        + (1.0 + 3.0 * p * p) * 4.0 * r0 * r0;
    let quartic = -seed_residual(0.0) / dres;
    let b0 = 0.25 * r0 * r0 + quartic * r0.powi(4);
    let p0 = 0.5 * r0 + 4.0 * quartic * r0.powi(3);
    let ctl = StepControl::with_tol(tol);
    let (traj, term) = integrate(&sys, r0, [b0, p0], radius, 1e-4, &ctl, |_, _| -1.0);
    if term != Termination::Completed {
        return Err(Error::InvalidInput(format!(
            "bowl integration stopped early: {term:?}"
        )));
    }
    let mut samples = vec![[0.0, 0.0, 0.0]];
    samples.extend(traj.t.iter().zip(&traj.y).map(|(&r, u)| [r, u[0], u[1]]));
    Ok(RadialProfile {
        alpha,
        samples,
        seed_radius: r0,
        quartic,
    })
}

impl RadialProfile {
    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s[0])
    }

    /// `(r, b, b')` samples starting at the origin.
    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    /// The fitted quartic coefficient of the seed series.
    pub fn quartic_coefficient(&self) -> f64 {
        self.quartic
    }

    /// Minimum of the bowl, at the axis.
    pub fn b_min(&self) -> f64 {
        0.0
    }

    fn rate(&self, r: f64, p: f64) -> f64 {
        RadialSystem {
            alpha: self.alpha.value(),
        }
        .slope_rate(r, p)
    }

    /// `(b, b', b'')` at radius `r`.
    pub fn jet(&self, r: f64) -> Result<Jet> {
        let r = r.abs();
        if r > self.radius() * (1.0 + 1e-12) {
            return Err(Error::OutsideCoverage {
                y: r,
                covered: self.radius(),
            });
        }
        let r = r.min(self.radius());
        if r <= self.seed_radius {
            let c4 = self.quartic;
            return Ok(Jet {
                value: 0.25 * r * r + c4 * r.powi(4),
                slope: 0.5 * r + 4.0 * c4 * r.powi(3),
                curvature: 0.5 + 12.0 * c4 * r * r,
            });
        }
        let s = &self.samples;
        let k = s.partition_point(|q| q[0] <= r).clamp(2, s.len() - 1) - 1;
        let (a, b) = (s[k], s[k + 1]);
        let (v, d, dd) = quintic_hermite(
            a[0],
            b[0] - a[0],
            a[1],
            a[2],
            self.rate(a[0], a[2]),
            b[1],
            b[2],
            self.rate(b[0], b[2]),
            r,
        );
        Ok(Jet {
            value: v,
            slope: d,
            curvature: dd,
        })
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        self.jet(r).map(|j| j.value)
    }

    /// Residual of the radial equation at `r > 0` computed from the dense output.
    pub fn residual(&self, r: f64) -> Result<f64> {
        let j = self.jet(r)?;
        let g = 1.0 + j.slope * j.slope;
        Ok(j.curvature / g.powf(1.5) + j.slope / (r * g.sqrt()) - g.powf(-0.5 * self.alpha.value()))
    }
}
