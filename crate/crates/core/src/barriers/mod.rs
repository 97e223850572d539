//! Grim-reaper lower barriers below convex data on the two edges of a strip.

mod convex;

pub use convex::{BoundaryForm, Conjugate, ConvexBoundaryFunction, CONVEXITY_TOLERANCE};

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::RectGrid;
use crate::profiles::{GrimReaper, PlanarProfile};

/// Number of touching barriers in the default envelope.
pub const DEFAULT_ENVELOPE_POINTS: usize = 33;

const SAMPLED_CHECKS: usize = 1000;

/// `(slope, intercept)` of the restriction of `g` to the lines `y = ±m`
/// (the same line on both, since the profile is even).
pub fn boundary_trace(g: &GrimReaper, m: f64) -> Result<(f64, f64)> {
    let hw = g.domain_halfwidth();
    if !(m >= 0.0 && m < hw) {
        return Err(Error::OutOfDomain { y: m, halfwidth: hw });
    }
    Ok((g.theta().tan(), g.eval(0.0, m)?))
}

/// Serializable record of an admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub theta: f64,
    pub a: f64,
    pub alpha: f64,
    pub m: f64,
    /// `−f*(k) − c` for the boundary trace `k x + c`.
    pub margin: f64,
    /// Interval where the trace meets `f` (within `ε_num`), clipped to the window.
    pub touch_x: Option<[f64; 2]>,
    /// `min (f − trace)` over evenly spaced samples of the window.
    pub sampled_margin: f64,
    pub tolerance: f64,
}

impl BarrierCertificate {
    pub fn admissible(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    Certified(BarrierCertificate),
    /// The trace slope is not a slope of `f`; no intercept makes it admissible.
    UnboundedConjugate { slope: f64 },
}

/// Numerical tolerance `1e-12 · scale` used for admissibility.
pub fn numerical_tolerance(f: &ConvexBoundaryFunction) -> f64 {
    1e-12 * f.scale()
}

/// Whether `g ≤ f` on `∂Ω_m`, decided through the convex conjugate and
/// cross-checked on samples of the certificate window.
pub fn is_admissible(g: &GrimReaper, f: &ConvexBoundaryFunction, m: f64) -> Result<Admissibility> {
    let (k, c) = boundary_trace(g, m)?;
    let (value, argmax) = match f.conjugate(k) {
        Conjugate::Finite { value, argmax } => (value, argmax),
        Conjugate::Unbounded => return Ok(Admissibility::UnboundedConjugate { slope: k }),
    };
    let tolerance = numerical_tolerance(f);
    let margin = -value - c;
    let (lo, hi) = f.window();
    let touch_x = (margin.abs() <= tolerance && argmax.1 >= lo && argmax.0 <= hi)
        .then(|| [argmax.0.max(lo), argmax.1.min(hi)]);
    let sampled_margin = (0..SAMPLED_CHECKS)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (SAMPLED_CHECKS - 1) as f64;
            f.value(x) - (k * x + c)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(Admissibility::Certified(BarrierCertificate {
        theta: g.theta(),
        a: g.offset(),
        alpha: g.alpha().value(),
        m,
        margin,
        touch_x,
        sampled_margin,
        tolerance,
    }))
}

/// The grim reaper whose boundary trace on `y = ±m` is the tangent line of
/// `f` at `x0`.
pub fn touching_barrier(
    x0: f64,
    f: &ConvexBoundaryFunction,
    profile: &Arc<PlanarProfile>,
    m: f64,
) -> Result<GrimReaper> {
    if !(m > 0.0 && m.is_finite() && x0.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid touching point ({x0}, {m})")));
    }
    let slope = f.derivative(x0);
    let theta = slope.atan();
    let untilted = GrimReaper::new(profile.clone(), theta, 0.0)?;
    let hw = untilted.domain_halfwidth();
    if m >= hw {
        return Err(Error::BarrierUnavailable {
            m,
            halfwidth: hw,
            d: profile.halfwidth(),
            max_m: hw,
        });
    }
    let lift = untilted.eval(0.0, m)?;
    GrimReaper::new(profile.clone(), theta, f.value(x0) - slope * x0 - lift)
}

/// `n` Chebyshev–Lobatto points on `[-half_length, half_length]`, ascending.
pub fn chebyshev_abscissae(n: usize, half_length: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| -half_length * (PI * k as f64 / (n - 1) as f64).cos())
            .collect(),
    }
}

/// Pointwise maximum of touching barriers, sampled on a grid.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub barriers: Vec<GrimReaper>,
    pub values: Vec<f64>,
}

/// Lower envelope of the touching barriers at `xs` on the nodes of `grid`
/// (`grid.half_width` is the strip half-width).
pub fn lower_envelope(
    f: &ConvexBoundaryFunction,
    profile: &Arc<PlanarProfile>,
    xs: &[f64],
    grid: &RectGrid,
) -> Result<Envelope> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("envelope needs at least one abscissa".into()));
    }
    let m = grid.half_width;
    let barriers = xs
        .iter()
        .map(|&x| touching_barrier(x, f, profile, m))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![f64::NEG_INFINITY; grid.len()];
    for j in 0..grid.ny {
        let y = grid.y(j);
        for i in 0..grid.nx {
            let x = grid.x(i);
            let v = &mut values[grid.index(i, j)];
            for b in &barriers {
                *v = v.max(b.eval(x, y)?);
            }
        }
    }
    Ok(Envelope { barriers, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Alpha;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn profile(a: f64) -> Arc<PlanarProfile> {
        Arc::new(PlanarProfile::new(Alpha::new(a).unwrap(), 1e-11).unwrap())
    }

    fn reaper_1() -> Arc<PlanarProfile> {
        static P: OnceLock<Arc<PlanarProfile>> = OnceLock::new();
        P.get_or_init(|| profile(1.0)).clone()
    }

    fn parabola() -> ConvexBoundaryFunction {
        ConvexBoundaryFunction::new(
            BoundaryForm::Poly {
                coeffs: vec![0.0, 0.0, 1.0],
            },
            (-7.0, 7.0),
        )
        .unwrap()
    }

    #[test]
    fn traces_match_closed_forms() {
        let p = reaper_1();
        let g = GrimReaper::new(p.clone(), 0.0, 0.0).unwrap();
        let (k, c) = boundary_trace(&g, 1.0).unwrap();
        assert_eq!(k, 0.0);
        assert!((c + 1.0f64.cos().ln()).abs() < 1e-9);

        let g = GrimReaper::new(p.clone(), 0.0, 2.5).unwrap();
        let (_, c) = boundary_trace(&g, 1e-9).unwrap();
        assert!((c - 2.5).abs() < 1e-12);

        let t = std::f64::consts::FRAC_PI_4;
        let g = GrimReaper::new(p, t, 0.0).unwrap();
        let (k, c) = boundary_trace(&g, 1.0).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
        let expect = -2.0 * (0.5f64.sqrt()).cos().ln();
        assert!((c - expect).abs() < 1e-9, "{c} vs {expect}");
        assert!(matches!(boundary_trace(&g, 3.0), Err(Error::OutOfDomain { .. })));
    }

    fn certificate(g: &GrimReaper, f: &ConvexBoundaryFunction, m: f64) -> BarrierCertificate {
        match is_admissible(g, f, m).unwrap() {
            Admissibility::Certified(c) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parabola_admissibility_threshold() {
        // the trace k x + c lies below x² iff c ≤ −k²/4
        let p = reaper_1();
        let f = parabola();
        let m = 0.8;
        for theta in [-0.9, 0.0, 0.4] {
            let g0 = GrimReaper::new(p.clone(), theta, 0.0).unwrap();
            let (k, c0) = boundary_trace(&g0, m).unwrap();
            for delta in [-1e-3, 1e-3] {
                let a = -k * k / 4.0 - c0 + delta;
                let g = GrimReaper::new(p.clone(), theta, a).unwrap();
                let cert = certificate(&g, &f, m);
                assert!((cert.margin + delta).abs() < 1e-9);
                assert_eq!(cert.admissible(), delta < 0.0);
                assert_eq!(cert.sampled_margin >= -1e-12, delta < 0.0);
            }
        }
        let g = touching_barrier(0.0, &f, &p, m).unwrap();
        let cert = certificate(&g, &f, m);
        assert!(cert.admissible());
        let [lo, hi] = cert.touch_x.unwrap();
        assert!(lo.abs() < 1e-6 && hi.abs() < 1e-6);
    }

    #[test]
    fn constant_data_margin() {
        let p = reaper_1();
        let f = ConvexBoundaryFunction::new(BoundaryForm::Const { value: 2.0 }, (-3.0, 3.0)).unwrap();
        let g0 = GrimReaper::new(p.clone(), 0.0, 0.0).unwrap();
        let (_, c0) = boundary_trace(&g0, 1.0).unwrap();
        let g = GrimReaper::new(p.clone(), 0.0, 1.0 - c0).unwrap();
        let cert = certificate(&g, &f, 1.0);
        assert!((cert.margin - 1.0).abs() < 1e-12);
        assert!(cert.touch_x.is_none());
        let tilted = GrimReaper::new(p, 0.3, -50.0).unwrap();
        assert!(matches!(
            is_admissible(&tilted, &f, 1.0).unwrap(),
            Admissibility::UnboundedConjugate { .. }
        ));
    }

    #[test]
    fn touching_barrier_at_parabola_vertex() {
        let g = touching_barrier(0.0, &parabola(), &reaper_1(), 1.0).unwrap();
        assert_eq!(g.theta(), 0.0);
        assert!((g.offset() - 1.0f64.cos().ln()).abs() < 1e-9);
        assert!(g.eval(0.0, 1.0).unwrap().abs() < 1e-12);
        assert!(g.eval(0.0, -1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn touching_barrier_of_line_is_the_line() {
        let f = ConvexBoundaryFunction::new(
            BoundaryForm::Linear {
                slope: -0.7,
                intercept: 0.2,
            },
            (-7.0, 7.0),
        )
        .unwrap();
        let g = touching_barrier(1.3, &f, &reaper_1(), 1.0).unwrap();
        for i in 0..50 {
            let x = -7.0 + 14.0 * i as f64 / 49.0;
            for y in [-1.0, 1.0] {
                assert!((g.eval(x, y).unwrap() - f.value(x)).abs() < 1e-12);
            }
        }
        let cert = certificate(&g, &f, 1.0);
        assert_eq!(cert.touch_x, Some([-7.0, 7.0]));
    }

    #[test]
    fn touching_barrier_below_cosh() {
        let f = ConvexBoundaryFunction::new(BoundaryForm::Cosh { scale: 1.0 }, (-5.0, 5.0)).unwrap();
        let m = 1.0;
        let g = touching_barrier(1.0, &f, &reaper_1(), m).unwrap();
        assert!((g.theta().tan() - 1.0f64.sinh()).abs() < 1e-15);
        let eps = numerical_tolerance(&f);
        assert!((g.eval(1.0, m).unwrap() - f.value(1.0)).abs() < 1e-12);
        for i in 0..400 {
            let x = -5.0 + 10.0 * i as f64 / 399.0;
            for y in [-m, m] {
                assert!(g.eval(x, y).unwrap() <= f.value(x) + eps);
            }
        }
    }

    #[test]
    fn width_violation_reports_maximal_m() {
        let f = parabola();
        let err = touching_barrier(0.0, &f, &reaper_1(), 2.0).unwrap_err();
        match err {
            Error::BarrierUnavailable { max_m, d, .. } => {
                assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
                assert!((max_m - d).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // tilting widens the reaper strip: at x0 = 1, max m = (π/2)/cos(atan 2)
        let g = touching_barrier(1.0, &f, &reaper_1(), 2.0).unwrap();
        assert!(g.domain_halfwidth() > 2.0);
    }

    #[test]
    fn envelope_of_constant_data_is_one_reaper() {
        let f = ConvexBoundaryFunction::new(BoundaryForm::Const { value: 0.5 }, (-3.0, 3.0)).unwrap();
        let grid = RectGrid::new(2.0, 1.0, 9, 7).unwrap();
        let env = lower_envelope(&f, &reaper_1(), &[0.3], &grid).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let y = grid.y(j);
                let expect = 0.5 + 1.0f64.cos().ln() - y.cos().ln();
                assert!((env.values[grid.index(i, j)] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parabola_envelope_center_value() {
        let f = parabola();
        let grid = RectGrid::new(6.0, 1.0, 41, 11).unwrap();
        let env = lower_envelope(&f, &reaper_1(), &chebyshev_abscissae(33, 6.0), &grid).unwrap();
        let center = env.values[grid.index(20, 5)];
        assert!((center - 1.0f64.cos().ln()).abs() < 1e-9, "{center}");
        for j in [0, grid.ny - 1] {
            for i in 0..grid.nx {
                assert!(env.values[grid.index(i, j)] <= f.value(grid.x(i)) + 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_points_are_sorted_and_symmetric() {
        let xs = chebyshev_abscissae(33, 6.0);
        assert_eq!(xs.len(), 33);
        assert_eq!(xs[0], -6.0);
        assert!((xs[32] - 6.0).abs() < 1e-15);
        assert!(xs[16].abs() < 1e-15);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn certificate_serializes_with_stable_keys() {
        let g = touching_barrier(0.0, &parabola(), &reaper_1(), 1.0).unwrap();
        let cert = certificate(&g, &parabola(), 1.0);
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.starts_with(r#"{"theta":0.0,"a":"#));
        assert!(json.contains(r#""touch_x":["#));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn touching_barriers_are_admissible(x0 in -5.0f64..5.0, m in 0.1f64..1.5, c2 in 0.1f64..3.0, c1 in -2.0f64..2.0) {
            let f = ConvexBoundaryFunction::new(
                BoundaryForm::Poly { coeffs: vec![0.3, c1, c2] },
                (-7.0, 7.0),
            ).unwrap();
            let g = touching_barrier(x0, &f, &reaper_1(), m).unwrap();
            let eps = numerical_tolerance(&f);
            let cert = certificate(&g, &f, m);
            prop_assert!(cert.margin >= -eps);
            prop_assert!((g.eval(x0, m).unwrap() - f.value(x0)).abs() <= eps);
            prop_assert!(cert.sampled_margin >= -eps);
        }

        #[test]
        fn envelope_grows_with_abscissae(extra in prop::collection::vec(-3.0f64..3.0, 1..4)) {
            let f = ConvexBoundaryFunction::new(BoundaryForm::Cosh { scale: 1.5 }, (-4.0, 4.0)).unwrap();
            let grid = RectGrid::new(3.0, 1.2, 13, 7).unwrap();
            let base = vec![-2.0, 0.5, 2.5];
            let mut more = base.clone();
            more.extend(extra);
            let a = lower_envelope(&f, &reaper_1(), &base, &grid).unwrap();
            let b = lower_envelope(&f, &reaper_1(), &more, &grid).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(y >= x);
            }
        }

        #[test]
        fn envelope_members_solve_the_equation(x0 in -3.0f64..3.0, alpha in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0])) {
            let p = profile(alpha);
            let f = parabola();
            let m = 0.9 * p.halfwidth().min(2.0);
            let g = touching_barrier(x0, &f, &p, m).unwrap();
            for y in [-m, -0.5 * m, 0.0, 0.7 * m] {
                prop_assert!(g.pde_residual(x0 + 0.3, y).unwrap().abs() < 1e-6);
            }
        }
    }
}
