//! Convex boundary data from a small whitelisted family, with a sampled
//! convexity certificate and the convex conjugate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `f''` in the convexity certificate.
pub const CONVEXITY_TOLERANCE: f64 = 1e-10;

const CERTIFICATE_SAMPLES: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryForm {
    /// `Σ coeffs[i] x^i`.
    Poly { coeffs: Vec<f64> },
    /// `scale · cosh(x / scale)`.
    Cosh { scale: f64 },
    Linear { slope: f64, intercept: f64 },
    Const { value: f64 },
}

impl BoundaryForm {
    fn eval(&self, x: f64) -> [f64; 3] {
        match self {
            BoundaryForm::Poly { coeffs } => {
                let (mut v, mut d, mut dd) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    dd = dd * x + 2.0 * d;
                    d = d * x + v;
                    v = v * x + c;
                }
                [v, d, dd]
            }
            BoundaryForm::Cosh { scale } => {
                let t = x / scale;
                [scale * t.cosh(), t.sinh(), t.cosh() / scale]
            }
            BoundaryForm::Linear { slope, intercept } => [slope * x + intercept, *slope, 0.0],
            BoundaryForm::Const { value } => [*value, 0.0, 0.0],
        }
    }

    fn check_parameters(&self) -> Result<()> {
        let finite = match self {
            BoundaryForm::Poly { coeffs } => !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite()),
            BoundaryForm::Cosh { scale } => scale.is_finite() && *scale > 0.0,
            BoundaryForm::Linear { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            BoundaryForm::Const { value } => value.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid boundary function parameters {self:?}")))
        }
    }

    /// Interval outside of which a convex polynomial's second derivative has
    /// no critical point (Cauchy bound on the roots of `f'''`).
    fn critical_radius(&self) -> f64 {
        match self {
            BoundaryForm::Poly { coeffs } if coeffs.len() > 4 => {
                let third: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .skip(3)
                    .map(|(i, c)| c * (i * (i - 1) * (i - 2)) as f64)
                    .collect();
                let lead = *third.last().unwrap();
                1.0 + third[..third.len() - 1]
                    .iter()
                    .map(|c| (c / lead).abs())
                    .fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }
}

/// Convex `f: ℝ → ℝ` certified on a working window.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBoundaryFunction {
    form: BoundaryForm,
    window: (f64, f64),
}

/// Outcome of maximizing `k x − f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conjugate {
    /// `f*(k)` and the interval of maximizers, clipped to `±1e8`.
    Finite { value: f64, argmax: (f64, f64) },
    /// `k` lies outside the closure of the range of `f'`.
    Unbounded,
}

const SEARCH_LIMIT: f64 = 1e8;

impl ConvexBoundaryFunction {
    /// Certifies convexity on `window` by sampling, and globally for
    /// polynomials (leading behaviour of `f''` plus samples over the region
    /// containing its critical points).
    pub fn new(form: BoundaryForm, window: (f64, f64)) -> Result<Self> {
        form.check_parameters()?;
        if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
            return Err(Error::InvalidInput(format!("invalid certificate window {window:?}")));
        }
        let f = Self { form, window };
        if let BoundaryForm::Poly { coeffs } = &f.form {
            let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
            if degree >= 2 && (degree % 2 == 1 || coeffs[degree] < 0.0) {
                let x = if degree % 2 == 1 { -coeffs[degree].signum() * 1e3 } else { 1e3 };
                return Err(Error::NotConvex {
                    x,
                    second_derivative: f.second_derivative(x),
                });
            }
            let r = f.form.critical_radius();
            if r > 0.0 {
                f.certify(-r, r)?;
            }
        }
        f.certify(window.0, window.1)?;
        Ok(f)
    }

    fn certify(&self, lo: f64, hi: f64) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..CERTIFICATE_SAMPLES {
            let x = lo + (hi - lo) * i as f64 / (CERTIFICATE_SAMPLES - 1) as f64;
            let [_, d, dd] = self.form.eval(x);
            if dd < -CONVEXITY_TOLERANCE || !dd.is_finite() {
                return Err(Error::NotConvex {
                    x,
                    second_derivative: dd,
                });
            }
            if d < prev - CONVEXITY_TOLERANCE * (1.0 + d.abs()) {
                return Err(Error::NotConvex {
                    x,
                    second_derivative: (d - prev) / ((hi - lo) / (CERTIFICATE_SAMPLES - 1) as f64),
                });
            }
            prev = d;
        }
        Ok(())
    }

    pub fn form(&self) -> &BoundaryForm {
        &self.form
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn value(&self, x: f64) -> f64 {
        self.form.eval(x)[0]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.form.eval(x)[1]
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.form.eval(x)[2]
    }

    /// `max(1, max |f|)` over the window; the unit for absolute tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.window;
        (0..=200)
            .map(|i| self.value(lo + (hi - lo) * i as f64 / 200.0).abs())
            .fold(1.0, f64::max)
    }

    /// Largest `x` with `f'(x) < k` (`strict`) or `f'(x) ≤ k`, by bisection.
    fn derivative_crossing(&self, k: f64, strict: bool) -> Option<f64> {
        let below = |x: f64| {
            let d = self.derivative(x);
            if strict {
                d < k
            } else {
                d <= k
            }
        };
        let mut lo = -1.0;
        while !below(lo) {
            lo *= 2.0;
            if lo < -SEARCH_LIMIT {
                return None;
            }
        }
        let mut hi = 1.0;
        while below(hi) {
            hi *= 2.0;
            if hi > SEARCH_LIMIT {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `f*(k) = sup_x (k x − f(x))`, from the monotone equation `f'(x) = k`.
    pub fn conjugate(&self, k: f64) -> Conjugate {
        let left = self.derivative_crossing(k, true);
        let right = self.derivative_crossing(k, false);
        let (lo, hi) = match (left, right) {
            (Some(a), Some(b)) => (a, b),
            // f' ≡ k below or above: f is affine with slope k there
            (None, Some(b)) if self.derivative(b.min(0.0) - 1.0) == k => (-SEARCH_LIMIT, b),
            (Some(a), None) if self.derivative(a.max(0.0) + 1.0) == k => (a, SEARCH_LIMIT),
            (None, None) if self.derivative(0.0) == k => (-SEARCH_LIMIT, SEARCH_LIMIT),
            _ => return Conjugate::Unbounded,
        };
        let x = 0.0f64.clamp(lo, hi);
        Conjugate::Finite {
            value: k * x - self.value(x),
            argmax: (lo, hi),
        }
    }
}
