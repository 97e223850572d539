//! Dormand–Prince 5(4) integrator with cubic Hermite dense output.

/// Right-hand side of an autonomous-or-not first-order system of fixed size.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_step: f64::INFINITY,
            min_step: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

/// Accepted steps of an integration: abscissae, states and derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub f: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    fn new(t0: f64, y0: [f64; N], f0: [f64; N]) -> Self {
        Self {
            t: vec![t0],
            y: vec![y0],
            f: vec![f0],
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> (f64, [f64; N]) {
        let k = self.t.len() - 1;
        (self.t[k], self.y[k])
    }

    /// Cubic Hermite interpolation inside the covered range (clamped at the ends).
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        hermite_cubic(
            self.t[k],
            self.t[k + 1],
            &self.y[k],
            &self.y[k + 1],
            &self.f[k],
            &self.f[k + 1],
            t,
        )
    }
}

pub(crate) fn hermite_cubic<const N: usize>(
    t0: f64,
    t1: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    f0: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
    }
    out
}

/// Quintic Hermite interpolant on `[x0, x0 + h]` matching value, first and
/// second derivative at both ends. Returns the value and two derivatives at
/// `x`.
#[allow(clippy::too_many_arguments)]
pub fn quintic_hermite(
    x0: f64,
    h: f64,
    p0: f64,
    d0: f64,
    s0: f64,
    p1: f64,
    d1: f64,
    s1: f64,
    x: f64,
) -> (f64, f64, f64) {
    let c0 = p0;
    let c1 = h * d0;
    let c2 = 0.5 * h * h * s0;
    let a = p1 - (c0 + c1 + c2);
    let b = h * d1 - (c1 + 2.0 * c2);
    let c = h * h * s1 - 2.0 * c2;
    let c3 = 10.0 * a - 4.0 * b + 0.5 * c;
    let c4 = -15.0 * a + 7.0 * b - c;
    let c5 = 6.0 * a - 3.0 * b + 0.5 * c;
    let t = (x - x0) / h;
    let v = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
    let dv = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
    let ddv = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
    (v, dv / h, ddv / (h * h))
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached the requested end point or event.
    Completed,
    /// Step size fell below `min_step`; the trajectory stops at the reached time.
    StepUnderflow { t: f64 },
    /// Hit `max_steps`.
    StepLimit { t: f64 },
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step. Returns (y_new, f_new, error_norm).
pub fn dopri_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
    ctl: &StepControl,
) -> ([f64; N], [f64; N], f64) {
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        if s == 6 {
            // FSAL: stage 7 is evaluated at the 5th-order solution.
            k[6] = sys.rhs(t + h, &ys);
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = ctl.atol + ctl.rtol * y[i].abs().max(ys[i].abs());
                err += (h * e / sc).powi(2);
            }
            return (ys, k[6], (err / N as f64).sqrt());
        }
        k[s] = sys.rhs(t + C[s] * h, &ys);
    }
    unreachable!()
}

/// Adaptive integration from `t0` until `stop(t, y)` becomes true or `t_end`
/// is reached. When `stop` fires inside a step, the step is retaken so the
/// trajectory ends on the event located by `event_value` (a monotone scalar
/// crossing zero), found by bisection on the Hermite interpolant.
pub fn integrate<const N: usize, S, G>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    h0: f64,
    ctl: &StepControl,
    event_value: G,
) -> (Trajectory<N>, Termination)
where
    S: OdeSystem<N>,
    G: Fn(f64, &[f64; N]) -> f64,
{
    let f0 = sys.rhs(t0, &y0);
    let mut traj = Trajectory::new(t0, y0, f0);
    let (mut t, mut y, mut f) = (t0, y0, f0);
    let mut h = h0.min(ctl.max_step).min(t_end - t0);
    if event_value(t, &y) >= 0.0 {
        return (traj, Termination::Completed);
    }
    for _ in 0..ctl.max_steps {
        if h < ctl.min_step * (1.0 + t.abs()) {
            return (traj, Termination::StepUnderflow { t });
        }
        let (yn, fnew, err) = dopri_step(sys, t, &y, &f, h, ctl);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac;
            continue;
        }
        let tn = t + h;
        if event_value(tn, &yn) >= 0.0 {
            // Locate the crossing on the cubic interpolant, then retake the step.
            let (mut lo, mut hi) = (t, tn);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let ym = hermite_cubic(t, tn, &y, &yn, &f, &fnew, mid);
                if event_value(mid, &ym) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                    break;
                }
            }
            let hs = 0.5 * (lo + hi) - t;
            if hs > 0.0 {
                let (ys, fs, _) = dopri_step(sys, t, &y, &f, hs, ctl);
                traj.t.push(t + hs);
                traj.y.push(ys);
                traj.f.push(fs);
            }
            return (traj, Termination::Completed);
        }
        t = tn;
        y = yn;
        f = fnew;
        traj.t.push(t);
        traj.y.push(y);
        traj.f.push(f);
        if t >= t_end {
            return (traj, Termination::Completed);
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).min(ctl.max_step).min(t_end - t);
    }
    (traj, Termination::StepLimit { t })
}
