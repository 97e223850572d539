//! Gauss–Legendre rules and the singular integral of `sin^beta` used for
//! strip half-widths and profile tails.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R14: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        14 => R14.get_or_init(|| gauss_legendre(14)),
        20 => R20.get_or_init(|| gauss_legendre(20)),
        _ => unreachable!("only the 14- and 20-point rules are cached"),
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = rule(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>() * r
}

/// Value of a quadrature together with the difference between two rule orders.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

// Below this abscissa sin^beta is replaced by its three-term Taylor expansion.
const SERIES_CUTOFF: f64 = 1e-3;

fn power_antiderivative(gamma: f64, t: f64) -> f64 {
    if (gamma + 1.0).abs() < 1e-14 {
        t.ln()
    } else {
        t.powf(gamma + 1.0) / (gamma + 1.0)
    }
}

// Integral of t^beta (1 - beta t^2/6 + beta(5 beta - 2) t^4/360) over [a, b].
fn series_integral(beta: f64, a: f64, b: f64) -> f64 {
    let c2 = -beta / 6.0;
    let c4 = beta * (5.0 * beta - 2.0) / 360.0;
    let term = |gamma: f64, coeff: f64| {
        if coeff == 0.0 {
            return 0.0;
        }
        if a == 0.0 {
            coeff * power_antiderivative(gamma, b)
        } else {
            coeff * (power_antiderivative(gamma, b) - power_antiderivative(gamma, a))
        }
    };
    term(beta, 1.0) + term(beta + 2.0, c2) + term(beta + 4.0, c4)
}

/// `∫_a^b sin(t)^beta dt` for `0 <= a < b <= π/2`. When `a == 0` the integral
/// must converge, i.e. `beta > -1`.
///
/// The neighbourhood of `t = 0` is integrated from a series, the rest on
/// geometrically graded Gauss–Legendre panels so the algebraic endpoint
/// behaviour `t^beta` is resolved.
pub fn sin_power_integral(beta: f64, a: f64, b: f64) -> Quadrature {
    assert!(0.0 <= a && a <= b && b <= FRAC_PI_2 + 1e-15);
    assert!(a > 0.0 || beta > -1.0, "divergent integral");
    if a == b {
        return Quadrature {
            value: 0.0,
            error_estimate: 0.0,
        };
    }
    let mut value = 0.0;
    let mut coarse = 0.0;
    let mut lo = a;
    if lo < SERIES_CUTOFF {
        let hi = b.min(SERIES_CUTOFF);
        let s = series_integral(beta, lo, hi);
        value += s;
        coarse += s;
        lo = hi;
    }
    let f = |t: f64| t.sin().powf(beta);
    while lo < b {
        let hi = (2.0 * lo).min(b);
        value += panel(&f, lo, hi, 20);
        coarse += panel(&f, lo, hi, 14);
        lo = hi;
    }
    Quadrature {
        value,
        error_estimate: (value - coarse).abs(),
    }
}
