//! Special functions used by the kernel diagnostics.

use std::f64::consts::PI;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivative(n, x).0
}

/// `(P_n(x), P_n'(x))`; the derivative formula is only used away from `|x| = 1`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_m`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Lower incomplete gamma `γ(a, x)` for half-integer `a = (1 + i) / 2`.
///
/// `γ(1/2, x) = √π erf(√x)` and `γ(1, x) = 1 - e^{-x}` seed the upward
/// recurrence `γ(a + 1, x) = a γ(a, x) - x^a e^{-x}`, which is stable for
/// `x > a`. Below that the power series is summed instead.
pub fn lower_gamma_half_integer(i: usize, x: f64) -> f64 {
    let a = (1.0 + i as f64) / 2.0;
    if i >= 2 && x < a + 1.0 {
        return lower_gamma_series(a, x);
    }
    let mut g = if i % 2 == 0 {
        PI.sqrt() * erf(x.sqrt())
    } else {
        -(-x).exp_m1()
    };
    let mut s = if i % 2 == 0 { 0.5 } else { 1.0 };
    while s < a {
        g = s * g - (s * x.ln() - x).exp();
        s += 1.0;
    }
    g
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > sum.abs() * 1e-17 {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
    }
    sum * (a * x.ln() - x).exp()
}
