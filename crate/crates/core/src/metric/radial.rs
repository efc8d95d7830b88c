//! Radial profile functions and the Cartesian push-forward of
//! `dr^2 + f(r)^2 dphi^2`, written as `A(r) I + B(r) x x^T`.
//!
//! `At = A'(r)/r` and `Bt = B'(r)/r` are what the Cartesian derivative needs;
//! for the smooth profile all four are even in r and are evaluated from
//! power series near the pole.

/// Euler numbers E_0, E_2, ..., E_14 (coefficients of sech).
const EULER: [f64; 8] = [1.0, -1.0, 5.0, -61.0, 1385.0, -50521.0, 2702765.0, -199360981.0];

/// Below this value of r/a the series branch is used.
const SERIES_X: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
    pub a: f64,
    pub b: f64,
    pub at: f64,
    pub bt: f64,
    /// Gauss curvature -f''/f.
    pub k: f64,
}

/// Gudermannian gd(x) = 2 atan(tanh(x/2)), the integral of sech.
pub fn gd(x: f64) -> f64 {
    2.0 * (0.5 * x).tanh().atan()
}

fn sech(x: f64) -> f64 {
    if x.abs() > 700.0 {
        0.0
    } else {
        1.0 / x.cosh()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// q = gd(x)/x, w = (1-q)/x^2, q'/x, w'/x.
fn q_terms(x: f64) -> (f64, f64, f64, f64) {
    let y = x * x;
    if x < SERIES_X {
        let mut q = 0.0;
        let mut w = 0.0;
        let mut qpx = 0.0;
        let mut wpx = 0.0;
        for (n, e) in EULER.iter().enumerate() {
            let c = e / factorial(2 * n as u32 + 1);
            q += c * y.powi(n as i32);
            if n >= 1 {
                w -= c * y.powi(n as i32 - 1);
                qpx += 2.0 * n as f64 * c * y.powi(n as i32 - 1);
            }
            if n >= 2 {
                wpx -= 2.0 * (n as f64 - 1.0) * c * y.powi(n as i32 - 2);
            }
        }
        (q, w, qpx, wpx)
    } else {
        let q = gd(x) / x;
        let w = (1.0 - q) / y;
        let qpx = (sech(x) - q) / y;
        let wpx = (-qpx - 2.0 * w) / y;
        (q, w, qpx, wpx)
    }
}

fn tanh_over_x(x: f64) -> f64 {
    if x < 1e-8 {
        1.0
    } else {
        x.tanh() / x
    }
}

/// Profile f'(r) = s + (1-s) sech(r/a), f(0) = 0, with s = sin(alpha).
pub fn profile(s: f64, a: f64, r: f64) -> Radial {
    let x = r / a;
    let (q, w, qpx, wpx) = q_terms(x);
    let h = s + (1.0 - s) * q;
    let c = (1.0 - s) / (a * a);
    let sx = sech(x);
    let f = r * h;
    let fp = s + (1.0 - s) * sx;
    let fpp = -(1.0 - s) * sx * x.tanh() / a;
    let at = 2.0 * h * c * qpx;
    let bt = c / (a * a) * (wpx * (1.0 + h) + w * (1.0 - s) * qpx);
    Radial { f, fp, fpp, a: h * h, b: c * w * (1.0 + h), at, bt, k: c * sx * tanh_over_x(x) / h }
}

/// Exact cone f(r) = r s; singular at r = 0.
pub fn cone(s: f64, r: f64) -> Radial {
    let r2 = r * r;
    Radial {
        f: r * s,
        fp: s,
        fpp: 0.0,
        a: s * s,
        b: (1.0 - s * s) / r2,
        at: 0.0,
        bt: -2.0 * (1.0 - s * s) / (r2 * r2),
        k: 0.0,
    }
}

pub fn flat(r: f64) -> Radial {
    Radial { f: r, fp: 1.0, fpp: 0.0, a: 1.0, b: 0.0, at: 0.0, bt: 0.0, k: 0.0 }
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1; returns (S, S', S'').
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let psi = |u: f64| -> (f64, f64, f64) {
        let e = (-1.0 / u).exp();
        (e, e / (u * u), e * (1.0 / u.powi(4) - 2.0 / u.powi(3)))
    };
    let (n, n1, n2) = psi(t);
    let (m, m1, m2) = psi(1.0 - t);
    // d/dt psi(1-t) = -psi'(1-t)
    let (d, d1, d2) = (n + m, n1 - m1, n2 + m2);
    let s = n / d;
    let s1 = (n1 * d - n * d1) / (d * d);
    let s2 = (n2 * d - n * d2) / (d * d) - 2.0 * d1 * (n1 * d - n * d1) / (d * d * d);
    (s, s1, s2)
}
