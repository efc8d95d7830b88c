//! Small dense and banded linear algebra used by the flow.

pub type Mat2 = [[f64; 2]; 2];
pub type Vec2 = [f64; 2];

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_add(a: &Mat2, b: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]], [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]]]
}

pub fn quad(m: &Mat2, a: Vec2, b: Vec2) -> f64 {
    let mb = mat_vec(m, b);
    a[0] * mb[0] + a[1] * mb[1]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn lerp(a: Vec2, b: Vec2, t: f64) -> Vec2 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Solve a symmetric block-tridiagonal system with 2x2 blocks.
/// `diag[i]` are the diagonal blocks, `off[i]` couples rows i and i+1
/// (upper block; the lower block is its transpose).
/// Returns the failing row if a pivot block is singular.
pub fn solve_block_tridiag(diag: &[Mat2], off: &[Mat2], rhs: &[Vec2]) -> Result<Vec<Vec2>, usize> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(off.len() + 1, n.max(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let transpose = |m: &Mat2| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
    // Forward elimination: D'_i = D_i - L_i D'_{i-1}^{-1} U_{i-1}.
    let mut dinv: Vec<Mat2> = Vec::with_capacity(n);
    let mut y: Vec<Vec2> = Vec::with_capacity(n);
    for i in 0..n {
        let (d, r) = if i == 0 {
            (diag[0], rhs[0])
        } else {
            let l = transpose(&off[i - 1]);
            let w = mat_mul(&l, &dinv[i - 1]);
            let d = mat_add(&diag[i], &mat_mul(&w, &off[i - 1]), -1.0);
            let r = sub(rhs[i], mat_vec(&w, y[i - 1]));
            (d, r)
        };
        let di = inv2(&d).ok_or(i)?;
        dinv.push(di);
        y.push(r);
    }
    let mut x = vec![[0.0; 2]; n];
    x[n - 1] = mat_vec(&dinv[n - 1], y[n - 1]);
    for i in (0..n - 1).rev() {
        let r = sub(y[i], mat_vec(&off[i], x[i + 1]));
        x[i] = mat_vec(&dinv[i], r);
    }
    Ok(x)
}

/// Symmetric tridiagonal pencil (A, B): `a_diag`, `a_off`, `b_diag`, `b_off`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TridiagPencil {
    pub a_diag: Vec<f64>,
    pub a_off: Vec<f64>,
    pub b_diag: Vec<f64>,
    pub b_off: Vec<f64>,
}

impl TridiagPencil {
    pub fn len(&self) -> usize {
        self.a_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_diag.is_empty()
    }

    /// Number of generalized eigenvalues strictly below `lambda`, by the
    /// inertia of A - lambda B (LDL^T pivots).
    pub fn count_below(&self, lambda: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d_prev = 1.0;
        for i in 0..n {
            let di = self.a_diag[i] - lambda * self.b_diag[i];
            let d = if i == 0 {
                di
            } else {
                let e = self.a_off[i - 1] - lambda * self.b_off[i - 1];
                di - e * e / d_prev
            };
            let d = if d == 0.0 { -f64::EPSILON * (di.abs() + 1e-300) } else { d };
            if d < 0.0 {
                count += 1;
            }
            d_prev = d;
        }
        count
    }

    /// Bound on |lambda|: Gershgorin row sum of A over the Gershgorin
    /// margin of B.
    pub fn spectral_bound(&self) -> f64 {
        let n = self.len();
        let mut bound: f64 = 0.0;
        for i in 0..n {
            let mut row = self.a_diag[i].abs();
            let mut mass = self.b_diag[i];
            if i > 0 {
                row += self.a_off[i - 1].abs();
                mass -= self.b_off[i - 1].abs();
            }
            if i + 1 < n {
                row += self.a_off[i].abs();
                mass -= self.b_off[i].abs();
            }
            bound = bound.max(row / mass.max(f64::MIN_POSITIVE));
        }
        bound
    }

    /// The k-th smallest generalized eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let bound = self.spectral_bound() * 1.5 + 1.0;
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solve (A - sigma B) x = y with the Thomas algorithm.
    pub fn solve_shifted(&self, sigma: f64, y: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let diag = self.a_diag[i] - sigma * self.b_diag[i];
            let lower = if i > 0 { self.a_off[i - 1] - sigma * self.b_off[i - 1] } else { 0.0 };
            let mut piv = diag - if i > 0 { lower * c[i - 1] } else { 0.0 };
            if piv.abs() < 1e-300 {
                piv = 1e-300;
            }
            let upper = if i + 1 < n { self.a_off[i] - sigma * self.b_off[i] } else { 0.0 };
            c[i] = upper / piv;
            d[i] = (y[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / piv;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            x[i] = d[i] - if i + 1 < n { c[i] * x[i + 1] } else { 0.0 };
        }
        x
    }

    pub fn b_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.b_diag[i] * x[i];
                if i > 0 {
                    acc += self.b_off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.b_off[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Lowest eigenpair by bisection then shifted inverse iteration;
    /// the vector is B-normalized.
    pub fn lowest_eigenpair(&self) -> (f64, Vec<f64>) {
        let n = self.len();
        let l0 = self.eigenvalue(0);
        let gap = if n > 1 { (self.eigenvalue(1) - l0).abs() } else { 1.0 };
        let sigma = l0 - 1e-3 * gap.max(1e-12 * self.spectral_bound());
        let mut x: Vec<f64> = (0..n).map(|i| ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin()).collect();
        for _ in 0..6 {
            let bx = self.b_apply(&x);
            let mut y = self.solve_shifted(sigma, &bx);
            let by = self.b_apply(&y);
            let nrm: f64 = y.iter().zip(&by).map(|(a, b)| a * b).sum::<f64>().sqrt();
            for v in y.iter_mut() {
                *v /= nrm;
            }
            x = y;
        }
        (l0, x)
    }
}
