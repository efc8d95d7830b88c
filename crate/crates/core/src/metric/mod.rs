//! Surface metrics: exact cone, flat plane, smoothed rotational cone and a
//! non-rotational perturbation of it.
//!
//! Two charts are exposed through [`ChartPoint`]: polar `(r, phi)` and the
//! pole patch `(u, v) = (r cos phi, r sin phi)`. Curves and flows work in the
//! Cartesian chart `(u, v)` over the whole plane, where every family except
//! the cone is smooth.

mod jet;
pub mod radial;

pub use jet::Jet;

use crate::error::{GeoError, Result};
use crate::linalg::{inv2, Mat2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_R_MIN: f64 = 1e-6;
pub const DEFAULT_R_PATCH_REL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case")]
pub enum ChartPoint {
    Polar { r: f64, phi: f64 },
    PolePatch { u: f64, v: f64 },
}

impl ChartPoint {
    pub fn polar(r: f64, phi: f64) -> Self {
        ChartPoint::Polar { r, phi }
    }

    pub fn pole(u: f64, v: f64) -> Self {
        ChartPoint::PolePatch { u, v }
    }

    pub fn cartesian(&self) -> [f64; 2] {
        match *self {
            ChartPoint::Polar { r, phi } => [r * phi.cos(), r * phi.sin()],
            ChartPoint::PolePatch { u, v } => [u, v],
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            ChartPoint::Polar { r, .. } => r,
            ChartPoint::PolePatch { u, v } => u.hypot(v),
        }
    }

    /// Polar form; pole-patch points map to the principal angle in (-pi, pi].
    pub fn to_polar(&self) -> Result<ChartPoint> {
        match *self {
            p @ ChartPoint::Polar { .. } => Ok(p),
            ChartPoint::PolePatch { u, v } => {
                let r = u.hypot(v);
                if r <= 0.0 {
                    return Err(GeoError::PoleEvaluation { r });
                }
                Ok(ChartPoint::Polar { r, phi: v.atan2(u) })
            }
        }
    }

    pub fn to_pole_patch(&self) -> ChartPoint {
        let [u, v] = self.cartesian();
        ChartPoint::PolePatch { u, v }
    }

    /// Polar point whose angle is the lift of `x` closest to `phi_hint`.
    pub fn polar_lifted(x: [f64; 2], phi_hint: f64) -> ChartPoint {
        let r = x[0].hypot(x[1]);
        ChartPoint::Polar { r, phi: lift_angle(x[1].atan2(x[0]), phi_hint) }
    }
}

/// The representative of `phi` mod 2 pi closest to `hint`.
pub fn lift_angle(phi: f64, hint: f64) -> f64 {
    phi + TAU * ((hint - phi) / TAU).round()
}

/// Components in the frame of the chart they were evaluated in: polar
/// `(rr, rphi, phiphi)` or pole patch `(uu, uv, vv)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor2 {
    pub g_rr: f64,
    pub g_rphi: f64,
    pub g_phiphi: f64,
}

impl MetricTensor2 {
    pub fn det(&self) -> f64 {
        self.g_rr * self.g_phiphi - self.g_rphi * self.g_rphi
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g_rr > 0.0 && self.det() > 0.0
    }

    pub fn matrix(&self) -> Mat2 {
        [[self.g_rr, self.g_rphi], [self.g_rphi, self.g_phiphi]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Cone {
        alpha: f64,
    },
    Flat,
    Profile {
        alpha: f64,
        a: f64,
    },
    /// Profile interior with the decaying e-tensor switched on outside 2a.
    Perturbed {
        alpha: f64,
        a: f64,
        mu: f64,
        c: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetric {
    pub family: Family,
    /// Rescaling factor lambda: components are those of the base metric at lambda r.
    pub scale: f64,
    pub r_patch: f64,
    pub r_min: f64,
}

/// Metric and its coordinate derivatives in the Cartesian chart.
/// `dg[k]` is the partial of `g` along coordinate k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartMetric {
    pub g: Mat2,
    pub dg: [Mat2; 2],
}

/// `gamma[k][i][j]` = Christoffel symbol of the second kind.
pub type Christoffel = [[[f64; 2]; 2]; 2];

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(GeoError::InvalidInput(format!("alpha = {alpha} outside (0, pi/2]")));
    }
    Ok(())
}

impl SurfaceMetric {
    fn with_family(family: Family, r_patch: f64) -> Self {
        SurfaceMetric { family, scale: 1.0, r_patch, r_min: DEFAULT_R_MIN }
    }

    pub fn cone(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::with_family(Family::Cone { alpha }, 0.0))
    }

    pub fn flat() -> Self {
        Self::with_family(Family::Flat, DEFAULT_R_PATCH_REL)
    }

    pub fn profile(alpha: f64, a: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(a > 0.0) {
            return Err(GeoError::InvalidInput(format!("smoothing scale a = {a} must be > 0")));
        }
        Ok(Self::with_family(Family::Profile { alpha, a }, DEFAULT_R_PATCH_REL * a))
    }

    pub fn perturbed(alpha: f64, a: f64, mu: f64, c: [f64; 3]) -> Result<Self> {
        check_alpha(alpha)?;
        if !(a > 0.0) {
            return Err(GeoError::InvalidInput(format!("smoothing scale a = {a} must be > 0")));
        }
        if !(mu > 0.0) {
            return Err(GeoError::InvalidInput(format!("decay rate mu = {mu} must be > 0")));
        }
        let s = alpha.sin();
        // f >= r s and (1+r)^-mu <= 1 give det g >= r^2 ((1-|c1|)(1-|c2|) s^2 - c3^2).
        let margin = (1.0 - c[0].abs()) * (1.0 - c[1].abs()) * s * s - c[2] * c[2];
        if c[0].abs() >= 1.0 || c[1].abs() >= 1.0 || margin <= 0.0 {
            return Err(GeoError::InvalidInput(format!("amplitudes {c:?} do not keep the metric positive definite")));
        }
        Ok(Self::with_family(Family::Perturbed { alpha, a, mu, c }, DEFAULT_R_PATCH_REL * a))
    }

    pub fn alpha(&self) -> f64 {
        match self.family {
            Family::Cone { alpha } | Family::Profile { alpha, .. } | Family::Perturbed { alpha, .. } => alpha,
            Family::Flat => PI / 2.0,
        }
    }

    pub fn sin_alpha(&self) -> f64 {
        match self.family {
            Family::Flat => 1.0,
            _ => self.alpha().sin(),
        }
    }

    pub fn is_rotational(&self) -> bool {
        !matches!(self.family, Family::Perturbed { .. })
    }

    /// The exact cone is singular at its vertex and has no pole patch.
    pub fn has_vertex(&self) -> bool {
        matches!(self.family, Family::Cone { .. })
    }

    /// Smoothing length scale in the current (rescaled) coordinates.
    pub fn smoothing_scale(&self) -> Option<f64> {
        match self.family {
            Family::Profile { a, .. } | Family::Perturbed { a, .. } => Some(a / self.scale),
            _ => None,
        }
    }

    /// Decay rate of the metric towards its cone.
    pub fn decay_rate(&self) -> f64 {
        match self.family {
            Family::Perturbed { mu, .. } => mu.min(1.0),
            Family::Profile { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Radial profile of the rotational part at physical radius `rho`.
    fn radial_phys(&self, rho: f64) -> radial::Radial {
        match self.family {
            Family::Cone { alpha } => radial::cone(alpha.sin(), rho),
            Family::Flat => radial::flat(rho),
            Family::Profile { alpha, a } | Family::Perturbed { alpha, a, .. } => radial::profile(alpha.sin(), a, rho),
        }
    }

    /// Radial profile f of the rescaled metric: f_lambda(r) = f(lambda r)/lambda.
    pub fn radial(&self, r: f64) -> radial::Radial {
        let l = self.scale;
        let p = self.radial_phys(l * r);
        radial::Radial {
            f: p.f / l,
            fp: p.fp,
            fpp: p.fpp * l,
            a: p.a,
            b: p.b * l * l,
            at: p.at * l * l,
            bt: p.bt * l.powi(4),
            k: p.k * l * l,
        }
    }

    /// Cutoff chi and amplitudes of the e-tensor at physical radius, if any.
    fn perturbation_active(&self, rho: f64) -> bool {
        match self.family {
            Family::Perturbed { a, .. } => rho > 2.0 * a,
            _ => false,
        }
    }

    /// Polar jets (E, F, G) of the base metric at physical (rho, phi).
    fn polar_jets_phys(&self, rho: f64, phi: f64) -> [Jet; 3] {
        let p = self.radial_phys(rho);
        let g = Jet::radial(p.f * p.f, 2.0 * p.f * p.fp, 2.0 * (p.fp * p.fp + p.f * p.fpp));
        let mut e = Jet::constant(1.0);
        let mut f = Jet::constant(0.0);
        let mut gg = g;
        if let Family::Perturbed { a, mu, c, .. } = self.family {
            if rho > 2.0 * a {
                let (chi, chi1, chi2) = radial::smooth_step((rho - 2.0 * a) / (2.0 * a));
                let chi = Jet::radial(chi, chi1 / (2.0 * a), chi2 / (4.0 * a * a));
                let q = 1.0 + rho;
                let d = Jet::radial(q.powf(-mu), -mu * q.powf(-mu - 1.0), mu * (mu + 1.0) * q.powf(-mu - 2.0));
                let cw = chi * d;
                let cos = Jet::angular(phi.cos(), -phi.sin(), -phi.cos());
                let sin = Jet::angular(phi.sin(), phi.cos(), -phi.sin());
                e = e + (cw * cos).scaled(c[0]);
                f = (cw * sin * Jet::radial(rho, 1.0, 0.0)).scaled(c[2]);
                gg = g + (cw * g).scaled(c[1]);
            }
        }
        [e, f, gg]
    }

    /// Polar jets of the rescaled metric at coordinate (r, phi).
    pub fn polar_jets(&self, r: f64, phi: f64) -> Result<[Jet; 3]> {
        self.check_polar(r)?;
        let l = self.scale;
        let [e, f, g] = self.polar_jets_phys(l * r, phi);
        Ok([e.rescaled(l, 0), f.rescaled(l, 1), g.rescaled(l, 2)])
    }

    fn check_polar(&self, r: f64) -> Result<()> {
        let bad = if self.has_vertex() { r <= self.r_min } else { r <= 0.0 };
        if bad || !r.is_finite() {
            return Err(GeoError::PoleEvaluation { r });
        }
        Ok(())
    }

    fn check_cart(&self, x: [f64; 2]) -> Result<f64> {
        let r = x[0].hypot(x[1]);
        if !r.is_finite() {
            return Err(GeoError::ChartDomain(format!("non-finite point {x:?}")));
        }
        if self.has_vertex() && r <= self.r_min {
            return Err(GeoError::PoleEvaluation { r });
        }
        Ok(r)
    }

    /// Metric components in the global Cartesian chart.
    pub fn metric_cart_value(&self, x: [f64; 2]) -> Result<Mat2> {
        let r = self.check_cart(x)?;
        let p = self.radial(r);
        let mut g = [[p.a + p.b * x[0] * x[0], p.b * x[0] * x[1]], [p.b * x[0] * x[1], p.a + p.b * x[1] * x[1]]];
        if self.perturbation_active(self.scale * r) {
            let e = self.perturbation_cart(x, r)?;
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += e.g[i][j];
                }
            }
        }
        Ok(g)
    }

    /// Metric and first derivatives in the global Cartesian chart.
    pub fn metric_cart(&self, x: [f64; 2]) -> Result<CartMetric> {
        let r = self.check_cart(x)?;
        let p = self.radial(r);
        let mut g = [[0.0; 2]; 2];
        let mut dg = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                g[i][j] = p.a * d + p.b * x[i] * x[j];
                for k in 0..2 {
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    dg[k][i][j] = p.at * x[k] * d + p.bt * x[k] * x[i] * x[j] + p.b * (dik * x[j] + djk * x[i]);
                }
            }
        }
        if self.perturbation_active(self.scale * r) {
            let e = self.perturbation_cart(x, r)?;
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += e.g[i][j];
                    for k in 0..2 {
                        dg[k][i][j] += e.dg[k][i][j];
                    }
                }
            }
        }
        Ok(CartMetric { g, dg })
    }

    /// Cartesian push-forward of the e-tensor part (zero near the pole).
    fn perturbation_cart(&self, x: [f64; 2], r: f64) -> Result<CartMetric> {
        let phi = x[1].atan2(x[0]);
        let l = self.scale;
        let base = self.radial_phys(l * r);
        let gb = Jet::radial(base.f * base.f, 2.0 * base.f * base.fp, 0.0);
        let [e, f, g] = self.polar_jets_phys(l * r, phi);
        let gp = Jet { v: g.v - gb.v, r: g.r - gb.r, ..g };
        let e = Jet { v: e.v - 1.0, ..e };
        let comps = [e.rescaled(l, 0), f.rescaled(l, 1), gp.rescaled(l, 2)];
        Ok(polar_to_cart(comps, x, r))
    }

    pub fn christoffel_cart(&self, x: [f64; 2]) -> Result<Christoffel> {
        let cm = self.metric_cart(x)?;
        christoffel_from(&cm.g, &cm.dg)
    }

    pub fn gauss_curvature_cart(&self, x: [f64; 2]) -> Result<f64> {
        let r = self.check_cart(x)?;
        if self.perturbation_active(self.scale * r) {
            let jets = self.polar_jets(r, x[1].atan2(x[0]))?;
            return Ok(brioschi(&jets));
        }
        if self.has_vertex() {
            return Ok(0.0);
        }
        Ok(self.radial(r).k)
    }

    /// Rotation generator d/dphi in Cartesian components.
    pub fn rotation_field(x: [f64; 2]) -> [f64; 2] {
        [-x[1], x[0]]
    }
}

/// Transform polar component jets (first order only) to the Cartesian chart.
fn polar_to_cart(comps: [Jet; 3], x: [f64; 2], r: f64) -> CartMetric {
    let [e, f, g] = comps;
    let p = [[e.v, f.v], [f.v, g.v]];
    let pr = [[e.r, f.r], [f.r, g.r]];
    let pp = [[e.p, f.p], [f.p, g.p]];
    let (u, v) = (x[0], x[1]);
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    // jac[i][a] = d(polar_i)/d(x_a); djac[c][i][a] = d/dx_c of that.
    let jac = [[u / r, v / r], [-v / r2, u / r2]];
    let djac = [
        [[v * v / r3, -u * v / r3], [2.0 * u * v / r4, (v * v - u * u) / r4]],
        [[-u * v / r3, u * u / r3], [(v * v - u * u) / r4, -2.0 * u * v / r4]],
    ];
    let mut g_out = [[0.0; 2]; 2];
    let mut dg = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc += jac[i][a] * p[i][j] * jac[j][b];
                }
            }
            g_out[a][b] = acc;
            for c in 0..2 {
                let mut d = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        let dp = pr[i][j] * jac[0][c] + pp[i][j] * jac[1][c];
                        d += djac[c][i][a] * p[i][j] * jac[j][b]
                            + jac[i][a] * dp * jac[j][b]
                            + jac[i][a] * p[i][j] * djac[c][j][b];
                    }
                }
                dg[c][a][b] = d;
            }
        }
    }
    CartMetric { g: g_out, dg }
}

/// Christoffel symbols from a metric and its partials in any chart.
pub fn christoffel_from(g: &Mat2, dg: &[Mat2; 2]) -> Result<Christoffel> {
    let gi = inv2(g).ok_or_else(|| GeoError::InvalidInput("degenerate metric".into()))?;
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for l in 0..2 {
                    acc += gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                out[k][i][j] = 0.5 * acc;
            }
        }
    }
    Ok(out)
}

/// Brioschi formula for K from polar jets (E, F, G) in coordinates (r, phi).
pub fn brioschi(jets: &[Jet; 3]) -> f64 {
    let [e, f, g] = *jets;
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 = [
        [-0.5 * e.pp + f.rp - 0.5 * g.rr, 0.5 * e.r, f.r - 0.5 * e.p],
        [f.p - 0.5 * g.r, e.v, f.v],
        [0.5 * g.p, f.v, g.v],
    ];
    let m2 = [[0.0, 0.5 * e.p, 0.5 * g.r], [0.5 * e.p, e.v, f.v], [0.5 * g.r, f.v, g.v]];
    let w = e.v * g.v - f.v * f.v;
    (det3(m1) - det3(m2)) / (w * w)
}

fn check_patch(m: &SurfaceMetric, u: f64, v: f64) -> Result<()> {
    if m.has_vertex() {
        return Err(GeoError::ChartDomain("the cone has no pole patch".into()));
    }
    if u.hypot(v) >= m.r_patch {
        return Err(GeoError::ChartDomain(format!("pole-patch point ({u}, {v}) outside r_patch = {}", m.r_patch)));
    }
    Ok(())
}

pub fn metric_at(m: &SurfaceMetric, p: &ChartPoint) -> Result<MetricTensor2> {
    match *p {
        ChartPoint::Polar { r, phi } => {
            let [e, f, g] = m.polar_jets(r, phi)?;
            Ok(MetricTensor2 { g_rr: e.v, g_rphi: f.v, g_phiphi: g.v })
        }
        ChartPoint::PolePatch { u, v } => {
            check_patch(m, u, v)?;
            let g = m.metric_cart_value([u, v])?;
            Ok(MetricTensor2 { g_rr: g[0][0], g_rphi: g[0][1], g_phiphi: g[1][1] })
        }
    }
}

pub fn christoffel(m: &SurfaceMetric, p: &ChartPoint) -> Result<Christoffel> {
    match *p {
        ChartPoint::Polar { r, phi } => {
            let [e, f, g] = m.polar_jets(r, phi)?;
            let gm = [[e.v, f.v], [f.v, g.v]];
            let dg = [[[e.r, f.r], [f.r, g.r]], [[e.p, f.p], [f.p, g.p]]];
            christoffel_from(&gm, &dg)
        }
        ChartPoint::PolePatch { u, v } => {
            check_patch(m, u, v)?;
            m.christoffel_cart([u, v])
        }
    }
}

pub fn gauss_curvature(m: &SurfaceMetric, p: &ChartPoint) -> Result<f64> {
    match *p {
        ChartPoint::Polar { r, .. } if m.has_vertex() => {
            m.check_polar(r)?;
            Ok(0.0)
        }
        ChartPoint::Polar { r, phi } => {
            m.check_polar(r)?;
            m.gauss_curvature_cart([r * phi.cos(), r * phi.sin()])
        }
        ChartPoint::PolePatch { u, v } => {
            check_patch(m, u, v)?;
            m.gauss_curvature_cart([u, v])
        }
    }
}

/// The metric `lambda^-2 Dil_lambda^* g`.
pub fn rescale(m: &SurfaceMetric, lambda: f64) -> Result<SurfaceMetric> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(GeoError::InvalidInput(format!("rescale factor {lambda} must be > 0")));
    }
    let mut out = *m;
    if m.has_vertex() {
        return Ok(out);
    }
    out.scale = m.scale * lambda;
    out.r_patch = m.r_patch / lambda;
    Ok(out)
}

/// Wedge coordinates (rho, theta) = (r, phi sin alpha) of the polar lift.
pub fn wedge_coords(p: &ChartPoint, alpha: f64) -> Result<(f64, f64)> {
    match *p {
        ChartPoint::Polar { r, phi } => Ok((r, phi * alpha.sin())),
        ChartPoint::PolePatch { .. } => Err(GeoError::ChartDomain("wedge coordinates need the polar chart".into())),
    }
}

pub fn wedge_to_polar(rho: f64, theta: f64, alpha: f64) -> ChartPoint {
    ChartPoint::Polar { r: rho, phi: theta / alpha.sin() }
}

/// Representative of theta in [0, 2 pi sin alpha) under the edge identification.
pub fn wedge_reduce(theta: f64, alpha: f64) -> f64 {
    let w = TAU * alpha.sin();
    let t = theta.rem_euclid(w);
    if (w - t).abs() < 1e-12 * w {
        0.0
    } else {
        t
    }
}
