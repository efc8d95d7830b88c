//! Closed-form cone geometry by unfolding, the Clairaut invariant and an
//! RK4 geodesic shooter.

use crate::error::{GeoError, Result};
use crate::linalg::{add, lerp, quad, scale, Vec2};
use crate::metric::{lift_angle, ChartPoint, SurfaceMetric};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Planar point of the unfolded wedge in polar form (rho, theta).
pub type WedgePoint = (f64, f64);

pub fn unfold(p: &ChartPoint, alpha: f64, cut_phi: f64) -> Result<WedgePoint> {
    let ChartPoint::Polar { r, phi } = *p else {
        return Err(GeoError::ChartDomain("unfolding needs the polar chart".into()));
    };
    let d = (phi - cut_phi).rem_euclid(TAU);
    if d < 1e-14 || TAU - d < 1e-14 {
        return Err(GeoError::CutCrossing { phi });
    }
    Ok((r, d * alpha.sin()))
}

pub fn fold(w: WedgePoint, alpha: f64, cut_phi: f64) -> ChartPoint {
    ChartPoint::polar(w.0, cut_phi + w.1 / alpha.sin())
}

fn planar(w: WedgePoint) -> Vec2 {
    [w.0 * w.1.cos(), w.0 * w.1.sin()]
}

/// The through-vertex path p -> vertex -> q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexPath {
    pub r_p: f64,
    pub r_q: f64,
}

/// The three antipodal cone geodesics in the unfolded wedge with p at
/// theta = pi sin(alpha) and q on the glued edge {0, 2 pi sin(alpha)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeGeodesicSet {
    pub smooth_1: [Vec2; 2],
    pub smooth_2: [Vec2; 2],
    pub singular: VertexPath,
    pub lengths: [f64; 3],
}

pub fn antipodal_geodesics(r: f64, alpha: f64) -> Result<ConeGeodesicSet> {
    if !(r > 0.0) {
        return Err(GeoError::InvalidInput(format!("radius {r} must be > 0")));
    }
    if !(alpha > 0.0 && alpha < PI / 2.0) {
        return Err(GeoError::InvalidInput(format!("alpha = {alpha}: antipodal geodesics need alpha in (0, pi/2)")));
    }
    let s = alpha.sin();
    let p = planar((r, PI * s));
    let smooth_1 = [p, planar((r, TAU * s))];
    let smooth_2 = [p, planar((r, 0.0))];
    let len = |seg: [Vec2; 2]| (seg[1][0] - seg[0][0]).hypot(seg[1][1] - seg[0][1]);
    Ok(ConeGeodesicSet {
        smooth_1,
        smooth_2,
        singular: VertexPath { r_p: r, r_q: r },
        lengths: [len(smooth_1), len(smooth_2), 2.0 * r],
    })
}

/// Which exact antipodal cone geodesic to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeModel {
    /// Smooth, phi increasing from phi0 to phi0 + pi.
    Upper,
    /// Smooth, phi decreasing from phi0 to phi0 - pi.
    Lower,
    /// Radial to the vertex and back out.
    Vertex,
}

impl ConeModel {
    pub const ALL: [ConeModel; 3] = [ConeModel::Upper, ConeModel::Lower, ConeModel::Vertex];

    pub fn label(self) -> &'static str {
        match self {
            ConeModel::Upper => "upper",
            ConeModel::Lower => "lower",
            ConeModel::Vertex => "vertex",
        }
    }
}

/// `n + 1` constant-speed samples of an antipodal cone geodesic between
/// (r, phi0) and (r, phi0 + pi), in the Cartesian surface chart.
pub fn sample_model(which: ConeModel, r: f64, alpha: f64, phi0: f64, n: usize) -> Vec<Vec2> {
    let s = alpha.sin();
    let p = [r * phi0.cos(), r * phi0.sin()];
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            match which {
                ConeModel::Vertex => scale(p, 1.0 - 2.0 * t),
                ConeModel::Upper | ConeModel::Lower => {
                    let a = [r, 0.0];
                    let b = [r * (PI * s).cos(), r * (PI * s).sin()];
                    let w = lerp(a, b, t);
                    let rho = w[0].hypot(w[1]);
                    let th = w[1].atan2(w[0]);
                    let sign = if which == ConeModel::Upper { 1.0 } else { -1.0 };
                    let phi = phi0 + sign * th / s;
                    [rho * phi.cos(), rho * phi.sin()]
                }
            }
        })
        .collect()
}

/// Intrinsic cone distance between Cartesian points: the shorter unfolding
/// chord or the vertex path.
pub fn cone_distance_cart(x: Vec2, y: Vec2, alpha: f64) -> f64 {
    let r1 = x[0].hypot(x[1]);
    let r2 = y[0].hypot(y[1]);
    if r1 == 0.0 || r2 == 0.0 {
        return r1 + r2;
    }
    let s = alpha.sin();
    if s >= 1.0 {
        return (x[0] - y[0]).hypot(x[1] - y[1]);
    }
    // Angle between the two directions in [0, pi].
    let cross = x[0] * y[1] - x[1] * y[0];
    let dotp = x[0] * y[0] + x[1] * y[1];
    let dphi = cross.abs().atan2(dotp);
    let dth = dphi * s;
    if dth >= PI {
        return r1 + r2;
    }
    // Chord via the half-angle form, accurate for nearby points.
    let dr = r1 - r2;
    (dr * dr + 4.0 * r1 * r2 * (0.5 * dth).sin().powi(2)).sqrt()
}

pub fn cone_distance(p: &ChartPoint, q: &ChartPoint, alpha: f64) -> f64 {
    cone_distance_cart(p.cartesian(), q.cartesian(), alpha)
}

fn require_rotational(m: &SurfaceMetric) -> Result<()> {
    if m.is_rotational() {
        Ok(())
    } else {
        Err(GeoError::NonRotational)
    }
}

/// Velocity components in the chart of `p` converted to Cartesian.
fn velocity_cart(p: &ChartPoint, v: Vec2) -> Vec2 {
    match *p {
        ChartPoint::Polar { r, phi } => {
            let (c, s) = (phi.cos(), phi.sin());
            [v[0] * c - r * v[1] * s, v[0] * s + r * v[1] * c]
        }
        ChartPoint::PolePatch { .. } => v,
    }
}

/// J = g(v, d/dphi); in the polar chart of a rotational metric this is
/// g_phiphi * phidot.
pub fn clairaut_invariant(m: &SurfaceMetric, p: &ChartPoint, v: Vec2) -> Result<f64> {
    require_rotational(m)?;
    let x = p.cartesian();
    clairaut_cart(m, x, velocity_cart(p, v))
}

pub fn clairaut_cart(m: &SurfaceMetric, x: Vec2, v: Vec2) -> Result<f64> {
    let g = m.metric_cart_value(x)?;
    Ok(quad(&g, v, SurfaceMetric::rotation_field(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSample {
    pub t: f64,
    pub x: Vec2,
    pub v: Vec2,
    pub speed: f64,
    pub j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotGeodesic {
    pub samples: Vec<ShotSample>,
    pub h: f64,
    pub speed: f64,
}

impl ShotGeodesic {
    pub fn arclength(&self) -> f64 {
        self.speed * self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Max relative speed deviation.
    pub fn speed_drift(&self) -> f64 {
        self.samples.iter().map(|s| (s.speed - self.speed).abs() / self.speed).fold(0.0, f64::max)
    }

    /// Max |J(t) - J(0)|, relative to |J(0)| (or to speed * r(0) when J(0) = 0).
    pub fn clairaut_drift(&self) -> Option<f64> {
        let s0 = self.samples.first()?;
        let j0 = s0.j?;
        let scale = if j0.abs() > 0.0 { j0.abs() } else { self.speed * s0.x[0].hypot(s0.x[1]).max(1.0) };
        Some(self.samples.iter().filter_map(|s| s.j).map(|j| (j - j0).abs() / scale).fold(0.0, f64::max))
    }

    pub fn min_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.x[0].hypot(s.x[1])).fold(f64::INFINITY, f64::min)
    }

    /// Rows (t, r, phi, rdot, phidot, speed, J) with a continuous phi lift.
    pub fn rows(&self) -> Vec<[f64; 7]> {
        let mut hint = 0.0;
        self.samples
            .iter()
            .map(|s| {
                let r = s.x[0].hypot(s.x[1]);
                let phi = if r > 0.0 { lift_angle(s.x[1].atan2(s.x[0]), hint) } else { hint };
                hint = phi;
                let (rdot, phidot) = if r > 0.0 {
                    ((s.x[0] * s.v[0] + s.x[1] * s.v[1]) / r, (s.x[0] * s.v[1] - s.x[1] * s.v[0]) / (r * r))
                } else {
                    (s.v[0].hypot(s.v[1]), 0.0)
                };
                [s.t, r, phi, rdot, phidot, s.speed, s.j.unwrap_or(f64::NAN)]
            })
            .collect()
    }
}

fn acceleration(m: &SurfaceMetric, x: Vec2, v: Vec2) -> Result<Vec2> {
    let gam = m.christoffel_cart(x)?;
    let mut a = [0.0; 2];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += gam[k][i][j] * v[i] * v[j];
            }
        }
        *ak = -acc;
    }
    Ok(a)
}

/// RK4 integration of the geodesic equation over parameter span `t_span`
/// with fixed step close to `h`, in the Cartesian chart.
pub fn geodesic_shoot(m: &SurfaceMetric, p: &ChartPoint, v: Vec2, t_span: f64, h: f64) -> Result<ShotGeodesic> {
    if !(t_span > 0.0 && h > 0.0) {
        return Err(GeoError::InvalidInput("parameter span and step must be > 0".into()));
    }
    let mut x = p.cartesian();
    let mut u = velocity_cart(p, v);
    let g0 = m.metric_cart_value(x)?;
    let speed = quad(&g0, u, u).sqrt();
    if !(speed > 0.0) {
        return Err(GeoError::InvalidInput("initial velocity must be non-zero".into()));
    }
    let steps = (t_span / h).round().max(1.0) as usize;
    let h = t_span / steps as f64;
    let rot = m.is_rotational();
    let sample = |t: f64, x: Vec2, u: Vec2| -> Result<ShotSample> {
        let g = m.metric_cart_value(x)?;
        let j = if rot { Some(quad(&g, u, SurfaceMetric::rotation_field(x))) } else { None };
        Ok(ShotSample { t, x, v: u, speed: quad(&g, u, u).sqrt(), j })
    };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(0.0, x, u)?);
    for n in 0..steps {
        let t = n as f64 * h;
        let vertex = |e: GeoError| match e {
            GeoError::PoleEvaluation { .. } if m.has_vertex() => GeoError::ChartExit { t },
            e => e,
        };
        let k1x = u;
        let k1v = acceleration(m, x, u).map_err(vertex)?;
        let x2 = add(x, scale(k1x, 0.5 * h));
        let u2 = add(u, scale(k1v, 0.5 * h));
        let k2v = acceleration(m, x2, u2).map_err(vertex)?;
        let x3 = add(x, scale(u2, 0.5 * h));
        let u3 = add(u, scale(k2v, 0.5 * h));
        let k3v = acceleration(m, x3, u3).map_err(vertex)?;
        let x4 = add(x, scale(u3, h));
        let u4 = add(u, scale(k3v, h));
        let k4v = acceleration(m, x4, u4).map_err(vertex)?;
        for k in 0..2 {
            x[k] += h / 6.0 * (k1x[k] + 2.0 * u2[k] + 2.0 * u3[k] + u4[k]);
            u[k] += h / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
        }
        samples.push(sample((n + 1) as f64 * h, x, u).map_err(vertex)?);
    }
    Ok(ShotGeodesic { samples, h, speed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, SQRT_2};

    #[test]
    fn unfold_examples_and_round_trip() {
        let (rho, th) = unfold(&ChartPoint::polar(1.0, PI), FRAC_PI_6, 0.0).unwrap();
        assert!((rho - 1.0).abs() < 1e-15 && (th - FRAC_PI_2).abs() < 1e-15);
        let (_, th) = unfold(&ChartPoint::polar(1.0, 2.0), FRAC_PI_2, 0.0).unwrap();
        assert!((th - 2.0).abs() < 1e-15);
        assert!(matches!(unfold(&ChartPoint::polar(1.0, TAU), FRAC_PI_6, 0.0), Err(GeoError::CutCrossing { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.1..1.5);
            let cut = rng.gen_range(-3.0..3.0);
            let p = ChartPoint::polar(rng.gen_range(0.1..10.0), cut + rng.gen_range(0.01..6.2));
            let back = fold(unfold(&p, alpha, cut).unwrap(), alpha, cut);
            let (a, b) = (p.cartesian(), back.cartesian());
            assert!((a[0] - b[0]).abs() < 1e-12 * 10.0 && (a[1] - b[1]).abs() < 1e-12 * 10.0);
        }
    }

    #[test]
    fn antipodal_lengths() {
        let set = antipodal_geodesics(1.0, FRAC_PI_6).unwrap();
        assert!((set.lengths[0] - SQRT_2).abs() < 1e-14 && (set.lengths[1] - SQRT_2).abs() < 1e-14);
        assert_eq!(set.lengths[2], 2.0);
        let set = antipodal_geodesics(5.0, FRAC_PI_6).unwrap();
        assert!((set.lengths[0] - 5.0 * SQRT_2).abs() < 1e-13);
        let set = antipodal_geodesics(1.0, FRAC_PI_3).unwrap();
        let want = 2.0 * (PI * 3.0_f64.sqrt() / 4.0).sin();
        assert!((set.lengths[0] - want).abs() < 1e-14 && (want - 1.9559).abs() < 1e-4);
        assert!(antipodal_geodesics(1.0, FRAC_PI_2).is_err());
    }

    #[test]
    fn cone_distance_examples() {
        let a = FRAC_PI_6;
        let p = ChartPoint::polar(1.0, 0.3);
        let q = ChartPoint::polar(1.0, 0.3 + PI);
        assert!((cone_distance(&p, &q, a) - SQRT_2).abs() < 1e-12);
        assert_eq!(cone_distance(&p, &p, a), 0.0);
        let d = cone_distance(&ChartPoint::polar(1.0, 0.0), &ChartPoint::polar(1.0, FRAC_PI_2), a);
        assert!((d - 2.0 * (PI / 8.0).sin()).abs() < 1e-14 && (d - 0.7653669).abs() < 1e-7);
    }

    #[test]
    fn antipodal_distance_below_vertex_path_for_all_alpha() {
        for i in 1..100 {
            let alpha = i as f64 / 100.0 * FRAC_PI_2;
            let p = ChartPoint::polar(2.0, 1.0);
            let q = ChartPoint::polar(2.0, 1.0 + PI);
            let d = cone_distance(&p, &q, alpha);
            assert!((d - 4.0 * (FRAC_PI_2 * alpha.sin()).sin()).abs() < 1e-12);
            assert!(d < 4.0);
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let alpha = rng.gen_range(0.05..FRAC_PI_2);
            let pts: Vec<ChartPoint> =
                (0..3).map(|_| ChartPoint::polar(rng.gen_range(0.0..5.0), rng.gen_range(-7.0..7.0))).collect();
            let d = |i: usize, j: usize| cone_distance(&pts[i], &pts[j], alpha);
            assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        }
    }

    #[test]
    fn clairaut_examples() {
        let cone = SurfaceMetric::cone(FRAC_PI_6).unwrap();
        let p = ChartPoint::polar(2.0, 0.4);
        assert!(clairaut_invariant(&cone, &p, [1.0, 0.0]).unwrap().abs() < 1e-15);
        let s = FRAC_PI_6.sin();
        let j = clairaut_invariant(&cone, &p, [0.0, 1.0 / (2.0 * s)]).unwrap();
        assert!((j - 1.0).abs() < 1e-14);
        let pert = SurfaceMetric::perturbed(FRAC_PI_6, 1.0, 1.0, [0.1; 3]).unwrap();
        assert_eq!(clairaut_invariant(&pert, &p, [1.0, 0.0]), Err(GeoError::NonRotational));
    }

    #[test]
    fn flat_radial_shot_is_straight_ray() {
        let m = SurfaceMetric::flat();
        let shot = geodesic_shoot(&m, &ChartPoint::polar(1.0, 0.0), [2.0, 0.0], 3.0, 1e-2).unwrap();
        for s in &shot.samples {
            assert!((s.x[0] - (1.0 + 2.0 * s.t)).abs() < 1e-12 && s.x[1].abs() < 1e-14);
        }
    }

    #[test]
    fn cone_shot_matches_unfolded_segment() {
        let alpha = FRAC_PI_6;
        let s = alpha.sin();
        let m = SurfaceMetric::cone(alpha).unwrap();
        let (r0, phi0) = (2.0, 0.0);
        let v = [-0.3, 0.8]; // (rdot, phidot)
        let shot = geodesic_shoot(&m, &ChartPoint::polar(r0, phi0), v, 3.0, 1e-3).unwrap();
        // Unfolded straight line with a cut far behind the start.
        let cut = phi0 - PI;
        let (rho, th) = unfold(&ChartPoint::polar(r0, phi0), alpha, cut).unwrap();
        let x0 = [rho * th.cos(), rho * th.sin()];
        let vr = v[0];
        let vt = r0 * v[1] * s;
        let dir = [vr * th.cos() - vt * th.sin(), vr * th.sin() + vt * th.cos()];
        let mut worst: f64 = 0.0;
        for smp in &shot.samples {
            let w = add(x0, scale(dir, smp.t));
            let back = fold((w[0].hypot(w[1]), w[1].atan2(w[0]).rem_euclid(TAU)), alpha, cut).cartesian();
            worst = worst.max((back[0] - smp.x[0]).hypot(back[1] - smp.x[1]));
        }
        assert!(worst < 1e-8, "deviation {worst}");
    }

    #[test]
    fn profile_turning_point_bound() {
        let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
        let r0 = 3.0;
        let f0 = m.radial(r0).f;
        let shot = geodesic_shoot(&m, &ChartPoint::polar(r0, 0.0), [0.0, 1.0 / f0], 30.0, 1e-3).unwrap();
        assert!(shot.min_radius() >= r0 - 1e-9, "{}", shot.min_radius());
        assert!(shot.clairaut_drift().unwrap() < 1e-9);
    }

    #[test]
    fn shot_hitting_vertex_is_an_error() {
        let m = SurfaceMetric::cone(FRAC_PI_6).unwrap();
        let r = geodesic_shoot(&m, &ChartPoint::polar(1.0, 0.0), [-1.0, 0.0], 2.0, 1e-3);
        assert!(matches!(r, Err(GeoError::ChartExit { .. })), "{r:?}");
    }

    #[test]
    fn clairaut_ball_is_avoided_on_cone() {
        let alpha = FRAC_PI_6;
        let m = SurfaceMetric::cone(alpha).unwrap();
        let s = alpha.sin();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let r0 = rng.gen_range(1.0..3.0);
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0)];
            let p = ChartPoint::polar(r0, rng.gen_range(0.0..6.0));
            let shot = geodesic_shoot(&m, &p, v, 4.0, 1e-3).unwrap();
            let j = clairaut_invariant(&m, &p, v).unwrap();
            // d0 = J / (speed sin(alpha)) is the closest approach to the vertex.
            let d0 = j.abs() / (shot.speed * s);
            assert!(shot.min_radius() >= d0 * (1.0 - 1e-9));
        }
    }
}
