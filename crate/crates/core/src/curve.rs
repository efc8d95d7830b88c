//! Discrete fixed-endpoint curves: energy, length, constant-speed
//! reparametrization, the H1 pairing, embeddedness and support distance.
//!
//! Nodes are stored in the global Cartesian chart; segment quantities use the
//! metric at the segment midpoint.

use crate::cone::cone_distance_cart;
use crate::error::{GeoError, Result};
use crate::linalg::{dot, lerp, quad, sub, Mat2, Vec2};
use crate::metric::{lift_angle, ChartPoint, SurfaceMetric};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const MIN_SEGMENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    nodes: Vec<Vec2>,
}

/// Per-node tangent vectors, zero at both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    v: Vec<Vec2>,
}

impl Variation {
    pub fn zeros(n_nodes: usize) -> Self {
        Variation { v: vec![[0.0; 2]; n_nodes] }
    }

    /// Builds a variation from per-node vectors; endpoint entries are zeroed.
    pub fn from_nodes(mut v: Vec<Vec2>) -> Self {
        if let Some(first) = v.first_mut() {
            *first = [0.0; 2];
        }
        if let Some(last) = v.last_mut() {
            *last = [0.0; 2];
        }
        Variation { v }
    }

    pub fn values(&self) -> &[Vec2] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Euclidean pairing of nodal components, sum_i a_i . b_i.
    pub fn pair(&self, other: &Variation) -> f64 {
        self.v.iter().zip(&other.v).map(|(a, b)| dot(*a, *b)).sum()
    }

    pub fn scaled(&self, s: f64) -> Variation {
        Variation { v: self.v.iter().map(|a| [a[0] * s, a[1] * s]).collect() }
    }

    /// self + s * other
    pub fn axpy(&self, s: f64, other: &Variation) -> Variation {
        Variation { v: self.v.iter().zip(&other.v).map(|(a, b)| [a[0] + s * b[0], a[1] + s * b[1]]).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|a| a[0].abs().max(a[1].abs())).fold(0.0, f64::max)
    }
}

impl DiscreteCurve {
    pub fn new(nodes: Vec<Vec2>) -> Result<Self> {
        let n = nodes.len().saturating_sub(1);
        if n < MIN_SEGMENTS {
            return Err(GeoError::InvalidInput(format!("curve needs at least {MIN_SEGMENTS} segments, got {n}")));
        }
        if nodes.iter().any(|x| !x[0].is_finite() || !x[1].is_finite()) {
            return Err(GeoError::InvalidInput("non-finite node".into()));
        }
        Ok(DiscreteCurve { nodes })
    }

    pub fn from_chart_points(points: &[ChartPoint]) -> Result<Self> {
        Self::new(points.iter().map(ChartPoint::cartesian).collect())
    }

    /// Samples `f(t)` at t_i = i / n.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        Self::new((0..=n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn segment(p: Vec2, q: Vec2, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| lerp(p, q, t))
    }

    /// Coordinate arc at radius r from phi0 to phi1.
    pub fn coordinate_arc(r: f64, phi0: f64, phi1: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| {
            let phi = phi0 + t * (phi1 - phi0);
            [r * phi.cos(), r * phi.sin()]
        })
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> Vec2 {
        self.nodes[0]
    }

    pub fn end(&self) -> Vec2 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Returns a copy with interior nodes displaced by `-step * v`; the
    /// endpoints are copied bitwise.
    pub fn displaced(&self, v: &Variation, step: f64) -> Result<Self> {
        if v.len() != self.nodes.len() {
            return Err(GeoError::SizeMismatch { expected: self.nodes.len(), got: v.len() });
        }
        let n = self.nodes.len();
        let mut nodes = self.nodes.clone();
        for i in 1..n - 1 {
            nodes[i][0] -= step * v.v[i][0];
            nodes[i][1] -= step * v.v[i][1];
        }
        Ok(DiscreteCurve { nodes })
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        DiscreteCurve { nodes }
    }

    /// Nodes scaled by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        DiscreteCurve { nodes: self.nodes.iter().map(|x| [x[0] * s, x[1] * s]).collect() }
    }

    /// Resample at `n` segments by piecewise-linear interpolation in t.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        let m = self.segments();
        Self::from_fn(n, |t| {
            let u = t * m as f64;
            let i = (u.floor() as usize).min(m - 1);
            lerp(self.nodes[i], self.nodes[i + 1], u - i as f64)
        })
    }

    /// Nodes as chart points: polar outside `r_patch`, pole patch inside,
    /// with a continuous angle lift.
    pub fn to_chart_points(&self, r_patch: f64) -> Vec<ChartPoint> {
        let mut hint = 0.0;
        self.nodes
            .iter()
            .map(|&x| {
                let r = x[0].hypot(x[1]);
                if r < r_patch || r == 0.0 {
                    ChartPoint::pole(x[0], x[1])
                } else {
                    let phi = lift_angle(x[1].atan2(x[0]), hint);
                    hint = phi;
                    ChartPoint::polar(r, phi)
                }
            })
            .collect()
    }

    /// CSV with columns t, chart, r-or-u, phi-or-v.
    pub fn to_csv(&self, r_patch: f64) -> String {
        let n = self.segments() as f64;
        let mut out = String::from("t,chart,r_or_u,phi_or_v\n");
        for (i, p) in self.to_chart_points(r_patch).iter().enumerate() {
            let t = i as f64 / n;
            let _ = match *p {
                ChartPoint::Polar { r, phi } => writeln!(out, "{t},polar,{r},{phi}"),
                ChartPoint::PolePatch { u, v } => writeln!(out, "{t},pole-patch,{u},{v}"),
            };
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || GeoError::InvalidInput(format!("curve csv line {}: {line:?}", lineno + 1));
            if cols.len() != 4 {
                return Err(bad());
            }
            let a: f64 = cols[2].parse().map_err(|_| bad())?;
            let b: f64 = cols[3].parse().map_err(|_| bad())?;
            points.push(match cols[1] {
                "polar" => ChartPoint::polar(a, b),
                "pole-patch" => ChartPoint::pole(a, b),
                _ => return Err(bad()),
            });
        }
        Self::from_chart_points(&points)
    }
}

/// Per-segment midpoint metric and difference vector.
pub(crate) fn segment_metrics(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Vec<(Mat2, Vec2)>> {
    c.nodes.windows(2).map(|w| Ok((m.metric_cart_value(lerp(w[0], w[1], 0.5))?, sub(w[1], w[0])))).collect()
}

/// Segment g-lengths.
pub fn segment_lengths(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Vec<f64>> {
    Ok(segment_metrics(m, c)?.iter().map(|(g, d)| quad(g, *d, *d).sqrt()).collect())
}

/// E = N sum_i |x_{i+1} - x_i|^2 at the segment-midpoint metric.
pub fn energy(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<f64> {
    let n = c.segments() as f64;
    Ok(n * segment_metrics(m, c)?.iter().map(|(g, d)| quad(g, *d, *d)).sum::<f64>())
}

pub fn length(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<f64> {
    Ok(segment_lengths(m, c)?.iter().sum())
}

const REPARAM_TOL: f64 = 1e-13;
const REPARAM_MAX_ITER: usize = 60;

/// Moves nodes along the polyline so all segment g-lengths are equal.
pub fn reparametrize_constant_speed(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<DiscreteCurve> {
    let n = c.segments();
    let base = segment_lengths(m, c)?;
    let total: f64 = base.iter().sum();
    if !(total > 0.0) {
        return Err(GeoError::Degenerate("zero-length curve".into()));
    }
    // Cumulative base arclength of the original nodes.
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for l in &base {
        cum.push(cum.last().unwrap() + l);
    }
    let locate = |u: f64| -> Vec2 {
        let u = u.clamp(0.0, total);
        let k = match cum.binary_search_by(|x: &f64| x.partial_cmp(&u).unwrap()) {
            Ok(k) => k.min(n - 1),
            Err(k) => (k.max(1) - 1).min(n - 1),
        };
        let w = if base[k] > 0.0 { (u - cum[k]) / base[k] } else { 0.0 };
        lerp(c.nodes[k], c.nodes[k + 1], w.clamp(0.0, 1.0))
    };
    let mut params = cum.clone();
    let mut cur = c.clone();
    for _ in 0..REPARAM_MAX_ITER {
        let lens = segment_lengths(m, &cur)?;
        let tot: f64 = lens.iter().sum();
        let mean = tot / n as f64;
        let spread = lens.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max) / mean;
        if spread < REPARAM_TOL {
            break;
        }
        let mut acc = 0.0;
        for j in 1..n {
            acc += lens[j - 1];
            let target = j as f64 * mean;
            params[j] += target - acc;
        }
        let mut nodes = cur.nodes.clone();
        for j in 1..n {
            nodes[j] = locate(params[j]);
        }
        cur = DiscreteCurve { nodes };
    }
    Ok(cur)
}

/// Consistent-mass H1 pairing: per segment, the P1 mass matrix
/// (1/(6N)) [[2,1],[1,2]] and stiffness N [[1,-1],[-1,1]], both with the
/// midpoint metric.
pub fn h1_inner(m: &SurfaceMetric, c: &DiscreteCurve, a: &Variation, b: &Variation) -> Result<f64> {
    let nn = c.nodes.len();
    for v in [a, b] {
        if v.len() != nn {
            return Err(GeoError::SizeMismatch { expected: nn, got: v.len() });
        }
    }
    let n = c.segments() as f64;
    let mut acc = 0.0;
    for (i, w) in c.nodes.windows(2).enumerate() {
        let g = m.metric_cart_value(lerp(w[0], w[1], 0.5))?;
        let (a0, a1, b0, b1) = (a.v[i], a.v[i + 1], b.v[i], b.v[i + 1]);
        let mass = 2.0 * quad(&g, a0, b0) + quad(&g, a0, b1) + quad(&g, a1, b0) + 2.0 * quad(&g, a1, b1);
        acc += mass / (6.0 * n) + n * quad(&g, sub(a1, a0), sub(b1, b0));
    }
    Ok(acc)
}

/// H1 norm induced by `h1_inner`.
pub fn h1_norm(m: &SurfaceMetric, c: &DiscreteCurve, a: &Variation) -> Result<f64> {
    Ok(h1_inner(m, c, a, a)?.max(0.0).sqrt())
}

/// H1 distance between two curves with the same node count, measured with
/// the metric of the first.
pub fn h1_distance(m: &SurfaceMetric, a: &DiscreteCurve, b: &DiscreteCurve) -> Result<f64> {
    if a.nodes.len() != b.nodes.len() {
        return Err(GeoError::SizeMismatch { expected: a.nodes.len(), got: b.nodes.len() });
    }
    let diff = Variation { v: a.nodes.iter().zip(&b.nodes).map(|(x, y)| sub(*x, *y)).collect() };
    let n = a.segments() as f64;
    let mut acc = 0.0;
    for (i, w) in a.nodes.windows(2).enumerate() {
        let g = m.metric_cart_value(lerp(w[0], w[1], 0.5))?;
        let (d0, d1) = (diff.v[i], diff.v[i + 1]);
        let mass = 2.0 * quad(&g, d0, d0) + 2.0 * quad(&g, d0, d1) + 2.0 * quad(&g, d1, d1);
        acc += mass / (6.0 * n) + n * quad(&g, sub(d1, d0), sub(d1, d0));
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub embedded: bool,
    /// First offending pair of segment indices.
    pub crossing: Option<(usize, usize)>,
}

fn seg_seg_distance(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> f64 {
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (o1, o2) = (orient(p0, p1, q0), orient(p0, p1, q1));
    let (o3, o4) = (orient(q0, q1, p0), orient(q0, q1, p1));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    let pt_seg = |x: Vec2, a: Vec2, b: Vec2| {
        let ab = sub(b, a);
        let l2 = dot(ab, ab);
        let t = if l2 > 0.0 { (dot(sub(x, a), ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let d = sub(x, lerp(a, b, t));
        d[0].hypot(d[1])
    };
    pt_seg(p0, q0, q1).min(pt_seg(p1, q0, q1)).min(pt_seg(q0, p0, p1)).min(pt_seg(q1, p0, p1))
}

fn bbox(a: Vec2, b: Vec2) -> [f64; 4] {
    [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
}

/// Sweep over segments sorted by their lower x bound; calls `visit(i, j)` for
/// every pair whose tol-inflated bounding boxes overlap, stopping on `true`.
fn sweep_pairs(segs: &[[Vec2; 2]], tol: f64, mut visit: impl FnMut(usize, usize) -> bool) {
    let boxes: Vec<[f64; 4]> = segs.iter().map(|s| bbox(s[0], s[1])).collect();
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by(|&a, &b| boxes[a][0].total_cmp(&boxes[b][0]).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let bi = boxes[i];
        active.retain(|&j| boxes[j][1] + tol >= bi[0]);
        for &j in &active {
            let bj = boxes[j];
            if bj[2] - tol <= bi[3] && bi[2] - tol <= bj[3] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                if visit(lo, hi) {
                    return;
                }
            }
        }
        active.push(i);
    }
}

/// Default embeddedness tolerance: 1e-6 of the mean chart segment length.
pub fn default_embed_tol(c: &DiscreteCurve) -> f64 {
    let chart_len: f64 = c.nodes.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
    1e-6 * chart_len / c.segments() as f64
}

pub fn is_embedded(c: &DiscreteCurve, tol: f64) -> EmbeddingReport {
    let segs: Vec<[Vec2; 2]> = c.nodes.windows(2).map(|w| [w[0], w[1]]).collect();
    let mut worst: Option<(usize, usize)> = None;
    sweep_pairs(&segs, tol, |i, j| {
        if j <= i + 1 {
            return false;
        }
        if seg_seg_distance(segs[i][0], segs[i][1], segs[j][0], segs[j][1]) <= tol && worst.is_none_or(|w| (i, j) < w) {
            worst = Some((i, j));
        }
        false
    });
    EmbeddingReport { embedded: worst.is_none(), crossing: worst }
}

/// True when the two curves meet only at shared endpoints: segment pairs are
/// skipped only where both touch a common endpoint.
pub fn disjoint_except_endpoints(a: &DiscreteCurve, b: &DiscreteCurve, tol: f64) -> bool {
    let na = a.segments();
    let mut segs: Vec<[Vec2; 2]> = a.nodes.windows(2).map(|w| [w[0], w[1]]).collect();
    segs.extend(b.nodes.windows(2).map(|w| [w[0], w[1]]));
    let shared = |x: Vec2, y: Vec2| (x[0] - y[0]).hypot(x[1] - y[1]) <= tol;
    let mut ok = true;
    sweep_pairs(&segs, tol, |i, j| {
        if i >= na || j < na {
            return false;
        }
        let (sa, sb) = (segs[i], segs[j]);
        for &pa in &sa {
            for &pb in &sb {
                if shared(pa, pb) && (shared(pa, a.start()) || shared(pa, a.end())) {
                    return false;
                }
            }
        }
        if seg_seg_distance(sa[0], sa[1], sb[0], sb[1]) <= tol {
            ok = false;
            return true;
        }
        false
    });
    ok
}

/// Symmetric Hausdorff distance between point sets under the intrinsic cone
/// distance of opening `alpha` (Euclidean for alpha = pi/2).
pub fn hausdorff(a: &[Vec2], b: &[Vec2], alpha: f64) -> f64 {
    // Early exit once a point is closer than the running maximum; for
    // ordered polylines the search starts at the previous nearest index.
    let one_sided = |x: &[Vec2], y: &[Vec2]| {
        let mut cmax: f64 = 0.0;
        let mut start: usize = 0;
        for p in x {
            let mut cmin = f64::INFINITY;
            let mut arg = start;
            let outward = (0..y.len()).flat_map(|k| [start.checked_add(k), start.checked_sub(k + 1)]);
            for j in outward.flatten().filter(|j| *j < y.len()) {
                let d = cone_distance_cart(*p, y[j], alpha);
                if d < cmin {
                    cmin = d;
                    arg = j;
                    if cmin <= cmax {
                        break;
                    }
                }
            }
            start = arg;
            cmax = cmax.max(cmin);
        }
        cmax
    };
    one_sided(a, b).max(one_sided(b, a))
}

pub fn support_distance(a: &DiscreteCurve, b: &DiscreteCurve, alpha: f64) -> f64 {
    hausdorff(&a.nodes, &b.nodes, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{sample_model, ConeModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_6, PI, SQRT_2};

    fn flat() -> SurfaceMetric {
        SurfaceMetric::flat()
    }

    #[test]
    fn flat_segment_energy_and_length() {
        let c = DiscreteCurve::segment([0.0, 0.0], [3.0, 0.0], 16).unwrap();
        assert!((length(&flat(), &c).unwrap() - 3.0).abs() < 1e-14);
        assert!((energy(&flat(), &c).unwrap() - 9.0).abs() < 1e-12);
        let clustered = DiscreteCurve::from_fn(16, |t| [3.0 * t * t, 0.0]).unwrap();
        assert!(energy(&flat(), &clustered).unwrap() > 9.0 + 1e-3);
        assert!(DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 4).is_err());
    }

    #[test]
    fn cone_smooth_geodesic_energy() {
        let alpha = FRAC_PI_6;
        let m = SurfaceMetric::cone(alpha).unwrap();
        let c = DiscreteCurve::new(sample_model(ConeModel::Upper, 1.0, alpha, 0.0, 512)).unwrap();
        assert!((energy(&m, &c).unwrap() - 2.0).abs() < 1e-4);
        assert!((length(&m, &c).unwrap() - SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn polygonal_circle_length() {
        let c = DiscreteCurve::coordinate_arc(1.0, 0.0, 2.0 * PI, 512).unwrap();
        assert!((length(&flat(), &c).unwrap() - 2.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn reparametrization_equalizes_and_is_idempotent() {
        let m = flat();
        let clustered = DiscreteCurve::from_fn(32, |t| [3.0 * t * t, 0.0]).unwrap();
        let r = reparametrize_constant_speed(&m, &clustered).unwrap();
        for (i, x) in r.nodes().iter().enumerate() {
            assert!((x[0] - 3.0 * i as f64 / 32.0).abs() < 1e-12);
        }
        assert!((energy(&m, &r).unwrap() - 9.0).abs() < 1e-10);
        let again = reparametrize_constant_speed(&m, &r).unwrap();
        for (a, b) in again.nodes().iter().zip(r.nodes()) {
            assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        }
        let zero = DiscreteCurve::from_fn(8, |_| [1.0, 1.0]).unwrap();
        assert!(matches!(reparametrize_constant_speed(&m, &zero), Err(GeoError::Degenerate(_))));
    }

    #[test]
    fn reparametrized_random_curve_on_profile() {
        let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let c = DiscreteCurve::from_fn(512, |t| {
            let bump: f64 = amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * t).sin()).sum();
            let w = t * t * (3.0 - 2.0 * t);
            [4.0 * (1.0 - 2.0 * w), 1.0 + bump]
        })
        .unwrap();
        let r = reparametrize_constant_speed(&m, &c).unwrap();
        let l = length(&m, &r).unwrap();
        let ratio = energy(&m, &r).unwrap() / (l * l);
        assert!((1.0..=1.0 + 1e-6).contains(&ratio), "{ratio}");
        // Length of the resampled support against a fine subdivision of the original.
        let fine = c.resampled(8192).unwrap();
        assert!((l - length(&m, &fine).unwrap()).abs() < 1e-4 * l);
    }

    #[test]
    fn hat_function_pairing_closed_form() {
        let n = 20;
        let c = DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], n).unwrap();
        let mut v = vec![[0.0; 2]; n + 1];
        v[7] = [1.0, 0.0];
        let hat = Variation::from_nodes(v);
        let got = h1_inner(&flat(), &c, &hat, &hat).unwrap();
        let nf = n as f64;
        assert!((got - (2.0 * nf + 2.0 / (3.0 * nf))).abs() < 1e-12);
        assert_eq!(h1_inner(&flat(), &c, &hat, &Variation::zeros(n + 1)).unwrap(), 0.0);
        assert!(matches!(h1_inner(&flat(), &c, &hat, &Variation::zeros(3)), Err(GeoError::SizeMismatch { .. })));
    }

    #[test]
    fn embeddedness_examples() {
        let seg = DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 16).unwrap();
        assert!(is_embedded(&seg, default_embed_tol(&seg)).embedded);
        let eight = DiscreteCurve::from_fn(64, |t| {
            let s = 2.0 * PI * t;
            [s.sin(), (2.0 * s).sin() * 0.5]
        })
        .unwrap();
        let rep = is_embedded(&eight, 1e-9);
        assert!(!rep.embedded);
        let (i, j) = rep.crossing.unwrap();
        assert!(j > i + 1);
        assert_eq!(is_embedded(&eight.reversed(), 1e-9).embedded, rep.embedded);
    }

    #[test]
    fn arcs_are_disjoint_except_endpoints() {
        let up = DiscreteCurve::coordinate_arc(1.0, 0.0, PI, 64).unwrap();
        let down = DiscreteCurve::coordinate_arc(1.0, 0.0, -PI, 64).unwrap();
        assert!(disjoint_except_endpoints(&up, &down, 1e-9));
        let chord = DiscreteCurve::segment(up.start(), up.end(), 64).unwrap();
        let wavy = DiscreteCurve::from_fn(64, |t| [1.0 - 2.0 * t, 0.2 * (3.0 * PI * t).sin()]).unwrap();
        assert!(!disjoint_except_endpoints(&chord, &wavy, 1e-9));
    }

    #[test]
    fn support_distance_examples() {
        let a = DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 10).unwrap();
        let b = DiscreteCurve::segment([0.0, 0.3], [1.0, 0.3], 10).unwrap();
        let half_pi = PI / 2.0;
        assert_eq!(support_distance(&a, &a, half_pi), 0.0);
        assert!((support_distance(&a, &b, half_pi) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let c = DiscreteCurve::from_fn(12, |t| [1.0 - 2.0 * t, 0.5 * (PI * t).sin()]).unwrap();
        let back = DiscreteCurve::from_csv(&c.to_csv(0.01)).unwrap();
        for (a, b) in c.nodes().iter().zip(back.nodes()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        let text = c.to_csv(0.01);
        assert!(text.starts_with("t,chart,r_or_u,phi_or_v\n"));
    }
}
