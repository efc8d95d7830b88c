//! Verification experiments at large radius: Gauss-Bonnet and mass,
//! blow-down comparison with the cone, no-drift traces, ray asymptotes and
//! the distinctness experiment.

use crate::cone::{sample_model, ConeModel};
use crate::curve::{hausdorff, DiscreteCurve};
use crate::error::{GeoError, Result};
use crate::exec;
use crate::linalg::{lerp, quad, sub, Vec2};
use crate::metric::{lift_angle, SurfaceMetric};
use crate::minmax::{run_pipeline, MinMaxConfig, PipelineResult};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Angle defect 2 pi (1 - sin alpha) of the asymptotic cone.
pub fn mass(m: &SurfaceMetric) -> f64 {
    2.0 * PI * (1.0 - m.sin_alpha())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub n_r: usize,
    pub n_phi: usize,
    /// Length scale of the geometric radial grading; None for a uniform grid.
    pub grading: Option<f64>,
}

impl QuadGrid {
    pub fn for_metric(m: &SurfaceMetric) -> Self {
        QuadGrid { n_r: 400, n_phi: 64, grading: m.smoothing_scale() }
    }

    fn doubled(self) -> Self {
        QuadGrid { n_r: 2 * self.n_r, n_phi: 2 * self.n_phi, ..self }
    }

    /// Midpoint nodes and weights on [r1, r0].
    fn radial(&self, r1: f64, r0: f64) -> Vec<(f64, f64)> {
        let n = self.n_r;
        let du = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) * du;
                match self.grading {
                    Some(a) if a > 0.0 => {
                        // r + a is geometric in u.
                        let (lo, hi) = (r1 + a, r0 + a);
                        let beta = (hi / lo).ln();
                        let ra = lo * (beta * u).exp();
                        (ra - a, beta * ra * du)
                    }
                    _ => (r1 + u * (r0 - r1), (r0 - r1) * du),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    pub int_k: f64,
    /// Turning of the outer boundary minus that of the inner one.
    pub int_kappa: f64,
    /// 2 pi chi - int_k - int_kappa.
    pub defect: f64,
    /// 2 pi - int_kappa over the outer circle.
    pub mass_estimate: f64,
    /// Change of the defect between the grid and its refinement.
    pub refinement_change: f64,
    pub resolution_warning: bool,
}

/// Total geodesic curvature of the coordinate circle of radius r, oriented
/// counterclockwise.
pub fn boundary_turning(m: &SurfaceMetric, r: f64, n_phi: usize) -> Result<f64> {
    let dphi = 2.0 * PI / n_phi as f64;
    let mut acc = 0.0;
    for j in 0..n_phi {
        let phi = (j as f64 + 0.5) * dphi;
        let (c, s) = (phi.cos(), phi.sin());
        let x = [r * c, r * s];
        let xd = [-r * s, r * c];
        let gam = m.christoffel_cart(x)?;
        let g = m.metric_cart_value(x)?;
        let mut acc_v = [-x[0], -x[1]];
        for (k, a) in acc_v.iter_mut().enumerate() {
            for i in 0..2 {
                for l in 0..2 {
                    *a += gam[k][i][l] * xd[i] * xd[l];
                }
            }
        }
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let cross = xd[0] * acc_v[1] - xd[1] * acc_v[0];
        acc += det.sqrt() * cross / quad(&g, xd, xd) * dphi;
    }
    Ok(acc)
}

fn curvature_integral(m: &SurfaceMetric, r1: f64, r0: f64, grid: &QuadGrid) -> Result<f64> {
    let dphi = 2.0 * PI / grid.n_phi as f64;
    let mut acc = 0.0;
    for (r, w) in grid.radial(r1, r0) {
        if r <= m.r_min {
            continue;
        }
        let mut ring = 0.0;
        for j in 0..grid.n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let x = [r * phi.cos(), r * phi.sin()];
            let g = m.metric_cart_value(x)?;
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            ring += m.gauss_curvature_cart(x)? * det.sqrt();
        }
        acc += ring * dphi * r * w;
    }
    Ok(acc)
}

fn gauss_bonnet_once(m: &SurfaceMetric, r1: f64, r0: f64, grid: &QuadGrid) -> Result<(f64, f64, f64, f64)> {
    let int_k = curvature_integral(m, r1, r0, grid)?;
    let outer = boundary_turning(m, r0, grid.n_phi)?;
    let (inner, chi) = if r1 > 0.0 { (boundary_turning(m, r1, grid.n_phi)?, 0.0) } else { (0.0, 1.0) };
    let int_kappa = outer - inner;
    Ok((int_k, int_kappa, 2.0 * PI * chi - int_k - int_kappa, 2.0 * PI - outer))
}

fn gauss_bonnet_region(m: &SurfaceMetric, r1: f64, r0: f64, grid: &QuadGrid, tol: f64) -> Result<GaussBonnet> {
    if !(r0 > r1 && r1 >= 0.0) {
        return Err(GeoError::InvalidInput(format!("need 0 <= r1 < r0, got {r1}, {r0}")));
    }
    let coarse = gauss_bonnet_once(m, r1, r0, grid)?;
    let (int_k, int_kappa, defect, mass_estimate) = gauss_bonnet_once(m, r1, r0, &grid.doubled())?;
    let refinement_change = (defect - coarse.2).abs();
    Ok(GaussBonnet {
        int_k,
        int_kappa,
        defect,
        mass_estimate,
        refinement_change,
        resolution_warning: refinement_change > tol,
    })
}

/// Gauss-Bonnet on the coordinate disk of radius r0, at `grid` and its
/// refinement; the refined values are returned.
pub fn gauss_bonnet_disk(m: &SurfaceMetric, r0: f64, grid: &QuadGrid) -> Result<GaussBonnet> {
    gauss_bonnet_region(m, 0.0, r0, grid, 1e-4)
}

/// Gauss-Bonnet on the annulus r1 <= r <= r0 (Euler characteristic 0).
pub fn gauss_bonnet_annulus(m: &SurfaceMetric, r1: f64, r0: f64, grid: &QuadGrid) -> Result<GaussBonnet> {
    if !(r1 > 0.0) {
        return Err(GeoError::InvalidInput(format!("inner radius {r1} must be > 0")));
    }
    gauss_bonnet_region(m, r1, r0, grid, 1e-4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowDown {
    /// Nearest cone model over the whole rescaled curve.
    pub nearest: ConeModel,
    pub distance: f64,
    /// Distances to [upper, lower, vertex].
    pub distances: [f64; 3],
    /// Nearest model on the annulus window 1/3 <= r/r0 <= 1.
    pub nearest_window: ConeModel,
    pub window_distances: [f64; 3],
}

pub const BLOW_DOWN_WINDOW: (f64, f64) = (1.0 / 3.0, 1.0);

fn argmin3(d: &[f64; 3]) -> usize {
    let mut k = 0;
    for i in 1..3 {
        if d[i] < d[k] {
            k = i;
        }
    }
    k
}

fn in_window(pts: &[Vec2], lo: f64, hi: f64) -> Vec<Vec2> {
    let eps = 1e-12;
    pts.iter().copied().filter(|x| (lo - eps..=hi + eps).contains(&x[0].hypot(x[1]))).collect()
}

/// Polyline with `k - 1` extra points per segment.
fn densify(nodes: &[Vec2], k: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(k * nodes.len());
    for w in nodes.windows(2) {
        out.extend((0..k).map(|i| lerp(w[0], w[1], i as f64 / k as f64)));
    }
    out.extend(nodes.last());
    out
}

/// Rescale by 1/r0 and compare with the three antipodal cone geodesics at r = 1.
pub fn blow_down_compare(c: &DiscreteCurve, r0: f64, alpha: f64, phi0: f64) -> BlowDown {
    let dense = 8 * c.segments();
    let pts: Vec<Vec2> = densify(c.nodes(), 8).iter().map(|x| [x[0] / r0, x[1] / r0]).collect();
    let models: Vec<Vec<Vec2>> = ConeModel::ALL.iter().map(|w| sample_model(*w, 1.0, alpha, phi0, dense)).collect();
    let (lo, hi) = BLOW_DOWN_WINDOW;
    let win = in_window(&pts, lo, hi);
    let mut distances = [0.0; 3];
    let mut window_distances = [f64::INFINITY; 3];
    for (k, model) in models.iter().enumerate() {
        distances[k] = hausdorff(&pts, model, alpha);
        let mw = in_window(model, lo, hi);
        if !win.is_empty() && !mw.is_empty() {
            window_distances[k] = hausdorff(&win, &mw, alpha);
        }
    }
    let k = argmin3(&distances);
    BlowDown {
        nearest: ConeModel::ALL[k],
        distance: distances[k],
        distances,
        nearest_window: ConeModel::ALL[argmin3(&window_distances)],
        window_distances,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayFit {
    /// Asymptote angle in wedge coordinates.
    pub theta_inf: f64,
    /// Smallest C with |f| + rho |f'| <= C rho^(1 - mu) on the window.
    pub c_fit: f64,
    /// Largest |f| on the window.
    pub max_offset: f64,
}

/// Fit a ray window: unfold to wedge coordinates around `phi_hint`, rotate
/// the outer principal direction to theta = 0 and bound the graph f.
pub fn ray_asymptote(window: &[Vec2], alpha: f64, phi_hint: f64, mu: f64) -> Result<RayFit> {
    if window.len() < 4 {
        return Err(GeoError::InvalidInput(format!("ray window has {} points, need >= 4", window.len())));
    }
    let s = alpha.sin();
    let mut pts: Vec<(f64, Vec2)> = Vec::with_capacity(window.len());
    let mut hint = phi_hint;
    for x in window {
        let rho = x[0].hypot(x[1]);
        let phi = lift_angle(x[1].atan2(x[0]), hint);
        hint = phi;
        let th = phi * s;
        pts.push((rho, [rho * th.cos(), rho * th.sin()]));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let outer = &pts[pts.len() / 2..];
    let n = outer.len() as f64;
    let mean = outer.iter().fold([0.0, 0.0], |a, p| [a[0] + p.1[0] / n, a[1] + p.1[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in outer {
        let d = sub(p.1, mean);
        sxx += d[0] * d[0];
        sxy += d[0] * d[1];
        syy += d[1] * d[1];
    }
    let mut theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    // Orient outwards.
    let far = outer.last().unwrap().1;
    let near = outer[0].1;
    if (far[0] - near[0]) * theta.cos() + (far[1] - near[1]) * theta.sin() < 0.0 {
        theta += PI;
    }
    let (c, sn) = (theta.cos(), theta.sin());
    let rot: Vec<(f64, Vec2)> = pts.iter().map(|(r, p)| (*r, [c * p[0] + sn * p[1], -sn * p[0] + c * p[1]])).collect();
    if rot.windows(2).any(|w| w[1].1[0] <= w[0].1[0]) {
        return Err(GeoError::NonGraphical(format!("window is not a graph over theta = {theta}")));
    }
    let mut c_fit: f64 = 0.0;
    let mut max_offset: f64 = 0.0;
    for i in 0..rot.len() {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(rot.len() - 1));
        let fp = (rot[b].1[1] - rot[a].1[1]) / (rot[b].1[0] - rot[a].1[0]);
        let (rho, f) = (rot[i].0, rot[i].1[1]);
        max_offset = max_offset.max(f.abs());
        c_fit = c_fit.max((f.abs() + rho * fp.abs()) / rho.powf(1.0 - mu));
    }
    Ok(RayFit { theta_inf: theta, c_fit, max_offset })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    /// Fixed coordinate annulus for window curves, in units of the smoothing scale.
    pub window: (f64, f64),
    /// Ball radius and grid half-width for the length-concentration check,
    /// in units of the smoothing scale.
    pub ball: f64,
    pub ball_grid: f64,
}

impl Default for LineConfig {
    fn default() -> Self {
        LineConfig { window: (2.0, 8.0), ball: 1.0, ball_grid: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRun {
    pub r0: f64,
    pub lambda: f64,
    pub ratio: f64,
    pub index: Option<usize>,
    pub index_doubled: Option<usize>,
    pub closest_approach: f64,
    pub midpoint_radius: f64,
    pub max_ball_length: f64,
    pub window: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCandidate {
    pub phi0: f64,
    pub runs: Vec<DriftRun>,
    pub errors: Vec<(f64, String)>,
    /// Largest closest-approach radius over the runs.
    pub certificate: f64,
    /// Support distance between window curves of consecutive radii.
    pub window_steps: Vec<f64>,
}

fn length_in_balls(m: &SurfaceMetric, c: &DiscreteCurve, delta: f64, half: f64) -> Result<f64> {
    let k = (half / delta).ceil() as i64;
    let mut seg = Vec::with_capacity(c.segments());
    for w in c.nodes().windows(2) {
        let mid = lerp(w[0], w[1], 0.5);
        let g = m.metric_cart_value(mid)?;
        let d = sub(w[1], w[0]);
        seg.push((mid, quad(&g, d, d).sqrt()));
    }
    let mut best: f64 = 0.0;
    for i in -k..=k {
        for j in -k..=k {
            let ctr = [i as f64 * delta, j as f64 * delta];
            let l: f64 = seg.iter().filter(|(x, _)| (x[0] - ctr[0]).hypot(x[1] - ctr[1]) <= delta).map(|s| s.1).sum();
            best = best.max(l);
        }
    }
    Ok(best)
}

/// Closest approach, ball length and window curve of one pipeline run.
pub fn drift_run(m: &SurfaceMetric, run: &PipelineResult, line: &LineConfig) -> Result<DriftRun> {
    let a = m.smoothing_scale().unwrap_or(1.0);
    let res = &run.result;
    let curve = match (&res.gamma3, &run.sweepout) {
        (Some(g), _) => g.curve.clone(),
        (None, Some(h)) => h.slices[res.argmax].clone(),
        (None, None) => return Err(GeoError::InvalidInput("pipeline result carries no sweepout".into())),
    };
    let radius = |x: &Vec2| x[0].hypot(x[1]);
    let closest = curve.nodes().iter().map(radius).fold(f64::INFINITY, f64::min);
    let mid = curve.nodes()[curve.segments() / 2];
    Ok(DriftRun {
        r0: run.r0,
        lambda: res.lambda,
        ratio: res.ratio,
        index: res.gamma3.as_ref().map(|g| g.index),
        index_doubled: res.index_doubled,
        closest_approach: closest,
        midpoint_radius: radius(&mid),
        max_ball_length: length_in_balls(m, &curve, line.ball * a, line.ball_grid * a)?,
        window: in_window(curve.nodes(), line.window.0 * a, line.window.1 * a),
    })
}

/// Run the pipeline at each radius and record how close gamma3 comes to the
/// cap region, with window curves on a fixed annulus.
pub fn no_drift_trace(
    m: &SurfaceMetric,
    phi0: f64,
    radii: &[f64],
    cfg: &MinMaxConfig,
    line: &LineConfig,
) -> Result<LineCandidate> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeoError::InvalidInput("radii must be strictly increasing".into()));
    }
    let outs = exec::map(cfg.exec, radii, |&r0| run_pipeline(m, r0, phi0, cfg));
    let outs: Vec<_> = outs.into_iter().map(|o| o.and_then(|run| drift_run(m, &run, line))).collect();
    line_candidate(m, phi0, radii, outs)
}

/// Collect per-radius runs (or their errors) into a line candidate.
pub fn line_candidate(
    m: &SurfaceMetric,
    phi0: f64,
    radii: &[f64],
    outs: Vec<Result<DriftRun>>,
) -> Result<LineCandidate> {
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for (r0, o) in radii.iter().zip(outs) {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => errors.push((*r0, e.to_string())),
        }
    }
    let certificate = runs.iter().map(|r| r.closest_approach).fold(0.0, f64::max);
    let window_steps = runs
        .windows(2)
        .map(|w| {
            if w[0].window.is_empty() || w[1].window.is_empty() {
                f64::NAN
            } else {
                hausdorff(&w[0].window, &w[1].window, m.alpha())
            }
        })
        .collect();
    Ok(LineCandidate { phi0, runs, errors, certificate, window_steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinctnessConfig {
    /// Annulus window r/r0 used for asymptote fits and window distances.
    pub window_rel: (f64, f64),
    pub mu: f64,
    pub angle_tol: f64,
}

impl Default for DistinctnessConfig {
    fn default() -> Self {
        DistinctnessConfig { window_rel: (1.0 / 3.0, 2.0 / 3.0), mu: 1.0, angle_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRun {
    pub phi0: f64,
    pub lambda: f64,
    pub index: Option<usize>,
    /// Fit of the half of gamma3 ending at (r0, phi0).
    pub ray: RayFit,
    pub window: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub expected: f64,
    pub measured: f64,
    pub rel_err: f64,
    pub window_distance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctnessReport {
    pub r0: f64,
    pub runs: Vec<DirectionRun>,
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

fn congruent_mod_pi(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(PI);
    d < 1e-9 || PI - d < 1e-9
}

/// Run the pipeline for each direction class and compare the asymptote
/// angles and window supports pairwise.
pub fn distinctness_experiment(
    m: &SurfaceMetric,
    phi0s: &[f64],
    r0: f64,
    cfg: &MinMaxConfig,
    dcfg: &DistinctnessConfig,
) -> Result<DistinctnessReport> {
    for i in 0..phi0s.len() {
        for j in i + 1..phi0s.len() {
            if congruent_mod_pi(phi0s[i], phi0s[j]) {
                return Err(GeoError::InvalidInput(format!(
                    "phi0 = {} and {} belong to the same antipodal class",
                    phi0s[i], phi0s[j]
                )));
            }
        }
    }
    let alpha = m.alpha();
    let (lo, hi) = (dcfg.window_rel.0 * r0, dcfg.window_rel.1 * r0);
    let outs = exec::map(cfg.exec, phi0s, |&phi0| -> Result<DirectionRun> {
        let run = run_pipeline(m, r0, phi0, cfg)?;
        let res = run.result;
        let g = res.gamma3.as_ref().ok_or_else(|| GeoError::Regime("no smooth mountain-pass geodesic".into()))?;
        let nodes = g.curve.nodes();
        let half = &nodes[..=nodes.len() / 2];
        let ray = ray_asymptote(&in_window(half, lo, hi), alpha, phi0, dcfg.mu)?;
        Ok(DirectionRun { phi0, lambda: res.lambda, index: Some(g.index), ray, window: in_window(nodes, lo, hi) })
    });
    let runs: Vec<DirectionRun> = outs.into_iter().collect::<Result<_>>()?;
    let s = alpha.sin();
    let mut pairs = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let expected = (runs[j].phi0 - runs[i].phi0).abs() * s;
            let measured = (runs[j].ray.theta_inf - runs[i].ray.theta_inf).abs();
            let rel_err = (measured - expected).abs() / expected;
            let window_distance = hausdorff(&runs[i].window, &runs[j].window, alpha);
            pairs.push(PairReport {
                i,
                j,
                expected,
                measured,
                rel_err,
                window_distance,
                pass: rel_err <= dcfg.angle_tol && window_distance > 1e-2 * r0,
            });
        }
    }
    let pass = !pairs.is_empty() && pairs.iter().all(|p| p.pass);
    Ok(DistinctnessReport { r0, runs, pairs, pass })
}
