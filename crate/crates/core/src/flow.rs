//! H1 gradient flow of the discrete energy, geodesic finding, the Jacobi
//! second variation and index-one saddle polishing.

use crate::curve::{
    default_embed_tol, energy, h1_inner, is_embedded, length, segment_lengths, DiscreteCurve, Variation,
};
use crate::error::{GeoError, Result};
use crate::linalg::{
    add, inv2, lerp, mat_add, mat_mul, mat_vec, quad, solve_block_tridiag, sub, Mat2, TridiagPencil, Vec2,
};
use crate::metric::SurfaceMetric;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

thread_local! {
    static CORRUPT_GRADIENT: Cell<bool> = const { Cell::new(false) };
}

/// Test hook: when set, `energy_gradient` on the calling thread returns a
/// slightly wrong gradient so the self-test can prove that the gradient
/// check detects it.
#[doc(hidden)]
pub fn set_gradient_corruption(on: bool) {
    CORRUPT_GRADIENT.with(|c| c.set(on));
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Largest explicit step.
    pub h_flow: f64,
    /// Backtracking gives up below this step.
    pub h_min: f64,
    pub max_steps: usize,
    /// Stop when ||grad E||_X < tol_grad_rel * E / L.
    pub tol_grad_rel: f64,
    /// Flow time for `find_geodesic`.
    pub tau_max: f64,
    /// Residual accepted by `second_variation`.
    pub tol_geo: f64,
    /// Relative eigenvalue tolerance for the index.
    pub tol_eig_rel: f64,
    /// Number of listed eigenvalues.
    pub n_eigs: usize,
    /// Saddle polishing: largest step, iteration cap, mode refresh period.
    pub h_saddle: f64,
    pub saddle_max_iter: usize,
    pub saddle_refresh: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            h_flow: 0.02,
            h_min: 1e-10,
            max_steps: 200_000,
            tol_grad_rel: 1e-6,
            tau_max: 400.0,
            tol_geo: 1e-4,
            tol_eig_rel: 1e-9,
            n_eigs: 8,
            h_saddle: 0.3,
            saddle_max_iter: 20_000,
            saddle_refresh: 1,
        }
    }
}

/// Analytic nodal gradient of the discrete energy (Euclidean components).
pub fn energy_gradient(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Variation> {
    Ok(energy_and_gradient(m, c)?.1)
}

/// Energy, gradient and the midpoint metrics, in one pass.
pub(crate) fn energy_and_gradient(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<(f64, Variation, Vec<Mat2>)> {
    let x = c.nodes();
    let n = c.segments();
    let nf = n as f64;
    let mut grad = vec![[0.0; 2]; n + 1];
    let mut gs = Vec::with_capacity(n);
    let mut e = 0.0;
    for i in 0..n {
        let d = sub(x[i + 1], x[i]);
        let cm = m.metric_cart(lerp(x[i], x[i + 1], 0.5))?;
        e += quad(&cm.g, d, d);
        let gd = mat_vec(&cm.g, d);
        let q = [quad(&cm.dg[0], d, d), quad(&cm.dg[1], d, d)];
        for k in 0..2 {
            grad[i + 1][k] += nf * (2.0 * gd[k] + 0.5 * q[k]);
            grad[i][k] += nf * (-2.0 * gd[k] + 0.5 * q[k]);
        }
        gs.push(cm.g);
    }
    if CORRUPT_GRADIENT.with(|c| c.get()) {
        for g in grad.iter_mut() {
            g[0] *= 1.0 + 1e-3;
        }
    }
    Ok((nf * e, Variation::from_nodes(grad), gs))
}

/// Solve the H1 Riesz system with midpoint metrics `gs`.
pub(crate) fn precondition_with(gs: &[Mat2], grad: &Variation) -> Result<Variation> {
    let n = gs.len();
    let nf = n as f64;
    let a = nf + 1.0 / (3.0 * nf);
    let b = 1.0 / (6.0 * nf) - nf;
    let interior = n - 1;
    let diag: Vec<Mat2> = (1..n)
        .map(|i| {
            let (p, q) = (gs[i - 1], gs[i]);
            [[a * (p[0][0] + q[0][0]), a * (p[0][1] + q[0][1])], [a * (p[1][0] + q[1][0]), a * (p[1][1] + q[1][1])]]
        })
        .collect();
    let off: Vec<Mat2> =
        (1..interior).map(|i| [[b * gs[i][0][0], b * gs[i][0][1]], [b * gs[i][1][0], b * gs[i][1][1]]]).collect();
    let rhs: Vec<Vec2> = grad.values()[1..n].to_vec();
    let sol = solve_block_tridiag(&diag, &off, &rhs).map_err(|row| GeoError::SingularSystem { row: row + 1 })?;
    let mut v = Vec::with_capacity(n + 1);
    v.push([0.0; 2]);
    v.extend(sol);
    v.push([0.0; 2]);
    Ok(Variation::from_nodes(v))
}

/// The H1 representative of the gradient: h1_inner(result, V) = grad . V.
pub fn h1_precondition(m: &SurfaceMetric, c: &DiscreteCurve, grad: &Variation) -> Result<Variation> {
    if grad.len() != c.nodes().len() {
        return Err(GeoError::SizeMismatch { expected: c.nodes().len(), got: grad.len() });
    }
    let gs: Vec<Mat2> =
        c.nodes().windows(2).map(|w| m.metric_cart_value(lerp(w[0], w[1], 0.5))).collect::<Result<_>>()?;
    precondition_with(&gs, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tau: f64,
    pub energy: f64,
    pub grad_norm: f64,
    /// Step taken to reach this row (0 for the first row).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowStop {
    Tolerance,
    TimeBudget,
    /// Every trial step changes E by less than its rounding error.
    NoiseFloor,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub tau: f64,
    pub trace: Vec<TraceRow>,
    pub h_flow: f64,
    pub stop: FlowStop,
}

impl FlowState {
    pub fn energy(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn grad_norm(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// Trapezoid sum of h ||grad E||_X^2 over accepted steps.
    pub fn predicted_drop(&self) -> f64 {
        self.trace.windows(2).map(|w| 0.5 * w[1].step * (w[0].grad_norm.powi(2) + w[1].grad_norm.powi(2))).sum()
    }

    pub fn actual_drop(&self) -> f64 {
        match (self.trace.first(), self.trace.last()) {
            (Some(a), Some(b)) => a.energy - b.energy,
            _ => 0.0,
        }
    }

    /// |predicted - actual| / actual; 0 when nothing moved.
    pub fn identity_residual(&self) -> f64 {
        let actual = self.actual_drop();
        let e0 = self.trace.first().map_or(0.0, |r| r.energy.abs());
        if actual <= 1e-13 * e0 {
            return 0.0;
        }
        (self.predicted_drop() - actual).abs() / actual
    }

    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].energy < w[0].energy)
    }

    /// CSV with columns tau, E, gradnorm, step.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("tau,E,gradnorm,step\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{},{}\n", r.tau, r.energy, r.grad_norm, r.step));
        }
        out
    }
}

/// Explicit H1 descent with halving backtracking, for flow time `tau_star`
/// or until ||grad E||_X < tol_grad.
pub fn gradient_flow(
    m: &SurfaceMetric,
    gamma0: &DiscreteCurve,
    tau_star: f64,
    tol_grad: f64,
    cfg: &FlowConfig,
) -> Result<FlowState> {
    let mut curve = gamma0.clone();
    let mut tau = 0.0;
    let mut h = cfg.h_flow;
    let mut trace = Vec::new();
    let mut last_step = 0.0;
    let (mut e, mut grad, mut gs) = energy_and_gradient(m, &curve)?;
    let stop = loop {
        let p = precondition_with(&gs, &grad)?;
        let gn2 = grad.pair(&p).max(0.0);
        let gn = gn2.sqrt();
        trace.push(TraceRow { tau, energy: e, grad_norm: gn, step: last_step });
        if gn < tol_grad {
            break FlowStop::Tolerance;
        }
        if tau >= tau_star * (1.0 - 1e-12) {
            break FlowStop::TimeBudget;
        }
        if trace.len() > cfg.max_steps {
            break FlowStop::MaxSteps;
        }
        let mut step = h.min(tau_star - tau);
        let accepted = loop {
            let trial = curve.displaced(&p, step)?;
            if let Ok((et, gt, gst)) = energy_and_gradient(m, &trial) {
                if et < e {
                    break Some((trial, et, gt, gst));
                }
            }
            step *= 0.5;
            if step < cfg.h_min {
                break None;
            }
        };
        match accepted {
            Some((trial, et, gt, gst)) => {
                curve = trial;
                e = et;
                grad = gt;
                gs = gst;
                tau += step;
                last_step = step;
                if step < h {
                    h = step;
                }
                h = (h * 2.0).min(cfg.h_flow);
            }
            None => {
                // Predicted decrease of a full step below the rounding
                // error of E means the flow has reached the noise floor.
                if cfg.h_flow * gn2 < 1e-12 * e.abs() {
                    break FlowStop::NoiseFloor;
                }
                return Err(GeoError::Stall { step: cfg.h_min, grad_norm: gn });
            }
        }
    };
    Ok(FlowState { curve, tau, trace, h_flow: cfg.h_flow, stop })
}

/// ||grad E||_X L / E: scale-free stationarity measure.
pub fn geodesic_residual(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<f64> {
    let (e, grad, gs) = energy_and_gradient(m, c)?;
    let p = precondition_with(&gs, &grad)?;
    let l = length(m, c)?;
    Ok(grad.pair(&p).max(0.0).sqrt() * l / e)
}

/// Discrete Noether momentum J_i = d e_i / d x_{i+1} . xi(x_{i+1}); constant
/// along exact discrete critical points of rotational metrics.
pub fn discrete_clairaut(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Option<Vec<f64>>> {
    if !m.is_rotational() {
        return Ok(None);
    }
    let x = c.nodes();
    let nf = c.segments() as f64;
    let mut out = Vec::with_capacity(c.segments());
    for i in 0..c.segments() {
        let d = sub(x[i + 1], x[i]);
        let cm = m.metric_cart(lerp(x[i], x[i + 1], 0.5))?;
        let gd = mat_vec(&cm.g, d);
        let q = [quad(&cm.dg[0], d, d), quad(&cm.dg[1], d, d)];
        let de = [nf * (2.0 * gd[0] + 0.5 * q[0]), nf * (2.0 * gd[1] + 0.5 * q[1])];
        let xi = SurfaceMetric::rotation_field(x[i + 1]);
        out.push(de[0] * xi[0] + de[1] * xi[1]);
    }
    Ok(Some(out))
}

/// Spread of the discrete momentum relative to L * max r.
pub fn clairaut_residual(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Option<f64>> {
    let Some(j) = discrete_clairaut(m, c)? else { return Ok(None) };
    let lo = j.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rmax = c.nodes().iter().map(|x| x[0].hypot(x[1])).fold(0.0, f64::max);
    Ok(Some((hi - lo) / (length(m, c)? * rmax.max(f64::MIN_POSITIVE))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    pub pencil: TridiagPencil,
    pub eigenvalues: Vec<f64>,
    pub tol_eig: f64,
}

impl SecondVariation {
    pub fn spectral_bound(&self) -> f64 {
        self.pencil.spectral_bound()
    }
}

fn assemble_jacobi(m: &SurfaceMetric, c: &DiscreteCurve, cfg: &FlowConfig) -> Result<SecondVariation> {
    let pencil = jacobi_pencil(m, c)?;
    let tol_eig = cfg.tol_eig_rel * pencil.spectral_bound();
    let count = cfg.n_eigs.min(pencil.len());
    let eigenvalues = (0..count).map(|j| pencil.eigenvalue(j)).collect();
    Ok(SecondVariation { pencil, eigenvalues, tol_eig })
}

fn jacobi_pencil(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<TridiagPencil> {
    let ell = segment_lengths(m, c)?;
    if ell.iter().any(|l| !(*l > 0.0)) {
        return Err(GeoError::Degenerate("zero-length segment in second variation".into()));
    }
    let k: Vec<f64> =
        c.nodes().windows(2).map(|w| m.gauss_curvature_cart(lerp(w[0], w[1], 0.5))).collect::<Result<_>>()?;
    let n = ell.len();
    let mut a_diag = Vec::with_capacity(n - 1);
    let mut b_diag = Vec::with_capacity(n - 1);
    let mut a_off = Vec::with_capacity(n - 2);
    let mut b_off = Vec::with_capacity(n - 2);
    for i in 1..n {
        let (l0, l1) = (ell[i - 1], ell[i]);
        a_diag.push(1.0 / l0 + 1.0 / l1 - k[i - 1] * l0 / 3.0 - k[i] * l1 / 3.0);
        b_diag.push(l0 / 3.0 + l1 / 3.0);
        if i + 1 < n {
            a_off.push(-1.0 / l1 - k[i] * l1 / 6.0);
            b_off.push(l1 / 6.0);
        }
    }
    Ok(TridiagPencil { a_diag, a_off, b_diag, b_off })
}

/// Jacobi form Q(u) = int (u'^2 - K u^2) ds with hat functions on the
/// arclength grid and Dirichlet ends.
pub fn second_variation(m: &SurfaceMetric, c: &DiscreteCurve, cfg: &FlowConfig) -> Result<SecondVariation> {
    let residual = geodesic_residual(m, c)?;
    if !(residual <= cfg.tol_geo) {
        return Err(GeoError::NonGeodesic { residual, tol: cfg.tol_geo });
    }
    assemble_jacobi(m, c, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseIndex {
    /// Eigenvalues below -tol_eig.
    pub index: usize,
    /// Eigenvalues below +tol_eig; differs from `index` in marginal cases.
    pub index_marginal: usize,
}

pub fn morse_index(sv: &SecondVariation) -> MorseIndex {
    MorseIndex { index: sv.pencil.count_below(-sv.tol_eig), index_marginal: sv.pencil.count_below(sv.tol_eig) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub curve: DiscreteCurve,
    pub energy: f64,
    pub length: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub index: usize,
    pub index_marginal: usize,
    pub eigenvalues: Vec<f64>,
    pub embedded: bool,
    pub clairaut_residual: Option<f64>,
    pub flow_steps: usize,
    pub flow_time: f64,
    pub identity_residual: f64,
}

fn close(a: Vec2, b: Vec2) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) <= 1e-12 * (1.0 + a[0].hypot(a[1]))
}

/// Assemble the report for a curve that passed the stationarity test.
pub fn report_for(m: &SurfaceMetric, c: &DiscreteCurve, cfg: &FlowConfig) -> Result<GeodesicReport> {
    let (e, grad, gs) = energy_and_gradient(m, c)?;
    let p = precondition_with(&gs, &grad)?;
    let gn = grad.pair(&p).max(0.0).sqrt();
    let l = length(m, c)?;
    let residual = gn * l / e;
    let sv = if residual <= cfg.tol_geo {
        assemble_jacobi(m, c, cfg)?
    } else {
        return Err(GeoError::NonGeodesic { residual, tol: cfg.tol_geo });
    };
    let idx = morse_index(&sv);
    Ok(GeodesicReport {
        curve: c.clone(),
        energy: e,
        length: l,
        grad_norm: gn,
        residual,
        index: idx.index,
        index_marginal: idx.index_marginal,
        eigenvalues: sv.eigenvalues,
        embedded: is_embedded(c, default_embed_tol(c)).embedded,
        clairaut_residual: clairaut_residual(m, c)?,
        flow_steps: 0,
        flow_time: 0.0,
        identity_residual: 0.0,
    })
}

/// Flow `init` (which must join p to q) to a critical point of E.
pub fn find_geodesic(
    m: &SurfaceMetric,
    p: Vec2,
    q: Vec2,
    init: &DiscreteCurve,
    cfg: &FlowConfig,
) -> Result<(GeodesicReport, FlowState)> {
    if !close(init.start(), p) || !close(init.end(), q) {
        return Err(GeoError::InvalidInput("initial curve does not join the given endpoints".into()));
    }
    let e0 = energy(m, init)?;
    let l0 = length(m, init)?;
    let tol = cfg.tol_grad_rel * e0 / l0;
    let state = gradient_flow(m, init, cfg.tau_max, tol, cfg)?;
    let tol_end = cfg.tol_grad_rel * state.energy() / length(m, &state.curve)?;
    let converged = match state.stop {
        FlowStop::Tolerance | FlowStop::NoiseFloor => true,
        _ => state.grad_norm() < tol_end,
    };
    if !converged {
        return Err(GeoError::NonConvergence(format!(
            "flow stopped ({:?}) at ||grad E|| = {:.3e} after {} steps",
            state.stop,
            state.grad_norm(),
            state.trace.len()
        )));
    }
    let mut rep = report_for(m, &state.curve, cfg)?;
    rep.flow_steps = state.trace.len() - 1;
    rep.flow_time = state.tau;
    rep.identity_residual = state.identity_residual();
    Ok((rep, state))
}

/// g-unit normals at the nodes (central-difference tangent).
fn unit_normals(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<Vec<Vec2>> {
    let x = c.nodes();
    let n = x.len();
    (0..n)
        .map(|i| {
            let t = sub(x[(i + 1).min(n - 1)], x[i.saturating_sub(1)]);
            let g =
                m.metric_cart_value(x[i]).or_else(|_| m.metric_cart_value(lerp(x[i], x[(i + 1).min(n - 1)], 0.5)))?;
            let ginv = inv2(&g).ok_or_else(|| GeoError::Degenerate("singular metric".into()))?;
            let nv = mat_vec(&ginv, [-t[1], t[0]]);
            let s = quad(&g, nv, nv).sqrt();
            Ok([nv[0] / s, nv[1] / s])
        })
        .collect()
}

/// Lowest mode of the Jacobi form relative to the H1 pairing of normal
/// variations, int (u^2 + u_t^2) dt, as a Variation with its eigenvalue.
pub fn lowest_normal_mode(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<(f64, Variation)> {
    let mut pencil = jacobi_pencil(m, c)?;
    let ell = segment_lengths(m, c)?;
    let l: f64 = ell.iter().sum();
    let n = ell.len();
    for i in 1..n {
        pencil.b_diag[i - 1] = pencil.b_diag[i - 1] / l + l * (1.0 / ell[i - 1] + 1.0 / ell[i]);
        if i + 1 < n {
            pencil.b_off[i - 1] = pencil.b_off[i - 1] / l - l / ell[i];
        }
    }
    let (lambda, u) = pencil.lowest_eigenpair();
    let normals = unit_normals(m, c)?;
    let mut v = vec![[0.0; 2]; c.nodes().len()];
    for (i, ui) in u.iter().enumerate() {
        let nrm = normals[i + 1];
        v[i + 1] = [ui * nrm[0], ui * nrm[1]];
    }
    Ok((lambda, Variation::from_nodes(v)))
}

/// Gradient contributions of one segment to its two nodes.
fn segment_gradient(m: &SurfaceMetric, x0: Vec2, x1: Vec2, nf: f64) -> Result<[Vec2; 2]> {
    let d = sub(x1, x0);
    let cm = m.metric_cart(lerp(x0, x1, 0.5))?;
    let gd = mat_vec(&cm.g, d);
    let q = [quad(&cm.dg[0], d, d), quad(&cm.dg[1], d, d)];
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        out[0][k] = nf * (-2.0 * gd[k] + 0.5 * q[k]);
        out[1][k] = nf * (2.0 * gd[k] + 0.5 * q[k]);
    }
    Ok(out)
}

/// Block-tridiagonal Hessian of the discrete energy on interior nodes, by
/// central differences of the analytic segment gradients. `off[i]` couples
/// interior rows i and i + 1.
fn discrete_hessian(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<(Vec<Mat2>, Vec<Mat2>)> {
    let x = c.nodes();
    let n = c.segments();
    let nf = n as f64;
    let scale = x.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum::<f64>() / nf;
    let delta = 1e-5 * scale;
    let mut diag = vec![[[0.0; 2]; 2]; n - 1];
    let mut off = vec![[[0.0; 2]; 2]; n.saturating_sub(2)];
    for i in 1..n {
        for k in 0..2 {
            // Column (i, k): node i's perturbation only touches segments i-1 and i.
            let mut cols = [[0.0; 2]; 3];
            for (sign, w) in [(1.0, 0.5 / delta), (-1.0, -0.5 / delta)] {
                let mut xi = x[i];
                xi[k] += sign * delta;
                let left = segment_gradient(m, x[i - 1], xi, nf)?;
                let right = segment_gradient(m, xi, x[i + 1], nf)?;
                for l in 0..2 {
                    cols[0][l] += w * left[0][l];
                    cols[1][l] += w * (left[1][l] + right[0][l]);
                    cols[2][l] += w * right[1][l];
                }
            }
            let r = i - 1;
            for l in 0..2 {
                diag[r][l][k] = cols[1][l];
                if r + 1 < n - 1 {
                    // Row i + 1, column i: lower block, stored transposed.
                    off[r][k][l] = cols[2][l];
                }
            }
        }
    }
    for d in diag.iter_mut() {
        let sym = 0.5 * (d[0][1] + d[1][0]);
        d[0][1] = sym;
        d[1][0] = sym;
    }
    Ok((diag, off))
}

/// Blocks of the H1 Gram matrix on interior nodes.
fn h1_blocks(gs: &[Mat2]) -> (Vec<Mat2>, Vec<Mat2>) {
    let n = gs.len();
    let nf = n as f64;
    let a = nf + 1.0 / (3.0 * nf);
    let b = 1.0 / (6.0 * nf) - nf;
    let diag = (1..n).map(|i| mat_add(&gs[i - 1], &gs[i], 1.0)).map(|g| scale_mat(&g, a)).collect();
    let off = (1..n - 1).map(|i| scale_mat(&gs[i], b)).collect();
    (diag, off)
}

fn scale_mat(m: &Mat2, s: f64) -> Mat2 {
    [[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]]
}

/// Number of negative eigenvalues of H - sigma X, from the block LDL^T
/// pivots; None if a pivot is singular.
fn inertia_below(h: &(Vec<Mat2>, Vec<Mat2>), x: &(Vec<Mat2>, Vec<Mat2>), sigma: f64) -> Option<usize> {
    let n = h.0.len();
    let mut count = 0;
    let mut prev: Option<Mat2> = None;
    for i in 0..n {
        let mut d = mat_add(&h.0[i], &x.0[i], -sigma);
        if let Some(pinv) = prev {
            let u = mat_add(&h.1[i - 1], &x.1[i - 1], -sigma);
            let ut = [[u[0][0], u[1][0]], [u[0][1], u[1][1]]];
            d = mat_add(&d, &mat_mul(&mat_mul(&ut, &pinv), &u), -1.0);
        }
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        if det.abs() <= 1e-300 {
            return None;
        }
        count += if det < 0.0 {
            1
        } else if d[0][0] + d[1][1] < 0.0 {
            2
        } else {
            0
        };
        prev = inv2(&d);
    }
    Some(count)
}

fn block_apply(b: &(Vec<Mat2>, Vec<Mat2>), v: &[Vec2]) -> Vec<Vec2> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut y = mat_vec(&b.0[i], v[i]);
            if i + 1 < n {
                y = add(y, mat_vec(&b.1[i], v[i + 1]));
            }
            if i > 0 {
                let u = b.1[i - 1];
                y = add(
                    y,
                    [u[0][0] * v[i - 1][0] + u[1][0] * v[i - 1][1], u[0][1] * v[i - 1][0] + u[1][1] * v[i - 1][1]],
                );
            }
            y
        })
        .collect()
}

fn pair_vecs(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

/// Lowest eigenpair of the discrete energy Hessian relative to the H1 Gram
/// matrix. Bisection on the block inertia brackets the eigenvalue, inverse
/// iteration just below it gives the mode.
pub fn lowest_hessian_mode(m: &SurfaceMetric, c: &DiscreteCurve) -> Result<(f64, Variation)> {
    let (_, _, gs) = energy_and_gradient(m, c)?;
    let h = discrete_hessian(m, c)?;
    let x = h1_blocks(&gs);
    let count = |s: f64| inertia_below(&h, &x, s).or_else(|| inertia_below(&h, &x, s * (1.0 + 1e-9) + 1e-300));
    let mut lo = -1.0;
    while count(lo).unwrap_or(1) > 0 {
        lo *= 2.0;
        if lo < -1e30 {
            return Err(GeoError::Degenerate("Hessian pencil unbounded below".into()));
        }
    }
    let mut hi = 1.0;
    while count(hi).unwrap_or(0) == 0 {
        hi *= 2.0;
        if hi > 1e30 {
            return Err(GeoError::Degenerate("Hessian pencil has no eigenvalue".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match count(mid) {
            Some(0) => lo = mid,
            _ => hi = mid,
        }
        if hi - lo <= 1e-10 * hi.abs().max(lo.abs()).max(1e-12) {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    let sigma = mu - 1e-6 * mu.abs().max(1e-8);
    let shifted: (Vec<Mat2>, Vec<Mat2>) = (
        h.0.iter().zip(&x.0).map(|(a, b)| mat_add(a, b, -sigma)).collect(),
        h.1.iter().zip(&x.1).map(|(a, b)| mat_add(a, b, -sigma)).collect(),
    );
    let nint = h.0.len();
    // Generic deterministic start vector.
    let mut v: Vec<Vec2> =
        (0..nint).map(|i| [(1.0 + i as f64 * 0.7548).sin(), (2.0 + i as f64 * 0.5698).cos()]).collect();
    for _ in 0..4 {
        let rhs = block_apply(&x, &v);
        let w = solve_block_tridiag(&shifted.0, &shifted.1, &rhs)
            .map_err(|row| GeoError::SingularSystem { row: row + 1 })?;
        let nrm = pair_vecs(&w, &block_apply(&x, &w)).sqrt();
        v = w.iter().map(|a| [a[0] / nrm, a[1] / nrm]).collect();
    }
    let mut full = Vec::with_capacity(nint + 2);
    full.push([0.0; 2]);
    full.extend(v);
    full.push([0.0; 2]);
    Ok((mu, Variation::from_nodes(full)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleTrace {
    pub iterations: usize,
    pub grad_norms: Vec<f64>,
}

/// Min-mode following towards an index-one critical point: the H1 gradient
/// with its component along the lowest Jacobi mode reversed.
pub fn find_saddle(m: &SurfaceMetric, init: &DiscreteCurve, cfg: &FlowConfig) -> Result<(GeodesicReport, SaddleTrace)> {
    let mut curve = init.clone();
    let mut h = cfg.h_saddle;
    let (mut e, mut grad, mut gs) = energy_and_gradient(m, &curve)?;
    let mut p = precondition_with(&gs, &grad)?;
    let mut gn = grad.pair(&p).max(0.0).sqrt();
    let mut mode: Option<Variation> = None;
    let mut norms = vec![gn];
    let mut forced = 0usize;
    for it in 0..cfg.saddle_max_iter {
        let l = length(m, &curve)?;
        if gn < cfg.tol_grad_rel * e / l {
            let mut rep = report_for(m, &curve, cfg)?;
            rep.flow_steps = it;
            return Ok((rep, SaddleTrace { iterations: it, grad_norms: norms }));
        }
        if it % cfg.saddle_refresh.max(1) == 0 || mode.is_none() {
            mode = Some(lowest_hessian_mode(m, &curve)?.1);
        }
        let v = mode.as_ref().unwrap();
        let vv = h1_inner(m, &curve, v, v)?;
        let d = if vv > 0.0 { p.axpy(-2.0 * grad.pair(v) / vv, v) } else { p.clone() };
        // Far from the saddle ||grad E|| need not decrease along d; after a
        // few halvings a short step is taken anyway.
        let h_floor = cfg.h_saddle / 64.0;
        let mut accepted = None;
        let mut fallback = None;
        while h >= h_floor {
            let trial = curve.displaced(&d, h)?;
            if let Ok((et, gt, gst)) = energy_and_gradient(m, &trial) {
                let pt = precondition_with(&gst, &gt)?;
                let gnt = gt.pair(&pt).max(0.0).sqrt();
                if gnt.is_finite() && gnt < gn {
                    accepted = Some((trial, et, gt, gst, pt, gnt));
                    break;
                }
                if gnt.is_finite() {
                    fallback = Some((trial, et, gt, gst, pt, gnt));
                }
            }
            h *= 0.5;
        }
        if accepted.is_none() {
            forced += 1;
            h = h_floor;
            accepted = fallback;
        }
        let Some((trial, et, gt, gst, pt, gnt)) = accepted else {
            return Err(GeoError::Stall { step: h, grad_norm: gn });
        };
        if forced > cfg.saddle_max_iter / 10 {
            return Err(GeoError::Stall { step: h, grad_norm: gn });
        }
        curve = trial;
        e = et;
        grad = gt;
        gs = gst;
        p = pt;
        gn = gnt;
        norms.push(gn);
        h = (h * 1.25).min(cfg.h_saddle);
    }
    let _ = gs;
    Err(GeoError::NonConvergence(format!(
        "saddle search stopped at ||grad E|| = {gn:.3e} after {} iterations",
        cfg.saddle_max_iter
    )))
}
