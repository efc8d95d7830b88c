//! Two stable minimizers, sweepouts between them, slice-wise minimization
//! and extraction of the mountain-pass geodesic.

use crate::asymptotics::{blow_down_compare, BlowDown};
use crate::curve::{
    default_embed_tol, disjoint_except_endpoints, energy, h1_distance, is_embedded, reparametrize_constant_speed,
    support_distance, DiscreteCurve,
};
use crate::error::{GeoError, Result};
use crate::exec::{self, Exec};
use crate::flow::{find_geodesic, find_saddle, gradient_flow, FlowConfig, GeodesicReport};
use crate::linalg::{dot, lerp, sub, Vec2};
use crate::metric::SurfaceMetric;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinMaxConfig {
    /// Segments per sweepout slice and for the minimizers.
    pub n_nodes: usize,
    /// Segments used to polish the mountain-pass geodesic; the index is
    /// also checked at twice this value.
    pub n_polish: usize,
    /// Largest H1 distance between neighbouring slices, relative to r0.
    pub budget_rel: f64,
    /// Flow time applied to every interior slice per round.
    pub tau_round: f64,
    pub rounds: usize,
    pub max_slices: usize,
    /// Slices per stage of the explicit sweepout; stage (iii) uses the
    /// next odd number of intervals.
    pub stage_slices: usize,
    /// rho_minus / rho_plus for the explicit sweepout.
    pub rho_minus_rel: f64,
    /// Support distance below collapse_rel * r0 counts as coinciding.
    pub collapse_rel: f64,
    /// Relative Lambda decrease per round below which the argmax is stationary.
    pub stationary_rel: f64,
    pub flow: FlowConfig,
    pub exec: Exec,
}

impl Default for MinMaxConfig {
    fn default() -> Self {
        MinMaxConfig {
            n_nodes: 128,
            n_polish: 256,
            budget_rel: 0.05,
            tau_round: 0.5,
            rounds: 12,
            max_slices: 3000,
            stage_slices: 12,
            rho_minus_rel: 0.25,
            collapse_rel: 1e-3,
            stationary_rel: 1e-3,
            flow: FlowConfig::default(),
            exec: Exec::Parallel,
        }
    }
}

/// Antipodal endpoints (r0, phi0) and (r0, phi0 + pi) in Cartesian form.
pub fn antipodal_endpoints(r0: f64, phi0: f64) -> (Vec2, Vec2) {
    let p = [r0 * phi0.cos(), r0 * phi0.sin()];
    (p, [-p[0], -p[1]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimizers {
    pub gamma1: GeodesicReport,
    pub gamma2: GeodesicReport,
    pub disjoint: bool,
    pub separation: f64,
    pub blow_down1: BlowDown,
    pub blow_down2: BlowDown,
    pub identity_residuals: [f64; 2],
}

/// Flow the upper and lower coordinate half-circles at r0 to critical points.
pub fn two_minimizers(m: &SurfaceMetric, r0: f64, phi0: f64, cfg: &MinMaxConfig) -> Result<Minimizers> {
    if !(r0 > 0.0) {
        return Err(GeoError::InvalidInput(format!("r0 = {r0} must be > 0")));
    }
    let (p, q) = antipodal_endpoints(r0, phi0);
    let mut arcs = [
        DiscreteCurve::coordinate_arc(r0, phi0, phi0 + PI, cfg.n_nodes)?,
        DiscreteCurve::coordinate_arc(r0, phi0, phi0 - PI, cfg.n_nodes)?,
    ];
    // Pin the endpoints bitwise so both curves share them.
    for a in arcs.iter_mut() {
        let mut nodes = a.nodes().to_vec();
        nodes[0] = p;
        *nodes.last_mut().unwrap() = q;
        *a = DiscreteCurve::new(nodes)?;
    }
    let flows = exec::map(cfg.exec, &arcs, |a| find_geodesic(m, p, q, a, &cfg.flow));
    let mut it = flows.into_iter();
    let (g1, s1) = it.next().unwrap()?;
    let (g2, s2) = it.next().unwrap()?;
    let alpha = m.alpha();
    let separation = support_distance(&g1.curve, &g2.curve, alpha);
    if separation < cfg.collapse_rel * r0 {
        return Err(GeoError::Coincidence { distance: separation });
    }
    let tol = default_embed_tol(&g1.curve).max(default_embed_tol(&g2.curve));
    Ok(Minimizers {
        disjoint: disjoint_except_endpoints(&g1.curve, &g2.curve, tol),
        separation,
        blow_down1: blow_down_compare(&g1.curve, r0, alpha, phi0),
        blow_down2: blow_down_compare(&g2.curve, r0, alpha, phi0),
        identity_residuals: [s1.identity_residual(), s2.identity_residual()],
        gamma1: g1,
        gamma2: g2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweepout {
    pub slices: Vec<DiscreteCurve>,
    /// Sweep parameter of each slice, increasing from 0 to 1.
    pub params: Vec<f64>,
}

impl Sweepout {
    pub fn new(slices: Vec<DiscreteCurve>, params: Vec<f64>) -> Result<Self> {
        if slices.len() < 2 || slices.len() != params.len() {
            return Err(GeoError::InvalidInput("sweepout needs >= 2 slices with matching parameters".into()));
        }
        let n = slices[0].nodes().len();
        if let Some(bad) = slices.iter().find(|s| s.nodes().len() != n) {
            return Err(GeoError::SizeMismatch { expected: n, got: bad.nodes().len() });
        }
        Ok(Sweepout { slices, params })
    }

    pub fn energies(&self, m: &SurfaceMetric) -> Result<Vec<f64>> {
        self.slices.iter().map(|s| energy(m, s)).collect()
    }

    /// (Lambda, argmax) over all slices.
    pub fn max_energy(&self, m: &SurfaceMetric) -> Result<(f64, usize)> {
        let e = self.energies(m)?;
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for (i, v) in e.iter().enumerate() {
            if *v > best {
                best = *v;
                arg = i;
            }
        }
        Ok((best, arg))
    }

    pub fn max_gap(&self, m: &SurfaceMetric) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.slices.windows(2) {
            worst = worst.max(h1_distance(m, &w[0], &w[1])?);
        }
        Ok(worst)
    }

    /// Multi-curve CSV: slice, s, t, chart, r_or_u, phi_or_v.
    pub fn to_csv(&self, r_patch: f64) -> String {
        let mut out = String::from("slice,s,t,chart,r_or_u,phi_or_v\n");
        for (j, (c, s)) in self.slices.iter().zip(&self.params).enumerate() {
            for line in c.to_csv(r_patch).lines().skip(1) {
                out.push_str(&format!("{j},{s},{line}\n"));
            }
        }
        out
    }
}

/// Node-wise interpolation between two curves with `m` intervals.
pub fn linear_sweepout(a: &DiscreteCurve, b: &DiscreteCurve, m: usize) -> Result<Sweepout> {
    if a.nodes().len() != b.nodes().len() {
        return Err(GeoError::SizeMismatch { expected: a.nodes().len(), got: b.nodes().len() });
    }
    let mut slices = vec![a.clone()];
    let mut params = vec![0.0];
    for j in 1..m {
        let s = j as f64 / m as f64;
        slices.push(interpolate(a, b, s)?);
        params.push(s);
    }
    slices.push(b.clone());
    params.push(1.0);
    Sweepout::new(slices, params)
}

fn interpolate(a: &DiscreteCurve, b: &DiscreteCurve, s: f64) -> Result<DiscreteCurve> {
    let n = a.nodes().len();
    let mut nodes: Vec<Vec2> = a.nodes().iter().zip(b.nodes()).map(|(x, y)| lerp(*x, *y, s)).collect();
    // Endpoints are shared; copy them bitwise.
    nodes[0] = a.nodes()[0];
    nodes[n - 1] = a.nodes()[n - 1];
    DiscreteCurve::new(nodes)
}

/// Wedge frame of the explicit sweepout: p at theta = pi sin(alpha), q on the
/// glued edge.
#[derive(Debug, Clone, Copy)]
struct Wedge {
    s: f64,
    phi0: f64,
}

impl Wedge {
    fn cart(&self, rho: f64, theta: f64) -> Vec2 {
        let phi = self.phi0 + (theta - PI * self.s) / self.s;
        [rho * phi.cos(), rho * phi.sin()]
    }

    /// Straight chord from (rho, pi s) to the glued edge: `upper` runs to
    /// theta = 2 pi s, the other to theta = 0.
    fn chord(&self, rho: f64, t: f64, upper: bool) -> Vec2 {
        let s = self.s;
        let ratio = (0.5 * PI * (1.0 - s)).sin() / (0.5 * PI * (1.0 + (1.0 - 2.0 * t) * s)).sin();
        let theta = if upper { (1.0 + t) * PI * s } else { (1.0 - t) * PI * s };
        self.cart(rho * ratio, theta)
    }

    /// Radial wedge coordinates of a Cartesian point, theta lifted near `hint`.
    fn polar(&self, x: Vec2, hint: f64) -> (f64, f64) {
        let rho = x[0].hypot(x[1]);
        let phi = crate::metric::lift_angle(x[1].atan2(x[0]), self.phi0 + (hint - PI * self.s) / self.s);
        (rho, PI * self.s + (phi - self.phi0) * self.s)
    }
}

/// Dense samples of `f` on [0, 1].
fn dense(f: impl Fn(f64) -> Vec2, k: usize) -> Vec<Vec2> {
    (0..=k).map(|i| f(i as f64 / k as f64)).collect()
}

/// Resample a dense polyline at n equal metric-arclength steps, two passes of
/// the [1/4, 1/2, 1/4] stencil on interior nodes, then constant speed.
fn finish_slice(m: &SurfaceMetric, dense_pts: &[Vec2], n: usize, p: Vec2, q: Vec2) -> Result<DiscreteCurve> {
    let mut pts: Vec<Vec2> = Vec::with_capacity(dense_pts.len());
    for x in dense_pts {
        if pts.last().is_none_or(|y: &Vec2| (x[0] - y[0]).hypot(x[1] - y[1]) > 0.0) {
            pts.push(*x);
        }
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        let g = m.metric_cart_value(lerp(w[0], w[1], 0.5))?;
        let d = sub(w[1], w[0]);
        cum.push(cum.last().unwrap() + crate::linalg::quad(&g, d, d).sqrt());
    }
    let total = *cum.last().unwrap();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut k = 0;
    for j in 0..=n {
        let target = total * j as f64 / n as f64;
        while k + 2 < cum.len() && cum[k + 1] < target {
            k += 1;
        }
        let span = cum[k + 1] - cum[k];
        let w = if span > 0.0 { ((target - cum[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        nodes.push(lerp(pts[k], pts[k + 1], w));
    }
    for _ in 0..2 {
        let prev = nodes.clone();
        for i in 1..n {
            for c in 0..2 {
                nodes[i][c] = 0.25 * prev[i - 1][c] + 0.5 * prev[i][c] + 0.25 * prev[i + 1][c];
            }
        }
    }
    nodes[0] = p;
    nodes[n] = q;
    let mut c = reparametrize_constant_speed(m, &DiscreteCurve::new(nodes)?)?;
    let mut fixed = c.nodes().to_vec();
    fixed[0] = p;
    fixed[n] = q;
    c = DiscreteCurve::new(fixed)?;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Interpolate1,
    Shrink1,
    InnerSwap,
    Shrink2,
    Interpolate2,
}

/// Discretization of the five-stage homotopy from gamma1 to gamma2 in
/// wedge coordinates, with outer radius rho_plus = r0 and inner radius
/// rho_minus.
pub fn explicit_sweepout(
    m: &SurfaceMetric,
    gamma1: &DiscreteCurve,
    gamma2: &DiscreteCurve,
    rho_plus: f64,
    rho_minus: f64,
    phi0: f64,
    cfg: &MinMaxConfig,
) -> Result<(Sweepout, Vec<Stage>)> {
    if !(rho_minus > 0.0 && rho_plus > 2.0 * rho_minus) {
        return Err(GeoError::Regime(format!("need rho_plus > 2 rho_minus, got {rho_plus} and {rho_minus}")));
    }
    let n = cfg.n_nodes;
    if gamma1.segments() != n || gamma2.segments() != n {
        return Err(GeoError::SizeMismatch { expected: n + 1, got: gamma1.nodes().len() });
    }
    let w = Wedge { s: m.sin_alpha(), phi0 };
    let p = gamma1.start();
    let q = gamma1.end();
    let k = cfg.stage_slices.max(2);
    let k3 = 2 * k + 1;
    let dense_k = 8 * n;
    let check = |upper: bool| -> Result<DiscreteCurve> { DiscreteCurve::from_fn(n, |t| w.chord(rho_plus, t, upper)) };
    let check1 = check(true)?;
    let check2 = check(false)?;

    // Node-wise interpolation in wedge coordinates.
    let wedge_interp = |a: &DiscreteCurve, b: &DiscreteCurve, s: f64| -> Result<DiscreteCurve> {
        let mut hint_a = PI * w.s;
        let mut hint_b = PI * w.s;
        let mut nodes = Vec::with_capacity(n + 1);
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            let (ra, ta) = w.polar(*x, hint_a);
            let (rb, tb) = w.polar(*y, hint_b);
            hint_a = ta;
            hint_b = tb;
            nodes.push(w.cart((1.0 - s) * ra + s * rb, (1.0 - s) * ta + s * tb));
        }
        nodes[0] = p;
        nodes[n] = q;
        let c = DiscreteCurve::new(nodes)?;
        let mut r = reparametrize_constant_speed(m, &c)?.nodes().to_vec();
        r[0] = p;
        r[n] = q;
        DiscreteCurve::new(r)
    };

    // Concatenation radial-down * chord * radial-up at inner radius rho_s.
    let shrink = |sigma: f64, upper: bool| -> Result<DiscreteCurve> {
        let rho_s = (1.0 - sigma) * rho_plus + sigma * rho_minus;
        let radial = rho_plus - rho_s;
        let chord_len = 2.0 * rho_s * (0.5 * PI * w.s).sin();
        let total = 2.0 * radial + chord_len;
        let kr = ((dense_k as f64) * radial / total).ceil() as usize;
        let kc = ((dense_k as f64) * chord_len / total).ceil().max(8.0) as usize;
        let end_theta = if upper { 2.0 * PI * w.s } else { 0.0 };
        let mut pts = Vec::new();
        if kr > 0 {
            pts.extend(dense(|t| w.cart(rho_plus - t * radial, PI * w.s), kr));
        }
        pts.extend(dense(|t| w.chord(rho_s, t, upper), kc));
        if kr > 0 {
            pts.extend(dense(|t| w.cart(rho_s + t * radial, end_theta), kr));
        }
        finish_slice(m, &pts, n, p, q)
    };

    // Inner swap: rotate the inner chord about the p-q line.
    let e = [phi0.cos(), phi0.sin()];
    let nrm = [-phi0.sin(), phi0.cos()];
    let swap = |sigma: f64| -> Result<DiscreteCurve> {
        let radial = rho_plus - rho_minus;
        let chord_len = 2.0 * rho_minus * (0.5 * PI * w.s).sin();
        let total = 2.0 * radial + chord_len;
        let kr = ((dense_k as f64) * radial / total).ceil() as usize;
        let kc = ((dense_k as f64) * chord_len / total).ceil().max(8.0) as usize;
        let c = (PI * sigma).cos();
        let mut pts = dense(|t| w.cart(rho_plus - t * radial, PI * w.s), kr);
        pts.extend(dense(
            |t| {
                let x = w.chord(rho_minus, t, true);
                let (a, b) = (dot(x, e), dot(x, nrm));
                [a * e[0] + c * b * nrm[0], a * e[1] + c * b * nrm[1]]
            },
            kc,
        ));
        pts.extend(dense(|t| w.cart(rho_minus + t * radial, 0.0), kr));
        finish_slice(m, &pts, n, p, q)
    };

    let mut slices = vec![gamma1.clone()];
    let mut params = vec![0.0];
    let mut stages = vec![Stage::Interpolate1];
    let mut push = |c: DiscreteCurve, s: f64, st: Stage| {
        slices.push(c);
        params.push(s);
        stages.push(st);
    };
    for j in 1..=k {
        let u = j as f64 / k as f64;
        push(wedge_interp(gamma1, &check1, u)?, u / 8.0, Stage::Interpolate1);
    }
    for j in 1..=k {
        let u = j as f64 / k as f64;
        push(shrink(u, true)?, 0.125 + u / 8.0, Stage::Shrink1);
    }
    for j in 1..k3 {
        let u = j as f64 / k3 as f64;
        push(swap(u)?, 0.25 + u / 2.0, Stage::InnerSwap);
    }
    for j in 0..k {
        let u = j as f64 / k as f64;
        push(shrink(1.0 - u, false)?, 0.75 + u / 8.0, Stage::Shrink2);
    }
    for j in 0..k {
        let u = j as f64 / k as f64;
        push(wedge_interp(&check2, gamma2, u)?, 0.875 + u / 8.0, Stage::Interpolate2);
    }
    push(gamma2.clone(), 1.0, Stage::Interpolate2);
    Ok((Sweepout::new(slices, params)?, stages))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundInfo {
    pub round: usize,
    /// Maximum slice energy of this round's sweepout.
    pub lambda: f64,
    /// Smallest maximum so far.
    pub best: f64,
    pub argmax: usize,
    pub slices: usize,
    pub max_gap: f64,
    pub max_identity_residual: f64,
}

fn enforce_budget(m: &SurfaceMetric, h: &Sweepout, budget: f64, max_slices: usize) -> Result<Sweepout> {
    let mut slices = vec![h.slices[0].clone()];
    let mut params = vec![h.params[0]];
    for j in 1..h.slices.len() {
        let (a, b) = (&h.slices[j - 1], &h.slices[j]);
        let d = h1_distance(m, a, b)?;
        let extra = if d > budget { (d / budget).ceil() as usize - 1 } else { 0 };
        for i in 1..=extra {
            let u = i as f64 / (extra + 1) as f64;
            slices.push(interpolate(a, b, u)?);
            params.push(h.params[j - 1] + u * (h.params[j] - h.params[j - 1]));
        }
        slices.push(b.clone());
        params.push(h.params[j]);
        if slices.len() > max_slices {
            return Err(GeoError::BudgetExplosion { slices: slices.len(), max: max_slices });
        }
    }
    Sweepout::new(slices, params)
}

/// Flow every interior slice for `tau`; endpoint slices are left untouched.
fn flow_interior(m: &SurfaceMetric, h: &Sweepout, tau: f64, cfg: &MinMaxConfig) -> Result<(Sweepout, f64)> {
    let last = h.slices.len() - 1;
    let out = exec::map_indexed(cfg.exec, &h.slices, |j, c| {
        if j == 0 || j == last {
            return Ok((c.clone(), 0.0));
        }
        match gradient_flow(m, c, tau, 0.0, &cfg.flow) {
            Ok(st) => Ok((st.curve.clone(), st.identity_residual())),
            // A slice that cannot descend is already at a critical point.
            Err(GeoError::Stall { .. }) => Ok((c.clone(), 0.0)),
            Err(e) => Err(e),
        }
    });
    let mut slices = Vec::with_capacity(out.len());
    let mut worst: f64 = 0.0;
    for r in out {
        let (c, res) = r?;
        worst = worst.max(res);
        slices.push(c);
    }
    Ok((Sweepout { slices, params: h.params.clone() }, worst))
}

/// Rounds of (flow each interior slice, insert slices to the budget,
/// measure Lambda), with a last round refined to three times the slice
/// density around the argmax. Every round yields a sweepout within the
/// budget; the one with the smallest maximum is returned, so the reported
/// Lambda is non-increasing.
pub fn minimize_sweepout(
    m: &SurfaceMetric,
    h: &Sweepout,
    r0: f64,
    cfg: &MinMaxConfig,
) -> Result<(Sweepout, Vec<RoundInfo>)> {
    minimize_sweepout_observed(m, h, r0, cfg, |_, _| {})
}

/// `minimize_sweepout` calling `observe` with every round's sweepout.
pub fn minimize_sweepout_observed(
    m: &SurfaceMetric,
    h: &Sweepout,
    r0: f64,
    cfg: &MinMaxConfig,
    mut observe: impl FnMut(&RoundInfo, &Sweepout),
) -> Result<(Sweepout, Vec<RoundInfo>)> {
    let budget = cfg.budget_rel * r0;
    let mut cur = enforce_budget(m, h, budget, cfg.max_slices)?;
    let (l0, a0) = cur.max_energy(m)?;
    let mut info = vec![RoundInfo {
        round: 0,
        lambda: l0,
        best: l0,
        argmax: a0,
        slices: cur.slices.len(),
        max_gap: cur.max_gap(m)?,
        max_identity_residual: 0.0,
    }];
    observe(&info[0], &cur);
    let mut best = (l0, cur.clone());
    for round in 1..=cfg.rounds + 1 {
        if round == cfg.rounds + 1 {
            cur = refine_around_argmax(m, &best.1)?;
        }
        let (next, worst) = flow_interior(m, &cur, cfg.tau_round, cfg)?;
        cur = enforce_budget(m, &next, budget, cfg.max_slices)?;
        let (lam, arg) = cur.max_energy(m)?;
        if lam < best.0 {
            best = (lam, cur.clone());
        }
        info.push(RoundInfo {
            round,
            lambda: lam,
            best: best.0,
            argmax: arg,
            slices: cur.slices.len(),
            max_gap: cur.max_gap(m)?,
            max_identity_residual: worst,
        });
        observe(info.last().unwrap(), &cur);
    }
    Ok((best.1, info))
}

fn refine_around_argmax(m: &SurfaceMetric, h: &Sweepout) -> Result<Sweepout> {
    let (_, arg) = h.max_energy(m)?;
    let lo = arg.saturating_sub(1);
    let hi = (arg + 1).min(h.slices.len() - 1);
    let mut slices = Vec::new();
    let mut params = Vec::new();
    for j in 0..h.slices.len() {
        if j > lo && j <= hi {
            let (a, b) = (&h.slices[j - 1], &h.slices[j]);
            for u in [1.0 / 3.0, 2.0 / 3.0] {
                slices.push(interpolate(a, b, u)?);
                params.push(h.params[j - 1] + u * (h.params[j] - h.params[j - 1]));
            }
        }
        slices.push(h.slices[j].clone());
        params.push(h.params[j]);
    }
    Sweepout::new(slices, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxResult {
    pub lambda: f64,
    pub ratio: f64,
    pub argmax: usize,
    pub gamma3: Option<GeodesicReport>,
    /// Index of gamma3 re-polished at twice the node count.
    pub index_doubled: Option<usize>,
    pub gap: bool,
    pub gap_margin: f64,
    pub gap_margin_rel: f64,
    pub minimizer_energies: [f64; 2],
    /// L(gamma1), L(gamma2), L(gamma3) (argmax slice length when singular).
    pub lengths: [f64; 3],
    pub embedded: [bool; 3],
    /// True on metrics with a singular vertex, where no smooth mountain-pass
    /// geodesic exists and gamma3 is not polished.
    pub singular: bool,
    pub stationary: bool,
    pub blow_down3: BlowDown,
    pub separation: [f64; 2],
}

/// Polish the argmax slice into the mountain-pass geodesic and certify the gap.
pub fn extract_minmax(
    m: &SurfaceMetric,
    h: &Sweepout,
    rounds: &[RoundInfo],
    mins: &Minimizers,
    r0: f64,
    phi0: f64,
    cfg: &MinMaxConfig,
) -> Result<MinMaxResult> {
    let (lambda, argmax) = h.max_energy(m)?;
    let e12 = [mins.gamma1.energy, mins.gamma2.energy];
    let emax = e12[0].max(e12[1]);
    let stationary = match rounds {
        [.., a, b] => (a.best - b.best).abs() <= cfg.stationary_rel * b.best.abs(),
        _ => false,
    };
    let alpha = m.alpha();
    let slice = &h.slices[argmax];
    let gap_margin = lambda - emax;
    let base =
        |gamma3: Option<GeodesicReport>, l3: f64, emb3: bool, bd: BlowDown, sep: [f64; 2], idx2: Option<usize>| {
            MinMaxResult {
                lambda,
                ratio: lambda / (r0 * r0),
                argmax,
                gamma3,
                index_doubled: idx2,
                gap: gap_margin > 0.0,
                gap_margin,
                gap_margin_rel: gap_margin / (r0 * r0),
                minimizer_energies: e12,
                lengths: [mins.gamma1.length, mins.gamma2.length, l3],
                embedded: [mins.gamma1.embedded, mins.gamma2.embedded, emb3],
                singular: m.has_vertex(),
                stationary,
                blow_down3: bd,
                separation: sep,
            }
        };
    if m.has_vertex() {
        let l3 = crate::curve::length(m, slice)?;
        let emb = is_embedded(slice, default_embed_tol(slice)).embedded;
        let sep =
            [support_distance(slice, &mins.gamma1.curve, alpha), support_distance(slice, &mins.gamma2.curve, alpha)];
        return Ok(base(None, l3, emb, blow_down_compare(slice, r0, alpha, phi0), sep, None));
    }
    let start = reparametrize_constant_speed(m, &slice.resampled(cfg.n_polish)?)?;
    let (rep, _) = find_saddle(m, &start, &cfg.flow)?;
    let sep = [
        support_distance(&rep.curve, &mins.gamma1.curve, alpha),
        support_distance(&rep.curve, &mins.gamma2.curve, alpha),
    ];
    for (which, d) in ["gamma1", "gamma2"].iter().zip(sep) {
        if d < cfg.collapse_rel * r0 {
            return Err(GeoError::Collapse { which: which.to_string(), distance: d });
        }
    }
    let fine = reparametrize_constant_speed(m, &rep.curve.resampled(2 * cfg.n_polish)?)?;
    let idx2 = find_saddle(m, &fine, &cfg.flow).map(|(r, _)| r.index).ok();
    let bd = blow_down_compare(&rep.curve, r0, alpha, phi0);
    let (l3, emb3) = (rep.length, rep.embedded);
    Ok(base(Some(rep), l3, emb3, bd, sep, idx2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub r0: f64,
    pub phi0: f64,
    pub minimizers: Minimizers,
    pub rounds: Vec<RoundInfo>,
    pub result: MinMaxResult,
    #[serde(skip)]
    pub sweepout: Option<Sweepout>,
}

/// Minimizers, explicit sweepout, minimization rounds and extraction at
/// endpoints (r0, phi0), (r0, phi0 + pi).
pub fn run_pipeline(m: &SurfaceMetric, r0: f64, phi0: f64, cfg: &MinMaxConfig) -> Result<PipelineResult> {
    run_pipeline_observed(m, r0, phi0, cfg, |_, _| {})
}

/// `run_pipeline` calling `observe` with every minimization round.
pub fn run_pipeline_observed(
    m: &SurfaceMetric,
    r0: f64,
    phi0: f64,
    cfg: &MinMaxConfig,
    observe: impl FnMut(&RoundInfo, &Sweepout),
) -> Result<PipelineResult> {
    let mins = two_minimizers(m, r0, phi0, cfg)?;
    let (h, _) = explicit_sweepout(m, &mins.gamma1.curve, &mins.gamma2.curve, r0, cfg.rho_minus_rel * r0, phi0, cfg)?;
    let (h, rounds) = minimize_sweepout_observed(m, &h, r0, cfg, observe)?;
    let result = extract_minmax(m, &h, &rounds, &mins, r0, phi0, cfg)?;
    Ok(PipelineResult { r0, phi0, minimizers: mins, rounds, result, sweepout: Some(h) })
}
