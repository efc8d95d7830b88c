//! Invariant suites over random curves on every metric family, shared by
//! the command-line self-test and the acceptance run.

use crate::cone::geodesic_shoot;
use crate::curve::{energy, h1_inner, length, reparametrize_constant_speed, DiscreteCurve, Variation};
use crate::error::Result;
use crate::exec::Exec;
use crate::flow::{energy_gradient, gradient_flow, h1_precondition, FlowConfig};
use crate::metric::{ChartPoint, SurfaceMetric};
use crate::minmax::{linear_sweepout, minimize_sweepout, MinMaxConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_6, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestConfig {
    pub curves_per_family: usize,
    pub n_nodes: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { curves_per_family: 50, n_nodes: 32, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    /// Worst measured value and the bound it is held to.
    pub worst: f64,
    pub bound: f64,
    pub cases: usize,
}

impl SuiteResult {
    fn new(name: &str, worst: f64, bound: f64, cases: usize) -> Self {
        SuiteResult { name: name.to_string(), pass: worst <= bound, worst, bound, cases }
    }
}

/// One metric of each family with the default test parameters.
pub fn families() -> Vec<(&'static str, SurfaceMetric)> {
    vec![
        ("cone", SurfaceMetric::cone(FRAC_PI_6).unwrap()),
        ("flat", SurfaceMetric::flat()),
        ("profile", SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap()),
        ("perturbed", SurfaceMetric::perturbed(FRAC_PI_6, 1.0, 1.0, [0.2, 0.1, 0.05]).unwrap()),
    ]
}

/// Smooth random curve between random points at radius 2..6, kept at
/// radius >= 0.5 so that it stays clear of a cone vertex. The angle is
/// monotone, so the curve has no hairpins.
pub fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> DiscreteCurve {
    let r0 = rng.gen_range(2.0..6.0);
    let r1 = rng.gen_range(2.0..6.0);
    let phi0 = rng.gen_range(-PI..PI);
    let dphi = rng.gen_range(1.0..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let modes: Vec<(f64, f64)> =
        (1..=3).map(|k| (rng.gen_range(-0.3..0.3) / k as f64, rng.gen_range(-0.1..0.1) / k as f64)).collect();
    DiscreteCurve::from_fn(n, |t| {
        let mut r = r0 + (r1 - r0) * t;
        let mut phi = phi0 + dphi * t;
        for (k, (a, b)) in modes.iter().enumerate() {
            let s = ((k + 1) as f64 * PI * t).sin();
            r += a * r0 * s;
            phi += b * s;
        }
        let r = r.max(0.5);
        [r * phi.cos(), r * phi.sin()]
    })
    .unwrap()
}

fn curves(cfg: &SelftestConfig, salt: u64) -> Vec<(&'static str, SurfaceMetric, Vec<DiscreteCurve>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    families()
        .into_iter()
        .map(|(name, m)| (name, m, (0..cfg.curves_per_family).map(|_| random_curve(&mut rng, cfg.n_nodes)).collect()))
        .collect()
}

/// Max over curves of max_i |g_fd - g| / max_i |g| with central differences.
pub fn gradient_suite(cfg: &SelftestConfig) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (_, m, cs) in curves(cfg, 1) {
        for c in cs {
            let g = energy_gradient(&m, &c)?;
            let scale = g.max_abs().max(1e-300);
            let h = 1e-5 * length(&m, &c)? / c.segments() as f64;
            let mut err: f64 = 0.0;
            for i in 1..c.segments() {
                for k in 0..2 {
                    let mut plus = c.nodes().to_vec();
                    let mut minus = c.nodes().to_vec();
                    plus[i][k] += h;
                    minus[i][k] -= h;
                    let fd = (energy(&m, &DiscreteCurve::new(plus)?)? - energy(&m, &DiscreteCurve::new(minus)?)?)
                        / (2.0 * h);
                    err = err.max((fd - g.values()[i][k]).abs());
                }
            }
            worst = worst.max(err / scale);
            cases += 1;
        }
    }
    Ok(SuiteResult::new("gradient-fd", worst, 1e-6, cases))
}

/// h1_inner(P grad, V) against grad . V for random V.
pub fn pairing_suite(cfg: &SelftestConfig) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (_, m, cs) in curves(cfg, 2) {
        for c in cs {
            let g = energy_gradient(&m, &c)?;
            let p = h1_precondition(&m, &c, &g)?;
            let v = Variation::from_nodes(
                (0..c.nodes().len()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect(),
            );
            let lhs = h1_inner(&m, &c, &p, &v)?;
            let rhs = g.pair(&v);
            let scale = h1_inner(&m, &c, &p, &p)?.sqrt() * h1_inner(&m, &c, &v, &v)?.sqrt();
            worst = worst.max((lhs - rhs).abs() / scale.max(1e-300));
            cases += 1;
        }
    }
    Ok(SuiteResult::new("preconditioner-pairing", worst, 1e-10, cases))
}

/// L^2 <= E on random curves, and E = L^2 after constant-speed
/// reparametrization. Reports the worst relative violation of either.
pub fn reparam_suite(cfg: &SelftestConfig) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (_, m, cs) in curves(cfg, 3) {
        for c in cs {
            let (e, l) = (energy(&m, &c)?, length(&m, &c)?);
            worst = worst.max((l * l - e) / e);
            let r = reparametrize_constant_speed(&m, &c)?;
            let (e2, l2) = (energy(&m, &r)?, length(&m, &r)?);
            worst = worst.max((e2 - l2 * l2).abs() / e2);
            cases += 1;
        }
    }
    Ok(SuiteResult::new("length-energy", worst, 1e-10, cases))
}

/// Energy-drop identity residual of short flows from random curves.
pub fn identity_suite(cfg: &SelftestConfig) -> Result<SuiteResult> {
    let fcfg = FlowConfig::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (_, m, cs) in curves(cfg, 4) {
        for c in cs.iter().take(cfg.curves_per_family.div_ceil(5)) {
            let st = gradient_flow(&m, c, 2.0, 0.0, &fcfg)?;
            worst = worst.max(st.identity_residual());
            cases += 1;
        }
    }
    Ok(SuiteResult::new("energy-identity", worst, 0.05, cases))
}

/// Sequential and parallel sweepout minimization give identical bits.
pub fn determinism_suite(cfg: &SelftestConfig) -> Result<SuiteResult> {
    let m = SurfaceMetric::profile(FRAC_PI_6, 1.0)?;
    let a = DiscreteCurve::coordinate_arc(4.0, 0.0, PI, cfg.n_nodes)?;
    let b = DiscreteCurve::coordinate_arc(4.0, 0.0, -PI, cfg.n_nodes)?;
    let nodes_b = {
        let mut v = b.nodes().to_vec();
        v[0] = a.start();
        *v.last_mut().unwrap() = a.end();
        v
    };
    let h = linear_sweepout(&a, &DiscreteCurve::new(nodes_b)?, 6)?;
    let base = MinMaxConfig { n_nodes: cfg.n_nodes, rounds: 2, tau_round: 0.2, ..MinMaxConfig::default() };
    let seq = minimize_sweepout(&m, &h, 4.0, &MinMaxConfig { exec: Exec::Sequential, ..base })?;
    let par = minimize_sweepout(&m, &h, 4.0, &MinMaxConfig { exec: Exec::Parallel, ..base })?;
    let same = seq.0 == par.0 && seq.1 == par.1;
    Ok(SuiteResult::new("parallel-determinism", if same { 0.0 } else { 1.0 }, 0.0, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClairautCheck {
    /// Max relative drift of J per unit arclength at the given step.
    pub drift_per_length: f64,
    /// log2 of the endpoint error ratio between steps 2h_c and h_c.
    pub order: f64,
}

/// Clairaut drift at step `h` and the observed RK4 order on a fixed shot.
pub fn clairaut_check(m: &SurfaceMetric, h: f64) -> Result<ClairautCheck> {
    let p = ChartPoint::polar(3.0, 0.2);
    let v = [-0.3, 0.25];
    let span = 6.0;
    let shot = geodesic_shoot(m, &p, v, span, h)?;
    let drift = shot.clairaut_drift().unwrap_or(0.0) / shot.arclength();
    let end = |h: f64| -> Result<[f64; 2]> { Ok(geodesic_shoot(m, &p, v, span, h)?.samples.last().unwrap().x) };
    let reference = end(0.04 / 16.0)?;
    let err = |x: [f64; 2]| (x[0] - reference[0]).hypot(x[1] - reference[1]);
    let (e1, e2) = (err(end(0.08)?), err(end(0.04)?));
    Ok(ClairautCheck { drift_per_length: drift, order: (e1 / e2).log2() })
}

pub fn clairaut_suite(h: f64) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    for (name, m) in families().into_iter().filter(|(_, m)| m.is_rotational()) {
        let c = clairaut_check(&m, h)?;
        out.push(SuiteResult::new(&format!("clairaut-drift-{name}"), c.drift_per_length, 1e-8, 1));
        if name != "flat" {
            // Straight lines are integrated exactly, so the flat order is undefined.
            out.push(SuiteResult::new(&format!("rk4-order-{name}"), -c.order, -3.8, 1));
        }
    }
    Ok(out)
}

/// Every suite, in a fixed order; errors count as failures.
type Suite = fn(&SelftestConfig) -> Result<SuiteResult>;

pub fn run_all(cfg: &SelftestConfig) -> Vec<SuiteResult> {
    let mut out = Vec::new();
    let single: [(&str, Suite); 5] = [
        ("gradient-fd", gradient_suite),
        ("preconditioner-pairing", pairing_suite),
        ("length-energy", reparam_suite),
        ("energy-identity", identity_suite),
        ("parallel-determinism", determinism_suite),
    ];
    for (name, f) in single {
        out.push(f(cfg).unwrap_or_else(|_| SuiteResult {
            name: name.into(),
            pass: false,
            worst: f64::NAN,
            bound: 0.0,
            cases: 0,
        }));
    }
    match clairaut_suite(1e-3) {
        Ok(v) => out.extend(v),
        Err(_) => out.push(SuiteResult { name: "clairaut".into(), pass: false, worst: f64::NAN, bound: 0.0, cases: 0 }),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::set_gradient_corruption;

    #[test]
    fn random_curves_avoid_the_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = random_curve(&mut rng, 32);
            assert!(c.nodes().iter().all(|x| x[0].hypot(x[1]) >= 0.5 - 1e-12));
        }
    }

    #[test]
    fn small_suites_pass() {
        let cfg = SelftestConfig { curves_per_family: 5, n_nodes: 16, seed: 1 };
        for s in [gradient_suite(&cfg), pairing_suite(&cfg), reparam_suite(&cfg)] {
            let s = s.unwrap();
            assert!(s.pass, "{s:?}");
        }
    }

    #[test]
    fn corrupted_gradient_fails_the_fd_suite() {
        let cfg = SelftestConfig { curves_per_family: 2, n_nodes: 16, seed: 1 };
        set_gradient_corruption(true);
        let s = gradient_suite(&cfg);
        set_gradient_corruption(false);
        assert!(!s.unwrap().pass);
    }
}
