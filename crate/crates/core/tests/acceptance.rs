//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use conegeo::asymptotics::{
    distinctness_experiment, drift_run, gauss_bonnet_disk, line_candidate, mass, DistinctnessConfig, LineConfig,
    QuadGrid,
};
use conegeo::cone::ConeModel;
use conegeo::curve::DiscreteCurve;
use conegeo::flow::{find_geodesic, FlowConfig};
use conegeo::minmax::{antipodal_endpoints, run_pipeline, MinMaxConfig, PipelineResult};
use conegeo::selftest::{clairaut_suite, run_all, SelftestConfig};
use conegeo::SurfaceMetric;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

const LENGTH_TOL: f64 = 1e-3;
const LAMBDA_BAND: (f64, f64) = (3.6, 4.2);
const SANDWICH: (f64, f64) = (2.0, 4.2);
const RATIO_TOL_REL: f64 = 0.15;
const DEFECT_TOL: f64 = 1e-3;
const MASS_TOL: f64 = 0.02;
const CLAIRAUT_H: f64 = 1e-3;
const DRIFT_BOUND_A: f64 = 5.0;
const CONE_BUDGETS: [f64; 3] = [0.1, 0.05, 0.025];
const RADII: [f64; 3] = [10.0, 20.0, 40.0];

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, k: usize, name: &str, pass: bool, detail: String, t: Instant) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} {:>2} {:<28} {} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            k,
            name,
            detail,
            t.elapsed().as_secs_f64()
        );
    }
}

fn cone_length(rep: &mut Report) {
    let t = Instant::now();
    let m = SurfaceMetric::cone(FRAC_PI_6).unwrap();
    let (p, q) = antipodal_endpoints(1.0, 0.0);
    let init = DiscreteCurve::coordinate_arc(1.0, 0.0, PI, 512).unwrap();
    // 2 r sin(pi/2 sin(pi/6)) = 2 sin(pi/4).
    let expected = 2.0 * (0.5 * PI * FRAC_PI_6.sin()).sin();
    match find_geodesic(&m, p, q, &init, &FlowConfig::default()) {
        Ok((g, _)) => {
            let err = (g.length - expected).abs();
            rep.line(
                1,
                "cone-geodesic-length",
                err <= LENGTH_TOL,
                format!("L = {:.6}, |L - sqrt2| = {err:.2e}", g.length),
                t,
            );
        }
        Err(e) => rep.line(1, "cone-geodesic-length", false, e.to_string(), t),
    }
}

fn cone_sandwich(rep: &mut Report) -> Vec<PipelineResult> {
    let t = Instant::now();
    let m = SurfaceMetric::cone(FRAC_PI_6).unwrap();
    let mut runs = Vec::new();
    for b in CONE_BUDGETS {
        let cfg = MinMaxConfig { budget_rel: b, ..MinMaxConfig::default() };
        match run_pipeline(&m, 1.0, 0.0, &cfg) {
            Ok(r) => runs.push(r),
            Err(e) => {
                rep.line(2, "cone-minmax-sandwich", false, format!("budget {b}: {e}"), t);
                return runs;
            }
        }
    }
    let lams: Vec<f64> = runs.iter().map(|r| r.result.lambda).collect();
    let last = *lams.last().unwrap();
    let in_sandwich = lams.iter().all(|&l| l > SANDWICH.0 && l < SANDWICH.1);
    let in_band = (LAMBDA_BAND.0..=LAMBDA_BAND.1).contains(&last);
    let toward_four = (last - 4.0).abs() <= (lams[0] - 4.0).abs();
    // E1 = E2 -> 2 under node refinement.
    let mut e_err = Vec::new();
    for n in [64, 128, 256] {
        let cfg = MinMaxConfig { n_nodes: n, ..MinMaxConfig::default() };
        match conegeo::minmax::two_minimizers(&m, 1.0, 0.0, &cfg) {
            Ok(mins) => e_err.push((mins.gamma1.energy - 2.0).abs().max((mins.gamma2.energy - 2.0).abs())),
            Err(e) => {
                rep.line(2, "cone-minmax-sandwich", false, format!("minimizers at N = {n}: {e}"), t);
                return runs;
            }
        }
    }
    let e_conv = e_err.windows(2).all(|w| w[1] < w[0]);
    rep.line(
        2,
        "cone-minmax-sandwich",
        in_sandwich && in_band && toward_four && e_conv,
        format!("Lambda by budget {CONE_BUDGETS:?} = {lams:.5?}, |E12 - 2| by N = {}", sci(&e_err)),
        t,
    );
    runs
}

fn profile_runs(rep: &mut Report) -> (SurfaceMetric, Vec<PipelineResult>) {
    let t = Instant::now();
    let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
    let cfg = MinMaxConfig::default();
    let outs = conegeo::exec::map(cfg.exec, &RADII, |&r0| run_pipeline(&m, r0, 0.0, &cfg));
    let mut runs = Vec::new();
    for (r0, o) in RADII.iter().zip(outs) {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => rep.line(3, "profile-ratio-trend", false, format!("r0 = {r0}: {e}"), t),
        }
    }
    if runs.len() == RADII.len() {
        let dev: Vec<f64> = runs.iter().map(|r| (r.result.ratio - 4.0).abs()).collect();
        let ratios: Vec<f64> = runs.iter().map(|r| r.result.ratio).collect();
        let pass = dev[2] <= RATIO_TOL_REL * 4.0 && dev.windows(2).all(|w| w[1] <= w[0]);
        rep.line(3, "profile-ratio-trend", pass, format!("Lambda/r0^2 = {ratios:.7?}"), t);
    }
    (m, runs)
}

fn morse_indices(rep: &mut Report, runs: &[PipelineResult]) {
    let t = Instant::now();
    if runs.len() != RADII.len() {
        rep.line(4, "morse-indices", false, "profile runs incomplete".into(), t);
        return;
    }
    let mut rows = Vec::new();
    let mut pass = true;
    for r in runs {
        let i1 = r.minimizers.gamma1.index;
        let i2 = r.minimizers.gamma2.index;
        let i3 = r.result.gamma3.as_ref().map(|g| g.index);
        let i3d = r.result.index_doubled;
        pass &= i1 == 0 && i2 == 0 && i3 == Some(1) && i3d == Some(1);
        rows.push(format!("r0 {}: {i1},{i2},{i3:?},{i3d:?}", r.r0));
    }
    rep.line(4, "morse-indices", pass, rows.join("; "), t);
}

fn embeddedness(rep: &mut Report, cone: &[PipelineResult], profile: &[PipelineResult]) {
    let t = Instant::now();
    let all: Vec<&PipelineResult> = cone.iter().chain(profile).collect();
    let embedded = all.iter().all(|r| r.result.embedded.iter().all(|&e| e));
    let disjoint = all.iter().all(|r| r.minimizers.disjoint);
    let complete = cone.len() == CONE_BUDGETS.len() && profile.len() == RADII.len();
    rep.line(
        5,
        "embeddedness",
        embedded && disjoint && complete,
        format!("{} runs, embedded {embedded}, gamma1/gamma2 disjoint {disjoint}", all.len()),
        t,
    );
}

fn mass_gauss_bonnet(rep: &mut Report) {
    let t = Instant::now();
    let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
    let exact = 2.0 * PI * (1.0 - FRAC_PI_6.sin());
    let mass_ok = mass(&m) == exact;
    match gauss_bonnet_disk(&m, 50.0, &QuadGrid::for_metric(&m)) {
        Ok(gb) => {
            let pass = mass_ok && gb.defect.abs() <= DEFECT_TOL && (gb.mass_estimate - PI).abs() <= MASS_TOL;
            rep.line(
                6,
                "mass-gauss-bonnet",
                pass,
                format!("mass = {:.15}, defect = {:.2e}, 2pi - kappa = {:.6}", mass(&m), gb.defect, gb.mass_estimate),
                t,
            );
        }
        Err(e) => rep.line(6, "mass-gauss-bonnet", false, e.to_string(), t),
    }
}

fn clairaut(rep: &mut Report) {
    let t = Instant::now();
    match clairaut_suite(CLAIRAUT_H) {
        Ok(suites) => {
            let pass = suites.iter().all(|s| s.pass);
            let detail: Vec<String> = suites.iter().map(|s| format!("{} {:.2e}", s.name, s.worst.abs())).collect();
            rep.line(7, "clairaut-conservation", pass, detail.join(", "), t);
        }
        Err(e) => rep.line(7, "clairaut-conservation", false, e.to_string(), t),
    }
}

fn blow_down(rep: &mut Report, runs: &[PipelineResult]) {
    let t = Instant::now();
    if runs.len() != RADII.len() {
        rep.line(8, "blow-down", false, "profile runs incomplete".into(), t);
        return;
    }
    let smooth = |c: ConeModel| c == ConeModel::Upper || c == ConeModel::Lower;
    let nearest_ok =
        runs.iter().all(|r| smooth(r.minimizers.blow_down1.nearest) && smooth(r.minimizers.blow_down2.nearest));
    let d1: Vec<f64> = runs.iter().map(|r| r.minimizers.blow_down1.distance).collect();
    let d2: Vec<f64> = runs.iter().map(|r| r.minimizers.blow_down2.distance).collect();
    let decreasing = |d: &[f64]| d.windows(2).all(|w| w[1] < w[0]);
    let vertex = runs.iter().all(|r| r.result.blow_down3.nearest_window == ConeModel::Vertex);
    rep.line(
        8,
        "blow-down",
        nearest_ok && decreasing(&d1) && decreasing(&d2) && vertex,
        format!("minimizer distances {d1:.4?} / {d2:.4?}, gamma3 window nearest vertex {vertex}"),
        t,
    );
}

fn no_drift(rep: &mut Report, m: &SurfaceMetric, runs: &[PipelineResult]) {
    let t = Instant::now();
    if runs.len() != RADII.len() {
        rep.line(9, "no-drift", false, "profile runs incomplete".into(), t);
        return;
    }
    let line = LineConfig::default();
    let outs = runs.iter().map(|r| drift_run(m, r, &line)).collect();
    match line_candidate(m, 0.0, &RADII, outs) {
        Ok(c) => {
            let a = m.smoothing_scale().unwrap_or(1.0);
            let closest: Vec<f64> = c.runs.iter().map(|r| r.closest_approach).collect();
            let pass = c.errors.is_empty() && c.certificate <= DRIFT_BOUND_A * a;
            rep.line(
                9,
                "no-drift",
                pass,
                format!("closest approach {}, certificate {:.2e}", sci(&closest), c.certificate),
                t,
            );
        }
        Err(e) => rep.line(9, "no-drift", false, e.to_string(), t),
    }
}

fn property_suites(rep: &mut Report) {
    let t = Instant::now();
    let suites = run_all(&SelftestConfig::default());
    let failed: Vec<&str> = suites.iter().filter(|s| !s.pass).map(|s| s.name.as_str()).collect();
    let detail =
        if failed.is_empty() { format!("{} suites", suites.len()) } else { format!("failed: {}", failed.join(", ")) };
    rep.line(10, "property-suites", failed.is_empty(), detail, t);
}

fn distinctness(rep: &mut Report) {
    let t = Instant::now();
    let m = SurfaceMetric::perturbed(FRAC_PI_6, 1.0, 1.0, [0.2, 0.1, 0.05]).unwrap();
    match distinctness_experiment(&m, &[0.0, FRAC_PI_4], 20.0, &MinMaxConfig::default(), &DistinctnessConfig::default())
    {
        Ok(d) => {
            let p = &d.pairs[0];
            rep.line(
                11,
                "distinctness",
                d.pass,
                format!(
                    "angle {:.5} vs {:.5} (rel {:.2e}), window distance {:.3}",
                    p.measured, p.expected, p.rel_err, p.window_distance
                ),
                t,
            );
        }
        Err(e) => rep.line(11, "distinctness", false, e.to_string(), t),
    }
}

fn main() {
    let mut rep = Report { failed: 0 };
    cone_length(&mut rep);
    let cone = cone_sandwich(&mut rep);
    let (m, profile) = profile_runs(&mut rep);
    morse_indices(&mut rep, &profile);
    embeddedness(&mut rep, &cone, &profile);
    mass_gauss_bonnet(&mut rep);
    clairaut(&mut rep);
    blow_down(&mut rep, &profile);
    no_drift(&mut rep, &m, &profile);
    property_suites(&mut rep);
    distinctness(&mut rep);
    if rep.failed > 0 {
        println!("{} criteria failed", rep.failed);
        std::process::exit(1);
    }
}
