//! One function per subcommand. Every command writes a JSON document with
//! the echoed configuration plus CSV tables into the output directory.

use crate::config::{Initial, RunConfig};
use anyhow::{Context, Result};
use conegeo::asymptotics::{distinctness_experiment, gauss_bonnet_disk, mass, no_drift_trace, BlowDown, DriftRun};
use conegeo::cone::ConeModel;
use conegeo::curve::DiscreteCurve;
use conegeo::flow::{find_geodesic, set_gradient_corruption, FlowStop, GeodesicReport};
use conegeo::linalg::Vec2;
use conegeo::metric::lift_angle;
use conegeo::minmax::{antipodal_endpoints, run_pipeline, run_pipeline_observed, PipelineResult};
use conegeo::selftest::{run_all, SuiteResult};
use conegeo::{exec, Exec};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub exec: Exec,
    pub snapshots: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    result: T,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        write_file(&self.path(name), text)
    }

    fn json<T: Serialize>(&self, name: &str, command: &str, result: T) -> Result<()> {
        let env = Envelope { command, version: env!("CARGO_PKG_VERSION"), config: &self.cfg, result };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        self.write(name, &String::from_utf8(bytes)?)
    }

    fn first_radius(&self) -> (f64, f64) {
        (self.cfg.experiment.r0[0], self.cfg.experiment.phi0[0])
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn polar_arc(p: Vec2, q: Vec2, n: usize) -> Result<DiscreteCurve> {
    let (rp, rq) = (p[0].hypot(p[1]), q[0].hypot(q[1]));
    if rp == 0.0 || rq == 0.0 {
        return Ok(DiscreteCurve::segment(p, q, n)?);
    }
    let fp = p[1].atan2(p[0]);
    let mut fq = lift_angle(q[1].atan2(q[0]), fp);
    // Antipodal endpoints: go counterclockwise.
    if (fq - fp + PI).abs() < 1e-12 {
        fq += 2.0 * PI;
    }
    let mut c = DiscreteCurve::from_fn(n, |t| {
        let (r, f) = (rp + t * (rq - rp), fp + t * (fq - fp));
        [r * f.cos(), r * f.sin()]
    })?
    .nodes()
    .to_vec();
    c[0] = p;
    *c.last_mut().unwrap() = q;
    Ok(DiscreteCurve::new(c)?)
}

#[derive(Serialize)]
struct FlowSummary {
    steps: usize,
    tau: f64,
    stop: FlowStop,
    identity_residual: f64,
    monotone: bool,
}

#[derive(Serialize)]
struct GeodesicOut {
    endpoints: [Vec2; 2],
    initial: Initial,
    report: GeodesicReport,
    flow: FlowSummary,
}

pub fn geodesic(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let e = &ctx.cfg.experiment;
    let n = ctx.cfg.discretization.n_nodes;
    let (p, q) = match e.endpoints {
        Some([p, q]) => (p, q),
        None => {
            let (r0, phi0) = ctx.first_radius();
            antipodal_endpoints(r0, phi0)
        }
    };
    let init = match e.initial {
        Initial::Arc => polar_arc(p, q, n)?,
        Initial::Segment => DiscreteCurve::segment(p, q, n)?,
    };
    let (report, state) = find_geodesic(&m, p, q, &init, &ctx.cfg.discretization.flow)?;
    ctx.write("curve.csv", &report.curve.to_csv(m.r_patch))?;
    ctx.write("flow_trace.csv", &state.trace_csv())?;
    println!("length {} energy {} index {} embedded {}", report.length, report.energy, report.index, report.embedded);
    let flow = FlowSummary {
        steps: report.flow_steps,
        tau: state.tau,
        stop: state.stop,
        identity_residual: state.identity_residual(),
        monotone: state.is_monotone(),
    };
    ctx.json("geodesic.json", "geodesic", GeodesicOut { endpoints: [p, q], initial: e.initial, report, flow })
}

fn gamma3_curve(run: &PipelineResult) -> Option<&DiscreteCurve> {
    match (&run.result.gamma3, &run.sweepout) {
        (Some(g), _) => Some(&g.curve),
        (None, Some(h)) => Some(&h.slices[run.result.argmax]),
        _ => None,
    }
}

pub fn minmax(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let (r0, phi0) = ctx.first_radius();
    let mcfg = ctx.cfg.minmax(ctx.exec);
    let mut snap_err: Option<anyhow::Error> = None;
    let run = run_pipeline_observed(&m, r0, phi0, &mcfg, |info, h| {
        if ctx.snapshots && snap_err.is_none() {
            let name = format!("snapshots/round_{:03}.csv", info.round);
            if let Err(e) = ctx.write(&name, &h.to_csv(m.r_patch)) {
                snap_err = Some(e);
            }
        }
    })?;
    if let Some(e) = snap_err {
        return Err(e);
    }
    ctx.csv("lambda_trace.csv", &run.rounds)?;
    ctx.write("gamma1.csv", &run.minimizers.gamma1.curve.to_csv(m.r_patch))?;
    ctx.write("gamma2.csv", &run.minimizers.gamma2.curve.to_csv(m.r_patch))?;
    if let Some(c) = gamma3_curve(&run) {
        ctx.write("gamma3.csv", &c.to_csv(m.r_patch))?;
    }
    let res = &run.result;
    println!(
        "lambda {} ratio {} gap {} index {:?} rounds {}",
        res.lambda,
        res.ratio,
        res.gap,
        res.gamma3.as_ref().map(|g| g.index),
        run.rounds.len()
    );
    ctx.json("minmax.json", "minmax", &run)
}

#[derive(Serialize)]
struct SweepRow {
    r0: f64,
    phi0: f64,
    lambda: f64,
    ratio: f64,
    ratio_deviation: f64,
    gap_margin_rel: f64,
    index: Option<usize>,
    index_doubled: Option<usize>,
    stationary: bool,
}

pub fn sweep_lambda(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let phi0 = ctx.cfg.experiment.phi0[0];
    let mcfg = ctx.cfg.minmax(ctx.exec);
    let runs = exec::map(ctx.exec, &ctx.cfg.experiment.r0, |&r0| run_pipeline(&m, r0, phi0, &mcfg));
    let mut rows = Vec::new();
    for run in runs {
        let run = run?;
        let res = &run.result;
        rows.push(SweepRow {
            r0: run.r0,
            phi0,
            lambda: res.lambda,
            ratio: res.ratio,
            ratio_deviation: (res.ratio - 4.0).abs(),
            gap_margin_rel: res.gap_margin_rel,
            index: res.gamma3.as_ref().map(|g| g.index),
            index_doubled: res.index_doubled,
            stationary: res.stationary,
        });
    }
    ctx.csv("lambda_sweep.csv", &rows)?;
    for r in &rows {
        println!("r0 {} ratio {} index {:?}", r.r0, r.ratio, r.index);
    }
    let monotone = rows.windows(2).all(|w| w[1].ratio_deviation <= w[0].ratio_deviation);
    #[derive(Serialize)]
    struct Out<'a> {
        rows: &'a [SweepRow],
        deviation_non_increasing: bool,
    }
    ctx.json("lambda_sweep.json", "sweep-lambda", Out { rows: &rows, deviation_non_increasing: monotone })
}

const DEFECT_TOL: f64 = 1e-3;

#[derive(Serialize)]
struct GbRow {
    r0: f64,
    int_k: f64,
    int_kappa: f64,
    defect: f64,
    mass_estimate: f64,
    refinement_change: f64,
    resolution_warning: bool,
}

pub fn verify_gauss_bonnet(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let grid = ctx.cfg.quad_grid(&m);
    let outs = exec::map(ctx.exec, &ctx.cfg.experiment.r0, |&r0| gauss_bonnet_disk(&m, r0, &grid).map(|g| (r0, g)));
    let mut rows = Vec::new();
    for o in outs {
        let (r0, g) = o?;
        rows.push(GbRow {
            r0,
            int_k: g.int_k,
            int_kappa: g.int_kappa,
            defect: g.defect,
            mass_estimate: g.mass_estimate,
            refinement_change: g.refinement_change,
            resolution_warning: g.resolution_warning,
        });
    }
    ctx.csv("gauss_bonnet.csv", &rows)?;
    let max_abs_defect = rows.iter().map(|r| r.defect.abs()).fold(0.0, f64::max);
    let pass = max_abs_defect <= DEFECT_TOL;
    println!("max |defect| {max_abs_defect:e} pass {pass}");
    #[derive(Serialize)]
    struct Out<'a> {
        mass: f64,
        rows: &'a [GbRow],
        max_abs_defect: f64,
        defect_tol: f64,
        pass: bool,
    }
    ctx.json(
        "gauss_bonnet.json",
        "verify gauss-bonnet",
        Out { mass: mass(&m), rows: &rows, max_abs_defect, defect_tol: DEFECT_TOL, pass },
    )
}

#[derive(Serialize)]
struct MassRow {
    alpha: f64,
    sin_alpha: f64,
    mass: f64,
    formula: f64,
    exact: bool,
}

pub fn verify_mass(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let s = m.sin_alpha();
    let formula = 2.0 * PI * (1.0 - s);
    let row = MassRow { alpha: m.alpha(), sin_alpha: s, mass: mass(&m), formula, exact: mass(&m) == formula };
    println!("mass {} exact {}", row.mass, row.exact);
    ctx.csv("mass.csv", std::slice::from_ref(&row))?;
    ctx.json("mass.json", "verify mass", &row)
}

#[derive(Serialize)]
struct BlowRow {
    r0: f64,
    curve: &'static str,
    nearest: ConeModel,
    distance: f64,
    d_upper: f64,
    d_lower: f64,
    d_vertex: f64,
    nearest_window: ConeModel,
    w_upper: f64,
    w_lower: f64,
    w_vertex: f64,
}

fn blow_row(r0: f64, curve: &'static str, b: &BlowDown) -> BlowRow {
    BlowRow {
        r0,
        curve,
        nearest: b.nearest,
        distance: b.distance,
        d_upper: b.distances[0],
        d_lower: b.distances[1],
        d_vertex: b.distances[2],
        nearest_window: b.nearest_window,
        w_upper: b.window_distances[0],
        w_lower: b.window_distances[1],
        w_vertex: b.window_distances[2],
    }
}

pub fn verify_blow_down(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let phi0 = ctx.cfg.experiment.phi0[0];
    let mcfg = ctx.cfg.minmax(ctx.exec);
    let runs = exec::map(ctx.exec, &ctx.cfg.experiment.r0, |&r0| run_pipeline(&m, r0, phi0, &mcfg));
    let mut rows = Vec::new();
    let mut d_min = Vec::new();
    for run in runs {
        let run = run?;
        let mins = &run.minimizers;
        rows.push(blow_row(run.r0, "gamma1", &mins.blow_down1));
        rows.push(blow_row(run.r0, "gamma2", &mins.blow_down2));
        rows.push(blow_row(run.r0, "gamma3", &run.result.blow_down3));
        d_min.push(mins.blow_down1.distance.max(mins.blow_down2.distance));
    }
    ctx.csv("blow_down.csv", &rows)?;
    let smooth = |c: ConeModel| c != ConeModel::Vertex;
    let minimizers_smooth = rows.iter().filter(|r| r.curve != "gamma3").all(|r| smooth(r.nearest));
    let decreasing = d_min.windows(2).all(|w| w[1] < w[0]);
    let gamma3_vertex = rows.iter().filter(|r| r.curve == "gamma3").all(|r| r.nearest_window == ConeModel::Vertex);
    println!("minimizers smooth {minimizers_smooth} decreasing {decreasing} gamma3 vertex {gamma3_vertex}");
    #[derive(Serialize)]
    struct Out<'a> {
        rows: &'a [BlowRow],
        minimizers_nearest_smooth: bool,
        minimizer_distance_decreasing: bool,
        gamma3_window_vertex: bool,
    }
    ctx.json(
        "blow_down.json",
        "verify blow-down",
        Out {
            rows: &rows,
            minimizers_nearest_smooth: minimizers_smooth,
            minimizer_distance_decreasing: decreasing,
            gamma3_window_vertex: gamma3_vertex,
        },
    )
}

#[derive(Serialize)]
struct DriftRow {
    r0: f64,
    lambda: f64,
    ratio: f64,
    index: Option<usize>,
    index_doubled: Option<usize>,
    closest_approach: f64,
    midpoint_radius: f64,
    max_ball_length: f64,
}

impl From<&DriftRun> for DriftRow {
    fn from(r: &DriftRun) -> Self {
        DriftRow {
            r0: r.r0,
            lambda: r.lambda,
            ratio: r.ratio,
            index: r.index,
            index_doubled: r.index_doubled,
            closest_approach: r.closest_approach,
            midpoint_radius: r.midpoint_radius,
            max_ball_length: r.max_ball_length,
        }
    }
}

pub fn verify_no_drift(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let e = &ctx.cfg.experiment;
    let cand = no_drift_trace(&m, e.phi0[0], &e.r0, &ctx.cfg.minmax(ctx.exec), &e.line)?;
    let rows: Vec<DriftRow> = cand.runs.iter().map(DriftRow::from).collect();
    ctx.csv("no_drift.csv", &rows)?;
    let bound = e.drift_bound * m.smoothing_scale().unwrap_or(1.0);
    let bounded = cand.errors.is_empty() && cand.certificate <= bound;
    println!("certificate {} bound {bound} bounded {bounded}", cand.certificate);
    #[derive(Serialize)]
    struct Out<'a> {
        candidate: &'a conegeo::asymptotics::LineCandidate,
        bound: f64,
        bounded: bool,
    }
    ctx.json("no_drift.json", "verify no-drift", Out { candidate: &cand, bound, bounded })
}

pub fn verify_distinctness(ctx: &Ctx) -> Result<()> {
    let m = ctx.cfg.surface()?;
    let e = &ctx.cfg.experiment;
    let rep = distinctness_experiment(&m, &e.phi0, e.r0[0], &ctx.cfg.minmax(ctx.exec), &e.distinctness)?;
    ctx.csv("distinctness.csv", &rep.pairs)?;
    println!("pairs {} pass {}", rep.pairs.len(), rep.pass);
    ctx.json("distinctness.json", "verify distinctness", &rep)
}

/// Returns whether every suite passed.
pub fn selftest(ctx: &Ctx, fault_gradient: bool) -> Result<bool> {
    set_gradient_corruption(fault_gradient);
    let suites: Vec<SuiteResult> = run_all(&ctx.cfg.selftest());
    set_gradient_corruption(false);
    println!("{:<24} {:>6} {:>12} {:>10} {:>6}", "suite", "pass", "worst", "bound", "cases");
    for s in &suites {
        println!(
            "{:<24} {:>6} {:>12.3e} {:>10.1e} {:>6}",
            s.name,
            if s.pass { "PASS" } else { "FAIL" },
            s.worst,
            s.bound,
            s.cases
        );
    }
    let pass = suites.iter().all(|s| s.pass);
    ctx.csv("selftest.csv", &suites)?;
    #[derive(Serialize)]
    struct Out<'a> {
        suites: &'a [SuiteResult],
        fault_gradient: bool,
        pass: bool,
    }
    ctx.json("selftest.json", "selftest", Out { suites: &suites, fault_gradient, pass })?;
    Ok(pass)
}
