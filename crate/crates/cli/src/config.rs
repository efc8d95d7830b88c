//! Run configuration: a TOML file plus dotted `key=value` overrides.

use conegeo::asymptotics::{DistinctnessConfig, LineConfig, QuadGrid};
use conegeo::flow::FlowConfig;
use conegeo::minmax::MinMaxConfig;
use conegeo::selftest::SelftestConfig;
use conegeo::{Exec, SurfaceMetric};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_6;
use std::fmt;
use std::path::Path;

/// Invalid configuration; maps to its own exit code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Cone,
    Flat,
    Profile,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub family: FamilyName,
    pub alpha: f64,
    pub a: f64,
    pub mu: f64,
    pub amplitudes: [f64; 3],
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { family: FamilyName::Profile, alpha: FRAC_PI_6, a: 1.0, mu: 1.0, amplitudes: [0.2, 0.1, 0.05] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub n_nodes: usize,
    pub n_polish: usize,
    /// Slices per stage of the explicit sweepout.
    pub slices: usize,
    pub budget_rel: f64,
    pub tau_round: f64,
    pub rounds: usize,
    pub max_slices: usize,
    pub collapse_rel: f64,
    pub stationary_rel: f64,
    /// Quadrature grid; the metric's default when absent.
    pub quad_n_r: Option<usize>,
    pub quad_n_phi: Option<usize>,
    pub flow: FlowConfig,
}

impl Default for Discretization {
    fn default() -> Self {
        let m = MinMaxConfig::default();
        Discretization {
            n_nodes: m.n_nodes,
            n_polish: m.n_polish,
            slices: m.stage_slices,
            budget_rel: m.budget_rel,
            tau_round: m.tau_round,
            rounds: m.rounds,
            max_slices: m.max_slices,
            collapse_rel: m.collapse_rel,
            stationary_rel: m.stationary_rel,
            quad_n_r: None,
            quad_n_phi: None,
            flow: m.flow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Arc,
    Segment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub r0: Vec<f64>,
    pub phi0: Vec<f64>,
    /// rho_minus / rho_plus of the explicit sweepout; rho_plus is r0.
    pub rho_minus_rel: f64,
    /// Geodesic endpoints; antipodal at (r0[0], phi0[0]) when absent.
    pub endpoints: Option<[[f64; 2]; 2]>,
    pub initial: Initial,
    /// No-drift certificate bound in units of the smoothing scale.
    pub drift_bound: f64,
    pub line: LineConfig,
    pub distinctness: DistinctnessConfig,
    pub selftest_curves: usize,
    pub selftest_nodes: usize,
}

impl Default for Experiment {
    fn default() -> Self {
        let st = SelftestConfig::default();
        Experiment {
            r0: vec![10.0, 20.0, 40.0],
            phi0: vec![0.0],
            rho_minus_rel: MinMaxConfig::default().rho_minus_rel,
            endpoints: None,
            initial: Initial::Arc,
            drift_bound: 5.0,
            line: LineConfig::default(),
            distinctness: DistinctnessConfig::default(),
            selftest_curves: st.curves_per_family,
            selftest_nodes: st.n_nodes,
        }
    }
}

/// Everything a run depends on. Output directory and worker count are
/// command-line only, so they never reach the echoed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub discretization: Discretization,
    pub experiment: Experiment,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: MetricConfig::default(),
            discretization: Discretization::default(),
            experiment: Experiment::default(),
            seed: SelftestConfig::default().seed,
        }
    }
}

/// Parse an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(root: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| bad(format!("override {spec:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| bad(format!("override {key:?}: {p:?} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| bad(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| bad(format!("config parse error: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e| bad(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let d = &self.discretization;
        let f = &d.flow;
        let e = &self.experiment;
        let positive = [
            ("discretization.budget_rel", d.budget_rel),
            ("discretization.tau_round", d.tau_round),
            ("discretization.collapse_rel", d.collapse_rel),
            ("discretization.stationary_rel", d.stationary_rel),
            ("discretization.flow.h_flow", f.h_flow),
            ("discretization.flow.h_min", f.h_min),
            ("discretization.flow.tol_grad_rel", f.tol_grad_rel),
            ("discretization.flow.tau_max", f.tau_max),
            ("discretization.flow.tol_geo", f.tol_geo),
            ("discretization.flow.tol_eig_rel", f.tol_eig_rel),
            ("discretization.flow.h_saddle", f.h_saddle),
            ("experiment.rho_minus_rel", e.rho_minus_rel),
            ("experiment.drift_bound", e.drift_bound),
            ("experiment.distinctness.angle_tol", e.distinctness.angle_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} = {v} must be a positive number")));
            }
        }
        if d.n_nodes < 8 || d.n_polish < 8 {
            return Err(bad(format!("node counts must be >= 8 (n_nodes = {}, n_polish = {})", d.n_nodes, d.n_polish)));
        }
        if d.slices < 4 {
            return Err(bad(format!("discretization.slices = {} must be >= 4", d.slices)));
        }
        if e.r0.is_empty() || e.r0.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(bad("experiment.r0 must be a non-empty list of positive radii"));
        }
        if e.r0.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad(format!("experiment.r0 = {:?} must be strictly increasing", e.r0)));
        }
        if e.phi0.is_empty() {
            return Err(bad("experiment.phi0 must not be empty"));
        }
        if e.selftest_nodes < 8 {
            return Err(bad("experiment.selftest_nodes must be >= 8"));
        }
        self.surface()?;
        Ok(())
    }

    pub fn surface(&self) -> anyhow::Result<SurfaceMetric> {
        let m = &self.metric;
        let s = match m.family {
            FamilyName::Cone => SurfaceMetric::cone(m.alpha),
            FamilyName::Flat => Ok(SurfaceMetric::flat()),
            FamilyName::Profile => SurfaceMetric::profile(m.alpha, m.a),
            FamilyName::Perturbed => SurfaceMetric::perturbed(m.alpha, m.a, m.mu, m.amplitudes),
        };
        s.map_err(|e| bad(format!("metric: {e}")))
    }

    pub fn minmax(&self, exec: Exec) -> MinMaxConfig {
        let d = &self.discretization;
        MinMaxConfig {
            n_nodes: d.n_nodes,
            n_polish: d.n_polish,
            budget_rel: d.budget_rel,
            tau_round: d.tau_round,
            rounds: d.rounds,
            max_slices: d.max_slices,
            stage_slices: d.slices,
            rho_minus_rel: self.experiment.rho_minus_rel,
            collapse_rel: d.collapse_rel,
            stationary_rel: d.stationary_rel,
            flow: d.flow,
            exec,
        }
    }

    pub fn quad_grid(&self, m: &SurfaceMetric) -> QuadGrid {
        let base = QuadGrid::for_metric(m);
        QuadGrid {
            n_r: self.discretization.quad_n_r.unwrap_or(base.n_r),
            n_phi: self.discretization.quad_n_phi.unwrap_or(base.n_phi),
            ..base
        }
    }

    pub fn selftest(&self) -> SelftestConfig {
        SelftestConfig {
            curves_per_family: self.experiment.selftest_curves,
            n_nodes: self.experiment.selftest_nodes,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = RunConfig::load(
            None,
            &["metric.family=cone".into(), "discretization.flow.h_flow=0.01".into(), "experiment.r0=[1.0, 2.0]".into()],
        )
        .unwrap();
        assert_eq!(cfg.metric.family, FamilyName::Cone);
        assert_eq!(cfg.discretization.flow.h_flow, 0.01);
        assert_eq!(cfg.experiment.r0, vec![1.0, 2.0]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in [
            "experiment.r0=[2.0, 1.0]",
            "discretization.n_nodes=4",
            "discretization.slices=3",
            "discretization.flow.tol_grad_rel=0.0",
            "metric.alpha=2.0",
            "metric.colour=1",
            "nonsense",
        ] {
            let e = RunConfig::load(None, &[o.into()]).unwrap_err();
            assert!(e.downcast_ref::<ConfigError>().is_some(), "{o}: {e}");
        }
    }
}
