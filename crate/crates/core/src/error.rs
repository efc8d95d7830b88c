use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("metric evaluated at the pole or vertex (r = {r})")]
    PoleEvaluation { r: f64 },
    #[error("point outside the valid domain of its chart: {0}")]
    ChartDomain(String),
    #[error("trajectory hit the cone vertex at t = {t}")]
    ChartExit { t: f64 },
    #[error("lift across the unfolding cut is ambiguous (phi = {phi})")]
    CutCrossing { phi: f64 },
    #[error("operation requires a rotationally symmetric metric")]
    NonRotational,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("degenerate curve: {0}")]
    Degenerate(String),
    #[error("linear system is singular at row {row}")]
    SingularSystem { row: usize },
    #[error("flow stalled: no decrease at step {step} (gradient norm {grad_norm:e})")]
    Stall { step: f64, grad_norm: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("curve is not a discrete geodesic (residual {residual:e} > {tol:e})")]
    NonGeodesic { residual: f64, tol: f64 },
    #[error("both minimizer flows reached the same support (distance {distance:e})")]
    Coincidence { distance: f64 },
    #[error("min-max curve collapsed onto {which} (distance {distance:e})")]
    Collapse { which: String, distance: f64 },
    #[error("outside the asymptotic regime: {0}")]
    Regime(String),
    #[error("sweepout needs {slices} slices, above the configured maximum {max}")]
    BudgetExplosion { slices: usize, max: usize },
    #[error("ray window is not graphical over any direction: {0}")]
    NonGraphical(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
