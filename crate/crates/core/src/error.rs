use thiserror::Error;

/// Errors raised by chart evaluation, field algebra, derivative paths and flows.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("event (t={t}, y1={y1}, y2={y2}) outside the admissible chart domain")]
    Domain { t: f64, y1: f64, y2: f64 },
    #[error("chart is not an embedding here: det g = {det_g:e}")]
    NonEmbedding { det_g: f64 },
    #[error("chart motion is not invertible at ({y1}, {y2}): det = {det:e}")]
    Inversion { y1: f64, y2: f64, det: f64 },
    #[error("operation is undefined for rank {0}")]
    Rank(u8),
    #[error("value is not a Q-tensor: asymmetry {asym:e}, trace {trace:e}")]
    NotQTensor { asym: f64, trace: f64 },
    #[error("Q-tensor is not surface conforming: |eta| = {0:e}")]
    NotConforming(f64),
    #[error("value is not tangential: normal residual {0:e}")]
    NotTangential(f64),
    #[error("decomposed path requested but the field has no split closure")]
    MissingSplit,
    #[error("grid too coarse: {n} nodes on an axis, at least {min} required")]
    Stencil { n: usize, min: usize },
    #[error("shell degenerates at xi = {xi}: 1 - xi*kappa = {margin:e}")]
    ShellDegenerate { xi: f64, margin: f64 },
    #[error("energy increased by {increase:e} at step {step}")]
    EnergyIncrease { step: usize, increase: f64 },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepAboveBound { dt: f64, bound: f64 },
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the explicit integrator (energy growth or an oversized step).
    pub fn is_stability(&self) -> bool {
        matches!(self, Error::EnergyIncrease { .. } | Error::StepAboveBound { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
