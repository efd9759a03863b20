use thiserror::Error;

use crate::params::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidationReport),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("time step {dt:e} s exceeds the stability bound {bound:e} s")]
    StepTooCoarse { dt: f64, bound: f64 },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid timeline: {0}")]
    Timeline(String),

    #[error("record of {samples} samples is shorter than one window of {window} samples")]
    RecordTooShort { samples: usize, window: usize },

    #[error("degenerate ensemble: {0}")]
    Degenerate(String),

    #[error("ensembles cannot be separated (SNR {snr:.3} < 0.1)")]
    Uncalibratable { snr: f64 },

    #[error("fit did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("peaks are not resolvable: centers {c1:e} and {c2:e} closer than their widths")]
    Unresolved { c1: f64, c2: f64 },

    #[error("minimizer failed on bracket [{lo:e}, {hi:e}]: {reason}")]
    Optimizer { lo: f64, hi: f64, reason: String },

    #[error("unphysical result: {0}")]
    Unphysical(String),

    #[error("curve `{curve}` has too few usable points ({usable}) after dropping lengths with fewer than {min_survivors} survivors")]
    InsufficientSurvivors { curve: String, usable: usize, min_survivors: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
