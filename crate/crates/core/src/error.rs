use thiserror::Error;

use crate::symplectic::ModeLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate mode label {0}")]
    LabelCollision(ModeLabel),

    #[error("mode {0} is not present in the state")]
    UnknownLabel(ModeLabel),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter {name} = {value} outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("covariance is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("nonphysical covariance: smallest symplectic eigenvalue {0} < 1/2")]
    Nonphysical(f64),

    #[error("transform is not symplectic (defect {0:e})")]
    NotSymplectic(f64),

    #[error("finite-difference stencil leaves (0, 1): kappa = {kappa}, step = {step}")]
    StepTooLarge { kappa: f64, step: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mixer acts on mode {0}, only I and E are allowed")]
    MixerContract(ModeLabel),

    #[error("Fock truncation too small: leakage {leakage:e} exceeds budget, try cutoff >= {suggested}")]
    CutoffTooSmall { leakage: f64, suggested: usize },

    #[error("s = {0} outside (0, 1)")]
    OverlapExponent(f64),

    #[error("matrix logarithm branch failure: {0}")]
    Branch(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }
}
