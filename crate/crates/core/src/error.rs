use thiserror::Error;

use crate::C64;

/// Errors raised by the numerical layers.
///
/// Every variant maps onto a stable machine-readable `kind` string (see
/// [`Error::kind`]) which the CLI and the C ABI expose to callers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("shifted polynomial t(lam + n*i*hbar*s) vanishes at shift index {shift} (|t| = {modulus:e})")]
    NearPole { shift: usize, modulus: f64 },

    #[error("{what} not converged with {rows} terms (error estimate {err_est:e}); increase the truncation")]
    NotConverged { what: &'static str, rows: usize, err_est: f64 },

    #[error("removable singularity at root tau_{root} (shift {shift}); offset lambda slightly")]
    RemovableSingularity { root: usize, shift: usize },

    #[error("argument principle found {found} Wronskian zeros, expected {expected}")]
    MissedRoots { found: i64, expected: usize },

    #[error("degenerate Floquet exponents: zeros {0} and {1} coincide")]
    DegenerateExponents(usize, usize),

    #[error("Floquet exponents do not sum to an integer (sum = {0})")]
    ZeroSum(C64),

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("multiplier blow-up: |Q-(-i hbar sigma_{0})| below tolerance")]
    MultiplierBlowUp(usize),

    #[error("degenerate monodromy: Sigma_{0} and Sigma_{1} coincide")]
    DegenerateMonodromy(usize, usize),

    #[error("resonant denominator: sin(pi (sigma_{0} - sigma_{1})) vanishes")]
    ResonantDenominator(usize, usize),

    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64, trajectory: Vec<C64> },

    #[error("at u_N = {u_n}: {source}")]
    AtSpectralParameter { u_n: C64, source: Box<Error> },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Stable identifier used in JSON error blobs and FFI error codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension { .. } => "dimension",
            Error::NearPole { .. } => "near_pole",
            Error::NotConverged { .. } => "not_converged",
            Error::RemovableSingularity { .. } => "removable_singularity",
            Error::MissedRoots { .. } => "missed_roots",
            Error::DegenerateExponents(..) => "degenerate_exponents",
            Error::ZeroSum(_) => "zero_sum",
            Error::Newton(_) => "newton",
            Error::MultiplierBlowUp(_) => "multiplier_blow_up",
            Error::DegenerateMonodromy(..) => "degenerate_monodromy",
            Error::ResonantDenominator(..) => "resonant_denominator",
            Error::NoConvergence { .. } => "no_convergence",
            Error::AtSpectralParameter { source, .. } => source.kind(),
            Error::Oracle(_) => "oracle",
            Error::Config(_) => "config",
        }
    }

    /// Strips any [`Error::AtSpectralParameter`] wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtSpectralParameter { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub(crate) fn at_u_n(self, u_n: C64) -> Error {
        match self {
            e @ Error::AtSpectralParameter { .. } => e,
            e => Error::AtSpectralParameter { u_n, source: Box::new(e) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
