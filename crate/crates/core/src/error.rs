//! Error taxonomy shared by all modules.

/// Library-wide error type.
///
/// Numerical routines distinguish domain violations (caller passed something
/// outside the documented range) from convergence failures (budget exhausted
/// with the last two iterates attached for diagnosis).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operation not defined for this system variant.
    #[error("{op} is not defined for system variant `{variant}`")]
    UnsupportedVariant { op: &'static str, variant: &'static str },

    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Critical point with |V''| below the degeneracy threshold; the quadratic
    /// equilibrium analysis does not apply there.
    #[error("degenerate critical point at q = {q} (V'' = {v2}); quadratic treatment not applicable")]
    DegenerateCriticalPoint { q: f64, v2: f64 },

    /// Iteration budget exhausted. `prev` and `last` are the final two
    /// iterates of the monitored quantity.
    #[error("{what} did not converge: last two iterates {prev} -> {last}")]
    NonConvergence { what: &'static str, prev: f64, last: f64 },

    /// Trace-formula amplitude 1/sqrt(tr M - 2) undefined because tr M <= 2
    /// in literal mode.
    #[error("singular amplitude for orbit (well {well}, n = {n}): tr M = {tr_m} <= 2 in literal mode")]
    SingularAmplitude { well: usize, n: u32, tr_m: f64 },

    /// Level sum not converged within the available spectrum.
    #[error("level sum at beta = {beta} not converged with {levels} levels; recompute the spectrum with more levels")]
    Truncation { levels: usize, beta: f64 },

    /// Perturbative correction outside its validity range.
    #[error("higher-order correction magnitude {correction} >= 1; outside validity range")]
    OutOfValidity { correction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
