//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Everything the numeric layers can report.
///
/// Diagnostic payloads (witness points, last estimates, budgets) are kept so
/// callers can print actionable messages instead of re-deriving the failure.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed potential spec string.
    Parse(String),
    /// The parsed function failed the Young audit (positivity/convexity).
    NotYoung { reason: String, witness: f64 },
    /// Input outside an operation's stated domain.
    Domain(String),
    /// Adaptive quadrature did not converge; carries its last two estimates.
    QuadratureFailure { last: f64, previous: f64 },
    /// No λ bracket for the requested mean within [1e-12, 1e12].
    BracketFailure { target: f64 },
    /// Characteristic-function modulus reached 1 on the scanned grid.
    NoCramer { at: f64, modulus: f64 },
    /// Halving the convolution grid still moves log-volume by more than 1e-2.
    GridTooCoarse { coarse: f64, fine: f64 },
    /// Importance sampling had too few in-ball samples for a meaningful error bar.
    AllRejected { hits: u64, samples: u64 },
    /// Rejection sampler exceeded its proposal budget.
    BudgetExceeded { proposals: u64, accepted: u64 },
    /// Every requested dimension is below the tilted-CLT validity floor.
    ValidityFloor { floor: f64 },
    /// ∫ e^{-V} is not 1, so V is not a probability-normalized potential.
    NotNormalized { integral: f64, hint: String },
    /// The potential is not ψ₂-admissible (t ↦ Ψ(√t) fails convexity).
    Psi2Violated { witness: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::NotYoung { reason, witness } => {
                write!(f, "not a Young function: {reason} (witness t = {witness})")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::QuadratureFailure { last, previous } => write!(
                f,
                "quadrature failed to converge (last two estimates {previous}, {last})"
            ),
            Error::BracketFailure { target } => write!(
                f,
                "no lambda in [1e-12, 1e12] brackets mean target {target}"
            ),
            Error::NoCramer { at, modulus } => write!(
                f,
                "Cramer condition not certified: |phi({at})| = {modulus} >= 1 on grid"
            ),
            Error::GridTooCoarse { coarse, fine } => write!(
                f,
                "convolution grid too coarse: halving moved log-volume {coarse} -> {fine}"
            ),
            Error::AllRejected { hits, samples } => write!(
                f,
                "only {hits} of {samples} importance samples landed in the ball \
                 (need >= 30); lambda is badly mismatched to E/n"
            ),
            Error::BudgetExceeded { proposals, accepted } => write!(
                f,
                "rejection sampler exceeded its budget: {accepted} accepted after {proposals} proposals"
            ),
            Error::ValidityFloor { floor } => write!(
                f,
                "all requested dimensions are below the validity floor n >= {floor}"
            ),
            Error::NotNormalized { integral, hint } => write!(
                f,
                "exp(-V) integrates to {integral}, not 1; {hint}"
            ),
            Error::Psi2Violated { witness } => write!(
                f,
                "psi2 requirement fails: u -> Psi(sqrt(u)) is not convex near u = {witness}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
