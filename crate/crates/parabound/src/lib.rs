//! Numerical laboratory for global boundedness of quasilinear parabolic
//! problems with variable-exponent growth.
//!
//! The crate solves problems of the form
//!
//! ```text
//! u_t - div A(t,x,u,∇u) = B(t,x,u,∇u)      in (0,T) × Ω,
//!       A(t,x,u,∇u) · ν = C(t,x,u)         on (0,T) × Γ,
//!                 u(0,·) = u0               in Ω,
//! ```
//!
//! on axis-aligned boxes Ω ⊂ R^N (N ≤ 3), where the structure functions
//! A, B, C obey power growth with exponents p(t,x), q1(t,x), q2(t,x).
//! On top of the solver it provides the analytical toolkit needed to
//! certify global sup-bounds for such solutions:
//!
//! * variable-exponent Lebesgue machinery (modulars, Luxemburg norms),
//! * Gagliardo–Nirenberg interpolation and parabolic embedding checks,
//! * mollification, exponential time averaging and Steklov averaging,
//! * level-set truncation energies and a De Giorgi-type iteration that
//!   emits an explicit, serializable [`degiorgi::BoundCertificate`].
//!
//! Everything is deterministic: random suites take explicit seeds and all
//! artifacts (CSV fields, JSON certificates) are byte-stable.

pub mod cli;
pub mod degiorgi;
pub mod discretization;
pub mod exponents;
pub mod expr;
pub mod inequalities;
pub mod problems;
pub mod report;
pub mod rng;
pub mod smoothing;
pub mod solver;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Malformed configuration (bad JSON, missing fields, bad values).
    Config(String),
    /// Arithmetic expression failed to parse or evaluate.
    Expression(String),
    /// A precondition of an operation was violated by the caller.
    Precondition(String),
    /// The nonlinear solver failed to converge; carries diagnostics.
    SolverDiverged(String),
    /// An iterative routine exceeded its iteration cap.
    NonConvergence(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Expression(m) => write!(f, "expression error: {m}"),
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
            Error::SolverDiverged(m) => write!(f, "solver diverged: {m}"),
            Error::NonConvergence(m) => write!(f, "did not converge: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
