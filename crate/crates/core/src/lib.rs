//! Weak-form Bernstein-Galerkin time stepping for damped single-degree-of-freedom
//! oscillators `x'' + c x' + k x = f` (unit mass).
//!
//! The trajectory on each step of length `h` is sought in the Bernstein basis
//! `{B_{i,p,h}}` of size `p` (polynomial degree `p-1`). Testing the residual against
//! the interior basis functions under the exponentially weighted `L²_c` product gives
//! a `(p-2) x p` system; the two initial-condition rows complete it to a square solve
//! whose factorization is reused across steps. End-of-step displacement and velocity
//! feed the next step with C¹ continuity.
//!
//! Modules:
//! - [`special_functions`]: exact binomials, rising factorials, Kummer ₁F₁.
//! - [`bernstein`]: basis algebra on `[0,h]` (elevation, derivative, antiderivative,
//!   products, moments, plain and exponentially weighted inner products).
//! - [`legendre`]: normalized shifted Legendre expansions, the Bernstein→Legendre
//!   change of basis, tail projections, coefficient-decay exponents.
//! - [`closed_form`]: exact SDOF responses and the explicit p=3 integrators.
//! - [`weakform`]: step assembly, the factored solver, multi-step simulation.
//! - [`spectral`]: integrated-force families, Gram/null-space study, sampled
//!   projection-angle exponents and aggregate convergence factors.
//! - [`quadrature`]: Gauss-Legendre rules used for general excitations.

pub mod bernstein;
pub mod closed_form;
pub mod legendre;
pub mod quadrature;
pub mod spectral;
pub mod special_functions;
pub mod weakform;

mod dd;
mod linalg;

pub use linalg::{jacobi_eigh, LuFactors};

use std::fmt;

/// Library error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Exact integer combinatorics left the 64-bit range.
    CombinatoricsOverflow { what: &'static str, n: u64, k: u64 },
    /// ₁F₁ series failed to reach the tolerance within the term cap.
    SeriesNoConvergence { a: u32, b: u32, z: f64, terms: usize },
    /// Truncated exponential-product tail still above tolerance at the degree cap.
    TruncationFailure { p: usize, ch: f64, cap: usize },
    /// A linear solve hit a singular or unacceptably conditioned matrix.
    IllConditioned { what: &'static str, cond: f64 },
    /// Gram-study structural check failed (null count, gap, or the 2x2 solve).
    SpectralStructure { check: &'static str, detail: String },
    /// Invalid argument or configuration value.
    InvalidInput(String),
    /// Tabulated excitation does not cover a requested step interval.
    ExcitationCoverage { step: usize, t0: f64, t1: f64 },
    /// A simulation step failed; wraps the index for diagnostics.
    StepFailed { step: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::CombinatoricsOverflow { what, n, k } => {
                write!(f, "{what}({n},{k}) exceeds the exact 64-bit range")
            }
            Error::SeriesNoConvergence { a, b, z, terms } => {
                write!(f, "1F1({a},{b},{z}) did not converge within {terms} terms")
            }
            Error::TruncationFailure { p, ch, cap } => {
                write!(f, "exp-times-Bernstein tail above tolerance at cap {cap} (p={p}, ch={ch})")
            }
            Error::IllConditioned { what, cond } => {
                write!(f, "{what}: condition estimate {cond:.3e} beyond limit")
            }
            Error::SpectralStructure { check, detail } => {
                write!(f, "spectral structure check '{check}' failed: {detail}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::ExcitationCoverage { step, t0, t1 } => {
                write!(f, "tabulated excitation does not cover step {step} ([{t0}, {t1}])")
            }
            Error::StepFailed { step, source } => write!(f, "step {step} failed: {source}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
