//! Wave-front tracking for a two-phase macroscopic traffic model with a
//! flux-limiting point constraint at the origin.
//!
//! The model couples a free phase, where every vehicle drives at the maximal
//! speed V, with a congested phase of Aw-Rascle-Zhang type described by the
//! density rho and the Lagrangian marker w = v + p(rho). A pointwise bound
//! f(u(t, 0±)) <= F on the flux through x = 0 models a fixed obstacle such as
//! a toll gate; enforcing it requires a stationary non-classical shock at the
//! origin on top of the classical wave families.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] - pressure laws, parameters, admissible states, elementary maps;
//! * [`constraint`] - thresholds and trace maps attached to a flux bound F;
//! * [`grid`] - the speed/marker lattices used by the approximate solvers;
//! * [`riemann`] - exact and grid-restricted Riemann solvers;
//! * [`wft`] - the event-driven front-tracking engine and its bookkeeping;
//! * [`entropy`] - entropy pairs, jump-condition and dissipation audits;
//! * [`scenario`] / [`output`] - run descriptions and result files.

pub mod constraint;
pub mod entropy;
pub mod grid;
pub mod model;
mod numerics;
pub mod output;
pub mod riemann;
pub mod scenario;
pub mod wft;

/// Errors shared across the crate.
///
/// Variants map onto the process exit codes used by the command line tool:
/// validation problems exit with 2, guard breaches with 3 and interaction
/// classification mismatches with 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("state outside the admissible region: {0}")]
    OutsideDomain(String),

    #[error("discontinuity speed undefined: left and right densities coincide")]
    DegenerateSlope,

    #[error("flux bound outside the admissible range: {0}")]
    InvalidFluxBound(String),

    #[error("argument outside bracket: {0}")]
    OutOfBracket(String),

    #[error("state not on the current grid: {0}")]
    OffGrid(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("guard breached: {0}")]
    GuardBreach(String),

    #[error("interaction law violated: {0}")]
    InteractionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the command line tool reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GuardBreach(_) => 3,
            Error::InteractionMismatch(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
