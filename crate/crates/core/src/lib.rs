//! Exact derivation and numerical evaluation of entropic noncontextuality,
//! Bell, and bilocality inequalities.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`exactgeom`] — arbitrary-precision rational linear systems,
//!   Fourier–Motzkin projection with redundancy removal, and an exact
//!   simplex solver,
//! * [`scenario`] — marginal scenarios (observables, contexts, independence
//!   constraints) and their symmetry groups,
//! * [`entcone`] — the Shannon entropy cone, its projection onto the
//!   entropies of jointly measurable sets, and classification of the
//!   resulting facet inequalities,
//! * [`boxworld`] — no-signaling boxes and marginal models: named families,
//!   entropy vectors, standard inequality evaluation, detector-inefficiency
//!   transforms, and a noncontextuality LP,
//! * [`quantum`] — quantum marginal models (two-qubit, chained, qutrit
//!   five-cycle, two-source swap) built from small dense complex matrices,
//! * [`opt`] — seeded derivative-free maximization (Nelder–Mead with
//!   restarts),
//! * [`distill`] — two-copy wirings of bipartite boxes and the exact
//!   nonlocal-content linear program.

pub mod boxworld;
pub mod distill;
pub mod entcone;
pub mod exactgeom;
pub mod opt;
pub mod quantum;
pub mod scenario;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation received degenerate input (e.g. an identically zero
    /// expression where a direction was required).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A coordinate name was used that the enclosing system never declared.
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),

    /// A parameter fell outside its documented domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// An object had the wrong shape for the requested operation
    /// (wrong scenario, wrong alphabet, wrong context structure).
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A projection or solver exceeded its configured resource budget.
    /// The message carries a report of the intermediate sizes reached.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// A probability table failed validation (negative entries, bad
    /// normalization, or inconsistent overlapping marginals).
    #[error("invalid box: {0}")]
    InvalidBox(String),

    /// A problem instance was larger than the documented size cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
