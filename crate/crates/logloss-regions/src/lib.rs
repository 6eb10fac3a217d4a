//! Achievable rate-distortion regions under logarithmic loss.
//!
//! This crate computes and cross-validates rate-distortion trade-offs for two
//! families of finite-alphabet distributed compression problems in which the
//! decoder emits *soft* reproductions (probability mass functions) and is
//! charged `log2(1 / q(y))` bits when the realized symbol is `y`:
//!
//! * the CEO problem: `m` encoders observe noisy views `Y_1..Y_m` of a hidden
//!   source `X`, conditionally independent given `X`, and the decoder forms a
//!   belief about `X`;
//! * two-encoder multiterminal coding: each encoder observes one component of
//!   a correlated pair `(Y_1, Y_2)` and the decoder forms beliefs about both.
//!
//! Under log loss the distortion attained by an auxiliary description is a
//! conditional entropy, so both regions reduce to entropy arithmetic over
//! auxiliary channels `p(u_i | y_i, q)`. The modules below layer accordingly:
//!
//! * [`info`]: dense joint pmfs, entropies, mutual information, KL, log loss,
//!   and the auxiliary-channel extension that all region work builds on;
//! * [`search`]: exhaustive simplex-mesh enumeration of auxiliary channels,
//!   lower convex envelopes, and a cached sweep layer;
//! * [`hull`]: exact small-dimension membership and minimization over the
//!   convex hull of swept points (dominance included);
//! * [`polytope`]: supermodular set functions, greedy vertex enumeration, and
//!   the distortion-domination construction for rate-region corner points;
//! * [`ceo`]: CEO instances, symmetric rate-distortion curves, the residual
//!   divergence `epsilon*`, and the closed-form region for `X = (Y_1, Y_2)`;
//! * [`mtsc`]: the two-encoder region, the coupled-CEO tuning argument, and a
//!   sequential outer description with per-vertex domination certificates;
//! * [`gambling`]: side-information doubling rates for jointly and pairwise
//!   constrained gamblers, the gap `Delta`, and maximal correlation bounds;
//! * [`distortion`]: reductions between log loss and arbitrary finite
//!   single-letter distortion measures (beta offsets, lifts, MAP decoding);
//! * [`sources`]: small built-in source constructors shared by tests and the
//!   command-line front end.
//!
//! All information quantities are in bits (base-2 logarithms) with the
//! convention `0 * log 0 = 0`.

pub mod ceo;
pub mod distortion;
pub mod gambling;
pub mod hull;
pub mod info;
pub mod mtsc;
pub mod polytope;
pub mod search;
pub mod sources;

pub use info::{entropy, AuxConfig, Alphabet, Channel, JointPmf, SoftReproduction};
pub use search::SearchGrid;

use thiserror::Error;

/// Errors surfaced by region computations and their input validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pmf sum {sum} deviates from 1 by more than 1e-9")]
    PmfSum { sum: f64 },

    #[error("negative probability mass {value} at flat index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` used more than once")]
    DuplicateAxis(String),

    #[error("channel row {row} sums to {sum}, not 1 within 1e-9")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("encoder {encoder}: |U| = {u} exceeds |Y| = {y}")]
    AuxCardinality { encoder: usize, u: usize, y: usize },

    #[error("mesh denominator {k} is too coarse; need k >= 2")]
    MeshTooCoarse { k: usize },

    #[error("enumeration budget exceeded: {configs} configs > budget {budget}; coarsen the mesh")]
    BudgetExceeded { configs: u128, budget: u64 },

    #[error("set function is not supermodular: witness S={s:#b}, T={t:#b}")]
    NotSupermodular { s: usize, t: usize },

    #[error("{m} encoders exceeds the supported maximum {max}")]
    TooManyEncoders { m: usize, max: usize },

    #[error("distortion {d} lies below the floor {floor} attained by the auxiliaries")]
    DistortionBelowFloor { d: f64, floor: f64 },

    #[error("observations are not conditionally independent given the source: I = {mi} bits")]
    NotConditionallyIndependent { mi: f64 },

    #[error("rate pair violates the standing assumption {detail}")]
    RateAssumption { detail: String },

    #[error("odds must be positive and finite, got {value} at flat index {index}")]
    BadOdds { index: usize, value: f64 },

    #[error("pointwise premise fails at t = {t}: weighted value {lhs} exceeds bound {rhs}")]
    AmplifyPremise { t: f64, lhs: f64, rhs: f64 },

    #[error("coupling parameter {t} lies outside [0, 1]")]
    CouplingParam { t: f64 },

    #[error("reproduction column {column} has no finite distortion entry")]
    NoFiniteEntry { column: usize },

    #[error("distortion entries must be nonnegative, got {value}")]
    NegativeDistortion { value: f64 },

    #[error("cache file is malformed: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Absolute tolerance used when validating that probabilities sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Magnitudes below this are numerical noise for information quantities.
pub const INFO_TOL: f64 = 1e-12;
