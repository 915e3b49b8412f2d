//! Exact arithmetic for automorphisms of free groups acting on finite covers.
//!
//! The library starts from an automorphism of F_n given by generator images,
//! realizes it as a graph map on a rose, and follows the induced action on
//! chains and homology of finite abelian covering towers. Everything that
//! feeds a verdict is computed over Z or Q; floating point appears only in
//! character specializations and spectral-radius estimates, with pinned
//! tolerances.

pub mod words;
pub mod group_ring;
pub mod graphs;
pub mod transition;
pub mod hull;
pub mod shadow;
pub mod extremal;
pub mod nilpotent;
pub mod spectra;
pub mod pipeline;

pub use words::{FreeAut, IntMatrix, Word};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not an automorphism: {0}")]
    NotAnAutomorphism(String),
    #[error("homology action on the cover must be the identity, got a nontrivial matrix")]
    SigmaNotIdentity,
    #[error("homology action has infinite order where a finite order is required")]
    SigmaInfiniteOrder,
    #[error("{point} is not a hull vertex for the given functional")]
    NotAHullVertex { point: String },
    #[error("cover is not regular: deck group has {found} elements on a fiber of {fiber}")]
    NotRegular { found: usize, fiber: usize },
    #[error("path is not closed")]
    PathNotClosed,
    #[error("map does not lift: generator {generator} leaves the cover subgroup")]
    NoLift { generator: String },
    #[error("budget exceeded: {what} {got} > {limit}")]
    BudgetExceeded { what: &'static str, got: u64, limit: u64 },
    #[error("root finding did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("empty point set has no hull")]
    EmptyHull,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
