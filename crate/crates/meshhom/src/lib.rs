//! Heat conduction on periodic planar lattice graphs and its two-dimensional
//! effective limit.
//!
//! A unit-cell pattern (a small graph drawn in the unit square with opposite
//! boundary points identified) generates, by scaled repetition with period
//! `delta`, a one-dimensional lattice filling a rectangle. This crate
//!
//! * computes the effective 2x2 conductivity tensor of such a lattice purely
//!   from the pattern's topology and edge lengths ([`tensor`]), by two
//!   independent routes (an incidence-matrix solve and a one-element-per-edge
//!   finite element solve of the periodic cell problem),
//! * simulates transient heat conduction both on the fine lattice (1D finite
//!   elements along edges, natural Kirchhoff vertex coupling; [`lattice`],
//!   [`graph_fem`]) and in the effective 2D model ([`fem2d`]), advancing both
//!   with Crank-Nicolson time stepping ([`timestep`]),
//! * and measures how fast the lattice solution approaches the effective one
//!   as `delta` shrinks ([`harness`]), including the slope-corrected gradient
//!   diagnostic built from the cell corrector.
//!
//! The `meshhom` binary exposes the pipeline as `tensor`, `validate`,
//! `simulate` and `converge` subcommands; see the crate README.

pub mod basis;
pub mod cell;
pub mod fem2d;
pub mod fixtures;
pub mod graph_fem;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod tensor;
pub mod timestep;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("pattern not periodic: {0}")]
    NotPeriodic(String),
    #[error("pattern validation failed: {0}")]
    Validation(String),
    #[error("cg did not converge within {iterations} iterations (relative residual {residual:e})")]
    CgDidNotConverge { iterations: usize, residual: f64 },
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("matrix not SPD")]
    NotSpd,
    #[error("pattern violates connectivity assumptions")]
    DegenerateCell,
    #[error("{0}")]
    InvalidInput(String),
    #[error("simulation requires straight edges (pattern has length overrides)")]
    LengthOverrides,
    #[error("reference solution vanishes")]
    ZeroReference,
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
