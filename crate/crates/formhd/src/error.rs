//! Error type shared across the toolkit.

use thiserror::Error;

/// Crate-wide error enum.
///
/// Degree and mesh errors are raised by the calculus operators, thermodynamic
/// domain errors by the equation of state, and the remaining variants by the
/// solver, validator and runner layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh dimension {0} unsupported (this toolkit covers n = 2 and n = 3)")]
    MeshDimension(usize),

    #[error("mesh axis {axis}: {reason}")]
    MeshAxis { axis: usize, reason: String },

    #[error("form degree {degree} out of range on a {n}-dimensional mesh")]
    DegreeRange { degree: usize, n: usize },

    #[error("degree overflow: exterior derivative of a top-degree ({0}-)form")]
    DegreeOverflow(usize),

    #[error("degree underflow: interior product of a 0-form")]
    DegreeUnderflow,

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("operands live on different meshes")]
    MeshMismatch,

    #[error("component shape mismatch: {0}")]
    Shape(String),

    #[error("temperature not positive at node {node:?}: T = {value:.6e}")]
    NonPositiveTemperature { node: Vec<usize>, value: f64 },

    #[error("mass density below floor at node {node:?}: rho = {value:.6e} < {floor:.6e}")]
    DensityFloor {
        node: Vec<usize>,
        value: f64,
        floor: f64,
    },

    #[error("numeric blow-up in {field} at t = {time:.6e} (step {step})")]
    BlowUp { field: String, time: f64, step: u64 },

    #[error("stoichiometric weights do not conserve mass: sum(lambda_a M_a) = {0:.6e}")]
    Stoichiometry(f64),

    #[error("closure validation failed: {0}")]
    ClosureInvalid(String),

    #[error("degenerate sample set: {0}; rerun with a fresh seed or more samples")]
    SampleDegeneracy(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification of an error, shared by the process exit codes of
/// the command line front end and the status codes of the C interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// A scenario, mesh or closure description that can never run.
    Config,
    /// The arithmetic failed mid-run: blow-up, density floor, cold spot.
    Numeric,
    /// A validator rejected an otherwise well-formed input.
    Validation,
    /// Everything else, including I/O.
    Other,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config(_)
            | Error::Snapshot(_)
            | Error::Stoichiometry(_)
            | Error::MeshDimension(_)
            | Error::MeshAxis { .. } => Category::Config,
            Error::BlowUp { .. }
            | Error::DensityFloor { .. }
            | Error::NonPositiveTemperature { .. } => Category::Numeric,
            Error::ClosureInvalid(_) | Error::SampleDegeneracy(_) => Category::Validation,
            _ => Category::Other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
