use thiserror::Error;

use crate::qubit::PauliAxis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unphysical Bloch vector: norm {norm} exceeds 1")]
    UnphysicalState { norm: f64 },
    #[error("efficiency {eta} outside (0, 1]")]
    InvalidEfficiency { eta: f64 },
    #[error("efficiency {eta} exceeds the joint-measurability bound {bound}")]
    EfficiencyAboveBound { eta: f64, bound: f64 },
    #[error("axis is not a unit vector (norm {norm})")]
    NonUnitAxis { norm: f64 },
    #[error("joint measurement needs two distinct axes, got {0:?} twice")]
    SameAxis(PauliAxis),
    #[error("binary observable effects are not positive (a0 = {a0}, |a| = {len})")]
    InvalidObservable { a0: f64, len: f64 },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("coin is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("coin state is not normalised (norm² {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("walk program has no steps")]
    EmptyProgram,
    #[error("invalid POVM: min eigenvalue {min_eigenvalue:e}, completeness residual {completeness_residual:e}")]
    InvalidPovm { min_eigenvalue: f64, completeness_residual: f64 },
    #[error("marginal requested on a POVM with opaque labels")]
    UnsupportedMarginal,
    #[error("observable index {index} out of range for labels of arity {arity}")]
    MarginalIndexOutOfRange { index: usize, arity: usize },
    #[error("target element {index} is not rank 1 (second eigenvalue {second_eigenvalue:e})")]
    NotRankOne { index: usize, second_eigenvalue: f64 },
    #[error("need at least two POVM elements, got {0}")]
    TooFewElements(usize),
    #[error("element {index} cannot be extracted from the residual (escape weight {weight} > 1)")]
    Unsatisfiable { index: usize, weight: f64 },
    #[error("compiled program misses the target by {residual:e}")]
    ResidualTooLarge { residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
