//! Reconstruction of quantum density matrices from indirect measurements by
//! quantum relative entropy regularization.

pub mod error;
pub mod fidelity;
pub mod forward;
pub mod hermitian;
pub mod qre;
pub mod random;
pub mod solvers;
pub mod special;
pub mod spectral;

pub use error::{Result, TomoError};
pub use fidelity::{DataGrid, FidelityKind};
pub use forward::{norm_estimate, ForwardModel, HomodyneModel, HomodyneVariant, PinemModel};
pub use hermitian::{trace_inner, HermitianMatrix};
pub use qre::QreContext;
pub use solvers::{cp_solve, duality_gap, fista_solve, solve, Method, SolverConfig, SolverReport, StopReason};
pub use spectral::{apply_spectral, eig_hermitian, floor_eigenvalues, trace_norm, EigenSystem};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/hermitian-matrices.md")]
    pub struct HermitianMatrices;
    #[doc = include_str!("../../../book/src/relative-entropy.md")]
    pub struct RelativeEntropy;
    #[doc = include_str!("../../../book/src/forward-models.md")]
    pub struct ForwardModels;
    #[doc = include_str!("../../../book/src/data-fidelity.md")]
    pub struct DataFidelity;
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub struct Solvers;
}
