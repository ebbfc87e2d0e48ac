pub mod clifford;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod hilbert;
pub mod io;
pub mod jgroup;
pub mod linalg;
pub mod matrix_basis;
pub mod moyal;
pub mod symmetry;
pub mod sparse;
pub mod suite;

pub use error::{HdqError, Result};
pub use hilbert::{
    combine, commutant, example_algebra, full_matrix, group_algebra, AxiomReport, CombineMode,
    FiniteHilbertAlgebra, HilbertTol, MultiplierPair, OperatorSubspace, Side, SolveMethod,
};
pub use linalg::{CMat, CVec, C64};
