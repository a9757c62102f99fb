//! Steady states of dissipative spin chains with symmetry-averaged neural density operators.
//!
//! The dynamics is the XYZ chain with uniform field and uniform single-site decay,
//! integrated exactly with RK4 or approximated variationally by a restricted
//! Boltzmann machine, optionally averaged over the chain's translation and
//! reflection group so every iterate is invariant by construction.

pub mod ansatz;
pub mod checkpoint;
pub mod cli;
pub mod density;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod observables;
pub mod symmetry;
pub mod variational;

pub use ansatz::{evaluate, AnsatzKind, AnsatzSample, InvariantSpace, RbmParameters};
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use hilbert::{BasisPair, SpinConfiguration};
pub use lindblad::{LindbladModel, Liouvillian, SparseOperator};
pub use observables::Magnetization;
pub use symmetry::{build_group, OrbitTable, SitePermutation, SymmetryGroup};
pub use variational::{IterationReport, Scheme, TdvpSettings, VariationalState};
