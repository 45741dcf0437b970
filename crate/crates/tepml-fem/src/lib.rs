//! Trilinear hexahedral finite elements for the PML-truncated thermoelastic
//! scattering problem, with a direct sparse solver.

pub mod assembly;
pub mod dump;
pub mod error;
pub mod mesh;
pub mod problem;
pub mod solver;

pub use assembly::{assemble, BlockMatrix, FormKind};
pub use error::{FemError, Result};
pub use mesh::{Extent, HexMesh, NodeTag, Region};
pub use solver::{DofMap, Factorization, SolverOptions, SolverStats};
pub use problem::{DiscreteField, OuterData, Solution, Symmetry, TractionRecovery};
