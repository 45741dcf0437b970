//! Thermoelastic uniaxial PML building blocks: material wavenumbers, complex
//! coordinate stretching, the 4×4 fundamental solution (plain and
//! stretched) and boundary layer potentials on cuboids.

pub mod dual;
pub mod error;
pub mod fundsol;
pub mod gauss;
pub mod material;
pub mod pml;
pub mod potentials;

pub use error::{Error, Result};
pub use fundsol::{apply_r, decay_envelope, f_lambda_derivs, Mat4, MatrixField4, ThermoelasticKernel};
pub use material::{characteristic_roots, check_pml_constraints, derive_coupling, ConstraintReport, MaterialParams, WaveNumbers};
pub use num_complex::Complex64 as C64;
pub use pml::{PmlMatrices, PmlProfile, StretchedPoint};
pub use potentials::{BoundaryData, ExactField, FieldSample, PointSource, SurfaceQuadrature};
