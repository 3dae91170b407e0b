//! Hamiltonian-generated inner-product metrics for quasi-Hermitian matrix
//! models: construction, validation, regime scans and norm-conserving
//! evolution.
//!
//! Every kernel is generic over [`scalar::Real`]; the aliases below fix the
//! two precisions used in practice.

pub mod double_double;
pub mod evolution;
pub mod linalg;
pub mod metric;
pub mod models;
pub mod report;
pub mod scalar;
pub mod scan;

pub use double_double::DoubleDouble;
pub use scalar::Real;

/// Complex scalar in double precision.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix in double precision.
pub type Matrix = linalg::ComplexMatrix<f64>;
/// Dense complex matrix in double-double precision.
pub type MatrixDD = linalg::ComplexMatrix<DoubleDouble>;
/// State vector in double precision.
pub type State = evolution::StateVector<f64>;
/// Scan report in double precision.
pub type Report = scan::ScanReport<f64>;
