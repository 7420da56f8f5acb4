//! Noncommutative topological indices for disordered tight-binding
//! insulators and superconductors on finite hypercubic lattices.
//!
//! The library computes integer and Z2-valued topological indices in all ten
//! Altland-Zirnbauer (AZ) symmetry classes from the spectrum of a pair of
//! supersymmetric index operators built out of the Fermi projection and a
//! position-space Dirac (sign) operator.  For clean models the indices are
//! cross-validated against momentum-space Chern and winding numbers, and
//! against real-space commutator-trace formulas.
//!
//! Module layout:
//!
//! * [`clifford`] — gamma matrices, time-reversal operators `C±`, signature table
//! * [`lattice`] — lattice geometry, Dirac operator `D_a`, step functions, cutoffs
//! * [`models`] — Dirac-type tight-binding models, symmetries, disorder, AZ classes
//! * [`spectral`] — eigendecompositions, Fermi projections, flat-band unitary
//! * [`ncindex`] — index operator pairs, compression, near-kernel counting
//! * [`kinvariants`] — Chern / winding invariants in momentum and real space
//! * [`harness`] — experiment configs, CLI commands, result records

pub mod clifford;
pub mod harness;
pub mod kinvariants;
pub mod lattice;
pub mod models;
pub mod ncindex;
pub mod spectral;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used throughout.
pub type CMat = ndarray::Array2<C64>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("kink point has an integer component: {0:?}")]
    KinkOnSite(Vec<f64>),
    #[error("spectral gap closed: {0}")]
    GapClosed(String),
    #[error("Fermi level {e_fermi} collides with eigenvalue {eigenvalue} (tol {tol})")]
    FermiLevelOnSpectrum {
        e_fermi: f64,
        eigenvalue: f64,
        tol: f64,
    },
    #[error("unresolved index: eigenvalues {offending:?} violate the buffer zone (delta {delta})")]
    UnresolvedIndex { offending: Vec<f64>, delta: f64 },
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Maximum absolute value of the entries of `m` (entrywise infinity norm).
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Identity matrix of the given dimension.
pub fn eye(dim: usize) -> CMat {
    ndarray::Array2::eye(dim)
}
