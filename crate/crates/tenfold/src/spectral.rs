//! Hermitian eigendecompositions, Fermi projections, spectral gaps, and the
//! flat-band unitary `U = 1 − 2P_F`.
//!
//! The Fermi projection is computed from a full dense eigendecomposition
//! rather than a contour integral: at the matrix sizes this crate targets the
//! dense route is exact, simple, and yields the spectral gap for free.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::{C64, CMat, Error, Result};

/// Result of a dense Hermitian eigendecomposition, `H = V Λ V†` with
/// eigenvalues ascending and `V` unitary (eigenvectors in columns).
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: CMat,
}

/// Dense Hermitian eigendecomposition.
///
/// The LAPACK backend returns the eigenvector matrix in a conjugated
/// orientation for complex input (column `i` holds the conjugate of the
/// eigenvector); this wrapper restores the standard convention, so that
/// `eigenvectors.column(i)` is the eigenvector of `eigenvalues[i]`.  All
/// eigendecompositions in the crate go through here.
pub fn eigh(h: &CMat) -> Result<EigDecomp> {
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    Ok(EigDecomp {
        eigenvalues: vals,
        eigenvectors: vecs.mapv(|z| z.conj()),
    })
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reconstruction `V Λ V†`; test utility.
    pub fn reconstruct(&self) -> CMat {
        let scaled: Vec<Array1<C64>> = self
            .eigenvalues
            .iter()
            .zip(self.eigenvectors.columns())
            .map(|(&l, c)| c.mapv(|z| z * l))
            .collect();
        let mut m: CMat = Array2::zeros((self.dim(), self.dim()));
        for (i, col) in scaled.iter().enumerate() {
            for r in 0..self.dim() {
                for c in 0..self.dim() {
                    m[(r, c)] += col[r] * self.eigenvectors[(c, i)].conj();
                }
            }
        }
        m
    }
}

/// Spectral projection onto eigenstates below the Fermi energy.
#[derive(Debug, Clone)]
pub struct FermiProjection {
    /// Dense Hermitian idempotent `P = Σ_{ε_i < E_F} v_i v_i†`.
    pub p: CMat,
    /// Isometry whose columns are the occupied eigenvectors (`P = V_occ V_occ†`).
    pub occupied: CMat,
    pub e_fermi: f64,
    /// Distance from `E_F` to the nearest eigenvalue.
    pub gap: f64,
    pub n_occupied: usize,
}

/// Build the Fermi projection at `e_fermi`, refusing if any eigenvalue lies
/// within `gap_tol` of the Fermi level.
pub fn fermi_projection(eig: &EigDecomp, e_fermi: f64, gap_tol: f64) -> Result<FermiProjection> {
    let mut gap = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        let d = (l - e_fermi).abs();
        if d < gap {
            gap = d;
        }
        if d < gap_tol {
            return Err(Error::FermiLevelOnSpectrum {
                e_fermi,
                eigenvalue: l,
                tol: gap_tol,
            });
        }
    }
    let n_occupied = eig.eigenvalues.iter().filter(|&&l| l < e_fermi).count();
    let occupied = eig
        .eigenvectors
        .slice(ndarray::s![.., ..n_occupied])
        .to_owned();
    let p = occupied.dot(&occupied.t().mapv(|z| z.conj()));
    Ok(FermiProjection {
        p,
        occupied,
        e_fermi,
        gap,
        n_occupied,
    })
}

/// Default guard for an eigenvalue colliding with the Fermi level.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// The flat-band unitary `U = 1 − 2P`; Hermitian involution, equal to
/// `P₊ − P₋` at `E_F = 0`.
pub fn flat_band_unitary(p: &FermiProjection) -> CMat {
    let dim = p.p.nrows();
    let mut u = p.p.mapv(|z| z * -2.0);
    for i in 0..dim {
        u[(i, i)] += 1.0;
    }
    u
}

/// Distances from `e_fermi` to the nearest eigenvalue below and above.
pub fn spectral_gap(eig: &EigDecomp, e_fermi: f64) -> (f64, f64) {
    let mut below = f64::INFINITY;
    let mut above = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        if l < e_fermi {
            below = below.min(e_fermi - l);
        } else {
            above = above.min(l - e_fermi);
        }
    }
    (below, above)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{eye, max_abs};

    #[test]
    fn eigh_convention_regression() {
        // Guard against the backend's conjugated eigenvector orientation:
        // every returned column must satisfy H v = λ v directly.
        let h = ndarray::arr2(&[
            [C64::new(0.8, 0.0), C64::new(0.3, 0.5)],
            [C64::new(0.3, -0.5), C64::new(-0.8, 0.0)],
        ]);
        let eig = eigh(&h).unwrap();
        for i in 0..2 {
            let v = eig.eigenvectors.column(i).to_owned();
            let resid = h.dot(&v) - v.mapv(|z| z * eig.eigenvalues[i]);
            let r = resid.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(r < 1e-13, "eigenvector column {i} does not satisfy Hv=λv: {r}");
        }
        // unitarity and reconstruction
        let v = &eig.eigenvectors;
        assert!(max_abs(&(v.t().mapv(|z| z.conj()).dot(v) - eye(2))) < 1e-13);
        assert!(max_abs(&(eig.reconstruct() - &h)) < 1e-13);
        // ascending order
        assert!(eig.eigenvalues[0] <= eig.eigenvalues[1]);
    }

    #[test]
    fn fermi_projection_diagonal_example() {
        let h = ndarray::arr2(&[
            [C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ]);
        let eig = eigh(&h).unwrap();
        let p = fermi_projection(&eig, 0.0, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(p.n_occupied, 1);
        assert!((p.p[(0, 0)].re - 1.0).abs() < 1e-13);
        assert!(p.p[(1, 1)].norm() < 1e-13);
        assert!((p.gap - 1.0).abs() < 1e-13);
        let (below, above) = spectral_gap(&eig, 0.0);
        assert!((below - 1.0).abs() < 1e-13 && (above - 1.0).abs() < 1e-13);

        // All eigenvalues above E_F → P = 0; flat-band unitary = I.
        let empty = fermi_projection(&eig, -2.0, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(empty.n_occupied, 0);
        assert!(max_abs(&empty.p) < 1e-13);
        assert!(max_abs(&(flat_band_unitary(&empty) - eye(2))) < 1e-13);

        // collision guard
        assert!(matches!(
            fermi_projection(&eig, 1.0, 1e-8),
            Err(Error::FermiLevelOnSpectrum { .. })
        ));
    }

    #[test]
    fn projection_idempotent_hermitian_random() {
        // deterministic pseudo-random Hermitian matrix
        let n = 24;
        let raw = ndarray::Array2::from_shape_fn((n, n), |(i, j)| {
            C64::new(((i * 31 + j * 17) % 13) as f64 - 6.0, ((i * 7 + j * 29) % 11) as f64 - 5.0)
        });
        let h = (&raw + &raw.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let eig = eigh(&h).unwrap();
        // place E_F in the widest spectral gap so the collision guard stays quiet
        let (k, width) = (0..n - 1)
            .map(|i| (i, eig.eigenvalues[i + 1] - eig.eigenvalues[i]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let ef = (eig.eigenvalues[k] + eig.eigenvalues[k + 1]) / 2.0;
        let p = fermi_projection(&eig, ef, width / 10.0).unwrap();
        assert!(max_abs(&(p.p.dot(&p.p) - &p.p)) < 1e-11);
        assert!(max_abs(&(&p.p - &p.p.t().mapv(|z| z.conj()))) < 1e-12);
        // P commutes with H
        let comm = p.p.dot(&h) - h.dot(&p.p);
        assert!(max_abs(&comm) < 1e-9 * max_abs(&h));
        // trace = occupation count
        let tr: C64 = p.p.diag().sum();
        assert!((tr.re - p.n_occupied as f64).abs() < 1e-8 && tr.im.abs() < 1e-10);
        // U² = I and U† = U
        let u = flat_band_unitary(&p);
        assert!(max_abs(&(u.dot(&u) - eye(n))) < 1e-11);
        assert!(max_abs(&(&u - &u.t().mapv(|z| z.conj()))) < 1e-11);
    }
}
