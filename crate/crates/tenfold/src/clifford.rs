//! Gamma matrices, time-reversal operators `C±`, and the signature table.
//!
//! The `2n+1` gamma matrices acting on `C^(2^n)` are built as tensor-product
//! strings of Pauli matrices:
//!
//! ```text
//! γ^(2m-1) = σ0^⊗(m-1) ⊗ σ1 ⊗ σ3^⊗(n-m)
//! γ^(2m)   = σ0^⊗(m-1) ⊗ σ2 ⊗ σ3^⊗(n-m)     (m = 1..n)
//! γ^(2n+1) = σ3^⊗n
//! ```
//!
//! The two real unitaries `C+` and `C-` are alternating `σ1/σ2` strings of
//! length `n`, starting with `σ1` and `σ2` respectively.  Together with
//! complex conjugation `K` they implement time reversal on the gamma
//! matrices:
//!
//! ```text
//! C+ γ^(j) C+ = (-1)^(n+1) conj(γ^(j))   for j = 1..2n
//! C- γ^(j) C- = (-1)^n     conj(γ^(j))   for j = 1..2n+1
//! ```

use ndarray::linalg::kron;

use crate::{eye, C64, CMat, Error, Result};

/// Largest supported half-dimension; the matrices have dimension `2^n`.
pub const MAX_N: usize = 4;

/// Pauli matrix `σ_i` for `i ∈ {0,1,2,3}`.
pub fn pauli(i: usize) -> CMat {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    match i {
        0 => ndarray::arr2(&[[l, o], [o, l]]),
        1 => ndarray::arr2(&[[o, l], [l, o]]),
        2 => ndarray::arr2(&[[o, -im], [im, o]]),
        3 => ndarray::arr2(&[[l, o], [o, -l]]),
        _ => panic!("pauli index must be 0..3"),
    }
}

/// Kronecker product of a list of Pauli labels, left factor outermost.
fn pauli_string(labels: &[usize]) -> CMat {
    let mut m = eye(1);
    for &l in labels {
        m = kron(&m, &pauli(l));
    }
    m
}

/// The `2n+1` gamma matrices on `C^(2^n)` together with the time-reversal
/// operators `C±`.
#[derive(Debug, Clone)]
pub struct GammaSet {
    /// Half-dimension: the set serves spatial dimensions `d = 2n` and `d = 2n+1`.
    pub n: usize,
    /// Matrix dimension `2^n`.
    pub dim: usize,
    /// `γ^(1) .. γ^(2n+1)` in order.
    pub gammas: Vec<CMat>,
    /// Real unitary `C+` (alternating `σ1 σ2 σ1 …` string of length `n`).
    pub c_plus: CMat,
    /// Real unitary `C-` (alternating `σ2 σ1 σ2 …` string of length `n`).
    pub c_minus: CMat,
}

impl GammaSet {
    /// `γ^(j)` with the conventional 1-based index `j ∈ {1..2n+1}`.
    pub fn gamma(&self, j: usize) -> &CMat {
        assert!(
            (1..=2 * self.n + 1).contains(&j),
            "gamma index {j} out of range 1..{}",
            2 * self.n + 1
        );
        &self.gammas[j - 1]
    }

    /// The diagonal chirality matrix `γ^(2n+1) = σ3^⊗n`.
    pub fn chirality(&self) -> &CMat {
        &self.gammas[2 * self.n]
    }

    /// Apply the anti-linear map `C± K` to a vector: conjugate, then multiply
    /// by the matrix.  Anti-linear operators are only ever exposed through
    /// this closure-style form so they cannot be mistaken for linear maps.
    pub fn apply_c_k(&self, plus: bool, v: &ndarray::Array1<C64>) -> ndarray::Array1<C64> {
        let c = if plus { &self.c_plus } else { &self.c_minus };
        c.dot(&v.mapv(|z| z.conj()))
    }
}

/// Build the gamma matrices and `C±` for half-dimension `n` (`1 ≤ n ≤ 4`).
pub fn build_gamma_set(n: usize) -> Result<GammaSet> {
    if n < 1 || n > MAX_N {
        return Err(Error::Dimension(format!(
            "gamma set half-dimension n = {n} outside 1..={MAX_N}"
        )));
    }
    let mut gammas = Vec::with_capacity(2 * n + 1);
    for m in 1..=n {
        // σ0^(m-1) ⊗ σ1|σ2 ⊗ σ3^(n-m)
        for mid in [1usize, 2] {
            let mut labels = vec![0; m - 1];
            labels.push(mid);
            labels.extend(std::iter::repeat(3).take(n - m));
            gammas.push(pauli_string(&labels));
        }
    }
    gammas.push(pauli_string(&vec![3; n]));

    let c_plus: Vec<usize> = (0..n).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
    let c_minus: Vec<usize> = (0..n).map(|i| if i % 2 == 0 { 2 } else { 1 }).collect();

    Ok(GammaSet {
        n,
        dim: 1 << n,
        gammas,
        c_plus: pauli_string(&c_plus),
        c_minus: pauli_string(&c_minus),
    })
}

/// Trace of an ordered product of gamma matrices,
/// `tr(γ^(i1) γ^(i2) … γ^(ik))`.
///
/// For a permutation `(σ1..σ2n+1)` of `(1..2n+1)` the result equals
/// `(2i)^n (-1)^σ` (the volume element of this construction is
/// `γ^(1)⋯γ^(2n+1) = i^n·I`); any odd product of fewer than `2n+1` distinct
/// factors traces to zero.
pub fn gamma_trace_product(gs: &GammaSet, indices: &[usize]) -> Result<C64> {
    if indices.is_empty() {
        return Err(Error::Dimension("empty gamma index list".into()));
    }
    for &j in indices {
        if j < 1 || j > 2 * gs.n + 1 {
            return Err(Error::Dimension(format!(
                "gamma index {j} out of range 1..{}",
                2 * gs.n + 1
            )));
        }
    }
    let mut m = gs.gamma(indices[0]).clone();
    for &j in &indices[1..] {
        m = m.dot(gs.gamma(j));
    }
    Ok(m.diag().sum())
}

/// One row of the signature table: the signs governing how the anti-unitaries
/// `C± K` interact with `γ^(2n+1)` and the Dirac operator in even dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureRow {
    /// Even spatial dimension the row belongs to.
    pub d: usize,
    /// sgn (C+K)².
    pub sgn_cpk2: i8,
    /// sgn (C-K)².
    pub sgn_cmk2: i8,
    /// sgn γ^(2n+1): `+1` if `C±K` commutes with `γ^(2n+1)`, `-1` if it anticommutes.
    pub sgn_gamma_last: i8,
    /// sgn₊(D_a): commutation sign of `C+K` with the Dirac operator.
    pub sgn_plus_d: i8,
    /// sgn₋(D_a): commutation sign of `C-K` with the Dirac operator.
    pub sgn_minus_d: i8,
}

/// Evaluate the signature row for even `d`; periodic in `d` with period 8.
pub fn real_structure_signs(d_even: usize) -> Result<SignatureRow> {
    if d_even == 0 || d_even % 2 != 0 {
        return Err(Error::Dimension(format!(
            "signature table requires positive even d, got {d_even}"
        )));
    }
    let n = d_even / 2;
    let neg1 = |k: usize| -> i8 { if k % 2 == 0 { 1 } else { -1 } };
    // sgn (C+K)² = (-1)^ℓ for n = 2ℓ, (-1)^(ℓ-1) for n = 2ℓ-1.
    let sgn_cpk2 = if n % 2 == 0 {
        neg1(n / 2)
    } else {
        neg1((n + 1) / 2 + 1)
    };
    // sgn (C-K)² = (-1)^ℓ with ℓ = ⌈n/2⌉.
    let sgn_cmk2 = neg1((n + 1) / 2);
    Ok(SignatureRow {
        d: d_even,
        sgn_cpk2,
        sgn_cmk2,
        sgn_gamma_last: neg1(n),
        sgn_plus_d: neg1(n + 1),
        sgn_minus_d: neg1(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::max_abs;
    use ndarray::Array2;

    const TOL: f64 = 1e-13;

    fn anticommutator(a: &CMat, b: &CMat) -> CMat {
        a.dot(b) + b.dot(a)
    }

    #[test]
    fn n1_matches_pauli_matrices() {
        let gs = build_gamma_set(1).unwrap();
        assert_eq!(max_abs(&(gs.gamma(1) - &pauli(1))), 0.0);
        assert_eq!(max_abs(&(gs.gamma(2) - &pauli(2))), 0.0);
        assert_eq!(max_abs(&(gs.gamma(3) - &pauli(3))), 0.0);
        assert_eq!(max_abs(&(&gs.c_plus - &pauli(1))), 0.0);
        assert_eq!(max_abs(&(&gs.c_minus - &pauli(2))), 0.0);
    }

    #[test]
    fn anticommutation_relations_all_n() {
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            let id = eye(gs.dim);
            for i in 1..=2 * n + 1 {
                for j in i..=2 * n + 1 {
                    let expect = if i == j {
                        id.mapv(|z| z * 2.0)
                    } else {
                        Array2::zeros((gs.dim, gs.dim))
                    };
                    let resid = anticommutator(gs.gamma(i), gs.gamma(j)) - &expect;
                    assert!(
                        max_abs(&resid) < TOL,
                        "n={n} {{γ{i},γ{j}}} residual {}",
                        max_abs(&resid)
                    );
                }
            }
        }
    }

    #[test]
    fn gammas_hermitian_and_chirality_diagonal() {
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            for j in 1..=2 * n + 1 {
                let g = gs.gamma(j);
                let herm = g - &g.t().mapv(|z| z.conj());
                assert!(max_abs(&herm) < TOL, "γ{j} not Hermitian at n={n}");
            }
            let chi = gs.chirality();
            for ((r, c), z) in chi.indexed_iter() {
                if r == c {
                    assert!((z.im.abs() < TOL) && ((z.re.abs() - 1.0).abs() < TOL));
                } else {
                    assert!(z.norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn c_operators_unitary_with_definite_reality() {
        // A σ1/σ2 tensor string is entrywise real when it contains an even
        // number of σ2 factors and purely imaginary otherwise; either way it
        // is unitary and C·conj(C) = ±I is a real sign.
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            for c in [&gs.c_plus, &gs.c_minus] {
                let all_real = c.iter().all(|z| z.im.abs() < TOL);
                let all_imag = c.iter().all(|z| z.re.abs() < TOL);
                assert!(all_real || all_imag, "C has mixed reality at n={n}");
                let utu = c.t().mapv(|z| z.conj()).dot(c) - eye(gs.dim);
                assert!(max_abs(&utu) < TOL, "C not unitary at n={n}");
            }
        }
    }

    #[test]
    fn c_conjugation_relations() {
        // C+ γ^(j) C+ = (-1)^(n+1) conj(γ^(j)) for j ≤ 2n, and (-1)^n for j = 2n+1;
        // C- γ^(j) C- = (-1)^n conj(γ^(j)) for every j.
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            let sp = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let sm = if n % 2 == 0 { 1.0 } else { -1.0 };
            for j in 1..=2 * n + 1 {
                let g = gs.gamma(j);
                let gc = g.mapv(|z| z.conj());
                let plus_sign = if j <= 2 * n { sp } else { sm };
                let lhs_p = gs.c_plus.dot(g).dot(&gs.c_plus);
                let resid_p = &lhs_p - &gc.mapv(|z| z * plus_sign);
                assert!(max_abs(&resid_p) < TOL, "C+ relation fails n={n} j={j}");
                let lhs_m = gs.c_minus.dot(g).dot(&gs.c_minus);
                let resid_m = &lhs_m - &gc.mapv(|z| z * sm);
                assert!(max_abs(&resid_m) < TOL, "C- relation fails n={n} j={j}");
            }
        }
    }

    #[test]
    fn c_plus_c_minus_product_is_chirality() {
        // C+ C- = γ^(2n+1) for even n and i·γ^(2n+1) for odd n.
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            let phase = if n % 2 == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 1.0)
            };
            let resid = gs.c_plus.dot(&gs.c_minus) - gs.chirality().mapv(|z| z * phase);
            assert!(max_abs(&resid) < TOL, "C+C- relation fails at n={n}");
        }
    }

    #[test]
    fn trace_identity_simple_cases() {
        let gs = build_gamma_set(1).unwrap();
        // tr σ1σ2σ3 = tr iI = 2i
        let t = gamma_trace_product(&gs, &[1, 2, 3]).unwrap();
        assert!((t - C64::new(0.0, 2.0)).norm() < TOL);
        // single factor traces to zero
        for j in 1..=3 {
            assert!(gamma_trace_product(&gs, &[j]).unwrap().norm() < TOL);
        }
        // fewer than 2n+1 distinct factors, odd count
        let gs2 = build_gamma_set(2).unwrap();
        assert!(gamma_trace_product(&gs2, &[1, 2, 3]).unwrap().norm() < TOL);
        assert!(gamma_trace_product(&gs2, &[2]).unwrap().norm() < TOL);
    }

    /// Sign of a permutation given as a slice of distinct 1-based entries.
    fn perm_sign(p: &[usize]) -> f64 {
        let mut sign = 1.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    sign = -sign;
                }
            }
        }
        sign
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn trace_identity_full_permutations() {
        // For this tensor-product construction γ^(1)⋯γ^(2n+1) = i^n·I, so
        // tr γ^(σ1)…γ^(σ2n+1) = (2i)^n (-1)^σ; checked against the dense
        // matrix product for every permutation at n = 1 and n = 2.
        for n in 1..=2usize {
            let gs = build_gamma_set(n).unwrap();
            let base: Vec<usize> = (1..=2 * n + 1).collect();
            let pref = C64::new(0.0, 2.0).powu(n as u32);
            for p in permutations(&base) {
                let expect = pref * perm_sign(&p);
                let got = gamma_trace_product(&gs, &p).unwrap();
                assert!(
                    (got - expect).norm() < 1e-12,
                    "n={n} perm {p:?}: got {got}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn signature_rows_match_table() {
        // (sgn(C+K)², sgn(C-K)², sgn γ^(2n+1), sgn₊(D), sgn₋(D))
        let expected = [
            (2, [1, -1, -1, 1, -1]),
            (4, [-1, -1, 1, -1, 1]),
            (6, [-1, 1, -1, 1, -1]),
            (8, [1, 1, 1, -1, 1]),
        ];
        for (d, row) in expected {
            let s = real_structure_signs(d).unwrap();
            assert_eq!(
                [
                    s.sgn_cpk2,
                    s.sgn_cmk2,
                    s.sgn_gamma_last,
                    s.sgn_plus_d,
                    s.sgn_minus_d
                ],
                row,
                "signature row mismatch at d={d}"
            );
        }
        // Bott periodicity: d = 10 repeats the d = 2 row.
        let s10 = real_structure_signs(10).unwrap();
        let s2 = real_structure_signs(2).unwrap();
        assert_eq!(
            (s10.sgn_cpk2, s10.sgn_cmk2, s10.sgn_gamma_last, s10.sgn_plus_d, s10.sgn_minus_d),
            (s2.sgn_cpk2, s2.sgn_cmk2, s2.sgn_gamma_last, s2.sgn_plus_d, s2.sgn_minus_d)
        );
        assert!(real_structure_signs(3).is_err());
    }

    #[test]
    fn signature_rows_match_matrix_evaluation() {
        // Independent oracle: (C±K)² = C± conj(C±), so the analytic signs
        // must match that matrix product for the explicit matrices.
        for n in 1..=MAX_N {
            let gs = build_gamma_set(n).unwrap();
            let s = real_structure_signs(2 * n).unwrap();
            for (c, sign) in [(&gs.c_plus, s.sgn_cpk2), (&gs.c_minus, s.sgn_cmk2)] {
                let sq = c.dot(&c.mapv(|z| z.conj()));
                let resid = &sq - &eye(gs.dim).mapv(|z| z * f64::from(sign));
                assert!(max_abs(&resid) < TOL, "(C K)² sign mismatch at n={n}");
            }
            // Anti-linear check on basis vectors via apply_c_k.
            for plus in [true, false] {
                let sign = if plus { s.sgn_cpk2 } else { s.sgn_cmk2 };
                for b in 0..gs.dim {
                    let mut v = ndarray::Array1::zeros(gs.dim);
                    v[b] = C64::new(1.0, 0.0);
                    let twice = gs.apply_c_k(plus, &gs.apply_c_k(plus, &v));
                    let resid = &twice - &v.mapv(|z| z * f64::from(sign));
                    let r = resid.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(r < TOL);
                }
            }
        }
    }

    #[test]
    fn build_gamma_set_rejects_bad_n() {
        assert!(build_gamma_set(0).is_err());
        assert!(build_gamma_set(MAX_N + 1).is_err());
    }

    #[test]
    fn gamma_trace_product_rejects_bad_index() {
        let gs = build_gamma_set(1).unwrap();
        assert!(gamma_trace_product(&gs, &[]).is_err());
        assert!(gamma_trace_product(&gs, &[4]).is_err());
    }
}
