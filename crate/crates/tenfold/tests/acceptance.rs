//! End-to-end acceptance suite.
//!
//! Eleven cross-validation criteria, each printed as one pass/fail line.
//! They are run sequentially inside a single test so that the heavyweight
//! three-dimensional pipelines never run concurrently.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::time::Instant;

use ndarray::Array2;

use tenfold::clifford::{real_structure_signs, MAX_N};
use tenfold::harness::{clifford_selftest, full_pipeline, linear_response_1d};
use tenfold::kinvariants::{
    chern_momentum, chern_realspace_step, model_unit_field, sphere_area, winding_unitvector,
    BZGrid,
};
use tenfold::lattice::{
    dirac_gammas, dirac_operator, dirac_projection, Boundary, KinkPoint, LatticeSpec,
};
use tenfold::models::{
    apply_disorder, build_dirac_lattice_model, build_doubled_model, classify,
    dirac_model_internal_dim, CAZClass, DisorderKind, Doubling, ModelParams, TightBindingModel,
};
use tenfold::ncindex::{
    build_index_operators, exact_finite_volume_vanishing_check, image_rule_for, integer_index,
    kind_for_model, lift_outer, perturbation_norm_scan, z2_index,
    IndexPipelineOptions, SUSY_TOL,
};
use tenfold::spectral::{eigh, fermi_projection, DEFAULT_GAP_TOL};
use tenfold::{C64, CMat};

type Check = fn() -> Result<String, String>;

fn dirac_model(d: usize, l: usize, m0: f64, boundary: Boundary) -> TightBindingModel {
    let spec = LatticeSpec::cubic(d, l, boundary, dirac_model_internal_dim(d)).unwrap();
    build_dirac_lattice_model(&spec, &vec![1.0; d], &vec![1.0; d], m0).unwrap()
}

fn dirac_params(d: usize, m0: f64) -> ModelParams {
    ModelParams {
        d,
        t_s: vec![1.0; d],
        t_c: vec![1.0; d],
        m0,
        coupling: None,
        disorder_w: 0.0,
        disorder_seed: None,
    }
}

// --- 1. Clifford construction ---------------------------------------------

fn c01_clifford() -> Result<String, String> {
    let t0 = Instant::now();
    let checks = clifford_selftest().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for c in &checks {
        worst = worst
            .max(c.anticommutation)
            .max(c.c_conjugation)
            .max(c.signature_matrix);
    }
    // the sign table must come out exact, not merely small
    for n in 1..=MAX_N {
        let row = real_structure_signs(2 * n).map_err(|e| e.to_string())?;
        let expected: [i8; 5] = match 2 * n {
            2 => [1, -1, -1, 1, -1],
            4 => [-1, -1, 1, -1, 1],
            6 => [-1, 1, -1, 1, -1],
            8 => [1, 1, 1, -1, 1],
            _ => unreachable!(),
        };
        let got = [
            row.sgn_cpk2,
            row.sgn_cmk2,
            row.sgn_gamma_last,
            row.sgn_plus_d,
            row.sgn_minus_d,
        ];
        if got != expected {
            return Err(format!("sign row mismatch at n = {n}: {got:?} vs {expected:?}"));
        }
    }
    let elapsed = t0.elapsed();
    if worst >= 1e-13 {
        return Err(format!("worst residual {worst:.2e} ≥ 1e-13"));
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return Err(format!("took {:.2} s ≥ 1 s", elapsed.as_secs_f64()));
    }
    Ok(format!(
        "n = 1..{MAX_N} residuals {worst:.1e}, sign table exact, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

// --- 2. Sphere constants ---------------------------------------------------

fn c02_spheres() -> Result<String, String> {
    let s2 = sphere_area(2);
    let s3 = sphere_area(3);
    let e2 = (s2 - 4.0 * std::f64::consts::PI).abs();
    let e3 = (s3 - 2.0 * std::f64::consts::PI.powi(2)).abs();
    if e2 > 1e-14 || e3 > 1e-14 {
        return Err(format!("|S²| error {e2:.1e}, |S³| error {e3:.1e}"));
    }
    Ok(format!("|S²| = 4π and |S³| = 2π² to {:.0e}", e2.max(e3).max(1e-16)))
}

// --- 3. Supersymmetric pair identities -------------------------------------

fn c03_susy() -> Result<String, String> {
    let mut worst_susy = 0.0f64;
    let mut worst_sym = 0.0f64;
    let mut trace_d2 = f64::NAN;
    for (d, l, m0) in [(1usize, 48usize, 0.5f64), (2, 16, 1.0), (3, 6, 2.0)] {
        let model = dirac_model(d, l, m0, Boundary::Periodic);
        let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
        let rule = image_rule_for(&model.spec);
        let (gammas, _) = dirac_gammas(d).map_err(|e| e.to_string())?;
        let dirac = dirac_operator(&model.spec, &gammas, &kink, rule).map_err(|e| e.to_string())?;
        let eig = eigh(&model.h).map_err(|e| e.to_string())?;
        let p = fermi_projection(&eig, 0.0, DEFAULT_GAP_TOL).map_err(|e| e.to_string())?;
        let pair = build_index_operators(&p, &dirac, model.syms.s.as_ref(), kind_for_model(&model))
            .map_err(|e| e.to_string())?;
        let (r1, r2) = pair.susy_residuals();
        worst_susy = worst_susy.max(r1).max(r2);
        let vanish = exact_finite_volume_vanishing_check(&pair).map_err(|e| e.to_string())?;
        worst_sym = worst_sym.max(vanish.spectrum_asymmetry);
        if d == 2 {
            trace_d2 = vanish.signed_trace;
        }
    }
    if worst_susy >= SUSY_TOL {
        return Err(format!("pair identity residual {worst_susy:.2e} ≥ {SUSY_TOL:.0e}"));
    }
    if worst_sym >= 1e-9 {
        return Err(format!("spectrum asymmetry {worst_sym:.2e} ≥ 1e-9"));
    }
    if trace_d2 >= 1e-8 {
        return Err(format!("|tr A^(2n+1)| = {trace_d2:.2e} ≥ 1e-8 at d = 2"));
    }
    Ok(format!(
        "d ∈ {{1,2,3}}: pair residuals {worst_susy:.1e}, spectrum symmetry {worst_sym:.1e}, \
         |tr A^(2n+1)| = {trace_d2:.1e}"
    ))
}

// --- 4. Even-dimensional oracle equivalence --------------------------------

fn c04_even_oracles() -> Result<String, String> {
    let grid = BZGrid::new(2, 64).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for (m0, expect_abs) in [(-1.0f64, 1i64), (1.0, 1), (3.0, 0)] {
        let c_momentum = chern_momentum(&dirac_params(2, m0), &grid).map_err(|e| e.to_string())?;
        let c_int = c_momentum.round() as i64;
        if (c_momentum - c_int as f64).abs() > 1e-6 {
            return Err(format!("momentum Chern {c_momentum} not an integer at m0 = {m0}"));
        }

        let open = dirac_model(2, 24, m0, Boundary::Open);
        let kink = KinkPoint::center(&open.spec).map_err(|e| e.to_string())?;
        let eig = eigh(&open.h).map_err(|e| e.to_string())?;
        let p = fermi_projection(&eig, 0.0, DEFAULT_GAP_TOL).map_err(|e| e.to_string())?;
        let c_step =
            chern_realspace_step(&open.spec, &p.p, &kink, None).map_err(|e| e.to_string())?;
        if (c_step - c_int as f64).abs() > 0.05 {
            return Err(format!(
                "step Chern {c_step:.4} disagrees with momentum value {c_int} at m0 = {m0}"
            ));
        }

        let periodic = dirac_model(2, 16, m0, Boundary::Periodic);
        let kink = KinkPoint::center(&periodic.spec).map_err(|e| e.to_string())?;
        let out = full_pipeline(&periodic, &kink, 0.2, 4.0, 0.0).map_err(|e| e.to_string())?;
        let idx = integer_index(&out.report).map_err(|e| e.to_string())?;
        if idx != c_int {
            return Err(format!("spectral index {idx} ≠ momentum Chern {c_int} at m0 = {m0}"));
        }
        if c_int.abs() != expect_abs {
            return Err(format!("|C| = {} ≠ {expect_abs} at m0 = {m0}", c_int.abs()));
        }
        summary.push(format!("m0 = {m0}: C = {c_int}"));
    }
    Ok(format!("momentum = step = spectral; {}", summary.join(", ")))
}

// --- 5. Odd-dimensional chiral oracle equivalence --------------------------

fn c05_odd_oracles() -> Result<String, String> {
    let grid = BZGrid::new(1, 512).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (m0, expect_abs) in [(0.0f64, 1i64), (2.5, 0)] {
        let params = dirac_params(1, m0);
        let nu = {
            let field = model_unit_field(&params, &grid).map_err(|e| e.to_string())?;
            winding_unitvector(field, &grid).map_err(|e| e.to_string())?
        };
        let nu_int = nu.round() as i64;
        if (nu - nu_int as f64).abs() > 1e-6 {
            return Err(format!("winding {nu} not an integer at m0 = {m0}"));
        }
        if nu_int.abs() != expect_abs {
            return Err(format!("|ν| = {} ≠ {expect_abs} at m0 = {m0}", nu_int.abs()));
        }
        let model = dirac_model(1, 64, m0, Boundary::Periodic);
        let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
        let out = full_pipeline(&model, &kink, 0.2, 16.0, 0.0).map_err(|e| e.to_string())?;
        let idx = integer_index(&out.report).map_err(|e| e.to_string())?;
        // Ind = (−1)^(n−1)ν with n = ⌊d/2⌋: at d = 1, n = 0, so Ind = −ν
        if idx != -nu_int {
            return Err(format!("d=1 spectral index {idx} ≠ −ν = {} at m0 = {m0}", -nu_int));
        }
        parts.push(format!("d=1 m0 = {m0}: ν = {nu_int}, Ind = {idx}"));
    }

    // d = 3 spot check at a gapped mass
    let m0 = 2.0;
    let grid3 = BZGrid::new(3, 20).map_err(|e| e.to_string())?;
    let params = dirac_params(3, m0);
    let nu3 = {
        let field = model_unit_field(&params, &grid3).map_err(|e| e.to_string())?;
        winding_unitvector(field, &grid3).map_err(|e| e.to_string())?
    };
    let nu3_int = nu3.round() as i64;
    if (nu3 - nu3_int as f64).abs() > 1e-3 {
        return Err(format!("d=3 winding {nu3} not an integer"));
    }
    let model = dirac_model(3, 8, m0, Boundary::Periodic);
    let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
    let out = full_pipeline(&model, &kink, 0.2, 2.0, 0.0).map_err(|e| e.to_string())?;
    let idx3 = integer_index(&out.report).map_err(|e| e.to_string())?;
    // Ind = (−1)^(n−1)ν with n = ⌊d/2⌋: at d = 3, n = 1, so Ind = +ν
    if idx3 != nu3_int {
        return Err(format!("d=3 spectral index {idx3} ≠ ν = {nu3_int}"));
    }
    parts.push(format!("d=3 m0 = {m0}: ν = {nu3_int}, Ind = {idx3}"));
    Ok(parts.join(", "))
}

// --- 6. Z₂ suite (class AII, d = 2, doubled) -------------------------------

fn c06_z2_suite() -> Result<String, String> {
    let base = dirac_model(2, 12, 1.0, Boundary::Periodic);
    let doubled =
        build_doubled_model(&base, 0.2, Doubling::TimeReversal).map_err(|e| e.to_string())?;
    if classify(&doubled.syms).map_err(|e| e.to_string())? != CAZClass::AII {
        return Err("doubled model did not classify as AII".into());
    }
    let kink = KinkPoint::center(&doubled.spec).map_err(|e| e.to_string())?;
    let clean = full_pipeline(&doubled, &kink, 0.2, 3.0, 0.0).map_err(|e| e.to_string())?;
    if clean.report.n_plus != clean.report.n_minus {
        return Err(format!(
            "clean n₊ = {} ≠ n₋ = {}",
            clean.report.n_plus, clean.report.n_minus
        ));
    }
    let z2_top = z2_index(&clean.report).map_err(|e| e.to_string())?;
    if z2_top != 1 {
        return Err(format!("topological regime Z₂ = {z2_top} ≠ 1"));
    }

    // trivial regime
    let trivial_base = dirac_model(2, 12, 3.0, Boundary::Periodic);
    let trivial = build_doubled_model(&trivial_base, 0.2, Doubling::TimeReversal)
        .map_err(|e| e.to_string())?;
    let triv = full_pipeline(&trivial, &kink, 0.2, 3.0, 0.0).map_err(|e| e.to_string())?;
    let z2_triv = z2_index(&triv.report).map_err(|e| e.to_string())?;
    if z2_triv != 0 {
        return Err(format!("trivial regime Z₂ = {z2_triv} ≠ 0"));
    }

    // stability across symmetry-preserving disorder at W = gap/4
    let w = clean.gap / 4.0;
    for seed in 0..10u64 {
        let dis = apply_disorder(&doubled, DisorderKind::OnsiteScalar, w, 101 + seed, &doubled.syms)
            .map_err(|e| e.to_string())?;
        let out = full_pipeline(&dis, &kink, 0.2, 3.0, 0.0).map_err(|e| e.to_string())?;
        if out.report.n_plus != out.report.n_minus {
            return Err(format!("seed {seed}: n₊ ≠ n₋ under disorder"));
        }
        let z2 = z2_index(&out.report).map_err(|e| e.to_string())?;
        if z2 != 1 {
            return Err(format!("seed {seed}: Z₂ = {z2} ≠ 1 at W = gap/4"));
        }
    }
    Ok(format!(
        "n₊ = n₋, Z₂ = 1 (topological) / 0 (trivial), stable over 10 realizations at W = {w:.3}"
    ))
}

// --- 7. 2ℤ structure (particle-hole doubled, d = 2) ------------------------

fn c07_two_z() -> Result<String, String> {
    let base = dirac_model(2, 12, 1.0, Boundary::Periodic);
    let doubled =
        build_doubled_model(&base, 0.2, Doubling::ParticleHole).map_err(|e| e.to_string())?;
    let class = classify(&doubled.syms).map_err(|e| e.to_string())?;
    let kink = KinkPoint::center(&doubled.spec).map_err(|e| e.to_string())?;
    let clean = full_pipeline(&doubled, &kink, 0.2, 3.0, 0.0).map_err(|e| e.to_string())?;
    let w = clean.gap / 4.0;
    let mut counts = Vec::new();
    for seed in 0..5u64 {
        let dis = apply_disorder(&doubled, DisorderKind::OnsiteScalar, w, 211 + seed, &doubled.syms)
            .map_err(|e| e.to_string())?;
        let out = full_pipeline(&dis, &kink, 0.2, 3.0, 0.0).map_err(|e| e.to_string())?;
        let (np, nm) = (out.report.n_plus, out.report.n_minus);
        if np % 2 != 0 || nm % 2 != 0 {
            return Err(format!("seed {seed}: n₊ = {np}, n₋ = {nm} not both even"));
        }
        counts.push((np, nm));
    }
    Ok(format!(
        "class {}: n₊, n₋ even across 5 realizations: {counts:?}",
        class.name()
    ))
}

// --- 8. Homotopy continuity -------------------------------------------------

fn c08_homotopy() -> Result<String, String> {
    let model = dirac_model(2, 12, 1.0, Boundary::Periodic);
    let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
    // one fixed symmetric disorder direction (class A: no symmetry constraint)
    let dis = apply_disorder(&model, DisorderKind::OnsiteMatrix, 1.0, 42, &model.syms)
        .map_err(|e| e.to_string())?;
    let dh: CMat = &dis.h - &model.h;
    let g_list = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    let opts = IndexPipelineOptions {
        radius: 3.0,
        ..Default::default()
    };
    let scan =
        perturbation_norm_scan(&model, &dh, &g_list, &kink, &opts).map_err(|e| e.to_string())?;
    if let Some(msg) = &scan.truncated {
        return Err(format!("scan truncated: {msg}"));
    }
    let mut ratios = Vec::new();
    let mut indices = Vec::new();
    for p in &scan.points {
        if p.g > 0.0 {
            ratios.push(p.a_norm_diff / p.g);
        }
        if p.gap > 2.0 * DEFAULT_GAP_TOL {
            indices.push(p.index.ok_or_else(|| format!("uncertified index at g = {}", p.g))?);
        }
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    if max / min >= 2.0 {
        return Err(format!("‖A(g)−A(0)‖/g ratio spread {:.3} ≥ 2", max / min));
    }
    if indices.windows(2).any(|w| w[0] != w[1]) {
        return Err(format!("index not constant along the scan: {indices:?}"));
    }
    Ok(format!(
        "‖A(g)−A(0)‖/g ∈ [{min:.3}, {max:.3}] (spread {:.2}), index constant at {}",
        max / min,
        indices[0]
    ))
}

// --- 9. Kink-point independence ---------------------------------------------

fn c09_kink_shift() -> Result<String, String> {
    let model = dirac_model(2, 16, 1.0, Boundary::Periodic);
    let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
    let mut shifted_coords = kink.a.clone();
    shifted_coords[0] += 1.0;
    let shifted = KinkPoint::new(shifted_coords).map_err(|e| e.to_string())?;
    let a = full_pipeline(&model, &kink, 0.2, 4.0, 0.0).map_err(|e| e.to_string())?;
    let b = full_pipeline(&model, &shifted, 0.2, 4.0, 0.0).map_err(|e| e.to_string())?;
    let ia = integer_index(&a.report).map_err(|e| e.to_string())?;
    let ib = integer_index(&b.report).map_err(|e| e.to_string())?;
    if ia != ib {
        return Err(format!("index changed under kink shift: {ia} vs {ib}"));
    }
    Ok(format!("index {ia} unchanged under a one-site kink shift"))
}

// --- 10. Kernel duality ------------------------------------------------------

fn c10_duality() -> Result<String, String> {
    let base = dirac_model(3, 6, 2.0, Boundary::Periodic);
    let doubled =
        build_doubled_model(&base, 0.2, Doubling::TimeReversal).map_err(|e| e.to_string())?;
    if classify(&doubled.syms).map_err(|e| e.to_string())? != CAZClass::AII {
        return Err("doubled model did not classify as AII".into());
    }
    let kink = KinkPoint::center(&doubled.spec).map_err(|e| e.to_string())?;
    let rule = image_rule_for(&doubled.spec);
    let (gammas, _) = dirac_gammas(3).map_err(|e| e.to_string())?;
    let dirac = dirac_operator(&doubled.spec, &gammas, &kink, rule).map_err(|e| e.to_string())?;
    let pd = dirac_projection(&dirac);
    let eig = eigh(&doubled.h).map_err(|e| e.to_string())?;
    let pf = fermi_projection(&eig, 0.0, DEFAULT_GAP_TOL).map_err(|e| e.to_string())?;
    let p_lift = lift_outer(dirac.gamma_dim, &pf.p);
    // Reuse one eigendecomposition per operator for the full δ scan (the
    // matrices are ~3500², so each diagonalization is the expensive step;
    // the kernel_duality_check entry point is exercised by the unit tests).
    let dim = p_lift.nrows();
    let mut t1: CMat = p_lift.dot(&pd).dot(&p_lift).mapv(|z| z * -2.0);
    let mut t2: CMat = pd.dot(&p_lift).dot(&pd).mapv(|z| z * -2.0);
    for i in 0..dim {
        t1[(i, i)] += 1.0;
        t2[(i, i)] += 1.0;
    }
    let e1 = eigh(&t1).map_err(|e| e.to_string())?;
    let e2 = eigh(&t2).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for delta in [0.05, 0.1, 0.2] {
        let c1 = e1.eigenvalues.iter().filter(|l| l.abs() <= delta).count();
        let c2 = e2.eigenvalues.iter().filter(|l| l.abs() <= delta).count();
        if c1 != c2 {
            return Err(format!("δ = {delta}: near-kernel counts {c1} ≠ {c2}"));
        }
        parts.push(format!("δ = {delta}: {c1}"));
    }
    Ok(format!("1−2PEP and 1−2EPE kernel counts match ({})", parts.join(", ")))
}

// --- 11. Linear response -----------------------------------------------------

fn c11_linear_response() -> Result<String, String> {
    let grid = BZGrid::new(1, 512).map_err(|e| e.to_string())?;
    let params = dirac_params(1, 0.0);
    let nu = {
        let field = model_unit_field(&params, &grid).map_err(|e| e.to_string())?;
        winding_unitvector(field, &grid).map_err(|e| e.to_string())?
    };
    let mut ratio = Vec::new();
    let mut g64 = f64::NAN;
    for l in [48usize, 64] {
        let model = dirac_model(1, l, 0.0, Boundary::Periodic);
        let s = model.syms.s.clone().ok_or("missing chiral operator")?;
        let kink = KinkPoint::center(&model.spec).map_err(|e| e.to_string())?;
        let g = linear_response_1d(&model, &s, &kink).map_err(|e| e.to_string())?;
        if !g.is_finite() || g.abs() < 1e-6 {
            return Err(format!("g = {g} not finite and nonzero at L = {l}"));
        }
        let gf = linear_response_1d(&model, &s.mapv(|z| -z), &kink).map_err(|e| e.to_string())?;
        if (g + gf).abs() > 1e-10 {
            return Err(format!("g not sign-odd under S → −S at L = {l}"));
        }
        ratio.push(g / nu);
        if l == 64 {
            g64 = g;
        }
    }
    let drift = (ratio[0] - ratio[1]).abs() / ratio[1].abs();
    if drift >= 0.05 {
        return Err(format!("g/ν drifted {:.1}% between L = 48 and 64", drift * 100.0));
    }
    Ok(format!(
        "g = {g64:.4} at L = 64, sign-odd, g/ν = {:.4} stable to {:.2}%",
        ratio[1],
        drift * 100.0
    ))
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Check); 11] = [
        ("clifford algebra construction", c01_clifford),
        ("sphere constants", c02_spheres),
        ("supersymmetric pair identities", c03_susy),
        ("even-d oracle equivalence", c04_even_oracles),
        ("odd-d chiral oracle equivalence", c05_odd_oracles),
        ("Z2 suite (AII, d=2)", c06_z2_suite),
        ("2Z structure (PH-doubled, d=2)", c07_two_z),
        ("homotopy continuity", c08_homotopy),
        ("kink-point independence", c09_kink_shift),
        ("kernel duality", c10_duality),
        ("linear response (d=1 chiral)", c11_linear_response),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = check();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                println!("criterion {:2} [pass] {name}: {detail} ({secs:.1} s)", i + 1);
            }
            Err(reason) => {
                println!("criterion {:2} [FAIL] {name}: {reason} ({secs:.1} s)", i + 1);
                failures.push(format!("{}: {reason}", i + 1));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

// keep the unused-import lints honest for items used only in type positions
#[allow(dead_code)]
fn _typecheck(_: Array2<C64>) {}
