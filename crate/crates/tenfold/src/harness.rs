//! Experiment orchestration: run configurations, the command implementations
//! behind the `tenfold` CLI, and result serialization.
//!
//! Every run is described by a JSON [`RunConfig`] (unknown keys rejected) and
//! produces three artifacts: the fully resolved config (reproducibility), a
//! JSON summary, and a flat CSV of per-realization [`ResultRecord`]s with the
//! fixed header [`CSV_HEADER`].  Runs are deterministic: realization `i`
//! always uses seed `seed0 + i`, and records are sorted by `(seed, parameter)`
//! so re-runs are byte-identical.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clifford::{build_gamma_set, real_structure_signs, MAX_N};
use crate::kinvariants::{
    chern_momentum, chern_momentum_quadrature, chiral_winding_momentum, model_unit_field,
    winding_unitvector, BZGrid,
};
use crate::lattice::{
    ball_cutoff, dirac_gammas, dirac_operator, step_function, Boundary, KinkPoint, LatticeSpec,
};
use crate::models::{
    apply_disorder, build_dirac_lattice_model, build_doubled_model, check_symmetry, classify,
    dirac_model_internal_dim, expected_index_group, AntiUnitary, CAZClass, DisorderKind, Doubling,
    IndexGroup, ModelParams, SymmetrySet, TightBindingModel,
};
use crate::ncindex::{
    build_index_operators, compress, image_rule_for, integer_index, kind_for_model,
    near_kernel_counts, z2_index, IndexOperatorPair, IndexReport,
};
use crate::spectral::{eigh, fermi_projection, DEFAULT_GAP_TOL};
use crate::{eye, max_abs, C64, CMat, Error, Result};

/// Fixed header of the per-realization CSV record stream.
pub const CSV_HEADER: &str = "config_hash,experiment,seed,param,value,status,n_plus,n_minus,\
                              delta,radius,integer_index,z2_index,gap,susy_residual,symmetry_residual,wall_ms";

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

/// Which experiment a config drives; mirrors the CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ComputeIndex,
    MomentumInvariant,
    SweepDisorder,
    AuditClass,
    Convergence,
    LinearResponse,
    CliffordSelftest,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ComputeIndex => "compute-index",
            Self::MomentumInvariant => "momentum-invariant",
            Self::SweepDisorder => "sweep-disorder",
            Self::AuditClass => "audit-class",
            Self::Convergence => "convergence",
            Self::LinearResponse => "linear-response",
            Self::CliffordSelftest => "clifford-selftest",
        }
    }
}

/// Which Hamiltonian family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// The gamma-matrix Dirac model (class A at even `d`, AIII at odd `d`).
    #[default]
    Dirac,
    /// A real-hopping two-band model with only `Θ = K` (class AI); used to
    /// probe empty periodic-table cells.
    RealSymmetric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub m0: f64,
    #[serde(default)]
    pub t_s: Option<Vec<f64>>,
    #[serde(default)]
    pub t_c: Option<Vec<f64>>,
    #[serde(default)]
    pub family: ModelFamily,
    /// Identity-channel hopping of the real-symmetric family (breaks
    /// accidental particle-hole symmetry).
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Optional two-copy doubling carrying an exact odd anti-unitary.
    #[serde(default)]
    pub doubling: Option<DoublingSection>,
}

fn default_t0() -> f64 {
    0.3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingSection {
    pub kind: Doubling,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
}

fn default_coupling() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub lengths: Vec<usize>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    #[serde(default = "default_disorder_kind")]
    pub kind: DisorderKind,
    #[serde(default)]
    pub w: f64,
    /// Sweep grid; overrides `w` for `sweep-disorder`.
    #[serde(default)]
    pub w_list: Option<Vec<f64>>,
    #[serde(default = "default_one")]
    pub n_realizations: usize,
    #[serde(default = "default_seed")]
    pub seed0: u64,
}

fn default_disorder_kind() -> DisorderKind {
    DisorderKind::OnsiteScalar
}
fn default_one() -> usize {
    1
}
fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Compression ball radius; default `⌊min(L)/4⌋`.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub e_fermi: f64,
    /// Radius scan for `audit-class`; default `{3, 4, 5}` clamped to the
    /// seam guard.
    #[serde(default)]
    pub r_list: Option<Vec<f64>>,
}

fn default_delta() -> f64 {
    0.2
}

impl Default for IndexSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            radius: None,
            e_fermi: 0.0,
            r_list: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n_k")]
    pub n_k: usize,
}

fn default_n_k() -> usize {
    64
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_k: default_n_k() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub l_list: Vec<usize>,
    #[serde(default)]
    pub r_list: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_list: Option<Vec<f64>>,
}

/// Top-level run configuration; serialized verbatim next to the results.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub lattice: Option<LatticeSection>,
    /// Expected AZ class; cross-checked against the constructed symmetries.
    #[serde(default)]
    pub class: Option<String>,
    /// Proceed even when the periodic table predicts no stable index.
    #[serde(default)]
    pub allow_empty_cell: bool,
    #[serde(default)]
    pub disorder: Option<DisorderSection>,
    #[serde(default)]
    pub index: IndexSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default)]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn from_json(v: &Value) -> Result<Self> {
        Ok(serde_json::from_value(v.clone())?)
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Stable hash of the resolved configuration (canonical JSON text).
pub fn config_hash(resolved: &Value) -> String {
    let mut hasher = DefaultHasher::new();
    resolved.to_string().hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// Apply a `--override key=value` with a dotted path into the raw JSON
/// config.  The value is parsed as JSON when possible, else kept as a string.
pub fn apply_override(cfg: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut cursor = cfg;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cursor.is_object() {
            return Err(Error::Config(format!(
                "override path '{key}' descends through a non-object at '{part}'"
            )));
        }
        let map = cursor.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Result records
// ---------------------------------------------------------------------------

/// One per-realization record; flattened into a fixed-header CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub experiment: String,
    pub seed: u64,
    /// Name of the swept parameter axis (`w`, `L`, `R`, `m0`, …).
    pub param: String,
    pub value: f64,
    /// `certified`, `unresolved`, `gap-closed`, `fermi-on-spectrum`, or
    /// `symmetry-violation`.
    pub status: String,
    pub n_plus: i64,
    pub n_minus: i64,
    pub delta: f64,
    pub radius: f64,
    pub integer_index: Option<i64>,
    pub z2_index: Option<u8>,
    pub gap: f64,
    pub susy_residual: f64,
    pub symmetry_residual: f64,
    pub wall_ms: u128,
}

impl ResultRecord {
    pub fn csv_row(&self) -> String {
        let opt_i = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_u = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3e},{:.3e},{}",
            self.config_hash,
            self.experiment,
            self.seed,
            self.param,
            self.value,
            self.status,
            self.n_plus,
            self.n_minus,
            self.delta,
            self.radius,
            opt_i(self.integer_index),
            opt_u(self.z2_index),
            self.gap,
            self.susy_residual,
            self.symmetry_residual,
            self.wall_ms
        )
    }
}

/// Everything a command run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The fully resolved configuration echoed with the results.
    pub resolved: Value,
    pub summary: Value,
    pub records: Vec<ResultRecord>,
    /// True when some certification-grade check did not pass; drives the
    /// `--strict` exit code.
    pub certification_failed: bool,
}

/// Write `config.json`, `summary.json`, and `records.csv` into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let config_path = dir.join("config.json");
    let summary_path = dir.join("summary.json");
    let records_path = dir.join("records.csv");
    std::fs::write(&config_path, serde_json::to_string_pretty(&output.resolved)?)?;
    std::fs::write(&summary_path, serde_json::to_string_pretty(&output.summary)?)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &output.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    std::fs::write(&records_path, csv)?;
    Ok(vec![config_path, summary_path, records_path])
}

// ---------------------------------------------------------------------------
// Model construction from config
// ---------------------------------------------------------------------------

fn require_model(cfg: &RunConfig) -> Result<&ModelSection> {
    cfg.model
        .as_ref()
        .ok_or_else(|| Error::Config("this experiment requires a `model` section".into()))
}

fn require_lattice(cfg: &RunConfig) -> Result<&LatticeSection> {
    cfg.lattice
        .as_ref()
        .ok_or_else(|| Error::Config("this experiment requires a `lattice` section".into()))
}

fn hopping_vectors(m: &ModelSection) -> (Vec<f64>, Vec<f64>) {
    let ones = vec![1.0; m.d];
    (
        m.t_s.clone().unwrap_or_else(|| ones.clone()),
        m.t_c.clone().unwrap_or(ones),
    )
}

/// Build the clean model a config describes (family, doubling).
pub fn build_model(cfg: &RunConfig) -> Result<TightBindingModel> {
    let ms = require_model(cfg)?;
    let ls = require_lattice(cfg)?;
    if ls.lengths.len() != ms.d {
        return Err(Error::Config(format!(
            "lattice has {} lengths but the model is {}-dimensional",
            ls.lengths.len(),
            ms.d
        )));
    }
    let (t_s, t_c) = hopping_vectors(ms);
    let model = match ms.family {
        ModelFamily::Dirac => {
            let spec = LatticeSpec::new(
                ms.d,
                ls.lengths.clone(),
                ls.boundary,
                dirac_model_internal_dim(ms.d),
            )?;
            build_dirac_lattice_model(&spec, &t_s, &t_c, ms.m0)?
        }
        ModelFamily::RealSymmetric => {
            let spec = LatticeSpec::new(ms.d, ls.lengths.clone(), ls.boundary, 2)?;
            build_real_symmetric_model(&spec, &t_s, &t_c, ms.m0, ms.t0)?
        }
    };
    match &ms.doubling {
        None => Ok(model),
        Some(db) => build_doubled_model(&model, db.coupling, db.kind),
    }
}

/// A two-band model with purely real hoppings, so that `Θ = K` is an exact
/// even time-reversal symmetry and nothing else survives: class AI.
///
/// `H(k) = (m0 + t_c·Σcos k_j) σ3 + (t_s·Σcos k_j) σ1 + (t0·Σcos k_j) σ0`;
/// gapped at `E_F = 0` for `m0 ≠ 0` and small `t0`.
pub fn build_real_symmetric_model(
    spec: &LatticeSpec,
    t_s: &[f64],
    t_c: &[f64],
    m0: f64,
    t0: f64,
) -> Result<TightBindingModel> {
    use crate::clifford::pauli;
    if spec.internal_dim != 2 {
        return Err(Error::Shape("the real-symmetric family is two-band".into()));
    }
    let d = spec.d;
    let n = spec.n_sites();
    let mut h: CMat = ndarray::Array2::zeros((2 * n, 2 * n));
    let (s0, s1, s3) = (eye(2), pauli(1), pauli(3));
    // on-site mass
    for s in 0..n {
        for a in 0..2 {
            for b in 0..2 {
                h[(s * 2 + a, s * 2 + b)] += s3[(a, b)] * m0;
            }
        }
    }
    // nearest-neighbor real blocks T_j = (t_c σ3 + t_s σ1 + t0 σ0)/2
    for s in 0..n {
        let x = spec.site_coords(s);
        for j in 0..d {
            let mut y = x.clone();
            let l = spec.lengths[j];
            match spec.boundary {
                Boundary::Periodic => y[j] = (x[j] + 1) % l,
                Boundary::Open => {
                    if x[j] + 1 >= l {
                        continue;
                    }
                    y[j] = x[j] + 1;
                }
            }
            let t = spec.site_index(&y);
            for a in 0..2 {
                for b in 0..2 {
                    let blk =
                        (s3[(a, b)] * t_c[j] + s1[(a, b)] * t_s[j] + s0[(a, b)] * t0) * 0.5;
                    h[(t * 2 + a, s * 2 + b)] += blk;
                    h[(s * 2 + b, t * 2 + a)] += blk.conj();
                }
            }
        }
    }
    let mut syms = SymmetrySet::default();
    syms.theta = Some(AntiUnitary { u: eye(2 * n) });
    let model = TightBindingModel {
        spec: spec.clone(),
        h,
        hoppings: Default::default(),
        params: ModelParams {
            d,
            t_s: t_s.to_vec(),
            t_c: t_c.to_vec(),
            m0,
            coupling: None,
            disorder_w: 0.0,
            disorder_seed: None,
        },
        syms,
    };
    let report = check_symmetry(&model, &model.syms);
    if !report.pass(1e-12) {
        return Err(Error::SymmetryViolation(format!(
            "real-symmetric construction residuals {report:?}"
        )));
    }
    Ok(model)
}

/// Resolve the AZ class of a config: the declared name when present
/// (cross-checked), else classified from the constructed symmetries.
pub fn resolve_class(cfg: &RunConfig, model: &TightBindingModel) -> Result<CAZClass> {
    let constructed = classify(&model.syms)?;
    match &cfg.class {
        None => Ok(constructed),
        Some(name) => {
            let declared = CAZClass::from_name(name)?;
            if declared != constructed {
                return Err(Error::Classification(format!(
                    "config declares class {} but the constructed symmetries give {}",
                    declared.name(),
                    constructed.name()
                )));
            }
            Ok(declared)
        }
    }
}

fn default_radius(spec: &LatticeSpec) -> f64 {
    (*spec.lengths.iter().min().unwrap() as f64 / 4.0).floor()
}

// ---------------------------------------------------------------------------
// Shared pipeline
// ---------------------------------------------------------------------------

/// One full model → certified-report evaluation.
pub struct PipelineOut {
    pub pair: IndexOperatorPair,
    pub report: IndexReport,
    /// Distance from `E_F` to the nearest eigenvalue.
    pub gap: f64,
    pub symmetry_residual: f64,
}

/// Run the spectral-index pipeline on a concrete model.
pub fn full_pipeline(
    model: &TightBindingModel,
    kink: &KinkPoint,
    delta: f64,
    radius: f64,
    e_fermi: f64,
) -> Result<PipelineOut> {
    let rule = image_rule_for(&model.spec);
    let (gammas, _) = dirac_gammas(model.spec.d)?;
    let dirac = dirac_operator(&model.spec, &gammas, kink, rule)?;
    let eig = eigh(&model.h)?;
    let p = fermi_projection(&eig, e_fermi, DEFAULT_GAP_TOL)?;
    let kind = kind_for_model(model);
    let pair = build_index_operators(&p, &dirac, model.syms.s.as_ref(), kind)?;
    let window = ball_cutoff(&model.spec, kink, radius, rule)?;
    let a_r = compress(&pair, &window)?;
    let eig_r = eigh(&a_r)?;
    let report = near_kernel_counts(eig_r.eigenvalues.as_slice().unwrap(), delta, kind)?;
    let symmetry_residual = check_symmetry(model, &model.syms).max_residual();
    Ok(PipelineOut {
        pair,
        report,
        gap: p.gap,
        symmetry_residual,
    })
}

/// Map a pipeline error onto a typed record status; hard errors (config,
/// shape, geometry) still propagate.
fn status_of(err: &Error) -> Option<&'static str> {
    match err {
        Error::FermiLevelOnSpectrum { .. } => Some("fermi-on-spectrum"),
        Error::GapClosed(_) => Some("gap-closed"),
        Error::UnresolvedIndex { .. } => Some("unresolved"),
        Error::SymmetryViolation(_) => Some("symmetry-violation"),
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn record_from(
    hash: &str,
    experiment: ExperimentKind,
    seed: u64,
    param: &str,
    value: f64,
    delta: f64,
    radius: f64,
    outcome: &Result<PipelineOut>,
    wall_ms: u128,
) -> Result<ResultRecord> {
    let base = ResultRecord {
        config_hash: hash.to_string(),
        experiment: experiment.name().to_string(),
        seed,
        param: param.to_string(),
        value,
        status: String::new(),
        n_plus: -1,
        n_minus: -1,
        delta,
        radius,
        integer_index: None,
        z2_index: None,
        gap: f64::NAN,
        susy_residual: f64::NAN,
        symmetry_residual: f64::NAN,
        wall_ms,
    };
    match outcome {
        Ok(out) => {
            let (r1, r2) = out.pair.susy_residuals();
            Ok(ResultRecord {
                status: if out.report.buffer_violation {
                    "unresolved".into()
                } else {
                    "certified".into()
                },
                n_plus: out.report.n_plus as i64,
                n_minus: out.report.n_minus as i64,
                integer_index: integer_index(&out.report).ok(),
                z2_index: z2_index(&out.report).ok(),
                gap: out.gap,
                susy_residual: r1.max(r2),
                symmetry_residual: out.symmetry_residual,
                ..base
            })
        }
        Err(e) => match status_of(e) {
            Some(status) => Ok(ResultRecord {
                status: status.into(),
                ..base
            }),
            None => Err(Error::Config(format!("pipeline failed hard: {e}"))),
        },
    }
}

fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (a.seed, &a.param, a.value, a.radius, a.delta)
            .partial_cmp(&(b.seed, &b.param, b.value, b.radius, b.delta))
            .unwrap()
    });
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Dispatch a config to its command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::ComputeIndex => cmd_compute_index(cfg),
        ExperimentKind::MomentumInvariant => cmd_momentum_invariant(cfg),
        ExperimentKind::SweepDisorder => cmd_sweep_disorder(cfg),
        ExperimentKind::AuditClass => cmd_audit_class(cfg),
        ExperimentKind::Convergence => cmd_convergence(cfg),
        ExperimentKind::LinearResponse => cmd_linear_response(cfg),
        ExperimentKind::CliffordSelftest => cmd_clifford_selftest(cfg),
    }
}

/// `compute-index`: model → symmetry check → Fermi projection → index pair →
/// compression → certified report, per disorder realization.
pub fn cmd_compute_index(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let clean = build_model(cfg)?;
    let class = resolve_class(cfg, &clean)?;
    let group = expected_index_group(class, clean.spec.d);
    if group == IndexGroup::None && !cfg.allow_empty_cell {
        return Err(Error::Classification(format!(
            "class {} at d = {} is an empty cell of the periodic table (no stable strong index); \
             set allow_empty_cell to probe it anyway",
            class.name(),
            clean.spec.d
        )));
    }
    let kink = KinkPoint::center(&clean.spec)?;
    let delta = cfg.index.delta;
    let radius = cfg.index.radius.unwrap_or_else(|| default_radius(&clean.spec));
    let e_fermi = cfg.index.e_fermi;

    let (w, n_real, seed0, dkind) = match &cfg.disorder {
        Some(ds) => (ds.w, ds.n_realizations.max(1), ds.seed0, ds.kind),
        None => (0.0, 1, default_seed(), DisorderKind::OnsiteScalar),
    };
    let mut records: Vec<ResultRecord> = (0..n_real as u64)
        .into_par_iter()
        .map(|i| {
            let seed = seed0 + i;
            let t0 = Instant::now();
            let outcome = apply_disorder(&clean, dkind, w, seed, &clean.syms)
                .and_then(|m| full_pipeline(&m, &kink, delta, radius, e_fermi));
            record_from(
                &hash,
                cfg.experiment,
                seed,
                "w",
                w,
                delta,
                radius,
                &outcome,
                t0.elapsed().as_millis(),
            )
        })
        .collect::<Result<_>>()?;
    sort_records(&mut records);

    let certified: Vec<&ResultRecord> =
        records.iter().filter(|r| r.status == "certified").collect();
    let consensus_int = consensus(certified.iter().map(|r| r.integer_index));
    let consensus_z2 = consensus(certified.iter().map(|r| r.z2_index));
    let failed = records.iter().any(|r| r.status != "certified");
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "class": class.name(),
        "index_group": group,
        "realizations": records.len(),
        "certified": certified.len(),
        "integer_index": consensus_int,
        "z2_index": consensus_z2,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records,
        certification_failed: failed,
    })
}

/// The common value of an iterator of options, if all present and equal.
fn consensus<T: PartialEq + Copy>(mut it: impl Iterator<Item = Option<T>>) -> Option<T> {
    let first = it.next()??;
    for v in it {
        if v != Some(first) {
            return None;
        }
    }
    Some(first)
}

/// `momentum-invariant`: clean momentum-space invariants of the config's
/// model family (Chern at even `d`, winding + chiral quadrature at odd `d`).
pub fn cmd_momentum_invariant(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let ms = require_model(cfg)?;
    if ms.family != ModelFamily::Dirac || ms.doubling.is_some() {
        return Err(Error::Config(
            "momentum invariants are defined for the clean Dirac family".into(),
        ));
    }
    let (t_s, t_c) = hopping_vectors(ms);
    let params = ModelParams {
        d: ms.d,
        t_s,
        t_c,
        m0: ms.m0,
        coupling: None,
        disorder_w: 0.0,
        disorder_seed: None,
    };
    let grid = BZGrid::new(ms.d, cfg.grid.n_k)?;
    let t0 = Instant::now();
    let (name, value, cross) = if ms.d % 2 == 0 {
        let c = chern_momentum(&params, &grid)?;
        let cross = if ms.d == 2 {
            let coarse = BZGrid::new(2, (cfg.grid.n_k / 2).max(8))?;
            Some(chern_momentum_quadrature(&params, &coarse)?)
        } else {
            None
        };
        ("chern", c, cross)
    } else {
        let field = model_unit_field(&params, &grid)?;
        let nu = winding_unitvector(field, &grid)?;
        let cw = chiral_winding_momentum(&params, &grid)?;
        ("winding", nu, Some(cw))
    };
    let dist = (value - value.round()).abs();
    let record = ResultRecord {
        config_hash: hash.clone(),
        experiment: cfg.experiment.name().to_string(),
        seed: 0,
        param: "m0".into(),
        value: ms.m0,
        status: if dist < 1e-2 { "certified".into() } else { "unresolved".into() },
        n_plus: -1,
        n_minus: -1,
        delta: cfg.index.delta,
        radius: f64::NAN,
        integer_index: Some(value.round() as i64),
        z2_index: None,
        gap: f64::NAN,
        susy_residual: f64::NAN,
        symmetry_residual: f64::NAN,
        wall_ms: t0.elapsed().as_millis(),
    };
    let failed = dist >= 1e-2;
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "invariant": name,
        "value": value,
        "nearest_integer": value.round() as i64,
        "distance_to_integer": dist,
        "cross_check": cross,
        "n_k": grid.n_k,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records: vec![record],
        certification_failed: failed,
    })
}

/// `sweep-disorder`: per `(W, seed)` record the gap, the certified index,
/// and the operator-norm drift `‖A(W) − A(0)‖`; aggregate agreement with the
/// clean index per `W`.
pub fn cmd_sweep_disorder(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let clean = build_model(cfg)?;
    let ds = cfg
        .disorder
        .as_ref()
        .ok_or_else(|| Error::Config("sweep-disorder needs a `disorder` section".into()))?;
    let w_list = ds
        .w_list
        .clone()
        .unwrap_or_else(|| vec![ds.w]);
    let kink = KinkPoint::center(&clean.spec)?;
    let delta = cfg.index.delta;
    let radius = cfg.index.radius.unwrap_or_else(|| default_radius(&clean.spec));
    let e_fermi = cfg.index.e_fermi;

    let clean_out = full_pipeline(&clean, &kink, delta, radius, e_fermi)?;
    let clean_index = integer_index(&clean_out.report).ok();
    let a0 = clean_out.pair.a.clone();

    let tasks: Vec<(f64, u64)> = w_list
        .iter()
        .flat_map(|&w| (0..ds.n_realizations.max(1) as u64).map(move |i| (w, ds.seed0 + i)))
        .collect();
    let results: Vec<(ResultRecord, Option<f64>)> = tasks
        .into_par_iter()
        .map(|(w, seed)| {
            let t0 = Instant::now();
            let outcome = apply_disorder(&clean, ds.kind, w, seed, &clean.syms)
                .and_then(|m| full_pipeline(&m, &kink, delta, radius, e_fermi));
            let drift = outcome.as_ref().ok().map(|out| {
                let diff = &out.pair.a - &a0;
                // Hermitian ⇒ operator norm is the extremal eigenvalue
                match eigh(&diff) {
                    Ok(e) => e.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())),
                    Err(_) => f64::NAN,
                }
            });
            let rec = record_from(
                &hash,
                cfg.experiment,
                seed,
                "w",
                w,
                delta,
                radius,
                &outcome,
                t0.elapsed().as_millis(),
            )?;
            Ok((rec, drift))
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<ResultRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    sort_records(&mut records);

    // Aggregates per W over certified realizations.
    let mut per_w = Vec::new();
    for &w in &w_list {
        let rows: Vec<&(ResultRecord, Option<f64>)> =
            results.iter().filter(|(r, _)| r.value == w).collect();
        let certified: Vec<&&(ResultRecord, Option<f64>)> =
            rows.iter().filter(|(r, _)| r.status == "certified").collect();
        let agree = certified
            .iter()
            .filter(|(r, _)| r.integer_index == clean_index)
            .count();
        let excluded = rows.iter().filter(|(r, _)| r.status == "gap-closed").count();
        let max_drift = rows
            .iter()
            .filter_map(|(_, d)| *d)
            .fold(0.0f64, f64::max);
        per_w.push(json!({
            "w": w,
            "realizations": rows.len(),
            "certified": certified.len(),
            "agree_with_clean": agree,
            "gap_closed_excluded": excluded,
            "max_a_drift": max_drift,
            "drift_per_w": if w > 0.0 { Some(max_drift / w) } else { None },
        }));
    }
    let failed = records
        .iter()
        .any(|r| r.status == "unresolved" || r.status == "symmetry-violation");
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "clean_index": clean_index,
        "per_w": per_w,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records,
        certification_failed: failed,
    })
}

/// `audit-class`: verify the structural periodic-table predictions testable
/// at finite volume for the configured class/dimension.
pub fn cmd_audit_class(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let clean = build_model(cfg)?;
    let class = resolve_class(cfg, &clean)?;
    let group = expected_index_group(class, clean.spec.d);
    let kink = KinkPoint::center(&clean.spec)?;
    let delta = cfg.index.delta;
    let e_fermi = cfg.index.e_fermi;
    let guard = default_radius(&clean.spec).max(1.0);
    let r_list: Vec<f64> = match &cfg.index.r_list {
        Some(l) => l.clone(),
        None => {
            let full: Vec<f64> = [3.0, 4.0, 5.0]
                .into_iter()
                .filter(|r| *r <= guard)
                .collect();
            if full.is_empty() {
                vec![guard]
            } else {
                full
            }
        }
    };
    let (w, n_real, seed0, dkind) = match &cfg.disorder {
        Some(ds) => (ds.w, ds.n_realizations.max(1), ds.seed0, ds.kind),
        None => (0.0, 1, default_seed(), DisorderKind::OnsiteScalar),
    };

    let tasks: Vec<(u64, f64)> = (0..n_real as u64)
        .flat_map(|i| r_list.iter().map(move |&r| (seed0 + i, r)))
        .collect();
    let mut records: Vec<ResultRecord> = tasks
        .into_par_iter()
        .map(|(seed, radius)| {
            let t0 = Instant::now();
            let outcome = apply_disorder(&clean, dkind, w, seed, &clean.syms)
                .and_then(|m| full_pipeline(&m, &kink, delta, radius, e_fermi));
            record_from(
                &hash,
                cfg.experiment,
                seed,
                "R",
                radius,
                delta,
                radius,
                &outcome,
                t0.elapsed().as_millis(),
            )
        })
        .collect::<Result<_>>()?;
    sort_records(&mut records);

    // Structural checks per the predicted index group.
    let certified: Vec<&ResultRecord> =
        records.iter().filter(|r| r.status == "certified").collect();
    let mut checks = Vec::new();
    let mut pass = true;
    match group {
        IndexGroup::TwoZ => {
            let even = certified
                .iter()
                .all(|r| r.n_plus % 2 == 0 && r.n_minus % 2 == 0);
            pass &= even && !certified.is_empty();
            checks.push(json!({"check": "kernel counts even (2Z cell)", "pass": even}));
        }
        IndexGroup::Z2 => {
            let balanced = certified.iter().all(|r| r.n_plus == r.n_minus);
            pass &= balanced && !certified.is_empty();
            checks.push(json!({"check": "n_plus = n_minus (Z2 cell)", "pass": balanced}));
            let z2 = consensus(certified.iter().map(|r| r.z2_index));
            checks.push(json!({"check": "consensus Z2 value", "value": z2}));
        }
        IndexGroup::None => {
            // no stable certified nonzero cluster across the R scan
            let mut stable = false;
            for i in 0..n_real as u64 {
                let seed = seed0 + i;
                let per_seed: Vec<Option<i64>> = records
                    .iter()
                    .filter(|r| r.seed == seed && r.status == "certified")
                    .map(|r| {
                        r.integer_index
                            .filter(|_| r.n_plus + r.n_minus > 0)
                    })
                    .collect();
                if per_seed.len() == r_list.len() {
                    if let Some(v) = consensus(per_seed.into_iter()) {
                        if v != 0 {
                            stable = true;
                        }
                    }
                }
            }
            pass &= !stable;
            checks.push(json!({"check": "no stable near-kernel cluster (empty cell)", "pass": !stable}));
        }
        IndexGroup::Z => {
            let idx = consensus(certified.iter().map(|r| r.integer_index));
            pass &= idx.is_some() && !certified.is_empty();
            checks.push(json!({"check": "consensus integer index (Z cell)", "value": idx}));
        }
    }
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "class": class.name(),
        "d": clean.spec.d,
        "index_group": group,
        "r_list": r_list,
        "checks": checks,
        "audit_pass": pass,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records,
        certification_failed: !pass,
    })
}

/// `convergence`: scan lattice sizes (and optionally `R`, `δ`), reporting the
/// certified index and the near-kernel distances `1 − λ` per combination.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let ms = require_model(cfg)?;
    let ls = require_lattice(cfg)?;
    let cs = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config("convergence needs a `convergence` section".into()))?;
    let delta_list = cs.delta_list.clone().unwrap_or_else(|| vec![cfg.index.delta]);
    let e_fermi = cfg.index.e_fermi;

    let mut tasks = Vec::new();
    for &l in &cs.l_list {
        let r_list = cs.r_list.clone().unwrap_or_else(|| vec![(l as f64 / 4.0).floor()]);
        for &r in &r_list {
            for &dl in &delta_list {
                tasks.push((l, r, dl));
            }
        }
    }
    let results: Vec<(ResultRecord, Option<f64>)> = tasks
        .into_par_iter()
        .map(|(l, radius, dl)| {
            let sub = RunConfig {
                lattice: Some(LatticeSection {
                    lengths: vec![l; ms.d],
                    boundary: ls.boundary,
                }),
                ..cfg.clone()
            };
            let t0 = Instant::now();
            let outcome = build_model(&sub).and_then(|m| {
                let kink = KinkPoint::center(&m.spec)?;
                full_pipeline(&m, &kink, dl, radius, e_fermi)
            });
            let distance = outcome.as_ref().ok().and_then(|o| o.report.kernel_distance());
            let rec = record_from(
                &hash,
                cfg.experiment,
                0,
                "L",
                l as f64,
                dl,
                radius,
                &outcome,
                t0.elapsed().as_millis(),
            )?;
            Ok((rec, distance))
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<ResultRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    sort_records(&mut records);

    let points: Vec<Value> = results
        .iter()
        .map(|(r, dist)| {
            json!({
                "L": r.value, "R": r.radius, "delta": r.delta,
                "status": r.status, "integer_index": r.integer_index,
                "kernel_distance": dist,
            })
        })
        .collect();
    let failed = records.iter().any(|r| r.status == "unresolved");
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "points": points,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records,
        certification_failed: failed,
    })
}

/// The single-particle linear-response coefficient of a gapped 1D chiral
/// model at `E_F = 0`:
/// `g_I(0) = Σ_{m occ, n emp} Im[⟨m|J|n⟩⟨n|V|m⟩]/(ε_m − ε_n)` with the
/// current `J = i[H, ϑ]` across the kink and the probe `V = S·χ`, the chiral
/// operator restricted to a window of radius `⌊L/4⌋` around the kink.
///
/// The window on the probe is essential: with the bare chiral operator
/// (`V = S`) the sum collapses to `Re tr(PϑS)`, which vanishes identically at
/// finite volume for every chiral Hamiltonian — `SPS = 1 − P` and the
/// per-site tracelessness of `S` give `tr(PϑS) = −tr(PϑS)`.  Localizing the
/// probe breaks that exact cancellation and yields an `L`-stable value equal
/// to half the windowed real-space index of the model.
pub fn linear_response_1d(
    model: &TightBindingModel,
    s: &CMat,
    kink: &KinkPoint,
) -> Result<f64> {
    if model.spec.d != 1 {
        return Err(Error::Dimension("linear response is a d = 1 experiment".into()));
    }
    let eig = eigh(&model.h)?;
    let p = fermi_projection(&eig, 0.0, DEFAULT_GAP_TOL)?;
    let n_occ = p.n_occupied;
    let dim = model.dim();
    let theta = step_function(&model.spec, kink, 1)?.expanded(1, model.spec.internal_dim);
    // J = i[H, ϑ] with diagonal ϑ: J_rc = i·H_rc·(ϑ_c − ϑ_r)
    let j_op = CMat::from_shape_fn((dim, dim), |(r, c)| {
        model.h[(r, c)] * C64::new(0.0, theta[c] - theta[r])
    });
    let radius = (model.spec.lengths.iter().copied().min().unwrap() / 4).max(1) as f64;
    let chi = crate::lattice::ball_cutoff(
        &model.spec,
        kink,
        radius,
        crate::ncindex::image_rule_for(&model.spec),
    )?
    .expanded(1, model.spec.internal_dim);
    // V = S·χ (χ diagonal, so scale the columns of S)
    let v_probe = CMat::from_shape_fn((dim, dim), |(r, c)| s[(r, c)] * chi[c]);
    let occ = eig.eigenvectors.slice(ndarray::s![.., ..n_occ]).to_owned();
    let emp = eig.eigenvectors.slice(ndarray::s![.., n_occ..]).to_owned();
    let j_me = occ.t().mapv(|z| z.conj()).dot(&j_op).dot(&emp);
    let s_em = emp.t().mapv(|z| z.conj()).dot(&v_probe).dot(&occ);
    let mut g = 0.0;
    for m in 0..n_occ {
        for n in 0..dim - n_occ {
            let de = eig.eigenvalues[m] - eig.eigenvalues[n_occ + n];
            g += (j_me[(m, n)] * s_em[(n, m)]).im / de;
        }
    }
    Ok(g)
}

/// `linear-response`: evaluate `g_I(0)` for the configured 1D chiral model
/// and report its ratio to the momentum winding invariant.  The exact
/// prefactor of that ratio is reported, not asserted.
pub fn cmd_linear_response(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let model = build_model(cfg)?;
    let s = model
        .syms
        .s
        .clone()
        .ok_or_else(|| Error::Config("linear response needs a chiral model".into()))?;
    let kink = KinkPoint::center(&model.spec)?;
    let t0 = Instant::now();
    let g = linear_response_1d(&model, &s, &kink)?;
    let g_flipped = linear_response_1d(&model, &s.mapv(|z| -z), &kink)?;
    let ms = require_model(cfg)?;
    let (t_s, t_c) = hopping_vectors(ms);
    let params = ModelParams {
        d: 1,
        t_s,
        t_c,
        m0: ms.m0,
        coupling: None,
        disorder_w: 0.0,
        disorder_seed: None,
    };
    let grid = BZGrid::new(1, cfg.grid.n_k.max(512))?;
    let nu = {
        let field = model_unit_field(&params, &grid)?;
        winding_unitvector(field, &grid)?
    };
    let ratio = if nu.abs() > 1e-6 { Some(g / nu) } else { None };
    let record = ResultRecord {
        config_hash: hash.clone(),
        experiment: cfg.experiment.name().to_string(),
        seed: 0,
        param: "L".into(),
        value: model.spec.lengths[0] as f64,
        status: if g.is_finite() { "certified".into() } else { "unresolved".into() },
        n_plus: -1,
        n_minus: -1,
        delta: cfg.index.delta,
        radius: f64::NAN,
        integer_index: None,
        z2_index: None,
        gap: f64::NAN,
        susy_residual: f64::NAN,
        symmetry_residual: (g + g_flipped).abs(),
        wall_ms: t0.elapsed().as_millis(),
    };
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "g": g,
        "sign_odd_residual": (g + g_flipped).abs(),
        "winding": nu,
        "ratio_g_over_nu": ratio,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records: vec![record],
        certification_failed: !g.is_finite(),
    })
}

/// Residuals of the Clifford-algebra self-test for one `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliffordCheck {
    pub n: usize,
    pub anticommutation: f64,
    pub c_conjugation: f64,
    pub signature_matrix: f64,
}

/// Re-verify the gamma construction at runtime: anticommutation relations,
/// `C±` conjugation relations, and the signature-table signs evaluated on
/// the explicit matrices.
pub fn clifford_selftest() -> Result<Vec<CliffordCheck>> {
    let mut out = Vec::new();
    for n in 1..=MAX_N {
        let gs = build_gamma_set(n)?;
        let id = eye(gs.dim);
        let mut anti = 0.0f64;
        for i in 1..=2 * n + 1 {
            for j in i..=2 * n + 1 {
                let mut ac = gs.gamma(i).dot(gs.gamma(j)) + gs.gamma(j).dot(gs.gamma(i));
                if i == j {
                    ac = ac - id.mapv(|z| z * 2.0);
                }
                anti = anti.max(max_abs(&ac));
            }
        }
        // C+ γ C+ = ±conj(γ): sign (−1)^{n+1} for j ≤ 2n, (−1)^n at j = 2n+1;
        // C− γ C− = (−1)^n conj(γ) throughout.
        let sp = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let sm = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut conj_resid = 0.0f64;
        for j in 1..=2 * n + 1 {
            let g = gs.gamma(j);
            let gc = g.mapv(|z| z.conj());
            let plus_sign = if j <= 2 * n { sp } else { sm };
            conj_resid = conj_resid
                .max(max_abs(&(gs.c_plus.dot(g).dot(&gs.c_plus) - gc.mapv(|z| z * plus_sign))));
            conj_resid =
                conj_resid.max(max_abs(&(gs.c_minus.dot(g).dot(&gs.c_minus) - gc.mapv(|z| z * sm))));
        }
        // signature row: (C±K)² = C±·conj(C±) must equal the tabulated sign
        let row = real_structure_signs(2 * n)?;
        let mut sig = 0.0f64;
        for (c, sign) in [(&gs.c_plus, row.sgn_cpk2), (&gs.c_minus, row.sgn_cmk2)] {
            let sq = c.dot(&c.mapv(|z| z.conj()));
            sig = sig.max(max_abs(&(&sq - &id.mapv(|z| z * f64::from(sign)))));
        }
        out.push(CliffordCheck {
            n,
            anticommutation: anti,
            c_conjugation: conj_resid,
            signature_matrix: sig,
        });
    }
    Ok(out)
}

/// `clifford-selftest`: runtime re-verification of the algebraic layer.
pub fn cmd_clifford_selftest(cfg: &RunConfig) -> Result<RunOutput> {
    let resolved = cfg.to_json()?;
    let hash = config_hash(&resolved);
    let t0 = Instant::now();
    let checks = clifford_selftest()?;
    let worst = checks
        .iter()
        .flat_map(|c| [c.anticommutation, c.c_conjugation, c.signature_matrix])
        .fold(0.0f64, f64::max);
    let pass = worst < 1e-13;
    let rows: Vec<Value> = [2usize, 4, 6, 8]
        .into_iter()
        .map(|d| {
            let s = real_structure_signs(d).unwrap();
            json!({
                "d": d,
                "sgn_cpk2": s.sgn_cpk2, "sgn_cmk2": s.sgn_cmk2,
                "sgn_gamma_last": s.sgn_gamma_last,
                "sgn_plus_d": s.sgn_plus_d, "sgn_minus_d": s.sgn_minus_d,
            })
        })
        .collect();
    let record = ResultRecord {
        config_hash: hash.clone(),
        experiment: cfg.experiment.name().to_string(),
        seed: 0,
        param: "n_max".into(),
        value: MAX_N as f64,
        status: if pass { "certified".into() } else { "unresolved".into() },
        n_plus: -1,
        n_minus: -1,
        delta: f64::NAN,
        radius: f64::NAN,
        integer_index: None,
        z2_index: None,
        gap: f64::NAN,
        susy_residual: worst,
        symmetry_residual: f64::NAN,
        wall_ms: t0.elapsed().as_millis(),
    };
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": hash,
        "checks": checks,
        "signature_table": rows,
        "max_residual": worst,
        "pass": pass,
    });
    Ok(RunOutput {
        resolved,
        summary,
        records: vec![record],
        certification_failed: !pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(experiment: ExperimentKind) -> RunConfig {
        RunConfig {
            experiment,
            model: Some(ModelSection {
                d: 1,
                m0: 0.5,
                t_s: None,
                t_c: None,
                family: ModelFamily::Dirac,
                t0: default_t0(),
                doubling: None,
            }),
            lattice: Some(LatticeSection {
                lengths: vec![32],
                boundary: Boundary::Periodic,
            }),
            class: None,
            allow_empty_cell: false,
            disorder: None,
            index: IndexSection::default(),
            grid: GridSection::default(),
            convergence: None,
            output: None,
        }
    }

    #[test]
    fn config_schema_rejects_unknown_keys() {
        let v = json!({
            "experiment": "compute-index",
            "model": {"d": 1, "m0": 0.5},
            "lattice": {"lengths": [32]},
            "bogus_key": 1,
        });
        assert!(RunConfig::from_json(&v).is_err());

        let ok = json!({
            "experiment": "compute-index",
            "model": {"d": 1, "m0": 0.5},
            "lattice": {"lengths": [32]},
        });
        let cfg = RunConfig::from_json(&ok).unwrap();
        assert_eq!(cfg.index.delta, 0.2);
        assert_eq!(cfg.grid.n_k, 64);
    }

    #[test]
    fn overrides_and_hash() {
        let mut v = json!({
            "experiment": "compute-index",
            "model": {"d": 1, "m0": 0.5},
            "lattice": {"lengths": [32]},
        });
        let h0 = config_hash(&v);
        apply_override(&mut v, "model.m0", "2.5").unwrap();
        apply_override(&mut v, "disorder.w", "0.1").unwrap();
        let cfg = RunConfig::from_json(&v).unwrap();
        assert_eq!(cfg.model.as_ref().unwrap().m0, 2.5);
        assert_eq!(cfg.disorder.as_ref().unwrap().w, 0.1);
        assert_ne!(config_hash(&v), h0);
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
    }

    #[test]
    fn csv_row_matches_header() {
        let cfg = base_config(ExperimentKind::ComputeIndex);
        let out = cmd_compute_index(&cfg).unwrap();
        let header_cols = CSV_HEADER.split(',').count();
        for r in &out.records {
            assert_eq!(r.csv_row().split(',').count(), header_cols);
        }
    }

    #[test]
    fn compute_index_d1_end_to_end() {
        let out = cmd_compute_index(&base_config(ExperimentKind::ComputeIndex)).unwrap();
        assert!(!out.certification_failed);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].status, "certified");
        assert_eq!(out.records[0].integer_index, Some(-1));
        assert_eq!(out.summary["class"], "AIII");
    }

    #[test]
    fn compute_index_is_deterministic() {
        let mut cfg = base_config(ExperimentKind::ComputeIndex);
        cfg.disorder = Some(DisorderSection {
            kind: DisorderKind::OnsiteScalar,
            w: 0.3,
            w_list: None,
            n_realizations: 3,
            seed0: 11,
        });
        let a = cmd_compute_index(&cfg).unwrap();
        let b = cmd_compute_index(&cfg).unwrap();
        let rows_a: Vec<String> = a.records.iter().map(|r| {
            let mut r = r.clone();
            r.wall_ms = 0;
            r.csv_row()
        }).collect();
        let rows_b: Vec<String> = b.records.iter().map(|r| {
            let mut r = r.clone();
            r.wall_ms = 0;
            r.csv_row()
        }).collect();
        assert_eq!(rows_a, rows_b);
    }

    #[test]
    fn empty_cell_refused_without_override() {
        // class AI at d = 2 is an empty periodic-table cell.
        let mut cfg = base_config(ExperimentKind::ComputeIndex);
        cfg.model = Some(ModelSection {
            d: 2,
            m0: 1.0,
            t_s: None,
            t_c: None,
            family: ModelFamily::RealSymmetric,
            t0: 0.3,
            doubling: None,
        });
        cfg.lattice = Some(LatticeSection {
            lengths: vec![12, 12],
            boundary: Boundary::Periodic,
        });
        let err = cmd_compute_index(&cfg).unwrap_err();
        assert!(matches!(err, Error::Classification(_)), "{err}");
        assert!(err.to_string().contains("empty cell"));

        cfg.allow_empty_cell = true;
        let out = cmd_compute_index(&cfg).unwrap();
        assert_eq!(out.summary["class"], "AI");
    }

    #[test]
    fn class_mismatch_rejected() {
        let mut cfg = base_config(ExperimentKind::ComputeIndex);
        cfg.class = Some("AII".into());
        assert!(matches!(
            cmd_compute_index(&cfg),
            Err(Error::Classification(_))
        ));
        cfg.class = Some("AIII".into());
        assert!(cmd_compute_index(&cfg).is_ok());
    }

    #[test]
    fn momentum_invariant_command() {
        let mut cfg = base_config(ExperimentKind::MomentumInvariant);
        cfg.grid.n_k = 256;
        let out = cmd_momentum_invariant(&cfg).unwrap();
        assert!(!out.certification_failed);
        assert_eq!(out.summary["nearest_integer"], 1);
        // chiral quadrature cross-check rides along for odd d
        let cross = out.summary["cross_check"].as_f64().unwrap();
        assert!((cross - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sweep_disorder_w0_matches_clean() {
        let mut cfg = base_config(ExperimentKind::SweepDisorder);
        // On the 1D chiral chain a scalar onsite potential commutes with S
        // and is annihilated by the symmetrizing projection, so use matrix
        // disorder to actually perturb the Hamiltonian.
        cfg.disorder = Some(DisorderSection {
            kind: DisorderKind::OnsiteMatrix,
            w: 0.0,
            w_list: Some(vec![0.0, 0.4]),
            n_realizations: 2,
            seed0: 3,
        });
        let out = cmd_sweep_disorder(&cfg).unwrap();
        assert!(!out.certification_failed);
        let w0: Vec<&ResultRecord> =
            out.records.iter().filter(|r| r.value == 0.0).collect();
        assert!(w0.iter().all(|r| r.integer_index == Some(-1)));
        // drift is zero at W = 0, positive at W > 0
        assert_eq!(out.summary["per_w"][0]["max_a_drift"], 0.0);
        assert!(out.summary["per_w"][1]["max_a_drift"].as_f64().unwrap() > 0.0);
        assert_eq!(out.summary["per_w"][1]["agree_with_clean"], 2);
    }

    #[test]
    fn convergence_kernel_distance_shrinks() {
        let mut cfg = base_config(ExperimentKind::Convergence);
        // m0 = 0 is the exactly-flat-band point where the kernel distance is
        // zero at every size; pick a generic mass instead.  The distance is
        // controlled by the compression radius, so grow R at fixed L.
        cfg.model.as_mut().unwrap().m0 = 0.5;
        cfg.convergence = Some(ConvergenceSection {
            l_list: vec![24],
            r_list: Some(vec![2.0, 5.0]),
            delta_list: Some(vec![0.2]),
        });
        let out = cmd_convergence(&cfg).unwrap();
        let d_small = out.summary["points"][0]["kernel_distance"].as_f64().unwrap();
        let d_large = out.summary["points"][1]["kernel_distance"].as_f64().unwrap();
        assert!(
            d_large < d_small,
            "kernel distance did not shrink: {d_small} → {d_large}"
        );
    }

    #[test]
    fn audit_aii_d2_doubled() {
        let mut cfg = base_config(ExperimentKind::AuditClass);
        cfg.model = Some(ModelSection {
            d: 2,
            m0: 1.0,
            t_s: None,
            t_c: None,
            family: ModelFamily::Dirac,
            t0: default_t0(),
            doubling: Some(DoublingSection {
                kind: Doubling::TimeReversal,
                coupling: 0.2,
            }),
        });
        cfg.lattice = Some(LatticeSection {
            lengths: vec![12, 12],
            boundary: Boundary::Periodic,
        });
        cfg.index.r_list = Some(vec![2.5, 3.0]);
        let out = cmd_audit_class(&cfg).unwrap();
        assert_eq!(out.summary["class"], "AII");
        assert_eq!(out.summary["index_group"], "Z2");
        assert_eq!(out.summary["audit_pass"], true, "{}", out.summary);
        assert!(out.records.iter().all(|r| r.n_plus == r.n_minus));
        assert!(out.records.iter().all(|r| r.z2_index == Some(1)));
    }

    #[test]
    fn audit_empty_cell_ai_d2() {
        let mut cfg = base_config(ExperimentKind::AuditClass);
        cfg.model = Some(ModelSection {
            d: 2,
            m0: 1.0,
            t_s: None,
            t_c: None,
            family: ModelFamily::RealSymmetric,
            t0: 0.3,
            doubling: None,
        });
        cfg.lattice = Some(LatticeSection {
            lengths: vec![12, 12],
            boundary: Boundary::Periodic,
        });
        cfg.index.r_list = Some(vec![2.0, 2.5, 3.0]);
        let out = cmd_audit_class(&cfg).unwrap();
        assert_eq!(out.summary["class"], "AI");
        assert_eq!(out.summary["index_group"], "None");
        assert_eq!(out.summary["audit_pass"], true, "{}", out.summary);
    }

    #[test]
    fn linear_response_properties() {
        // zero hopping ⇒ J ≡ 0 ⇒ g = 0
        let spec = LatticeSpec::cubic(1, 16, Boundary::Periodic, 2).unwrap();
        let atomic = build_dirac_lattice_model(&spec, &[0.0], &[0.0], 1.0).unwrap();
        let s = atomic.syms.s.clone().unwrap();
        let kink = KinkPoint::center(&spec).unwrap();
        let g = linear_response_1d(&atomic, &s, &kink).unwrap();
        assert!(g.abs() < 1e-14, "atomic limit g = {g:.2e}");

        // sign-odd in S
        let model = build_dirac_lattice_model(&spec, &[1.0], &[1.0], 0.0).unwrap();
        let s = model.syms.s.clone().unwrap();
        let g = linear_response_1d(&model, &s, &kink).unwrap();
        let gf = linear_response_1d(&model, &s.mapv(|z| -z), &kink).unwrap();
        assert!((g + gf).abs() < 1e-12);
        assert!(g.abs() > 1e-3, "g unexpectedly vanishes: {g:.2e}");
    }

    #[test]
    fn linear_response_command_ratio_stable() {
        let mut cfg = base_config(ExperimentKind::LinearResponse);
        cfg.model.as_mut().unwrap().m0 = 0.0;
        cfg.lattice.as_mut().unwrap().lengths = vec![48];
        let a = cmd_linear_response(&cfg).unwrap();
        cfg.lattice.as_mut().unwrap().lengths = vec![64];
        let b = cmd_linear_response(&cfg).unwrap();
        let ra = a.summary["ratio_g_over_nu"].as_f64().unwrap();
        let rb = b.summary["ratio_g_over_nu"].as_f64().unwrap();
        assert!(
            (ra - rb).abs() / rb.abs() < 0.05,
            "ratio drifted: {ra} vs {rb}"
        );
    }

    #[test]
    fn clifford_selftest_passes() {
        let cfg = RunConfig {
            model: None,
            lattice: None,
            ..base_config(ExperimentKind::CliffordSelftest)
        };
        let t0 = Instant::now();
        let out = cmd_clifford_selftest(&cfg).unwrap();
        assert!(!out.certification_failed);
        assert!(out.summary["max_residual"].as_f64().unwrap() < 1e-13);
        assert!(t0.elapsed().as_secs() < 1, "selftest exceeded 1 s");
    }

    #[test]
    fn write_outputs_roundtrip() {
        let dir = std::env::temp_dir().join(format!("tenfold-test-{}", std::process::id()));
        let out = cmd_compute_index(&base_config(ExperimentKind::ComputeIndex)).unwrap();
        let paths = write_outputs(&dir, &out).unwrap();
        assert_eq!(paths.len(), 3);
        let csv = std::fs::read_to_string(&paths[2]).unwrap();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + out.records.len());
        let resolved: Value =
            serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert!(RunConfig::from_json(&resolved).is_ok());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn real_symmetric_model_is_ai_and_gapped() {
        let spec = LatticeSpec::cubic(2, 10, Boundary::Periodic, 2).unwrap();
        let m = build_real_symmetric_model(&spec, &[1.0, 1.0], &[1.0, 1.0], 1.0, 0.3).unwrap();
        assert_eq!(classify(&m.syms).unwrap(), CAZClass::AI);
        // H is entrywise real
        let max_im = m.h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-14);
        let eig = eigh(&m.h).unwrap();
        let gap = eig.eigenvalues.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        assert!(gap > 0.3, "AI model gap {gap}");
    }
}
