use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qsplit::ansatz::{BlockFamily, SplitSpec};
use qsplit::bp::{fit_decay, scan, Axis, DecayFit, ScanConfig, VarianceRecord, RECORD_SCHEMA};
use qsplit::datasets::{
    gen_hypercube_classification, gen_quantum_ce_dataset, histogram_overlap, load_classical, load_quantum, manifest_path,
    save_classical, save_quantum, HypercubeConfig, QuantumDatasetConfig, CLASSICAL_SCHEMA, MANIFEST_SCHEMA, QUANTUM_SCHEMA,
};
use qsplit::error::Error;
use qsplit::grad::SpsaConfig;
use qsplit::haar::{verify_all, HaarReport, IdentityCheck};
use qsplit::router::{check_equivalence, count_table, route, CountConfig, GridTopology, COUNT_SCHEMA, EQUIVALENCE_MAX};
use qsplit::stats;
use qsplit::sv::Circuit;
use qsplit::tasks::{
    run_vqe_batch, train_classifier_batch, ClassifyConfig, ClassifySummary, TaskData, VqeConfig, EPOCH_SCHEMA, GROUND_ENERGY_MAX,
    VQE_SCHEMA,
};

use crate::output::OutDir;
use crate::Common;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Check(String),
}

impl Failure {
    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Runtime(_) => "runtime",
            Failure::Check(_) => "check_failed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) | Failure::Check(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Maps a validation error to a config failure.
fn invalid<T>(r: qsplit::error::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.to_string()))
}

fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<Option<T>, Failure> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map(Some)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_required<T: DeserializeOwned>(c: &Common) -> Result<T, Failure> {
    load(c.config.as_deref())?.ok_or_else(|| Failure::Config("this subcommand needs --config".into()))
}

fn done(path: PathBuf) -> Result<(), Failure> {
    log::info!("wrote {}", path.display());
    println!("{}", path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitRow {
    group: String,
    axis: Axis,
    #[serde(flatten)]
    fit: DecayFit,
}

fn block_label(r: &VarianceRecord) -> String {
    if r.m == r.n {
        "N".into()
    } else {
        r.m.to_string()
    }
}

/// Decay fits along N (per block label and T) for L = N or fixed-depth
/// grids, otherwise along L (per N, m and T).
fn scan_fits(cfg: &ScanConfig, recs: &[VarianceRecord]) -> Vec<FitRow> {
    let along_n = cfg.layers_equal_n || cfg.depth.is_some();
    let mut groups: BTreeMap<String, Vec<VarianceRecord>> = BTreeMap::new();
    for r in recs {
        let key = if along_n {
            format!("m={} T={}", block_label(r), r.t)
        } else {
            format!("N={} m={} T={}", r.n, r.m, r.t)
        };
        groups.entry(key).or_default().push(r.clone());
    }
    let axis = if along_n { Axis::N } else { Axis::L };
    groups
        .into_iter()
        .filter_map(|(group, rs)| fit_decay(&rs, axis, false).ok().map(|fit| FitRow { group, axis, fit }))
        .collect()
}

pub fn bp_scan(name: &str, c: &Common) -> Result<(), Failure> {
    let mut cfg: ScanConfig = load_required(c)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let cells = invalid(cfg.cells())?;
    log::info!("{} cells, {} samples each", cells.len(), cfg.samples);
    let recs = scan(&cfg)?;
    let mut out = OutDir::create(&c.out)?;
    let meta = [("samples", cfg.samples.to_string()), ("seed", cfg.seed.to_string())];
    out.table("bp_scan.csv", RECORD_SCHEMA, &meta, &recs)?;
    out.json("bp_fits.json", "bp_fits v1", &serde_json::json!({ "fits": scan_fits(&cfg, &recs) }))?;
    done(out.finish(name, Some(cfg.seed), &cfg)?)
}

#[derive(Debug, Clone, Args)]
pub struct HaarArgs {
    /// Dimensions to check, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarFile {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_haar_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_dims() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_haar_samples() -> usize {
    100_000
}

#[derive(Debug, Serialize)]
struct CheckRow {
    d: usize,
    check: String,
    estimate: f64,
    oracle: f64,
    std_error: f64,
    pass: bool,
}

fn check_rows(r: &HaarReport) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for m in std::iter::once(&r.first_moment).chain(&r.second_moment) {
        rows.push(CheckRow {
            d: r.d,
            check: format!("{}_max_abs_error", m.name),
            estimate: m.max_abs_error,
            oracle: 0.0,
            std_error: m.std_error,
            pass: m.pass,
        });
    }
    let ident = |prefix: &str, c: &IdentityCheck| CheckRow {
        d: r.d,
        check: format!("{prefix}{}", c.name),
        estimate: c.estimate_re,
        oracle: c.oracle_re,
        std_error: c.std_error_re,
        pass: c.pass,
    };
    rows.extend(r.trace_identities.iter().map(|c| ident("", c)));
    rows.extend(r.identity_operands.iter().map(|c| ident("identity_", c)));
    rows.extend(r.left_invariance.iter().map(|c| ident("left_", c)));
    if let Some(g) = &r.gradient {
        rows.push(CheckRow {
            d: r.d,
            check: "gradient_mean".into(),
            estimate: g.mean,
            oracle: 0.0,
            std_error: g.mean_std_error,
            pass: g.mean_pass,
        });
        rows.push(CheckRow {
            d: r.d,
            check: "gradient_variance".into(),
            estimate: g.variance,
            oracle: g.closed_form,
            std_error: g.variance_std_error,
            pass: g.variance_pass,
        });
    }
    rows
}

pub fn haar_verify(name: &str, c: &Common, a: &HaarArgs) -> Result<(), Failure> {
    let mut cfg: HaarFile = load(c.config.as_deref())?.unwrap_or(HaarFile {
        dims: default_dims(),
        samples: default_haar_samples(),
        seed: 0,
    });
    if !a.dims.is_empty() {
        cfg.dims = a.dims.clone();
    }
    if let Some(s) = a.samples {
        cfg.samples = s;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if cfg.dims.is_empty() || cfg.dims.iter().any(|&d| d < 2) {
        return Err(Failure::Config("dims must be non-empty and at least 2".into()));
    }
    if cfg.samples < 2 {
        return Err(Failure::Config("samples must be at least 2".into()));
    }
    let mut reports = Vec::new();
    for &d in &cfg.dims {
        log::info!("d = {d}");
        reports.push(verify_all(d, cfg.samples, cfg.seed)?);
    }
    let rows: Vec<CheckRow> = reports.iter().flat_map(check_rows).collect();
    let failed = rows.iter().filter(|r| !r.pass).count();
    let mut out = OutDir::create(&c.out)?;
    out.table("haar_checks.csv", "haar_check v1", &[("samples", cfg.samples.to_string())], &rows)?;
    out.json("haar_report.json", "haar_report v1", &serde_json::json!({ "reports": reports }))?;
    done(out.finish(name, Some(cfg.seed), &cfg)?)?;
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} Haar checks failed")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DatasetKind {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long, value_enum)]
    pub kind: Option<DatasetKind>,
    #[arg(long)]
    pub n_features: Option<usize>,
    /// Rows of the classical dataset.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub n_qubits: Option<usize>,
    /// Two CE targets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<f64>,
    #[arg(long)]
    pub per_class: Option<usize>,
    /// File name inside the output directory.
    #[arg(long)]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<HypercubeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumDatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

fn resolve_dataset(c: &Common, a: &DatasetArgs) -> Result<DatasetFile, Failure> {
    let mut f: DatasetFile = load(c.config.as_deref())?.unwrap_or_default();
    let kind = match (a.kind, &f.classical, &f.quantum) {
        (Some(k), _, _) => k,
        (None, Some(_), None) => DatasetKind::Classical,
        (None, None, Some(_)) => DatasetKind::Quantum,
        (None, None, None) => return Err(Failure::Config("give --kind or a [classical]/[quantum] config section".into())),
        (None, Some(_), Some(_)) => return Err(Failure::Config("config has both [classical] and [quantum]".into())),
    };
    let seed = c.seed;
    match kind {
        DatasetKind::Classical => {
            let mut h = match (f.classical.take(), a.n_features) {
                (Some(h), _) => h,
                (None, Some(n)) => HypercubeConfig::new(n, 0),
                (None, None) => return Err(Failure::Config("--n-features is required".into())),
            };
            if let Some(n) = a.n_features {
                h.n_features = n;
            }
            if let Some(s) = a.samples {
                h.n_samples = s;
            }
            if let Some(s) = seed {
                h.seed = s;
            }
            f = DatasetFile {
                classical: Some(h),
                quantum: None,
                file: a.file.clone().or(f.file),
            };
        }
        DatasetKind::Quantum => {
            let targets = match a.targets.as_slice() {
                [] => None,
                [x, y] => Some([*x, *y]),
                _ => return Err(Failure::Config("--targets takes exactly two values".into())),
            };
            let mut q = match (f.quantum.take(), a.n_qubits, targets) {
                (Some(q), _, _) => q,
                (None, Some(n), Some(t)) => QuantumDatasetConfig::new(n, t, 0),
                _ => return Err(Failure::Config("--n-qubits and --targets are required".into())),
            };
            if let Some(n) = a.n_qubits {
                q.n_qubits = n;
            }
            if let Some(t) = targets {
                q.targets = t;
            }
            if let Some(p) = a.per_class {
                q.per_class = p;
            }
            if let Some(s) = seed {
                q.seed = s;
            }
            f = DatasetFile {
                classical: None,
                quantum: Some(q),
                file: a.file.clone().or(f.file),
            };
        }
    }
    if let Some(file) = &f.file {
        if Path::new(file).components().count() != 1 {
            return Err(Failure::Config("file must be a plain file name".into()));
        }
    }
    Ok(f)
}

pub fn gen_dataset(name: &str, c: &Common, a: &DatasetArgs) -> Result<(), Failure> {
    let f = resolve_dataset(c, a)?;
    let mut out = OutDir::create(&c.out)?;
    let seed;
    if let Some(h) = &f.classical {
        seed = h.seed;
        let d = gen_hypercube_classification(h).map_err(|e| match e {
            Error::InvalidArgument(m) => Failure::Config(m),
            e => e.into(),
        })?;
        let file = f.file.clone().unwrap_or_else(|| "classical.csv".into());
        save_classical(&out.path(&file), &d)?;
        out.record(&file, Some(CLASSICAL_SCHEMA))?;
        let ones = d.labels.iter().filter(|&&y| y == 1).count();
        let summary = serde_json::json!({
            "file": file,
            "rows": d.labels.len(),
            "n_train": d.n_train,
            "class_counts": [d.labels.len() - ones, ones],
        });
        out.json("dataset_summary.json", "dataset_summary v1", &summary)?;
    } else {
        let q = f.quantum.as_ref().expect("resolved");
        seed = q.seed;
        log::info!("fitting group-B parameters for targets {:?}", q.targets);
        let d = gen_quantum_ce_dataset(q).map_err(|e| match e {
            Error::InvalidArgument(m) => Failure::Config(m),
            e => e.into(),
        })?;
        let file = f.file.clone().unwrap_or_else(|| "quantum.csv".into());
        let path = out.path(&file);
        save_quantum(&path, &d)?;
        out.record(&file, Some(QUANTUM_SCHEMA))?;
        let mfile = manifest_path(&path).file_name().expect("file name").to_string_lossy().into_owned();
        out.record(&mfile, Some(MANIFEST_SCHEMA))?;
        let (c0, c1) = (d.realized_ce(0), d.realized_ce(1));
        let summary = serde_json::json!({
            "file": file,
            "rows": d.samples.len(),
            "n_train": d.n_train,
            "targets": d.targets,
            "median_ce": [stats::median(&c0), stats::median(&c1)],
            "histogram_overlap": histogram_overlap(&c0, &c1, 30),
        });
        out.json("dataset_summary.json", "dataset_summary v1", &summary)?;
    }
    done(out.finish(name, Some(seed), &f)?)
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Dataset CSV written by gen-dataset; replaces the config's data source.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<HypercubeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumDatasetConfig>,
    pub train: ClassifyConfig,
}

fn one() -> usize {
    1
}

fn load_dataset(path: &Path) -> Result<TaskData, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read dataset {}: {e}", path.display())))?;
    let first = text.lines().next().unwrap_or("");
    if first.contains(CLASSICAL_SCHEMA) {
        Ok(load_classical(path)?.to_task_data())
    } else if first.contains(QUANTUM_SCHEMA) {
        Ok(load_quantum(path)?.to_task_data()?)
    } else {
        Err(Failure::Config(format!("{}: not a dataset file", path.display())))
    }
}

#[derive(Debug, Serialize)]
struct EpochRow {
    seed: u64,
    epoch: usize,
    train_loss: f64,
    test_loss: f64,
    train_accuracy: f64,
    test_accuracy: f64,
    wall_time: f64,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    best_test_accuracy: f64,
    best_train_accuracy: f64,
    final_test_accuracy: f64,
    epochs_to_train_90: Option<usize>,
    epochs_to_train_100: Option<usize>,
}

pub fn train_classify(name: &str, c: &Common, a: &ClassifyArgs) -> Result<(), Failure> {
    let mut f: TrainFile = load_required(c)?;
    if let Some(s) = a.seeds {
        f.seeds = s;
    }
    if let Some(e) = a.epochs {
        f.train.epochs = e;
    }
    if let Some(s) = c.seed {
        f.train.seed = s;
    }
    if let Some(d) = &a.dataset {
        f = TrainFile {
            dataset: Some(d.clone()),
            classical: None,
            quantum: None,
            ..f
        };
    }
    if f.seeds == 0 {
        return Err(Failure::Config("seeds must be positive".into()));
    }
    invalid(f.train.spec.validate())?;
    let data = match (&f.dataset, &f.classical, &f.quantum) {
        (Some(p), None, None) => load_dataset(p)?,
        (None, Some(h), None) => gen_hypercube_classification(h)?.to_task_data(),
        (None, None, Some(q)) => gen_quantum_ce_dataset(q)?.to_task_data()?,
        _ => return Err(Failure::Config("give exactly one of dataset, [classical], [quantum]".into())),
    };
    if data.num_qubits() != Some(f.train.spec.num_qubits) {
        return Err(Failure::Config(format!(
            "dataset has {:?} qubits, circuit has {}",
            data.num_qubits(),
            f.train.spec.num_qubits
        )));
    }
    log::info!("training {} seeds for {} epochs", f.seeds, f.train.epochs);
    let results = train_classifier_batch(&f.train, &data, f.seeds)?;
    let rows: Vec<EpochRow> = results
        .iter()
        .flat_map(|r| {
            r.epochs.iter().map(move |e| EpochRow {
                seed: r.seed,
                epoch: e.epoch,
                train_loss: e.train_loss,
                test_loss: e.test_loss,
                train_accuracy: e.train_accuracy,
                test_accuracy: e.test_accuracy,
                wall_time: e.wall_time,
            })
        })
        .collect();
    let runs: Vec<RunSummary> = results
        .iter()
        .map(|r| RunSummary {
            seed: r.seed,
            best_test_accuracy: r.best_test_accuracy,
            best_train_accuracy: r.best_train_accuracy,
            final_test_accuracy: r.epochs.last().map_or(0.0, |e| e.test_accuracy),
            epochs_to_train_90: r.epochs_to_train_90,
            epochs_to_train_100: r.epochs_to_train_100,
        })
        .collect();
    let params: Vec<_> = results
        .iter()
        .map(|r| serde_json::json!({ "seed": r.seed, "params": r.final_params }))
        .collect();
    let mut out = OutDir::create(&c.out)?;
    out.table("epochs.csv", EPOCH_SCHEMA, &[("seeds", f.seeds.to_string())], &rows)?;
    out.json(
        "classify_summary.json",
        "classify_summary v1",
        &serde_json::json!({ "summary": ClassifySummary::new(&results), "runs": runs }),
    )?;
    out.json("params.json", "params v1", &serde_json::json!({ "runs": params }))?;
    done(out.finish(name, Some(f.train.seed), &f)?)
}

#[derive(Debug, Clone, Args)]
pub struct VqeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Block size; defaults to N.
    #[arg(long)]
    pub m: Option<usize>,
    /// Total depth D = L + T.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Full-width tail layers T.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Shots per energy estimate; exact expectations when absent.
    #[arg(long)]
    pub shots: Option<usize>,
    /// Block and tail family.
    #[arg(long)]
    pub family: Option<BlockFamily>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeFile {
    #[serde(default = "ten")]
    pub seeds: usize,
    pub run: VqeConfig,
}

fn ten() -> usize {
    10
}

fn resolve_vqe(c: &Common, a: &VqeArgs) -> Result<VqeFile, Failure> {
    let base: Option<VqeFile> = load(c.config.as_deref())?;
    let mut f = match base {
        Some(f) => f,
        None => {
            let n = a.n.ok_or_else(|| Failure::Config("--n is required without --config".into()))?;
            let depth = a.depth.ok_or_else(|| Failure::Config("--depth is required without --config".into()))?;
            VqeFile {
                seeds: ten(),
                run: VqeConfig {
                    n,
                    j: 1.0,
                    h: 1.0,
                    spec: SplitSpec {
                        num_qubits: n,
                        block_size: n,
                        cs_layers: depth,
                        standard_layers: 0,
                        block_family: BlockFamily::SU2_FULL,
                    },
                    tail: BlockFamily::SU2_FULL,
                    iterations: 2000,
                    shots: None,
                    spsa: SpsaConfig::default(),
                    seed: 0,
                },
            }
        }
    };
    let r = &mut f.run;
    let old = r.spec;
    let n = a.n.unwrap_or(r.n);
    let depth = a.depth.unwrap_or(old.cs_layers + old.standard_layers);
    let t = a.t.unwrap_or(old.standard_layers);
    if t > depth {
        return Err(Failure::Config(format!("T = {t} exceeds depth {depth}")));
    }
    let m = a.m.unwrap_or(if a.n.is_some() && a.m.is_none() && old.num_qubits != n { n } else { old.block_size });
    r.n = n;
    r.spec = SplitSpec {
        num_qubits: n,
        block_size: m,
        cs_layers: depth - t,
        standard_layers: t,
        block_family: a.family.unwrap_or(old.block_family),
    };
    if let Some(fam) = a.family {
        r.tail = fam;
    }
    if let Some(i) = a.iterations {
        r.iterations = i;
    }
    if a.shots.is_some() {
        r.shots = a.shots;
    }
    if let Some(s) = c.seed {
        r.seed = s;
    }
    if let Some(s) = a.seeds {
        f.seeds = s;
    }
    if f.seeds == 0 {
        return Err(Failure::Config("seeds must be positive".into()));
    }
    if f.run.n > GROUND_ENERGY_MAX || f.run.n < 2 {
        return Err(Failure::Config(format!("N must be in 2..={GROUND_ENERGY_MAX}")));
    }
    if f.run.shots == Some(0) {
        return Err(Failure::Config("shots must be positive".into()));
    }
    invalid(f.run.spec.validate())?;
    Ok(f)
}

#[derive(Debug, Serialize)]
struct StepRow {
    seed: u64,
    step: usize,
    energy: f64,
    best_energy: f64,
    grad_norm: f64,
    wall_time: f64,
}

pub fn vqe(name: &str, c: &Common, a: &VqeArgs) -> Result<(), Failure> {
    let f = resolve_vqe(c, a)?;
    let s = f.run.spec;
    log::info!(
        "N={} m={} L={} T={}: {} seeds x {} SPSA steps",
        s.num_qubits,
        s.block_size,
        s.cs_layers,
        s.standard_layers,
        f.seeds,
        f.run.iterations
    );
    let results = run_vqe_batch(&f.run, f.seeds)?;
    let rows: Vec<StepRow> = results
        .iter()
        .flat_map(|r| {
            r.trajectory.iter().map(move |st| StepRow {
                seed: r.seed,
                step: st.step,
                energy: st.energy,
                best_energy: st.best_energy,
                grad_norm: st.grad_norm,
                wall_time: st.wall_time,
            })
        })
        .collect();
    let errors: Vec<f64> = results.iter().map(|r| r.final_error).collect();
    let summary = serde_json::json!({
        "n": s.num_qubits,
        "m": s.block_size,
        "depth": s.cs_layers + s.standard_layers,
        "t": s.standard_layers,
        "exact_energy": results.first().map(|r| r.exact_energy),
        "mean_final_error": stats::mean(&errors),
        "median_final_error": stats::median(&errors),
        "runs": results.iter().map(|r| serde_json::json!({
            "seed": r.seed,
            "final_energy": r.final_energy,
            "final_error": r.final_error,
            "best_energy": r.trajectory.last().map(|st| st.best_energy),
        })).collect::<Vec<_>>(),
    });
    let params: Vec<_> = results
        .iter()
        .map(|r| serde_json::json!({ "seed": r.seed, "params": r.final_params }))
        .collect();
    let mut out = OutDir::create(&c.out)?;
    out.table("vqe_steps.csv", VQE_SCHEMA, &[("seeds", f.seeds.to_string())], &rows)?;
    out.json("vqe_summary.json", "vqe_summary v1", &summary)?;
    out.json("params.json", "params v1", &serde_json::json!({ "runs": params }))?;
    done(out.finish(name, Some(f.run.seed), &f)?)
}

#[derive(Debug, Clone, Args)]
pub struct TranspileArgs {
    /// Route a single circuit in the text format instead of the count table.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long, requires = "cols")]
    pub rows: Option<usize>,
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Serialize)]
struct RouteRun {
    circuit: PathBuf,
    rows: usize,
    cols: usize,
    restarts: usize,
    seed: u64,
}

pub fn transpile_count(name: &str, c: &Common, a: &TranspileArgs) -> Result<(), Failure> {
    if let Some(path) = &a.circuit {
        return route_one(name, c, a, path);
    }
    let mut cfg: CountConfig = load(c.config.as_deref())?.unwrap_or_default();
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    for &n in &cfg.n_values {
        for m in &cfg.m_values {
            let m = m.resolve(n);
            if m == 0 || n % m != 0 {
                return Err(Failure::Config(format!("block size {m} does not divide N = {n}")));
            }
        }
    }
    let rows = count_table(&cfg)?;
    let mut out = OutDir::create(&c.out)?;
    out.table("transpile_count.csv", COUNT_SCHEMA, &[("seed", cfg.seed.to_string())], &rows)?;
    done(out.finish(name, Some(cfg.seed), &cfg)?)
}

fn route_one(name: &str, c: &Common, a: &TranspileArgs, path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let circuit = Circuit::from_text(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let n = circuit.num_qubits();
    let topo = match (a.rows, a.cols) {
        (Some(r), Some(cl)) => invalid(GridTopology::new(r, cl))?,
        _ => GridTopology::square_for(n),
    };
    if topo.num_cells() < n {
        return Err(Failure::Config(format!("{} cells cannot hold {n} qubits", topo.num_cells())));
    }
    let run = RouteRun {
        circuit: path.to_path_buf(),
        rows: topo.rows,
        cols: topo.cols,
        restarts: a.restarts.unwrap_or(2),
        seed: c.seed.unwrap_or(0),
    };
    let routed = route(&circuit, &topo, run.seed, run.restarts)?;
    let infidelity = if topo.num_cells() <= EQUIVALENCE_MAX {
        let params: Vec<f64> = (0..circuit.num_params()).map(|j| 0.1 + 0.37 * j as f64).collect();
        Some(check_equivalence(&circuit, &routed, &params, run.seed)?)
    } else {
        None
    };
    let mut out = OutDir::create(&c.out)?;
    out.text("routed.txt", None, &routed.to_circuit()?.to_text())?;
    let summary = serde_json::json!({
        "num_qubits": n,
        "rows": topo.rows,
        "cols": topo.cols,
        "native_cx": circuit.two_qubit_count(),
        "swaps": routed.swaps,
        "cx_count": routed.cx_count,
        "attempt": routed.attempt,
        "initial_layout": routed.initial_layout,
        "final_layout": routed.final_layout,
        "equivalence_infidelity": infidelity,
    });
    out.json("routed_summary.json", "routed_summary v1", &summary)?;
    done(out.finish(name, Some(run.seed), &run)?)
}
