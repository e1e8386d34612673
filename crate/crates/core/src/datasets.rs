//! Hypercube classification data and CE-labelled quantum states.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{build_hea_u3, HeaCircuit};
use crate::error::{Error, Result};
use crate::grad::Adam;
use crate::seed;
use crate::stats;
use crate::sv::{concentrable_entanglement, purity_sum_direction, Circuit, Statevector};
use crate::table;
use crate::tasks::{Input, TaskData};

pub const CLASSICAL_SCHEMA: &str = "classical_dataset v1";
pub const QUANTUM_SCHEMA: &str = "quantum_dataset v1";
pub const MANIFEST_SCHEMA: &str = "quantum_dataset_manifest v1";

/// Fraction of rows used for training (420 of 600).
pub const TRAIN_FRACTION: f64 = 0.7;

fn n_train(rows: usize) -> usize {
    (rows as f64 * TRAIN_FRACTION).round() as usize
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypercubeConfig {
    pub n_features: usize,
    #[serde(default = "default_rows")]
    pub n_samples: usize,
    #[serde(default = "default_sep")]
    pub class_sep: f64,
    #[serde(default = "default_flip")]
    pub flip_frac: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rows() -> usize {
    600
}
fn default_sep() -> f64 {
    1.0
}
fn default_flip() -> f64 {
    0.02
}

impl HypercubeConfig {
    pub fn new(n_features: usize, seed: u64) -> Self {
        Self {
            n_features,
            n_samples: default_rows(),
            class_sep: default_sep(),
            flip_frac: default_flip(),
            seed,
        }
    }
}

/// Rows are shuffled; the first `n_train` rows form the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDataset {
    /// Angles in [0, π], one row per sample.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub n_train: usize,
}

impl ClassicalDataset {
    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn to_task_data(&self) -> TaskData {
        let rows = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(x, &y)| (Input::Encoded(x.clone()), y));
        let all: Vec<_> = rows.collect();
        let (train, test) = all.split_at(self.n_train);
        TaskData {
            train: train.to_vec(),
            test: test.to_vec(),
        }
    }
}

/// Number of clusters; clusters alternate between the two classes.
pub const CLUSTERS: usize = 4;

/// Distinct hypercube vertices used as cluster centres (before scaling).
/// With three or more features the vertices are affinely independent, so
/// any class assignment of the clusters is linearly separable.
pub fn hypercube_layout(n_features: usize, seed: u64) -> Result<Vec<Vec<u8>>> {
    if n_features < 2 {
        return Err(Error::invalid("need at least two features"));
    }
    let mut rng = seed::rng(seed, &[seed::tag("hypercube-vertices")]);
    let mut out: Vec<Vec<u8>> = Vec::with_capacity(CLUSTERS);
    while out.len() < CLUSTERS {
        let v: Vec<u8> = (0..n_features).map(|_| rng.random_range(0..2u8)).collect();
        if out.contains(&v) {
            continue;
        }
        out.push(v);
        if n_features >= CLUSTERS - 1 && out.len() > 1 && affine_rank(&out) < out.len() - 1 {
            out.pop();
        }
    }
    Ok(out)
}

fn affine_rank(vertices: &[Vec<u8>]) -> usize {
    let n = vertices[0].len();
    let diffs = DMatrix::from_fn(vertices.len() - 1, n, |i, j| vertices[i + 1][j] as f64 - vertices[0][j] as f64);
    diffs.rank(1e-9)
}

/// Haar-random orthogonal matrix.
fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Gaussian clusters around hypercube vertices, rotated, with an exact
/// number of flipped labels, min-max scaled to [0, π] per feature.
pub fn gen_hypercube_classification(config: &HypercubeConfig) -> Result<ClassicalDataset> {
    let HypercubeConfig {
        n_features: n,
        n_samples,
        class_sep,
        flip_frac,
        seed,
    } = *config;
    if !(0.0..0.5).contains(&flip_frac) {
        return Err(Error::invalid(format!("flip_frac must be in [0, 0.5), got {flip_frac}")));
    }
    if !(class_sep > 0.0) || !class_sep.is_finite() {
        return Err(Error::invalid("class_sep must be positive"));
    }
    if n_samples < CLUSTERS {
        return Err(Error::invalid("need at least one sample per cluster"));
    }
    let vertices = hypercube_layout(n, seed)?;
    let mut rng = seed::rng(seed, &[seed::tag("hypercube-samples")]);
    let mut points = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let k = i % CLUSTERS;
        let p: Vec<f64> = vertices[k]
            .iter()
            .map(|&b| (2.0 * b as f64 - 1.0) * class_sep + rng.sample::<f64, _>(StandardNormal))
            .collect();
        points.push(DVector::from_vec(p));
        labels.push((k % 2) as u8);
    }
    let rot = random_orthogonal(n, &mut rng);
    let mut features: Vec<Vec<f64>> = points.iter().map(|p| (&rot * p).iter().copied().collect()).collect();
    let flips = (flip_frac * n_samples as f64).round() as usize;
    for i in index::sample(&mut rng, n_samples, flips) {
        labels[i] ^= 1;
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut rng);
    features = order.iter().map(|&i| features[i].clone()).collect();
    labels = order.iter().map(|&i| labels[i]).collect();
    for j in 0..n {
        let (lo, hi) = features
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        let span = hi - lo;
        for r in &mut features {
            r[j] = if span > 0.0 { (r[j] - lo) / span * PI } else { 0.0 };
        }
    }
    Ok(ClassicalDataset {
        features,
        labels,
        n_train: n_train(n_samples),
    })
}

fn fmt_row<I: IntoIterator<Item = String>>(w: &mut csv::Writer<Vec<u8>>, fields: I) -> Result<()> {
    w.write_record(fields.into_iter().collect::<Vec<_>>())?;
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn split_name(i: usize, n_train: usize) -> &'static str {
    if i < n_train {
        "train"
    } else {
        "test"
    }
}

fn schema_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes `x0..x{n−1}, label, split` with a checksum of the CSV body.
pub fn save_classical(path: &Path, data: &ClassicalDataset) -> Result<()> {
    let n = data.n_features();
    let mut w = csv::Writer::from_writer(Vec::new());
    fmt_row(&mut w, (0..n).map(|j| format!("x{j}")).chain(["label".into(), "split".into()]))?;
    for (i, (x, y)) in data.features.iter().zip(&data.labels).enumerate() {
        fmt_row(
            &mut w,
            x.iter()
                .map(|v| v.to_string())
                .chain([y.to_string(), split_name(i, data.n_train).to_string()]),
        )?;
    }
    let body = finish(w)?;
    let mut text = String::new();
    let _ = writeln!(text, "# schema: {CLASSICAL_SCHEMA}");
    let _ = writeln!(text, "# rows: {}", data.labels.len());
    let _ = writeln!(text, "# sha256: {}", sha256_hex(&body));
    text.push_str(std::str::from_utf8(&body).expect("utf-8"));
    fs::write(path, text)?;
    Ok(())
}

/// Reads a body, checking row count and checksum from the comment lines.
fn checked_body<'a>(path: &Path, text: &'a str, schema: &str) -> Result<(table::Meta, &'a str)> {
    let (meta, body) = table::split(path, text, schema)?;
    let want = meta.get("sha256").ok_or_else(|| schema_err(path, "missing sha256 line"))?;
    if sha256_hex(body.as_bytes()) != *want {
        return Err(Error::Checksum { path: path.to_path_buf() });
    }
    Ok((meta, body))
}

fn parse_rows(path: &Path, body: &str, expected: Option<usize>) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(e) = expected {
        if rows.len() != e {
            return Err(schema_err(path, format!("expected {e} rows, found {}", rows.len())));
        }
    }
    Ok((header, rows))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| schema_err(path, format!("bad field {i} in row {:?}", rec.position().map(|p| p.line()))))
}

fn meta_usize(path: &Path, meta: &table::Meta, key: &str) -> Result<usize> {
    meta.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| schema_err(path, format!("missing or bad `{key}` line")))
}

pub fn load_classical(path: &Path) -> Result<ClassicalDataset> {
    let text = fs::read_to_string(path)?;
    let (meta, body) = checked_body(path, &text, CLASSICAL_SCHEMA)?;
    let rows = meta_usize(path, &meta, "rows")?;
    let (header, recs) = parse_rows(path, body, Some(rows))?;
    let n = header.len().saturating_sub(2);
    if n == 0 || header[n] != "label" || header[n + 1] != "split" {
        return Err(schema_err(path, "expected columns x0.., label, split"));
    }
    let mut features = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    let mut n_train = 0;
    for (i, rec) in recs.iter().enumerate() {
        if rec.len() != n + 2 {
            return Err(schema_err(path, format!("row {i} has {} fields", rec.len())));
        }
        features.push((0..n).map(|j| field(path, rec, j)).collect::<Result<Vec<f64>>>()?);
        labels.push(field::<u8>(path, rec, n)?);
        match &rec[n + 1] {
            "train" if n_train == i => n_train += 1,
            "test" => {}
            other => return Err(schema_err(path, format!("row {i}: unexpected split `{other}`"))),
        }
    }
    Ok(ClassicalDataset {
        features,
        labels,
        n_train,
    })
}

/// Settings for CE-targeted state generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumDatasetConfig {
    pub n_qubits: usize,
    pub targets: [f64; 2],
    #[serde(default = "default_per_class")]
    pub per_class: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
    /// Group-A draws per optimization batch.
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_steps")]
    pub max_steps: usize,
    #[serde(default = "default_qlr")]
    pub lr: f64,
    /// Fresh draws used to confirm the median CE.
    #[serde(default = "default_verify")]
    pub verify_samples: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn default_per_class() -> usize {
    300
}
fn default_depth() -> usize {
    5
}
fn default_batch() -> usize {
    32
}
fn default_steps() -> usize {
    300
}
fn default_qlr() -> f64 {
    0.05
}
fn default_verify() -> usize {
    200
}
fn default_tol() -> f64 {
    0.05
}

impl QuantumDatasetConfig {
    pub fn new(n_qubits: usize, targets: [f64; 2], seed: u64) -> Self {
        Self {
            n_qubits,
            targets,
            per_class: default_per_class(),
            depth: default_depth(),
            seed,
            batch: default_batch(),
            max_steps: default_steps(),
            lr: default_qlr(),
            verify_samples: default_verify(),
            tolerance: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSample {
    pub group_a: Vec<f64>,
    pub class: u8,
    /// Realised CE of the generated state.
    pub ce: f64,
}

/// States are stored as generating parameters; rows are shuffled and the
/// first `n_train` rows form the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDataset {
    pub n_qubits: usize,
    pub depth: usize,
    pub targets: [f64; 2],
    /// Group-B parameters per class.
    pub group_b: [Vec<f64>; 2],
    pub samples: Vec<QuantumSample>,
    pub n_train: usize,
}

impl QuantumDataset {
    pub fn hea(&self) -> Result<HeaCircuit> {
        build_hea_u3(self.n_qubits, self.depth)
    }

    pub fn state(&self, hea: &HeaCircuit, i: usize) -> Result<Statevector> {
        let s = &self.samples[i];
        let p = hea.params(&s.group_a, &self.group_b[s.class as usize])?;
        hea.circuit.run(&p, &Statevector::zero(self.n_qubits))
    }

    pub fn states(&self) -> Result<Vec<Statevector>> {
        let hea = self.hea()?;
        (0..self.samples.len()).into_par_iter().map(|i| self.state(&hea, i)).collect()
    }

    pub fn realized_ce(&self, class: u8) -> Vec<f64> {
        self.samples.iter().filter(|s| s.class == class).map(|s| s.ce).collect()
    }

    pub fn to_task_data(&self) -> Result<TaskData> {
        let rows: Vec<(Input, u8)> = self
            .states()?
            .into_iter()
            .zip(&self.samples)
            .map(|(s, q)| (Input::State(s), q.class))
            .collect();
        let (train, test) = rows.split_at(self.n_train);
        Ok(TaskData {
            train: train.to_vec(),
            test: test.to_vec(),
        })
    }
}

/// CE of U(θ)|0⟩ and its gradient with respect to `which` parameters.
///
/// Uses ∂CE = −(4/2^N) Re⟨Φ|∂ψ⟩ with Φ from [`purity_sum_direction`] and
/// ∂ψ from forward runs with the differentiated gate matrix.
pub fn ce_and_gradient(circuit: &Circuit, params: &[f64], which: std::ops::Range<usize>) -> Result<(f64, Vec<f64>)> {
    let n = circuit.num_qubits();
    let init = Statevector::zero(n);
    let psi = circuit.run(params, &init)?;
    let ce = concentrable_entanglement(&psi)?;
    let phi = purity_sum_direction(&psi)?;
    let scale = -4.0 / (1u64 << n) as f64;
    let mut grad = vec![0.0; which.len()];
    for occ in circuit.occurrences() {
        if !which.contains(&occ.param) {
            continue;
        }
        let d = circuit.run_derivative(params, &init, occ)?;
        let re: f64 = phi.iter().zip(d.amplitudes()).map(|(a, b)| (a.conj() * b).re).sum();
        grad[occ.param - which.start] += scale * re;
    }
    Ok((ce, grad))
}

/// Fits group B of the HEA so that states with random group A have CE
/// close to `target` (mean squared error over a fixed batch), then checks
/// the median CE on fresh draws.
pub fn fit_group_b(config: &QuantumDatasetConfig, hea: &HeaCircuit, class: usize) -> Result<Vec<f64>> {
    let target = config.targets[class];
    let mut rng = seed::rng(config.seed, &[seed::tag("ce-fit"), class as u64]);
    let batch: Vec<Vec<f64>> = (0..config.batch).map(|_| hea.sample_group_a(&mut rng)).collect();
    let mut b: Vec<f64> = hea.group_b.clone().map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut adam = Adam::new(b.len(), config.lr);
    let mut best = (f64::INFINITY, b.clone());
    for step in 0..config.max_steps {
        let parts = batch
            .par_iter()
            .map(|a| {
                let p = hea.params(a, &b)?;
                let (ce, g) = ce_and_gradient(&hea.circuit, &p, hea.group_b.clone())?;
                Ok((ce, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = parts.len() as f64;
        let loss = parts.iter().map(|(ce, _)| (ce - target).powi(2)).sum::<f64>() / m;
        if loss < best.0 {
            best = (loss, b.clone());
        }
        let mut grad = vec![0.0; b.len()];
        for (ce, g) in &parts {
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += 2.0 * (ce - target) * v / m;
            }
        }
        log::debug!("class {class} step {step}: loss {loss:.3e}");
        // RMS deviation a fifth of the tolerance is ample for the median check
        if loss < (config.tolerance / 5.0).powi(2) {
            break;
        }
        adam.step(&mut b, &grad)?;
    }
    let b = best.1;
    let mut check = seed::rng(config.seed, &[seed::tag("ce-verify"), class as u64]);
    let draws: Vec<Vec<f64>> = (0..config.verify_samples).map(|_| hea.sample_group_a(&mut check)).collect();
    let ces = draws
        .par_iter()
        .map(|a| concentrable_entanglement(&hea.circuit.run(&hea.params(a, &b)?, &Statevector::zero(config.n_qubits))?))
        .collect::<Result<Vec<f64>>>()?;
    let med = stats::median(&ces);
    if (med - target).abs() > config.tolerance {
        return Err(Error::NotConverged(format!(
            "class {class}: median CE {med:.4} vs target {target} (tolerance {})",
            config.tolerance
        )));
    }
    Ok(b)
}

/// Two classes of HEA states centred on the target CE values.
pub fn gen_quantum_ce_dataset(config: &QuantumDatasetConfig) -> Result<QuantumDataset> {
    if !(2..=8).contains(&config.n_qubits) {
        return Err(Error::invalid("quantum dataset supports 2 to 8 qubits"));
    }
    for &t in &config.targets {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::invalid(format!("CE target {t} is out of range")));
        }
    }
    if config.per_class == 0 || config.batch == 0 || config.verify_samples == 0 {
        return Err(Error::invalid("per_class, batch and verify_samples must be positive"));
    }
    let hea = build_hea_u3(config.n_qubits, config.depth)?;
    let b0 = fit_group_b(config, &hea, 0)?;
    let b1 = fit_group_b(config, &hea, 1)?;
    let group_b = [b0, b1];
    let mut rng = seed::rng(config.seed, &[seed::tag("ce-samples")]);
    let mut draws: Vec<(Vec<f64>, u8)> = Vec::with_capacity(2 * config.per_class);
    for class in 0..2u8 {
        for _ in 0..config.per_class {
            draws.push((hea.sample_group_a(&mut rng), class));
        }
    }
    draws.shuffle(&mut rng);
    let samples = draws
        .into_par_iter()
        .map(|(a, class)| {
            let p = hea.params(&a, &group_b[class as usize])?;
            let ce = concentrable_entanglement(&hea.circuit.run(&p, &Statevector::zero(config.n_qubits))?)?;
            Ok(QuantumSample { group_a: a, class, ce })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantumDataset {
        n_qubits: config.n_qubits,
        depth: config.depth,
        targets: config.targets,
        group_b,
        n_train: n_train(samples.len()),
        samples,
    })
}

/// JSON manifest accompanying a quantum dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumManifest {
    pub schema: String,
    pub n_qubits: usize,
    pub depth: usize,
    pub targets: [f64; 2],
    pub rows: usize,
    pub n_train: usize,
    pub group_b: [Vec<f64>; 2],
    pub csv_file: String,
    pub csv_sha256: String,
}

/// Path of the manifest written next to `csv_path`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the per-sample CSV and its JSON manifest.
pub fn save_quantum(csv_path: &Path, data: &QuantumDataset) -> Result<()> {
    let a = 3 * data.n_qubits;
    let mut w = csv::Writer::from_writer(Vec::new());
    fmt_row(
        &mut w,
        ["class".to_string(), "ce".into(), "split".into()]
            .into_iter()
            .chain((0..a).map(|j| format!("a{j}"))),
    )?;
    for (i, s) in data.samples.iter().enumerate() {
        fmt_row(
            &mut w,
            [s.class.to_string(), s.ce.to_string(), split_name(i, data.n_train).to_string()]
                .into_iter()
                .chain(s.group_a.iter().map(|v| v.to_string())),
        )?;
    }
    let body = finish(w)?;
    let digest = sha256_hex(&body);
    let mut text = String::new();
    let _ = writeln!(text, "# schema: {QUANTUM_SCHEMA}");
    let _ = writeln!(text, "# rows: {}", data.samples.len());
    let _ = writeln!(text, "# sha256: {digest}");
    text.push_str(std::str::from_utf8(&body).expect("utf-8"));
    fs::write(csv_path, text)?;
    let manifest = QuantumManifest {
        schema: MANIFEST_SCHEMA.into(),
        n_qubits: data.n_qubits,
        depth: data.depth,
        targets: data.targets,
        rows: data.samples.len(),
        n_train: data.n_train,
        group_b: data.group_b.clone(),
        csv_file: csv_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        csv_sha256: digest,
    };
    fs::write(manifest_path(csv_path), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_quantum(csv_path: &Path) -> Result<QuantumDataset> {
    let mpath = manifest_path(csv_path);
    let manifest: QuantumManifest = serde_json::from_str(&fs::read_to_string(&mpath)?)?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(schema_err(&mpath, format!("unexpected schema `{}`", manifest.schema)));
    }
    let text = fs::read_to_string(csv_path)?;
    let (meta, body) = checked_body(csv_path, &text, QUANTUM_SCHEMA)?;
    if meta.get("sha256") != Some(&manifest.csv_sha256) {
        return Err(Error::Checksum { path: csv_path.to_path_buf() });
    }
    let (header, recs) = parse_rows(csv_path, body, Some(manifest.rows))?;
    let a = 3 * manifest.n_qubits;
    if header.len() != a + 3 || header[..3] != ["class", "ce", "split"] {
        return Err(schema_err(csv_path, "expected columns class, ce, split, a0.."));
    }
    let hea = build_hea_u3(manifest.n_qubits, manifest.depth)?;
    for b in &manifest.group_b {
        if b.len() != hea.group_b.len() {
            return Err(schema_err(&mpath, "group-B length does not match the circuit"));
        }
    }
    let mut samples = Vec::with_capacity(recs.len());
    for rec in &recs {
        let class: u8 = field(csv_path, rec, 0)?;
        if class > 1 {
            return Err(schema_err(csv_path, format!("class {class} out of range")));
        }
        samples.push(QuantumSample {
            class,
            ce: field(csv_path, rec, 1)?,
            group_a: (3..a + 3).map(|j| field(csv_path, rec, j)).collect::<Result<_>>()?,
        });
    }
    Ok(QuantumDataset {
        n_qubits: manifest.n_qubits,
        depth: manifest.depth,
        targets: manifest.targets,
        group_b: manifest.group_b,
        samples,
        n_train: manifest.n_train,
    })
}

/// Histogram intersection of two samples over a shared range with `bins`
/// equal bins: 0 for disjoint, 1 for identical histograms.
pub fn histogram_overlap(a: &[f64], b: &[f64], bins: usize) -> f64 {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return 0.0;
    }
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &x in xs {
            let k = (((x - lo) / span) * bins as f64).floor() as usize;
            h[k.min(bins - 1)] += 1.0 / xs.len() as f64;
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    ha.iter().zip(&hb).map(|(x, y)| x.min(*y)).sum()
}
