//! Training drivers: binary classification and VQE on the transverse-field
//! Ising chain.

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{BlockFamily, SplitSpec};
use crate::error::{Error, Result};
use crate::grad::{Adam, SplitCost, Spsa, SpsaConfig};
use crate::seed;
use crate::stats::{self, KahanSum};
use crate::sv::{Circuit, Observable, Pauli, PauliString, ProductState, Statevector, C64};

/// Lower clamp for predictions inside the loss.
pub const BCE_EPS: f64 = 1e-7;

/// A classifier input: features encoded as RY(x_i)|0⟩, or a prepared state.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Encoded(Vec<f64>),
    State(Statevector),
}

impl Input {
    pub fn num_qubits(&self) -> usize {
        match self {
            Input::Encoded(x) => x.len(),
            Input::State(s) => s.num_qubits(),
        }
    }
}

fn expectation(cost: &SplitCost, params: &[f64], input: &Input) -> Result<f64> {
    match input {
        Input::Encoded(x) => cost.cost(params, &ProductState::ry_encoded(x)),
        Input::State(s) => cost.cost_state(params, s),
    }
}

fn expectation_gradient(cost: &SplitCost, params: &[f64], input: &Input) -> Result<Vec<f64>> {
    match input {
        Input::Encoded(x) => cost.gradient(params, &ProductState::ry_encoded(x)),
        Input::State(s) => cost.gradient_state(params, s),
    }
}

/// ŷ = (⟨O⟩ + 1)/2 with O = (1/N) Σ Z_i measured after `circuit`.
pub fn predict(circuit: &Circuit, params: &[f64], input: &Input) -> Result<f64> {
    if input.num_qubits() != circuit.num_qubits() {
        return Err(Error::QubitMismatch {
            left: circuit.num_qubits(),
            right: input.num_qubits(),
        });
    }
    let cost = SplitCost::new(circuit, &Observable::mean_z(circuit.num_qubits()))?;
    Ok((expectation(&cost, params, input)? + 1.0) / 2.0)
}

/// Binary cross entropy with ŷ clamped to [ε, 1 − ε].
pub fn bce_loss(y: u8, yhat: f64) -> f64 {
    let p = yhat.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// ∂ BCE / ∂ŷ; zero where the clamp is active.
fn bce_derivative(y: u8, yhat: f64) -> f64 {
    if !(BCE_EPS..=1.0 - BCE_EPS).contains(&yhat) {
        return 0.0;
    }
    if y == 1 {
        -1.0 / yhat
    } else {
        1.0 / (1.0 - yhat)
    }
}

/// Predicted class; ŷ = 0.5 maps to class 1.
pub fn classify(yhat: f64) -> u8 {
    u8::from(yhat >= 0.5)
}

/// Train and test splits ready for training.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub train: Vec<(Input, u8)>,
    pub test: Vec<(Input, u8)>,
}

impl TaskData {
    pub fn num_qubits(&self) -> Option<usize> {
        self.train.first().map(|(x, _)| x.num_qubits())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub spec: SplitSpec,
    /// Family of full-width tail layers when `spec.standard_layers > 0`.
    #[serde(default = "default_tail")]
    pub tail: BlockFamily,
    pub epochs: usize,
    /// Samples per ADAM step; `None` is full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_tail() -> BlockFamily {
    BlockFamily::LADDER
}
fn default_lr() -> f64 {
    0.1
}

/// Metrics after an epoch's updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Percent.
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub wall_time: f64,
}

pub const EPOCH_SCHEMA: &str = "epoch_metrics v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResult {
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub best_test_accuracy: f64,
    pub best_train_accuracy: f64,
    pub epochs_to_train_90: Option<usize>,
    pub epochs_to_train_100: Option<usize>,
    pub final_params: Vec<f64>,
}

/// Mean loss and accuracy (percent).
fn evaluate(cost: &SplitCost, params: &[f64], data: &[(Input, u8)]) -> Result<(f64, f64)> {
    let parts = data
        .par_iter()
        .map(|(x, y)| {
            let yhat = (expectation(cost, params, x)? + 1.0) / 2.0;
            Ok((bce_loss(*y, yhat), u8::from(classify(yhat) == *y)))
        })
        .collect::<Result<Vec<_>>>()?;
    let loss: KahanSum = parts.iter().map(|p| p.0).collect();
    let correct: usize = parts.iter().map(|p| p.1 as usize).sum();
    let n = data.len().max(1) as f64;
    Ok((loss.value() / n, 100.0 * correct as f64 / n))
}

/// Mean BCE over `batch` and its gradient by the chain rule through
/// parameter-shift gradients of ⟨O⟩.
pub fn loss_and_gradient(cost: &SplitCost, params: &[f64], batch: &[&(Input, u8)]) -> Result<(f64, Vec<f64>)> {
    let parts = batch
        .par_iter()
        .map(|(x, y)| {
            let yhat = (expectation(cost, params, x)? + 1.0) / 2.0;
            let scale = bce_derivative(*y, yhat) * 0.5;
            let g = if scale == 0.0 {
                vec![0.0; params.len()]
            } else {
                expectation_gradient(cost, params, x)?
            };
            Ok((bce_loss(*y, yhat), scale, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = batch.len() as f64;
    let mut loss = KahanSum::new();
    let mut grad = vec![KahanSum::new(); params.len()];
    for (l, s, g) in &parts {
        loss.add(*l);
        for (acc, v) in grad.iter_mut().zip(g) {
            acc.add(s * v);
        }
    }
    Ok((loss.value() / n, grad.iter().map(|g| g.value() / n).collect()))
}

/// Observable used by the classifier for the circuit of `config`.
pub fn classifier_cost(config: &ClassifyConfig) -> Result<SplitCost> {
    let circuit = config.spec.build(config.tail)?;
    SplitCost::new(&circuit, &Observable::mean_z(config.spec.num_qubits))
}

/// Gradient descent with ADAM on the mean BCE loss.
pub fn train_classifier(config: &ClassifyConfig, data: &TaskData) -> Result<ClassifyResult> {
    let n = config.spec.num_qubits;
    if data.train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    for (x, _) in data.train.iter().chain(&data.test) {
        if x.num_qubits() != n {
            return Err(Error::QubitMismatch { left: n, right: x.num_qubits() });
        }
    }
    let cost = classifier_cost(config)?;
    let p = cost.circuit().num_params();
    let mut rng = seed::rng(config.seed, &[seed::tag("classify-init")]);
    let mut params: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut adam = Adam::new(p, config.lr);
    let batch = config.batch_size.unwrap_or(data.train.len()).clamp(1, data.train.len());
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut shuffle = seed::rng(config.seed, &[seed::tag("classify-batches")]);
    let start = Instant::now();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        if batch < data.train.len() {
            order.shuffle(&mut shuffle);
        }
        for chunk in order.chunks(batch) {
            let items: Vec<&(Input, u8)> = chunk.iter().map(|&i| &data.train[i]).collect();
            let (loss, grad) = loss_and_gradient(&cost, &params, &items)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            adam.step(&mut params, &grad)?;
        }
        let (train_loss, train_accuracy) = evaluate(&cost, &params, &data.train)?;
        let (test_loss, test_accuracy) = evaluate(&cost, &params, &data.test)?;
        epochs.push(EpochMetrics {
            epoch,
            train_loss,
            test_loss,
            train_accuracy,
            test_accuracy,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let best = |f: fn(&EpochMetrics) -> f64| epochs.iter().map(f).fold(0.0, f64::max);
    let reach = |t: f64| epochs.iter().find(|e| e.train_accuracy >= t).map(|e| e.epoch);
    Ok(ClassifyResult {
        seed: config.seed,
        best_test_accuracy: best(|e| e.test_accuracy),
        best_train_accuracy: best(|e| e.train_accuracy),
        epochs_to_train_90: reach(90.0),
        epochs_to_train_100: reach(100.0),
        epochs,
        final_params: params,
    })
}

/// Runs `seeds` independent trainings (seeds `config.seed + k`) in parallel.
pub fn train_classifier_batch(config: &ClassifyConfig, data: &TaskData, seeds: usize) -> Result<Vec<ClassifyResult>> {
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| {
            let cfg = ClassifyConfig {
                seed: config.seed + k,
                ..config.clone()
            };
            train_classifier(&cfg, data)
        })
        .collect()
}

/// Aggregate over seeds. Epochs-to-threshold means are over the runs that
/// reached the threshold; `reached_*` counts those runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifySummary {
    pub runs: usize,
    pub best_test_median: f64,
    pub best_test_q1: f64,
    pub best_test_q3: f64,
    pub best_test_mean: f64,
    pub best_train_mean: f64,
    pub final_test_mean: f64,
    pub reached_train_90: usize,
    pub mean_epochs_to_train_90: Option<f64>,
    pub reached_train_100: usize,
    pub mean_epochs_to_train_100: Option<f64>,
}

impl ClassifySummary {
    pub fn new(results: &[ClassifyResult]) -> Self {
        let best: Vec<f64> = results.iter().map(|r| r.best_test_accuracy).collect();
        let reached = |f: fn(&ClassifyResult) -> Option<usize>| {
            let hits: Vec<f64> = results.iter().filter_map(|r| f(r).map(|e| e as f64)).collect();
            (hits.len(), (!hits.is_empty()).then(|| stats::mean(&hits)))
        };
        let (reached_train_90, mean_epochs_to_train_90) = reached(|r| r.epochs_to_train_90);
        let (reached_train_100, mean_epochs_to_train_100) = reached(|r| r.epochs_to_train_100);
        Self {
            runs: results.len(),
            best_test_median: stats::median(&best),
            best_test_q1: stats::quantile(&best, 0.25),
            best_test_q3: stats::quantile(&best, 0.75),
            best_test_mean: stats::mean(&best),
            best_train_mean: stats::mean(&results.iter().map(|r| r.best_train_accuracy).collect::<Vec<_>>()),
            final_test_mean: stats::mean(
                &results
                    .iter()
                    .map(|r| r.epochs.last().map_or(0.0, |e| e.test_accuracy))
                    .collect::<Vec<_>>(),
            ),
            reached_train_90,
            mean_epochs_to_train_90,
            reached_train_100,
            mean_epochs_to_train_100,
        }
    }
}

/// −J Σ Z_i Z_{i+1} − h Σ X_i with the periodic wrap (N+1 ≡ 1), as the
/// literal term list (for N = 2 the wrap repeats Z₀Z₁).
pub fn build_tfih(n: usize, j: f64, h: f64) -> Result<Observable> {
    build_ising(n, j, h, true)
}

pub fn build_ising(n: usize, j: f64, h: f64, periodic: bool) -> Result<Observable> {
    if n < 2 {
        return Err(Error::invalid("Ising chain needs at least two sites"));
    }
    let mut terms = Vec::with_capacity(2 * n);
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        terms.push((-j, PauliString::new([(i, Pauli::Z), ((i + 1) % n, Pauli::Z)])));
    }
    for i in 0..n {
        terms.push((-h, PauliString::single(i, Pauli::X)));
    }
    Observable::new(n, terms)
}

/// Largest register diagonalised densely; larger ones use Lanczos.
pub const DENSE_EIGEN_MAX: usize = 10;
pub const GROUND_ENERGY_MAX: usize = 14;

/// Smallest eigenvalue of `obs`.
pub fn exact_ground_energy(obs: &Observable) -> Result<f64> {
    let n = obs.num_qubits();
    if n > GROUND_ENERGY_MAX {
        return Err(Error::TooManyQubits {
            what: "exact ground energy",
            max: GROUND_ENERGY_MAX,
            actual: n,
        });
    }
    if n <= DENSE_EIGEN_MAX {
        let dense = obs.to_dense()?;
        let dim = dense.len();
        let m = DMatrix::from_fn(dim, dim, |i, j| dense[i][j]);
        Ok(m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min))
    } else {
        lanczos_ground_energy(obs, 300, 1e-10)
    }
}

/// Lanczos with full reorthogonalisation from a seeded random start.
pub fn lanczos_ground_energy(obs: &Observable, max_iter: usize, tol: f64) -> Result<f64> {
    let n = obs.num_qubits();
    let dim = 1usize << n;
    let start = Statevector::random(n, &mut seed::rng(0, &[seed::tag("lanczos")]));
    let mut basis: Vec<Vec<C64>> = vec![start.into_amplitudes()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    for k in 0..max_iter.min(dim) {
        let v = Statevector::from_amplitudes(basis[k].clone())?;
        let mut w = obs.apply(&v)?;
        alpha.push(dot(&basis[k], &w).re);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let t = alpha.len();
        let tri = DMatrix::from_fn(t, t, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = tri.symmetric_eigen();
        let (imin, &emin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let residual = norm * eig.eigenvectors[(t - 1, imin)].abs();
        if residual < tol || norm < 1e-12 || (last - emin).abs() < tol * 1e-2 {
            return Ok(emin);
        }
        last = emin;
        beta.push(norm);
        basis.push(w.into_iter().map(|x| x / norm).collect());
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub h: f64,
    pub spec: SplitSpec,
    #[serde(default = "default_vqe_tail")]
    pub tail: BlockFamily,
    pub iterations: usize,
    /// Shots per energy estimate; `None` is the exact expectation.
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub spsa: SpsaConfig,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn default_vqe_tail() -> BlockFamily {
    BlockFamily::SU2_FULL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeStep {
    pub step: usize,
    pub energy: f64,
    pub best_energy: f64,
    pub grad_norm: f64,
    pub wall_time: f64,
}

pub const VQE_SCHEMA: &str = "vqe_step v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub seed: u64,
    pub trajectory: Vec<VqeStep>,
    /// Exact ⟨H⟩ at the final parameters.
    pub final_energy: f64,
    pub exact_energy: f64,
    pub final_error: f64,
    pub final_params: Vec<f64>,
}

/// SPSA minimisation of ⟨H⟩ from uniform [0, 2π] initial parameters.
pub fn run_vqe(config: &VqeConfig) -> Result<VqeResult> {
    if config.spec.num_qubits != config.n {
        return Err(Error::QubitMismatch {
            left: config.n,
            right: config.spec.num_qubits,
        });
    }
    if config.shots == Some(0) {
        return Err(Error::ZeroShots);
    }
    let h = build_tfih(config.n, config.j, config.h)?.simplified();
    let exact = exact_ground_energy(&h)?;
    let circuit = config.spec.build(config.tail)?;
    let init = Statevector::zero(config.n);
    let energy = |p: &[f64], key: [u64; 2]| -> Result<f64> {
        let state = circuit.run(p, &init)?;
        match config.shots {
            None => h.expectation(&state),
            Some(s) => h.expectation_shots(&state, s, seed::derive(config.seed, &key)),
        }
    };
    let mut rng = seed::rng(config.seed, &[seed::tag("vqe-init")]);
    let mut params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut spsa = Spsa::new(config.spsa, config.seed);
    let start = Instant::now();
    let mut best = f64::INFINITY;
    let mut trajectory = Vec::with_capacity(config.iterations);
    for step in 0..config.iterations {
        let mut calls = 0u64;
        let s = spsa.step(&mut params, |p| {
            calls += 1;
            energy(p, [step as u64, calls])
        })?;
        let e = energy(&params, [step as u64, 0])?;
        if !e.is_finite() {
            return Err(Error::NonFinite(format!("energy at step {step}")));
        }
        best = best.min(e);
        trajectory.push(VqeStep {
            step,
            energy: e,
            best_energy: best,
            grad_norm: s.grad_norm,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let final_energy = h.expectation(&circuit.run(&params, &init)?)?;
    Ok(VqeResult {
        seed: config.seed,
        trajectory,
        final_energy,
        exact_energy: exact,
        final_error: (final_energy - exact).abs(),
        final_params: params,
    })
}

/// Runs `seeds` independent VQE runs (seeds `config.seed + k`) in parallel.
pub fn run_vqe_batch(config: &VqeConfig, seeds: usize) -> Result<Vec<VqeResult>> {
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| {
            run_vqe(&VqeConfig {
                seed: config.seed + k,
                ..config.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_cs, build_ecs, build_efficient_su2, Entanglement};
    use crate::sv::Gate;

    #[test]
    fn predictions() {
        let c = Circuit::empty(3);
        assert_eq!(predict(&c, &[], &Input::Encoded(vec![0.0; 3])).unwrap(), 1.0);
        let pi = std::f64::consts::PI;
        assert!(predict(&c, &[], &Input::Encoded(vec![pi; 3])).unwrap().abs() < 1e-15);
        let half = predict(&c, &[], &Input::Encoded(vec![pi / 2.0; 3])).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        let one = predict(&c, &[], &Input::State(Statevector::basis(3, 0b111))).unwrap();
        assert_eq!(one, 0.0);
        assert!(predict(&c, &[], &Input::Encoded(vec![0.0; 2])).is_err());
    }

    #[test]
    fn losses() {
        assert!(bce_loss(1, 1.0 - BCE_EPS) < 1e-6);
        assert!((bce_loss(0, 0.5) - 2f64.ln()).abs() < 1e-15);
        assert!((bce_loss(1, 0.0) - 16.118_095_65).abs() < 1e-6);
        assert_eq!(classify(0.5), 1);
        assert_eq!(classify(0.499), 0);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let spec = SplitSpec::cs(4, 2, 2, BlockFamily::LADDER);
        let cfg = ClassifyConfig {
            spec,
            tail: BlockFamily::LADDER,
            epochs: 1,
            batch_size: None,
            lr: 0.1,
            seed: 0,
        };
        let cost = classifier_cost(&cfg).unwrap();
        let mut rng = seed::rng(2, &[]);
        let data: Vec<(Input, u8)> = (0..12)
            .map(|i| (Input::Encoded((0..4).map(|_| rng.random_range(0.0..3.1)).collect()), (i % 2) as u8))
            .collect();
        let refs: Vec<&(Input, u8)> = data.iter().collect();
        let params: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..TAU)).collect();
        let (_, g) = loss_and_gradient(&cost, &params, &refs).unwrap();
        let h = 1e-5;
        for j in 0..params.len() {
            let mut p = params.clone();
            p[j] += h;
            let (lp, _) = loss_and_gradient(&cost, &p, &refs).unwrap();
            p[j] -= 2.0 * h;
            let (lm, _) = loss_and_gradient(&cost, &p, &refs).unwrap();
            assert!(((lp - lm) / (2.0 * h) - g[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn blockwise_prediction_matches_full() {
        let spec = SplitSpec::cs(8, 4, 3, BlockFamily::LADDER);
        let c = build_cs(&spec).unwrap();
        let mut rng = seed::rng(5, &[]);
        let p: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let x: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..3.1)).collect();
        let a = predict(&c, &p, &Input::Encoded(x.clone())).unwrap();
        let s = ProductState::ry_encoded(&x).to_statevector();
        let b = predict(&c, &p, &Input::State(s)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn training_reduces_loss() {
        // class 0 near π on every feature, class 1 near 0
        let mut rng = seed::rng(1, &[]);
        let mut sample = |y: u8| {
            let c = if y == 1 { 0.3 } else { 2.8 };
            (Input::Encoded((0..2).map(|_| c + rng.random_range(-0.2..0.2)).collect()), y)
        };
        let train: Vec<_> = (0..40).map(|i| sample((i % 2) as u8)).collect();
        let test: Vec<_> = (0..20).map(|i| sample((i % 2) as u8)).collect();
        let cfg = ClassifyConfig {
            spec: SplitSpec::cs(2, 2, 1, BlockFamily::LADDER),
            tail: BlockFamily::LADDER,
            epochs: 40,
            batch_size: None,
            lr: 0.1,
            seed: 3,
        };
        let data = TaskData { train, test };
        let r = train_classifier(&cfg, &data).unwrap();
        assert!(r.epochs.last().unwrap().train_loss < r.epochs[0].train_loss);
        assert!(r.best_test_accuracy >= 90.0);
        let r2 = train_classifier(&cfg, &data).unwrap();
        assert_eq!(r.final_params, r2.final_params);
        let mb = train_classifier(&ClassifyConfig { batch_size: Some(7), ..cfg }, &data).unwrap();
        assert_eq!(mb.epochs.len(), 40);
    }

    #[test]
    fn tfih_terms() {
        let h = build_tfih(2, 1.0, 1.0).unwrap();
        assert_eq!(h.terms().len(), 4);
        let s = h.simplified();
        let zz = PauliString::new([(0, Pauli::Z), (1, Pauli::Z)]);
        assert_eq!(s.terms().iter().find(|(_, t)| *t == zz).unwrap().0, -2.0);
        let h3 = build_tfih(3, 1.0, 0.5).unwrap();
        assert_eq!(h3.terms().len(), 6);
        let d = h3.to_dense().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((d[i][j] - d[j][i].conj()).norm() < 1e-15);
            }
        }
        assert!(build_tfih(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn ground_energies() {
        // N = 2: H = −2 Z⊗Z − X⊗I − I⊗X; block {|00⟩,|11⟩,|+−⟩-like}: −√8
        let h = build_tfih(2, 1.0, 1.0).unwrap();
        let e = exact_ground_energy(&h).unwrap();
        // hand-built 4×4 oracle
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[-2.0, -1.0, -1.0, 0.0, -1.0, 2.0, 0.0, -1.0, -1.0, 0.0, 2.0, -1.0, 0.0, -1.0, -1.0, -2.0],
        );
        let oracle = m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((e - oracle).abs() < 1e-12);
        assert!((e + 8f64.sqrt()).abs() < 1e-12);
        let x = Observable::new(1, vec![(-1.0, PauliString::single(0, Pauli::X))]).unwrap();
        assert!((exact_ground_energy(&x).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        for n in [6, 9] {
            let h = build_tfih(n, 1.0, 0.7).unwrap().simplified();
            let dense = exact_ground_energy(&h).unwrap();
            let lz = lanczos_ground_energy(&h, 300, 1e-10).unwrap();
            assert!((dense - lz).abs() < 1e-8, "{dense} {lz}");
        }
    }

    #[test]
    fn ecs_degenerate_equals_efficient_su2() {
        let spec = SplitSpec {
            num_qubits: 6,
            block_size: 6,
            cs_layers: 0,
            standard_layers: 3,
            block_family: BlockFamily::SU2_FULL,
        };
        let a = build_ecs(&spec, BlockFamily::SU2_FULL).unwrap();
        let b = build_efficient_su2(6, 3, Entanglement::Full).unwrap();
        assert_eq!(a.gates(), b.gates());
        assert!(a.gates().iter().any(|g| matches!(g, Gate::Cx(..))));
    }

    #[test]
    fn vqe_bookkeeping() {
        let spec = SplitSpec {
            num_qubits: 4,
            block_size: 2,
            cs_layers: 1,
            standard_layers: 1,
            block_family: BlockFamily::SU2_FULL,
        };
        let cfg = VqeConfig {
            n: 4,
            j: 1.0,
            h: 1.0,
            spec,
            tail: BlockFamily::SU2_FULL,
            iterations: 150,
            shots: None,
            spsa: SpsaConfig::default(),
            seed: 2,
        };
        let r = run_vqe(&cfg).unwrap();
        assert_eq!(r.trajectory.len(), 150);
        for w in r.trajectory.windows(2) {
            assert!(w[1].best_energy <= w[0].best_energy);
        }
        for s in &r.trajectory {
            assert!(s.energy >= r.exact_energy - 1e-9);
        }
        assert!(r.final_energy >= r.exact_energy - 1e-9);
        let again = run_vqe(&cfg).unwrap();
        assert_eq!(r.final_params, again.final_params);
        let energies = |r: &VqeResult| r.trajectory.iter().map(|s| s.energy).collect::<Vec<_>>();
        assert_eq!(energies(&r), energies(&again));
        let shots = run_vqe(&VqeConfig { shots: Some(2000), iterations: 20, ..cfg.clone() }).unwrap();
        // |H| ≤ 8, shot SE ≤ 8/√2000 per term sum: loose bound
        for s in &shots.trajectory {
            assert!(s.energy >= shots.exact_energy - 3.0 * 8.0 * (8.0 / 2000f64).sqrt());
        }
        assert!(run_vqe(&VqeConfig { n: 5, ..cfg }).is_err());
    }
}
