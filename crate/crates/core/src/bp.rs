//! Variance scans over random parameter draws.
//!
//! A scan visits cells (N, m, L, T). In every cell, parameters are drawn
//! uniformly from [0, 2π] and the chosen statistic is evaluated on |0…0⟩.
//! Sample `i` of a cell draws from `seed::rng(cell_seed, [i])`, so records
//! do not depend on the worker count.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{BlockFamily, SplitSpec};
use crate::error::{Error, Result};
use crate::grad::SplitCost;
use crate::seed;
use crate::stats;
use crate::sv::{Observable, ProductState};
use crate::tasks::build_tfih;

pub const RECORD_SCHEMA: &str = "variance_record v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// C(θ_a) − C(θ_b) for disjoint pairs of draws.
    DeltaCost,
    /// ∂C/∂θ₀ by parameter shift.
    FirstParamGrad,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::DeltaCost => "delta_cost",
            Statistic::FirstParamGrad => "first_param_grad",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// (1/N) Σ Z_i.
    OneLocalZ,
    /// Periodic transverse-field Ising chain with J = h = 1.
    Tfih,
}

impl ObservableKind {
    pub fn build(self, n: usize) -> Result<Observable> {
        match self {
            ObservableKind::OneLocalZ => Ok(Observable::mean_z(n)),
            ObservableKind::Tfih => build_tfih(n, 1.0, 1.0),
        }
    }
}

/// A block size, or `"N"` for the full register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockSize {
    Fixed(usize),
    Full(FullMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FullMarker {
    N,
}

impl BlockSize {
    pub const FULL: BlockSize = BlockSize::Full(FullMarker::N);

    pub fn resolve(self, n: usize) -> usize {
        match self {
            BlockSize::Fixed(m) => m,
            BlockSize::Full(_) => n,
        }
    }
}

impl From<usize> for BlockSize {
    fn from(m: usize) -> Self {
        BlockSize::Fixed(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub n_values: Vec<usize>,
    pub m_values: Vec<BlockSize>,
    /// Split-layer counts; ignored when `depth` is set.
    #[serde(default)]
    pub l_values: Vec<usize>,
    /// Full-width tail layer counts.
    #[serde(default = "default_t")]
    pub t_values: Vec<usize>,
    /// Fixed total depth D; each T then uses L = D − T.
    #[serde(default)]
    pub depth: Option<usize>,
    /// Use L = N for every N (the `l_values` list is ignored).
    #[serde(default)]
    pub layers_equal_n: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_statistic")]
    pub statistic: Statistic,
    #[serde(default = "default_observable")]
    pub observable: ObservableKind,
    #[serde(default = "default_family")]
    pub family: BlockFamily,
    #[serde(default = "default_family")]
    pub tail: BlockFamily,
    /// Skip (N, m) cells with m ∤ N instead of failing.
    #[serde(default)]
    pub skip_indivisible: bool,
}

fn default_t() -> Vec<usize> {
    vec![0]
}
fn default_samples() -> usize {
    2000
}
fn default_statistic() -> Statistic {
    Statistic::DeltaCost
}
fn default_observable() -> ObservableKind {
    ObservableKind::OneLocalZ
}
fn default_family() -> BlockFamily {
    BlockFamily::LADDER
}

impl ScanConfig {
    /// Ladder scan over `n_values` × `m_values` with L = N.
    pub fn layers_equal_n(n_values: Vec<usize>, m_values: Vec<BlockSize>, samples: usize, seed: u64) -> Self {
        Self {
            n_values,
            m_values,
            l_values: Vec::new(),
            t_values: default_t(),
            depth: None,
            layers_equal_n: true,
            samples,
            seed,
            statistic: Statistic::DeltaCost,
            observable: ObservableKind::OneLocalZ,
            family: BlockFamily::LADDER,
            tail: BlockFamily::LADDER,
            skip_indivisible: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::invalid("samples must be at least 2"));
        }
        if self.n_values.is_empty() || self.m_values.is_empty() {
            return Err(Error::invalid("scan grid is empty"));
        }
        if self.depth.is_none() && !self.layers_equal_n && self.l_values.is_empty() {
            return Err(Error::invalid("set l_values, layers_equal_n or depth"));
        }
        if let Some(d) = self.depth {
            if let Some(&t) = self.t_values.iter().find(|&&t| t > d) {
                return Err(Error::invalid(format!("T = {t} exceeds depth {d}")));
            }
        }
        for &n in &self.n_values {
            for m in &self.m_values {
                let m = m.resolve(n);
                if m == 0 || m > n || n % m != 0 {
                    if !self.skip_indivisible {
                        return Err(Error::IndivisibleBlocks { block: m, num_qubits: n });
                    }
                }
            }
        }
        Ok(())
    }

    /// Cells in emission order.
    pub fn cells(&self) -> Result<Vec<SplitSpec>> {
        self.validate()?;
        let mut out = Vec::new();
        for &n in &self.n_values {
            for m in &self.m_values {
                let m = m.resolve(n);
                if m == 0 || m > n || n % m != 0 {
                    continue;
                }
                let mut lt = Vec::new();
                if let Some(d) = self.depth {
                    lt.extend(self.t_values.iter().map(|&t| (d - t, t)));
                } else {
                    let ls = if self.layers_equal_n { vec![n] } else { self.l_values.clone() };
                    for l in ls {
                        lt.extend(self.t_values.iter().map(|&t| (l, t)));
                    }
                }
                for (l, t) in lt {
                    let spec = SplitSpec {
                        num_qubits: n,
                        block_size: m,
                        cs_layers: l,
                        standard_layers: t,
                        block_family: self.family,
                    };
                    // m = N and a fixed m can coincide
                    if !out.contains(&spec) {
                        out.push(spec);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub t: usize,
    pub statistic: Statistic,
    pub observable: ObservableKind,
    pub variance: f64,
    pub mean: f64,
    pub sample_count: usize,
    /// Variances of the first and second half of the samples.
    pub variance_first_half: f64,
    pub variance_second_half: f64,
    pub seed: u64,
}

/// Seed of one cell. With no split layers the block size has no effect on
/// the circuit, so it is folded to N.
pub fn cell_seed(root: u64, spec: &SplitSpec) -> u64 {
    let m = if spec.cs_layers == 0 { spec.num_qubits } else { spec.block_size };
    seed::derive(root, &[spec.num_qubits as u64, m as u64, spec.cs_layers as u64, spec.standard_layers as u64])
}

fn draw(rng: &mut impl Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Samples of the statistic for one cell.
pub fn cell_samples(config: &ScanConfig, spec: &SplitSpec) -> Result<Vec<f64>> {
    let circuit = spec.build(config.tail)?;
    let obs = config.observable.build(spec.num_qubits)?;
    let cost = SplitCost::new(&circuit, &obs)?;
    let input = ProductState::zero(spec.num_qubits);
    let cs = cell_seed(config.seed, spec);
    let p = circuit.num_params();
    (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(cs, &[i as u64]);
            match config.statistic {
                Statistic::DeltaCost => {
                    let a = draw(&mut rng, p);
                    let b = draw(&mut rng, p);
                    Ok(cost.cost(&a, &input)? - cost.cost(&b, &input)?)
                }
                Statistic::FirstParamGrad => {
                    if p == 0 {
                        return Ok(0.0);
                    }
                    cost.partial(&draw(&mut rng, p), &input, 0)
                }
            }
        })
        .collect()
}

fn record(config: &ScanConfig, spec: &SplitSpec, xs: &[f64]) -> VarianceRecord {
    let h = xs.len() / 2;
    let var = |s: &[f64]| if s.len() < 2 { 0.0 } else { stats::variance(s).max(0.0) };
    VarianceRecord {
        n: spec.num_qubits,
        m: spec.block_size,
        l: spec.cs_layers,
        t: spec.standard_layers,
        statistic: config.statistic,
        observable: config.observable,
        variance: var(xs),
        mean: stats::mean(xs),
        sample_count: xs.len(),
        variance_first_half: var(&xs[..h]),
        variance_second_half: var(&xs[h..]),
        seed: cell_seed(config.seed, spec),
    }
}

/// Runs every cell of the grid.
pub fn scan(config: &ScanConfig) -> Result<Vec<VarianceRecord>> {
    config
        .cells()?
        .iter()
        .map(|spec| {
            let xs = cell_samples(config, spec)?;
            log::debug!(
                "cell N={} m={} L={} T={} done",
                spec.num_qubits,
                spec.block_size,
                spec.cs_layers,
                spec.standard_layers
            );
            Ok(record(config, spec, &xs))
        })
        .collect()
}

/// ΔC variance over the grid.
pub fn scan_delta_cost(config: &ScanConfig) -> Result<Vec<VarianceRecord>> {
    scan(&ScanConfig {
        statistic: Statistic::DeltaCost,
        ..config.clone()
    })
}

/// ∂C/∂θ₀ variance over the grid.
pub fn scan_first_param_gradient(config: &ScanConfig) -> Result<Vec<VarianceRecord>> {
    scan(&ScanConfig {
        statistic: Statistic::FirstParamGrad,
        ..config.clone()
    })
}

/// ΔC variance swept over `l_values` at each N.
pub fn scan_layers(config: &ScanConfig) -> Result<Vec<VarianceRecord>> {
    if config.l_values.is_empty() {
        return Err(Error::invalid("layer scan needs l_values"));
    }
    if let Some(&n) = config.n_values.iter().find(|&&n| n > 16) {
        return Err(Error::invalid(format!("layer scans are limited to N <= 16, got {n}")));
    }
    scan_delta_cost(&ScanConfig {
        layers_equal_n: false,
        depth: None,
        ..config.clone()
    })
}

/// ΔC variance of the TFIH cost for extended split circuits with L + T = D.
pub fn scan_ecs(config: &ScanConfig) -> Result<Vec<VarianceRecord>> {
    if config.depth.is_none() {
        return Err(Error::invalid("ECS scan needs a total depth"));
    }
    scan_delta_cost(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of log₂(variance) against the axis (or against
/// log₂ of the axis when `log_x`). Zero-variance records are dropped.
pub fn fit_decay(records: &[VarianceRecord], axis: Axis, log_x: bool) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        if !(r.variance > 0.0) {
            log::warn!("dropping zero-variance cell N={} m={} L={} T={}", r.n, r.m, r.l, r.t);
            continue;
        }
        let x = match axis {
            Axis::N => r.n,
            Axis::L => r.l,
        } as f64;
        xs.push(if log_x { x.log2() } else { x });
        ys.push(r.variance.log2());
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!("decay fit needs at least 3 points, got {}", xs.len())));
    }
    let (slope, intercept, r2) = stats::linear_fit(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        r2,
        points: xs.len(),
    })
}
