//! Gradients and optimizers.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::sv::{Block, Circuit, Gate, Observable, Occurrence, Override, ProductState, Statevector};

fn check_shiftable(circuit: &Circuit) -> Result<Vec<Occurrence>> {
    let occ = circuit.occurrences();
    for o in &occ {
        let g = &circuit.gates()[o.gate];
        if !matches!(g, Gate::Rx(..) | Gate::Ry(..) | Gate::Rz(..)) {
            return Err(Error::NonPauliRotation(g.name()));
        }
    }
    Ok(occ)
}

fn accumulate(num_params: usize, occ: &[Occurrence], parts: Vec<f64>) -> Vec<f64> {
    let mut grad = vec![0.0; num_params];
    for (o, g) in occ.iter().zip(parts) {
        grad[o.param] += g;
    }
    grad
}

/// Exact gradient of ⟨O⟩ by the two-term shift rule applied to every angle
/// occurrence; a parameter used by several gates sums their contributions.
pub fn parameter_shift_gradient(
    circuit: &Circuit,
    params: &[f64],
    obs: &Observable,
    initial: &Statevector,
) -> Result<Vec<f64>> {
    let occ = check_shiftable(circuit)?;
    let parts = occ
        .par_iter()
        .map(|o| {
            let eval = |delta| {
                let ovr = Override { gate: o.gate, slot: o.slot, delta };
                obs.expectation(&circuit.run_with(params, initial, Some(ovr))?)
            };
            Ok((eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?) / 2.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(accumulate(circuit.num_params(), &occ, parts))
}

/// Shot-based parameter shift. Each shifted evaluation draws from
/// `seed::derive(seed, [occurrence, ±])`.
pub fn parameter_shift_gradient_shots(
    circuit: &Circuit,
    params: &[f64],
    obs: &Observable,
    initial: &Statevector,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let occ = check_shiftable(circuit)?;
    let parts = occ
        .par_iter()
        .enumerate()
        .map(|(k, o)| {
            let eval = |delta, sign: u64| {
                let ovr = Override { gate: o.gate, slot: o.slot, delta };
                let state = circuit.run_with(params, initial, Some(ovr))?;
                obs.expectation_shots(&state, shots, seed::derive(seed, &[k as u64, sign]))
            };
            Ok((eval(FRAC_PI_2, 0)? - eval(-FRAC_PI_2, 1)?) / 2.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(accumulate(circuit.num_params(), &occ, parts))
}

/// Central differences with step `h`.
pub fn finite_difference_gradient(
    circuit: &Circuit,
    params: &[f64],
    obs: &Observable,
    initial: &Statevector,
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for j in 0..params.len() {
        p[j] = params[j] + h;
        let plus = obs.expectation(&circuit.run(&p, initial)?)?;
        p[j] = params[j] - h;
        let minus = obs.expectation(&circuit.run(&p, initial)?)?;
        p[j] = params[j];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// ⟨O⟩ evaluated on independent blocks when circuit and observable allow it.
///
/// Qubits are grouped by the connected components of the circuit, merged
/// wherever an observable term spans several components. For product inputs
/// the cost is the sum of per-block expectations; blocks carrying no
/// observable term are skipped.
#[derive(Debug, Clone)]
pub struct SplitCost {
    circuit: Circuit,
    obs: Observable,
    blocks: Vec<(Block, Observable)>,
    offset: f64,
}

impl SplitCost {
    pub fn new(circuit: &Circuit, obs: &Observable) -> Result<Self> {
        let n = circuit.num_qubits();
        if obs.num_qubits() != n {
            return Err(Error::QubitMismatch { left: n, right: obs.num_qubits() });
        }
        let mut owner = vec![0usize; n];
        let mut groups = circuit.components();
        for (g, grp) in groups.iter().enumerate() {
            for &q in grp {
                owner[q] = g;
            }
        }
        // merge components bridged by observable terms
        let mut parent: Vec<usize> = (0..groups.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (_, t) in obs.terms() {
            let mut it = t.ops().iter().map(|&(q, _)| owner[q]);
            if let Some(first) = it.next() {
                for g in it {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, g));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut merged: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        for g in 0..groups.len() {
            let r = find(&mut parent, g);
            let qs = std::mem::take(&mut groups[g]);
            merged[r].extend(qs);
        }
        let groups: Vec<Vec<usize>> = merged
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        let blocks = circuit.split_into(&groups)?;
        let (parts, offset) = obs
            .split_over(&groups)
            .expect("groups are closed under observable support");
        let blocks = blocks
            .into_iter()
            .zip(parts)
            .filter(|(_, o)| !o.terms().is_empty())
            .collect();
        Ok(Self {
            circuit: circuit.clone(),
            obs: obs.clone(),
            blocks,
            offset,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn observable(&self) -> &Observable {
        &self.obs
    }

    /// Qubit groups of the blocks that carry observable terms.
    pub fn block_qubits(&self) -> Vec<&[usize]> {
        self.blocks.iter().map(|(b, _)| b.qubits.as_slice()).collect()
    }

    fn local_params(block: &Block, params: &[f64]) -> Vec<f64> {
        block.params.iter().map(|&p| params[p]).collect()
    }

    fn check(&self, params: &[f64], input: &ProductState) -> Result<()> {
        if params.len() != self.circuit.num_params() {
            return Err(Error::LengthMismatch {
                expected: self.circuit.num_params(),
                actual: params.len(),
            });
        }
        if input.num_qubits() != self.circuit.num_qubits() {
            return Err(Error::QubitMismatch {
                left: self.circuit.num_qubits(),
                right: input.num_qubits(),
            });
        }
        Ok(())
    }

    /// ⟨O⟩ for a product input, block by block.
    pub fn cost(&self, params: &[f64], input: &ProductState) -> Result<f64> {
        self.check(params, input)?;
        let mut total = self.offset;
        for (b, o) in &self.blocks {
            let init = input.restrict(&b.qubits).to_statevector();
            let state = b.circuit.run(&Self::local_params(b, params), &init)?;
            total += o.expectation(&state)?;
        }
        Ok(total)
    }

    /// Per-block expectations (without the identity offset).
    pub fn block_costs(&self, params: &[f64], input: &ProductState) -> Result<Vec<f64>> {
        self.check(params, input)?;
        self.blocks
            .iter()
            .map(|(b, o)| {
                let init = input.restrict(&b.qubits).to_statevector();
                o.expectation(&b.circuit.run(&Self::local_params(b, params), &init)?)
            })
            .collect()
    }

    /// Parameter-shift gradient for a product input, block by block.
    pub fn gradient(&self, params: &[f64], input: &ProductState) -> Result<Vec<f64>> {
        self.check(params, input)?;
        let mut grad = vec![0.0; params.len()];
        for (b, o) in &self.blocks {
            let init = input.restrict(&b.qubits).to_statevector();
            let g = parameter_shift_gradient(&b.circuit, &Self::local_params(b, params), o, &init)?;
            for (local, v) in g.into_iter().enumerate() {
                grad[b.params[local]] += v;
            }
        }
        Ok(grad)
    }

    /// ∂⟨O⟩/∂θ_j for a single parameter, touching only blocks that use it.
    pub fn partial(&self, params: &[f64], input: &ProductState, j: usize) -> Result<f64> {
        self.check(params, input)?;
        let mut total = 0.0;
        for (b, o) in &self.blocks {
            let Some(local) = b.params.iter().position(|&p| p == j) else {
                continue;
            };
            let init = input.restrict(&b.qubits).to_statevector();
            let lp = Self::local_params(b, params);
            for occ in check_shiftable(&b.circuit)?.into_iter().filter(|o| o.param == local) {
                let eval = |delta| {
                    let ovr = Override { gate: occ.gate, slot: occ.slot, delta };
                    o.expectation(&b.circuit.run_with(&lp, &init, Some(ovr))?)
                };
                total += (eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?) / 2.0;
            }
        }
        Ok(total)
    }

    /// ⟨O⟩ for an arbitrary input state on the full register.
    pub fn cost_state(&self, params: &[f64], input: &Statevector) -> Result<f64> {
        self.obs.expectation(&self.circuit.run(params, input)?)
    }

    pub fn gradient_state(&self, params: &[f64], input: &Statevector) -> Result<Vec<f64>> {
        parameter_shift_gradient(&self.circuit, params, &self.obs, input)
    }
}

/// ADAM with bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// In-place update of `params` against `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                expected: self.m.len(),
                actual: if params.len() != self.m.len() { params.len() } else { grad.len() },
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("ADAM gradient".into()));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// SPSA gain schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    /// Stability constant `A`.
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.1,
            big_a: 0.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

impl SpsaConfig {
    pub fn a_k(&self, k: u64) -> f64 {
        self.a / (k as f64 + 1.0 + self.big_a).powf(self.alpha)
    }

    pub fn c_k(&self, k: u64) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

#[derive(Debug, Clone)]
pub struct Spsa {
    pub config: SpsaConfig,
    k: u64,
    rng: ChaCha8Rng,
}

/// Costs observed by one SPSA step.
#[derive(Debug, Clone, Copy)]
pub struct SpsaStep {
    pub cost_plus: f64,
    pub cost_minus: f64,
    /// ‖ĝ‖₂ of the gradient estimate.
    pub grad_norm: f64,
}

impl Spsa {
    pub fn new(config: SpsaConfig, seed: u64) -> Self {
        Self {
            config,
            k: 0,
            rng: seed::rng(seed, &[seed::tag("spsa")]),
        }
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    /// One update with exactly two cost evaluations.
    pub fn step<F>(&mut self, params: &mut [f64], mut cost: F) -> Result<SpsaStep>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let ck = self.config.c_k(self.k);
        let ak = self.config.a_k(self.k);
        let delta: Vec<f64> = (0..params.len())
            .map(|_| if self.rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let shifted = |s: f64| -> Vec<f64> {
            params.iter().zip(&delta).map(|(p, d)| p + s * ck * d).collect()
        };
        let cost_plus = cost(&shifted(1.0))?;
        let cost_minus = cost(&shifted(-1.0))?;
        if !cost_plus.is_finite() || !cost_minus.is_finite() {
            return Err(Error::NonFinite("SPSA cost".into()));
        }
        let diff = (cost_plus - cost_minus) / (2.0 * ck);
        let mut norm2 = 0.0;
        for (p, d) in params.iter_mut().zip(&delta) {
            let g = diff / d;
            norm2 += g * g;
            *p -= ak * g;
        }
        self.k += 1;
        Ok(SpsaStep {
            cost_plus,
            cost_minus,
            grad_norm: norm2.sqrt(),
        })
    }
}

/// One row of an optimizer trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub cost: f64,
    pub grad_norm: Option<f64>,
    pub wall_time: f64,
}

pub const TRAJECTORY_SCHEMA: &str = "trajectory v1";
