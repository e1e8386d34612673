use num_complex::Complex64 as C64;
use rand::Rng;

use super::gate::{Mat2, Mat4};
use crate::error::{Error, Result};

/// Dense pure state over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 26;

impl Statevector {
    /// |0…0⟩.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&num_qubits), "unsupported qubit count {num_qubits}");
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector
    /// is normalised.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude length {len} is not 2^n with n >= 1")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        let mut s = Self { num_qubits, amps };
        let n = s.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFinite("state norm".into()));
        }
        s.scale(1.0 / n);
        Ok(s)
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        use rand_distr::StandardNormal;
        let amps = (0..1usize << num_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amps).expect("gaussian vector is nonzero")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// 1 − |⟨self|other⟩|².
    pub fn infidelity(&self, other: &Statevector) -> f64 {
        1.0 - self.inner(other).norm_sqr()
    }

    /// Max |a_i − b_i|, phase-sensitive.
    pub fn max_abs_diff(&self, other: &Statevector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ high`: qubits of `high` are appended above this register.
    pub fn tensor(&self, high: &Statevector) -> Statevector {
        let mut amps = Vec::with_capacity(self.dim() * high.dim());
        for h in &high.amps {
            for l in &self.amps {
                amps.push(l * h);
            }
        }
        Statevector {
            num_qubits: self.num_qubits + high.num_qubits,
            amps,
        }
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies a 2×2 unitary to qubit `q` in place.
    pub fn apply_mat2(&mut self, q: usize, m: &Mat2) {
        let stride = 1usize << q;
        let [[m00, m01], [m10, m11]] = *m;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let x0 = *a0;
                let x1 = *a1;
                *a0 = m00 * x0 + m01 * x1;
                *a1 = m10 * x0 + m11 * x1;
            }
        }
    }

    /// Applies a 4×4 unitary to `(q0, q1)`. The local basis index is
    /// `bit(q0) + 2·bit(q1)`.
    pub fn apply_mat4(&mut self, q0: usize, q1: usize, m: &Mat4) {
        let b0 = 1usize << q0;
        let b1 = 1usize << q1;
        for i in 0..self.amps.len() {
            if i & (b0 | b1) != 0 {
                continue;
            }
            let idx = [i, i | b0, i | b1, i | b0 | b1];
            let x = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
            }
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let c = 1usize << control;
        let t = 1usize << target;
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let ba = 1usize << a;
        let bb = 1usize << b;
        for i in 0..self.amps.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ba) | bb);
            }
        }
    }

    /// Samples `shots` basis indices from |amplitude|².
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<usize> {
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        (0..shots)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * total;
                cdf.partition_point(|&c| c <= u).min(self.amps.len() - 1)
            })
            .collect()
    }
}

/// Tensor product of single-qubit states; qubit `i` is `qubits[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    qubits: Vec<[C64; 2]>,
}

impl ProductState {
    pub fn zero(n: usize) -> Self {
        Self {
            qubits: vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; n],
        }
    }

    pub fn new(qubits: Vec<[C64; 2]>) -> Self {
        Self { qubits }
    }

    /// RY(x_i)|0⟩ on each qubit.
    pub fn ry_encoded(angles: &[f64]) -> Self {
        Self {
            qubits: angles
                .iter()
                .map(|x| [C64::new((x / 2.0).cos(), 0.0), C64::new((x / 2.0).sin(), 0.0)])
                .collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Product state on the listed qubits, in list order.
    pub fn restrict(&self, qubits: &[usize]) -> ProductState {
        ProductState {
            qubits: qubits.iter().map(|&q| self.qubits[q]).collect(),
        }
    }

    pub fn to_statevector(&self) -> Statevector {
        let n = self.qubits.len();
        let mut amps = vec![C64::new(1.0, 0.0); 1 << n];
        for (i, a) in amps.iter_mut().enumerate() {
            for (q, s) in self.qubits.iter().enumerate() {
                *a *= s[(i >> q) & 1];
            }
        }
        Statevector { num_qubits: n, amps }
    }
}
