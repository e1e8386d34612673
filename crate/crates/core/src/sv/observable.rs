use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

use super::gate::Gate;
use super::state::Statevector;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Tensor product of Paulis; absent qubits carry identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString {
    ops: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Later entries on the same qubit replace earlier ones.
    pub fn new(ops: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let map: BTreeMap<usize, Pauli> = ops.into_iter().collect();
        Self {
            ops: map.into_iter().collect(),
        }
    }

    pub fn single(q: usize, p: Pauli) -> Self {
        Self { ops: vec![(q, p)] }
    }

    pub fn ops(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.last().map(|(q, _)| *q)
    }

    /// (x-mask, z-mask, number of Y factors).
    fn masks(&self) -> (usize, usize, u32) {
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for &(q, p) in &self.ops {
            match p {
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    fn support_mask(&self) -> usize {
        self.ops.iter().fold(0, |m, (q, _)| m | (1 << q))
    }

    /// ⟨ψ|P|ψ⟩. Uses P|i⟩ = i^{ny} (−1)^{|i ∧ z|} |i ⊕ x⟩.
    pub fn expectation(&self, state: &Statevector) -> f64 {
        let (x, z, ny) = self.masks();
        let amps = state.amplitudes();
        let phase = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ][(ny % 4) as usize];
        let mut acc = C64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += amps[i ^ x].conj() * a * sign;
        }
        (acc * phase).re
    }

    /// P|ψ⟩ accumulated into `out` with weight `coef`.
    fn apply_into(&self, coef: f64, state: &Statevector, out: &mut [C64]) {
        let (x, z, ny) = self.masks();
        let phase = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ][(ny % 4) as usize]
            * coef;
        for (i, a) in state.amplitudes().iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[i ^ x] += a * phase * sign;
        }
    }

    /// Gates rotating each factor's eigenbasis onto Z.
    fn basis_change(&self) -> Vec<Gate> {
        let mut gates = Vec::new();
        for &(q, p) in &self.ops {
            match p {
                Pauli::X => gates.push(Gate::H(q)),
                Pauli::Y => {
                    // H·S† maps Y eigenstates onto Z eigenstates.
                    gates.push(Gate::Rz(q, (-std::f64::consts::FRAC_PI_2).into()));
                    gates.push(Gate::H(q));
                }
                Pauli::Z => {}
            }
        }
        gates
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> PauliString {
        PauliString::new(self.ops.iter().map(|&(q, p)| (f(q), p)))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        for (k, (q, p)) in self.ops.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p:?}{q}")?;
        }
        Ok(())
    }
}

/// Real-weighted sum of Pauli strings on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    num_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(num_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        for (c, t) in &terms {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of {t}")));
            }
            if let Some(q) = t.max_qubit() {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange { index: q, num_qubits });
                }
            }
        }
        Ok(Self { num_qubits, terms })
    }

    /// (1/N) Σ Z_i.
    pub fn mean_z(num_qubits: usize) -> Self {
        let w = 1.0 / num_qubits as f64;
        Self {
            num_qubits,
            terms: (0..num_qubits).map(|q| (w, PauliString::single(q, Pauli::Z))).collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Merges equal strings and drops zero coefficients.
    pub fn simplified(&self) -> Observable {
        let mut map: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, t) in &self.terms {
            *map.entry(t.clone()).or_insert(0.0) += c;
        }
        Observable {
            num_qubits: self.num_qubits,
            terms: map.into_iter().filter(|(_, c)| *c != 0.0).map(|(t, c)| (c, t)).collect(),
        }
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &Observable, b: f64) -> Result<Observable> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, t)| (a * c, t.clone()))
            .chain(other.terms.iter().map(|(c, t)| (b * c, t.clone())))
            .collect();
        Ok(Observable {
            num_qubits: self.num_qubits,
            terms,
        })
    }

    fn check(&self, state: &Statevector) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits,
                right: state.num_qubits(),
            });
        }
        Ok(())
    }

    /// Tr[O |ψ⟩⟨ψ|].
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        self.check(state)?;
        Ok(self.terms.iter().map(|(c, t)| c * t.expectation(state)).sum())
    }

    /// Shot-based estimate: every term is measured separately in its
    /// eigenbasis with `shots` samples. Deterministic in `seed`.
    pub fn expectation_shots(&self, state: &Statevector, shots: usize, seed: u64) -> Result<f64> {
        self.check(state)?;
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let mut total = 0.0;
        for (k, (c, t)) in self.terms.iter().enumerate() {
            if t.is_identity() {
                total += c;
                continue;
            }
            let mut rotated = state.clone();
            for g in t.basis_change() {
                g.apply(&mut rotated)?;
            }
            let mut rng = seed::rng(seed, &[k as u64]);
            let mask = t.support_mask();
            let sum: i64 = rotated
                .sample(shots, &mut rng)
                .into_iter()
                .map(|i| if (i & mask).count_ones() % 2 == 0 { 1 } else { -1 })
                .sum();
            total += c * sum as f64 / shots as f64;
        }
        Ok(total)
    }

    /// O|ψ⟩ (not normalised).
    pub fn apply(&self, state: &Statevector) -> Result<Vec<C64>> {
        self.check(state)?;
        let mut out = vec![C64::new(0.0, 0.0); state.dim()];
        for (c, t) in &self.terms {
            t.apply_into(*c, state, &mut out);
        }
        Ok(out)
    }

    /// Dense matrix, row-major; column `j` is O|j⟩.
    pub fn to_dense(&self) -> Result<Vec<Vec<C64>>> {
        if self.num_qubits > 12 {
            return Err(Error::TooManyQubits {
                what: "dense observable",
                max: 12,
                actual: self.num_qubits,
            });
        }
        let dim = 1usize << self.num_qubits;
        let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        for j in 0..dim {
            let col = self.apply(&Statevector::basis(self.num_qubits, j))?;
            for (i, v) in col.into_iter().enumerate() {
                m[i][j] = v;
            }
        }
        Ok(m)
    }

    /// Splits an observable whose terms each live inside one group. Returns
    /// per-group observables in local indices and the identity offset.
    pub fn split_over(&self, groups: &[Vec<usize>]) -> Option<(Vec<Observable>, f64)> {
        let mut owner = vec![usize::MAX; self.num_qubits];
        let mut local = vec![0usize; self.num_qubits];
        for (g, grp) in groups.iter().enumerate() {
            for (li, &q) in grp.iter().enumerate() {
                owner[q] = g;
                local[q] = li;
            }
        }
        let mut parts: Vec<Vec<(f64, PauliString)>> = vec![Vec::new(); groups.len()];
        let mut offset = 0.0;
        for (c, t) in &self.terms {
            let Some(&(q0, _)) = t.ops().first() else {
                offset += c;
                continue;
            };
            let g = owner[q0];
            if t.ops().iter().any(|&(q, _)| owner[q] != g) {
                return None;
            }
            parts[g].push((*c, t.remap(|q| local[q])));
        }
        let obs = groups
            .iter()
            .zip(parts)
            .map(|(grp, terms)| Observable {
                num_qubits: grp.len(),
                terms,
            })
            .collect();
        Some((obs, offset))
    }

    /// Σ|c_i|, an upper bound on the spectral radius.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn plus() -> Statevector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn mean_z_extremes() {
        let o = Observable::mean_z(4);
        assert_eq!(o.expectation(&Statevector::zero(4)).unwrap(), 1.0);
        assert_eq!(o.expectation(&Statevector::basis(4, 0b1111)).unwrap(), -1.0);
    }

    #[test]
    fn pauli_expectations_match_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s = Statevector::random(3, &mut rng);
        let o = Observable::new(
            3,
            vec![
                (0.7, PauliString::new([(0, Pauli::Y), (2, Pauli::X)])),
                (-0.2, PauliString::new([(1, Pauli::Z), (2, Pauli::Y)])),
                (0.5, PauliString::identity()),
            ],
        )
        .unwrap();
        let m = o.to_dense().unwrap();
        let a = s.amplitudes();
        let mut dense = C64::new(0.0, 0.0);
        for i in 0..8 {
            for j in 0..8 {
                dense += a[i].conj() * m[i][j] * a[j];
            }
        }
        assert!(dense.im.abs() < 1e-12);
        assert!((dense.re - o.expectation(&s).unwrap()).abs() < 1e-12);
        // Hermitian
        for i in 0..8 {
            for j in 0..8 {
                assert!((m[i][j] - m[j][i].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn linearity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let s = Statevector::random(3, &mut rng);
        let o1 = Observable::new(3, vec![(1.0, PauliString::new([(0, Pauli::X), (1, Pauli::X)]))]).unwrap();
        let o2 = Observable::new(3, vec![(1.0, PauliString::single(2, Pauli::Y))]).unwrap();
        let (a, b) = (0.37, -1.9);
        let lhs = o1.combine(a, &o2, b).unwrap().expectation(&s).unwrap();
        let rhs = a * o1.expectation(&s).unwrap() + b * o2.expectation(&s).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn shots_on_eigenstate_are_exact() {
        let z = Observable::new(1, vec![(1.0, PauliString::single(0, Pauli::Z))]).unwrap();
        assert_eq!(z.expectation_shots(&Statevector::zero(1), 17, 4).unwrap(), 1.0);
        let x = Observable::new(1, vec![(1.0, PauliString::single(0, Pauli::X))]).unwrap();
        assert_eq!(x.expectation_shots(&plus(), 9, 4).unwrap(), 1.0);
        // Y eigenstate (|0⟩ + i|1⟩)/√2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let yp = Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let y = Observable::new(1, vec![(1.0, PauliString::single(0, Pauli::Y))]).unwrap();
        assert_eq!(y.expectation_shots(&yp, 9, 4).unwrap(), 1.0);
    }

    #[test]
    fn shots_unbiased_on_plus() {
        let z = Observable::new(1, vec![(1.0, PauliString::single(0, Pauli::Z))]).unwrap();
        let est = z.expectation_shots(&plus(), 1_000_000, 42).unwrap();
        assert!(est.abs() < 0.005, "{est}");
        assert_eq!(est, z.expectation_shots(&plus(), 1_000_000, 42).unwrap());
    }

    #[test]
    fn shot_errors() {
        let z = Observable::mean_z(2);
        assert!(matches!(z.expectation_shots(&Statevector::zero(2), 0, 1), Err(Error::ZeroShots)));
        assert!(matches!(z.expectation(&Statevector::zero(3)), Err(Error::QubitMismatch { .. })));
    }

    #[test]
    fn split_detects_crossing_terms() {
        let o = Observable::mean_z(4);
        let (parts, off) = o.split_over(&[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(off, 0.0);
        let zz = Observable::new(4, vec![(1.0, PauliString::new([(1, Pauli::Z), (2, Pauli::Z)]))]).unwrap();
        assert!(zz.split_over(&[vec![0, 1], vec![2, 3]]).is_none());
    }
}
