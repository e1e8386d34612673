use std::fmt;

use num_complex::Complex64 as C64;

use super::state::Statevector;
use crate::error::{Error, Result};

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

/// A gate angle: either a bound value in radians or a symbolic parameter index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Bound(f64),
    Param(usize),
}

impl Angle {
    pub fn resolve(self, params: &[f64]) -> Result<f64> {
        match self {
            Angle::Bound(v) => Ok(v),
            Angle::Param(i) => params.get(i).copied().ok_or(Error::UnboundParameter(i)),
        }
    }

    pub fn param(self) -> Option<usize> {
        match self {
            Angle::Param(i) => Some(i),
            Angle::Bound(_) => None,
        }
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::Bound(v)
    }
}

/// Gate set. Rotations follow `R_P(θ) = exp(−iθP/2)`;
/// `U3(θ,φ,λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rx(usize, Angle),
    Ry(usize, Angle),
    Rz(usize, Angle),
    U3(usize, [Angle; 3]),
    H(usize),
    X(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    Unitary1(usize, Mat2),
    /// Local index `bit(q0) + 2·bit(q1)`.
    Unitary2([usize; 2], Box<Mat4>),
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn rx(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

pub(crate) fn ry(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub(crate) fn rz(t: f64) -> Mat2 {
    [[C64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C64::from_polar(1.0, t / 2.0)]]
}

pub(crate) fn u3(theta: f64, phi: f64, lam: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -C64::from_polar(s, lam)],
        [C64::from_polar(s, phi), C64::from_polar(co, phi + lam)],
    ]
}

/// ∂U3/∂(angle `which`).
pub(crate) fn u3_derivative(theta: f64, phi: f64, lam: f64, which: usize) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let i = c(0.0, 1.0);
    match which {
        0 => [
            [c(-s / 2.0, 0.0), -C64::from_polar(co / 2.0, lam)],
            [C64::from_polar(co / 2.0, phi), -C64::from_polar(s / 2.0, phi + lam)],
        ],
        1 => [
            [c(0.0, 0.0), c(0.0, 0.0)],
            [i * C64::from_polar(s, phi), i * C64::from_polar(co, phi + lam)],
        ],
        _ => [
            [c(0.0, 0.0), -i * C64::from_polar(s, lam)],
            [c(0.0, 0.0), i * C64::from_polar(co, phi + lam)],
        ],
    }
}

fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            out[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    out
}

const H: Mat2 = [
    [C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)],
    [C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0)],
];
const X: Mat2 = [
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
];

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::U3(..) => "u3",
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Cx(..) => "cx",
            Gate::Cz(..) => "cz",
            Gate::Swap(..) => "swap",
            Gate::Unitary1(..) => "unitary1",
            Gate::Unitary2(..) => "unitary2",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rx(q, _)
            | Gate::Ry(q, _)
            | Gate::Rz(q, _)
            | Gate::U3(q, _)
            | Gate::H(q)
            | Gate::X(q)
            | Gate::Unitary1(q, _) => vec![*q],
            Gate::Cx(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => vec![*a, *b],
            Gate::Unitary2(qs, _) => qs.to_vec(),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx(..) | Gate::Cz(..) | Gate::Swap(..) | Gate::Unitary2(..))
    }

    /// Angle slots in order.
    pub fn angles(&self) -> Vec<Angle> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => vec![*a],
            Gate::U3(_, a) => a.to_vec(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn angles_mut(&mut self) -> Vec<&mut Angle> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => vec![a],
            Gate::U3(_, a) => a.iter_mut().collect(),
            _ => Vec::new(),
        }
    }

    /// Same gate acting on relabelled qubits.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        let mut g = self.clone();
        match &mut g {
            Gate::Rx(q, _)
            | Gate::Ry(q, _)
            | Gate::Rz(q, _)
            | Gate::U3(q, _)
            | Gate::H(q)
            | Gate::X(q)
            | Gate::Unitary1(q, _) => *q = f(*q),
            Gate::Cx(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => {
                *a = f(*a);
                *b = f(*b);
            }
            Gate::Unitary2(qs, _) => {
                qs[0] = f(qs[0]);
                qs[1] = f(qs[1]);
            }
        }
        g
    }

    /// Replaces every symbolic angle with its value from `params`.
    pub fn bind(&self, params: &[f64]) -> Result<Gate> {
        let mut g = self.clone();
        for a in g.angles_mut() {
            *a = Angle::Bound(a.resolve(params)?);
        }
        Ok(g)
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { index: q, num_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::DuplicateTargets(qs));
        }
        Ok(())
    }

    /// 2×2 matrix of a bound single-qubit gate.
    pub fn matrix1(&self) -> Result<Option<Mat2>> {
        let b = |a: &Angle| match a {
            Angle::Bound(v) => Ok(*v),
            Angle::Param(i) => Err(Error::UnboundParameter(*i)),
        };
        Ok(Some(match self {
            Gate::Rx(_, a) => rx(b(a)?),
            Gate::Ry(_, a) => ry(b(a)?),
            Gate::Rz(_, a) => rz(b(a)?),
            Gate::U3(_, [t, p, l]) => u3(b(t)?, b(p)?, b(l)?),
            Gate::H(_) => H,
            Gate::X(_) => X,
            Gate::Unitary1(_, m) => *m,
            _ => return Ok(None),
        }))
    }

    /// Applies a gate whose angles are all bound.
    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        self.validate(state.num_qubits())?;
        if let Some(m) = self.matrix1()? {
            state.apply_mat2(self.qubits()[0], &m);
            return Ok(());
        }
        match self {
            Gate::Cx(a, b) => state.apply_cx(*a, *b),
            Gate::Cz(a, b) => state.apply_cz(*a, *b),
            Gate::Swap(a, b) => state.apply_swap(*a, *b),
            Gate::Unitary2([a, b], m) => state.apply_mat4(*a, *b, m),
            _ => unreachable!("single-qubit gates handled above"),
        }
        Ok(())
    }

    /// Applies the gate resolving symbolic angles from `params`.
    pub(crate) fn apply_with(&self, state: &mut Statevector, params: &[f64]) -> Result<()> {
        match self {
            Gate::Rx(q, a) => state.apply_mat2(*q, &rx(a.resolve(params)?)),
            Gate::Ry(q, a) => state.apply_mat2(*q, &ry(a.resolve(params)?)),
            Gate::Rz(q, a) => state.apply_mat2(*q, &rz(a.resolve(params)?)),
            Gate::U3(q, [t, p, l]) => {
                state.apply_mat2(*q, &u3(t.resolve(params)?, p.resolve(params)?, l.resolve(params)?))
            }
            other => other.apply(state)?,
        }
        Ok(())
    }

    /// Derivative of the gate matrix with respect to angle slot `slot`, all
    /// angles resolved from `params`.
    pub(crate) fn derivative1(&self, params: &[f64], slot: usize) -> Result<Mat2> {
        let half = |m: Mat2, p: Mat2| {
            // d/dθ exp(−iθP/2) = (−i/2) P exp(−iθP/2)
            let mut d = matmul2(&p, &m);
            for row in &mut d {
                for v in row {
                    *v *= c(0.0, -0.5);
                }
            }
            d
        };
        let pauli_y: Mat2 = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let pauli_z: Mat2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        Ok(match self {
            Gate::Rx(_, a) => half(rx(a.resolve(params)?), X),
            Gate::Ry(_, a) => half(ry(a.resolve(params)?), pauli_y),
            Gate::Rz(_, a) => half(rz(a.resolve(params)?), pauli_z),
            Gate::U3(_, [t, p, l]) => u3_derivative(
                t.resolve(params)?,
                p.resolve(params)?,
                l.resolve(params)?,
                slot,
            ),
            _ => return Err(Error::invalid(format!("gate {} has no angles", self.name()))),
        })
    }
}

impl fmt::Display for Gate {
    /// Line format used by the circuit serializer: `kind targets… angles…`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        for a in self.angles() {
            match a {
                Angle::Param(i) => write!(f, " p{i}")?,
                Angle::Bound(v) => write!(f, " {v:?}")?,
            }
        }
        match self {
            Gate::Unitary1(_, m) => {
                for v in m.iter().flatten() {
                    write!(f, " {:?} {:?}", v.re, v.im)?;
                }
            }
            Gate::Unitary2(_, m) => {
                for v in m.iter().flatten() {
                    write!(f, " {:?} {:?}", v.re, v.im)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn is_unitary(m: &Mat2) -> bool {
        for r in 0..2 {
            for k in 0..2 {
                let v: C64 = (0..2).map(|j| m[r][j] * m[k][j].conj()).sum();
                let expect = if r == k { 1.0 } else { 0.0 };
                if (v - c(expect, 0.0)).norm() > 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rotations_are_unitary() {
        for t in [0.0, 0.3, PI, 2.7] {
            assert!(is_unitary(&rx(t)));
            assert!(is_unitary(&ry(t)));
            assert!(is_unitary(&rz(t)));
            assert!(is_unitary(&u3(t, 0.4 * t, 1.3)));
        }
    }

    #[test]
    fn u3_reduces_to_ry() {
        let a = u3(0.7, 0.0, 0.0);
        let b = ry(0.7);
        for r in 0..2 {
            for k in 0..2 {
                assert!((a[r][k] - b[r][k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let params = [0.4, -1.1, 2.3];
        let g = Gate::U3(0, [Angle::Param(0), Angle::Param(1), Angle::Param(2)]);
        for slot in 0..3 {
            let d = g.derivative1(&params, slot).unwrap();
            let h = 1e-6;
            let mut p = params;
            p[slot] += h;
            let up = g.bind(&p).unwrap().matrix1().unwrap().unwrap();
            p[slot] -= 2.0 * h;
            let dn = g.bind(&p).unwrap().matrix1().unwrap().unwrap();
            for r in 0..2 {
                for k in 0..2 {
                    let fd = (up[r][k] - dn[r][k]) / (2.0 * h);
                    assert!((fd - d[r][k]).norm() < 1e-8);
                }
            }
        }
        for g in [Gate::Rx(0, Angle::Param(0)), Gate::Ry(0, Angle::Param(0)), Gate::Rz(0, Angle::Param(0))] {
            let d = g.derivative1(&[0.9], 0).unwrap();
            let up = g.bind(&[0.9 + 1e-6]).unwrap().matrix1().unwrap().unwrap();
            let dn = g.bind(&[0.9 - 1e-6]).unwrap().matrix1().unwrap().unwrap();
            for r in 0..2 {
                for k in 0..2 {
                    assert!(((up[r][k] - dn[r][k]) / 2e-6 - d[r][k]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn ry_pi_flips_zero() {
        let mut s = Statevector::zero(1);
        Gate::Ry(0, Angle::Bound(PI)).apply(&mut s).unwrap();
        assert!((s.amplitudes()[0]).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cx_truth_table() {
        // |10⟩ with qubit 0 = 1 is index 1; control 0 flips qubit 1.
        let mut s = Statevector::basis(2, 0b01);
        Gate::Cx(0, 1).apply(&mut s).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b11));
        let mut s = Statevector::basis(2, 0b10);
        Gate::Cx(0, 1).apply(&mut s).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b10));
    }

    #[test]
    fn errors() {
        let mut s = Statevector::zero(2);
        assert!(matches!(Gate::H(2).apply(&mut s), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(Gate::Cx(1, 1).apply(&mut s), Err(Error::DuplicateTargets(_))));
        assert!(matches!(
            Gate::Ry(0, Angle::Param(0)).apply(&mut s),
            Err(Error::UnboundParameter(0))
        ));
    }
}
