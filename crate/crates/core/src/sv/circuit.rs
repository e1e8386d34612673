use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::gate::{Angle, Gate, Mat2, Mat4};
use super::state::Statevector;
use crate::error::{Error, Result};

/// Ordered gate list over `num_qubits` qubits with `num_params` symbolic
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

/// One symbolic angle slot in a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub gate: usize,
    pub slot: usize,
    pub param: usize,
}

/// Adds `delta` to a single angle slot during execution.
#[derive(Debug, Clone, Copy)]
pub struct Override {
    pub gate: usize,
    pub slot: usize,
    pub delta: f64,
}

/// A connected group of qubits with its gates relabelled to local indices.
#[derive(Debug, Clone)]
pub struct Block {
    /// Global qubit ids, ascending; local qubit `i` is `qubits[i]`.
    pub qubits: Vec<usize>,
    /// Local parameter `i` is global parameter `params[i]`.
    pub params: Vec<usize>,
    pub circuit: Circuit,
}

impl Circuit {
    /// Validates targets and requires every index in `0..max+1` to be used.
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::invalid("circuit needs at least one qubit"));
        }
        for g in &gates {
            g.validate(num_qubits)?;
        }
        let mut used: Vec<bool> = Vec::new();
        for g in &gates {
            for p in g.angles().into_iter().filter_map(Angle::param) {
                if p >= used.len() {
                    used.resize(p + 1, false);
                }
                used[p] = true;
            }
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("parameter p{missing} is never used")));
        }
        Ok(Self {
            num_qubits,
            gates,
            num_params: used.len(),
        })
    }

    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            num_params: 0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// `self` followed by `next`; parameters of `next` are shifted past ours.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if self.num_qubits != next.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits,
                right: next.num_qubits,
            });
        }
        let offset = self.num_params;
        let mut gates = self.gates.clone();
        for g in &next.gates {
            let mut g = g.clone();
            for a in g.angles_mut() {
                if let Angle::Param(i) = a {
                    *i += offset;
                }
            }
            gates.push(g);
        }
        Ok(Circuit {
            num_qubits: self.num_qubits,
            gates,
            num_params: offset + next.num_params,
        })
    }

    pub fn occurrences(&self) -> Vec<Occurrence> {
        let mut out = Vec::new();
        for (gi, g) in self.gates.iter().enumerate() {
            for (slot, a) in g.angles().into_iter().enumerate() {
                if let Angle::Param(p) = a {
                    out.push(Occurrence { gate: gi, slot, param: p });
                }
            }
        }
        out
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Undirected qubit pairs touched by two-qubit gates, in gate order.
    pub fn interaction_edges(&self) -> Vec<(usize, usize)> {
        self.gates
            .iter()
            .filter(|g| g.is_two_qubit())
            .map(|g| {
                let q = g.qubits();
                (q[0].min(q[1]), q[0].max(q[1]))
            })
            .collect()
    }

    /// Connected components of the interaction graph, each sorted, ordered
    /// by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.num_qubits).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (a, b) in self.interaction_edges() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; self.num_qubits];
        for q in 0..self.num_qubits {
            let r = find(&mut parent, q);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(q);
        }
        groups
    }

    /// Splits the circuit into independent blocks over the given qubit
    /// groups. Fails if any gate straddles two groups.
    pub fn split_into(&self, groups: &[Vec<usize>]) -> Result<Vec<Block>> {
        let mut owner = vec![usize::MAX; self.num_qubits];
        let mut local = vec![0usize; self.num_qubits];
        for (gi, grp) in groups.iter().enumerate() {
            for (li, &q) in grp.iter().enumerate() {
                if q >= self.num_qubits {
                    return Err(Error::QubitOutOfRange { index: q, num_qubits: self.num_qubits });
                }
                owner[q] = gi;
                local[q] = li;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::invalid("qubit groups do not cover the register"));
        }
        let mut gates: Vec<Vec<Gate>> = vec![Vec::new(); groups.len()];
        let mut pmaps: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        for g in &self.gates {
            let qs = g.qubits();
            let b = owner[qs[0]];
            if qs.iter().any(|&q| owner[q] != b) {
                return Err(Error::invalid(format!("gate {g} crosses qubit groups")));
            }
            let mut lg = g.remap(|q| local[q]);
            for a in lg.angles_mut() {
                if let Angle::Param(p) = a {
                    let pos = match pmaps[b].iter().position(|x| x == p) {
                        Some(pos) => pos,
                        None => {
                            pmaps[b].push(*p);
                            pmaps[b].len() - 1
                        }
                    };
                    *p = pos;
                }
            }
            gates[b].push(lg);
        }
        groups
            .iter()
            .zip(gates)
            .zip(pmaps)
            .map(|((grp, gates), params)| {
                let circuit = Circuit {
                    num_qubits: grp.len(),
                    num_params: params.len(),
                    gates,
                };
                Ok(Block {
                    qubits: grp.clone(),
                    params,
                    circuit,
                })
            })
            .collect()
    }

    fn check_run(&self, params: &[f64], initial: &Statevector) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::LengthMismatch {
                expected: self.num_params,
                actual: params.len(),
            });
        }
        if initial.num_qubits() != self.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits,
                right: initial.num_qubits(),
            });
        }
        Ok(())
    }

    /// U(θ)|initial⟩.
    pub fn run(&self, params: &[f64], initial: &Statevector) -> Result<Statevector> {
        self.run_with(params, initial, None)
    }

    /// Runs with one angle slot offset by `ovr.delta`.
    pub fn run_with(
        &self,
        params: &[f64],
        initial: &Statevector,
        ovr: Option<Override>,
    ) -> Result<Statevector> {
        self.check_run(params, initial)?;
        let mut state = initial.clone();
        for (gi, g) in self.gates.iter().enumerate() {
            match ovr {
                Some(o) if o.gate == gi => {
                    let mut shifted = g.bind(params)?;
                    if let Some(a) = shifted.angles_mut().into_iter().nth(o.slot) {
                        if let Angle::Bound(v) = a {
                            *v += o.delta;
                        }
                    }
                    shifted.apply(&mut state)?;
                }
                _ => g.apply_with(&mut state, params)?,
            }
        }
        Ok(state)
    }

    /// ∂/∂(angle slot) of U(θ)|initial⟩: the gate at `occ.gate` is replaced
    /// by its matrix derivative.
    pub fn run_derivative(
        &self,
        params: &[f64],
        initial: &Statevector,
        occ: Occurrence,
    ) -> Result<Statevector> {
        self.check_run(params, initial)?;
        let mut state = initial.clone();
        for (gi, g) in self.gates.iter().enumerate() {
            if gi == occ.gate {
                let d = g.derivative1(params, occ.slot)?;
                state.apply_mat2(g.qubits()[0], &d);
            } else {
                g.apply_with(&mut state, params)?;
            }
        }
        Ok(state)
    }

    /// Line-oriented text form:
    ///
    /// ```text
    /// qubits 4
    /// params 8
    /// ry 0 p0
    /// cx 0 1
    /// rz 2 0.5
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qubits {}", self.num_qubits);
        let _ = writeln!(s, "params {}", self.num_params);
        for g in &self.gates {
            let _ = writeln!(s, "{g}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut num_qubits = None;
        let mut num_params = None;
        let mut gates = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |m: &str| Error::Parse {
                line: ln + 1,
                message: m.to_string(),
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let uint = |t: &str| t.parse::<usize>().map_err(|_| perr(&format!("bad integer `{t}`")));
            let float = |t: &str| t.parse::<f64>().map_err(|_| perr(&format!("bad number `{t}`")));
            let angle = |t: &str| -> Result<Angle> {
                match t.strip_prefix('p') {
                    Some(i) => Ok(Angle::Param(uint(i)?)),
                    None => Ok(Angle::Bound(float(t)?)),
                }
            };
            let need = |n: usize| {
                if toks.len() != n {
                    Err(perr(&format!("`{}` expects {} fields, got {}", toks[0], n - 1, toks.len() - 1)))
                } else {
                    Ok(())
                }
            };
            let gate = match toks[0] {
                "qubits" => {
                    need(2)?;
                    num_qubits = Some(uint(toks[1])?);
                    continue;
                }
                "params" => {
                    need(2)?;
                    num_params = Some(uint(toks[1])?);
                    continue;
                }
                "rx" | "ry" | "rz" => {
                    need(3)?;
                    let (q, a) = (uint(toks[1])?, angle(toks[2])?);
                    match toks[0] {
                        "rx" => Gate::Rx(q, a),
                        "ry" => Gate::Ry(q, a),
                        _ => Gate::Rz(q, a),
                    }
                }
                "u3" => {
                    need(5)?;
                    Gate::U3(uint(toks[1])?, [angle(toks[2])?, angle(toks[3])?, angle(toks[4])?])
                }
                "h" => {
                    need(2)?;
                    Gate::H(uint(toks[1])?)
                }
                "x" => {
                    need(2)?;
                    Gate::X(uint(toks[1])?)
                }
                "cx" | "cz" | "swap" => {
                    need(3)?;
                    let (a, b) = (uint(toks[1])?, uint(toks[2])?);
                    match toks[0] {
                        "cx" => Gate::Cx(a, b),
                        "cz" => Gate::Cz(a, b),
                        _ => Gate::Swap(a, b),
                    }
                }
                "unitary1" => {
                    need(2 + 8)?;
                    let v: Vec<f64> = toks[2..].iter().map(|t| float(t)).collect::<Result<_>>()?;
                    let mut m: Mat2 = [[C64::new(0.0, 0.0); 2]; 2];
                    for (k, e) in m.iter_mut().flatten().enumerate() {
                        *e = C64::new(v[2 * k], v[2 * k + 1]);
                    }
                    Gate::Unitary1(uint(toks[1])?, m)
                }
                "unitary2" => {
                    need(3 + 32)?;
                    let v: Vec<f64> = toks[3..].iter().map(|t| float(t)).collect::<Result<_>>()?;
                    let mut m: Mat4 = [[C64::new(0.0, 0.0); 4]; 4];
                    for (k, e) in m.iter_mut().flatten().enumerate() {
                        *e = C64::new(v[2 * k], v[2 * k + 1]);
                    }
                    Gate::Unitary2([uint(toks[1])?, uint(toks[2])?], Box::new(m))
                }
                other => return Err(perr(&format!("unknown gate `{other}`"))),
            };
            gates.push(gate);
        }
        let n = num_qubits.ok_or(Error::Parse {
            line: 0,
            message: "missing `qubits` header".into(),
        })?;
        let c = Circuit::new(n, gates)?;
        if let Some(p) = num_params {
            if p != c.num_params {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("header declares {p} params, gates use {}", c.num_params),
                });
            }
        }
        Ok(c)
    }
}
