//! Circuit builders.
//!
//! Parameters are numbered layer-major, then qubit-major: within a layer the
//! rotation column on qubit 0..N gets consecutive indices (for EfficientSU2
//! the RY column precedes the RZ column).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sv::{Angle, Circuit, Gate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entanglement {
    /// CX(i, i+1) for consecutive qubits.
    Linear,
    /// CX(i, j) for every i < j.
    Full,
}

/// Gate content of one layer of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BlockFamily {
    /// RY column followed by CX entanglers (`Linear` is the ladder).
    RyCx(Entanglement),
    /// RY and RZ columns followed by CX entanglers, closed by a final
    /// rotation column.
    EfficientSu2(Entanglement),
    /// Initial U3 column, then CZ brick entangler + U3 column per layer.
    HeaU3,
}

impl BlockFamily {
    pub const LADDER: BlockFamily = BlockFamily::RyCx(Entanglement::Linear);
    pub const SU2_FULL: BlockFamily = BlockFamily::EfficientSu2(Entanglement::Full);
}

impl fmt::Display for BlockFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockFamily::RyCx(Entanglement::Linear) => "ladder_ry_cx",
            BlockFamily::RyCx(Entanglement::Full) => "ry_full_cx",
            BlockFamily::EfficientSu2(Entanglement::Full) => "efficient_su2_full",
            BlockFamily::EfficientSu2(Entanglement::Linear) => "efficient_su2_linear",
            BlockFamily::HeaU3 => "hea_u3",
        })
    }
}

impl FromStr for BlockFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ladder_ry_cx" | "linear" => BlockFamily::RyCx(Entanglement::Linear),
            "ry_full_cx" | "full" => BlockFamily::RyCx(Entanglement::Full),
            "efficient_su2_full" => BlockFamily::EfficientSu2(Entanglement::Full),
            "efficient_su2_linear" => BlockFamily::EfficientSu2(Entanglement::Linear),
            "hea_u3" => BlockFamily::HeaU3,
            other => return Err(Error::invalid(format!("unknown block family `{other}`"))),
        })
    }
}

impl TryFrom<String> for BlockFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BlockFamily> for String {
    fn from(f: BlockFamily) -> String {
        f.to_string()
    }
}

/// Shape of a classically split (T = 0) or extended split (T > 0) ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub num_qubits: usize,
    /// Qubits per split group (`m`).
    pub block_size: usize,
    /// Split layers (`L`).
    pub cs_layers: usize,
    /// Full-width layers appended after the split layers (`T`).
    pub standard_layers: usize,
    pub block_family: BlockFamily,
}

impl SplitSpec {
    pub fn cs(num_qubits: usize, block_size: usize, layers: usize, family: BlockFamily) -> Self {
        Self {
            num_qubits,
            block_size,
            cs_layers: layers,
            standard_layers: 0,
            block_family: family,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.block_size == 0 {
            return Err(Error::invalid("qubit and block counts must be positive"));
        }
        if self.num_qubits % self.block_size != 0 {
            return Err(Error::IndivisibleBlocks {
                block: self.block_size,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.num_qubits / self.block_size
    }

    /// Qubit groups {(i)m .. (i+1)m − 1}.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        groups(self.num_qubits, self.block_size)
    }

    /// CS circuit for T = 0, ECS circuit with a `tail` family otherwise.
    pub fn build(&self, tail: BlockFamily) -> Result<Circuit> {
        if self.standard_layers == 0 {
            build_cs(self)
        } else {
            build_ecs(self, tail)
        }
    }
}

pub(crate) fn groups(n: usize, m: usize) -> Vec<Vec<usize>> {
    (0..n / m).map(|b| (b * m..(b + 1) * m).collect()).collect()
}

#[derive(Default)]
struct Builder {
    gates: Vec<Gate>,
    next_param: usize,
    layer: usize,
}

impl Builder {
    fn param(&mut self) -> Angle {
        self.next_param += 1;
        Angle::Param(self.next_param - 1)
    }

    fn ry_column(&mut self, n: usize) {
        for q in 0..n {
            let a = self.param();
            self.gates.push(Gate::Ry(q, a));
        }
    }

    fn rz_column(&mut self, n: usize) {
        for q in 0..n {
            let a = self.param();
            self.gates.push(Gate::Rz(q, a));
        }
    }

    fn u3_column(&mut self, n: usize) {
        for q in 0..n {
            let a = [self.param(), self.param(), self.param()];
            self.gates.push(Gate::U3(q, a));
        }
    }

    fn cx_entangler(&mut self, group: &[usize], ent: Entanglement) {
        match ent {
            Entanglement::Linear => {
                for w in group.windows(2) {
                    self.gates.push(Gate::Cx(w[0], w[1]));
                }
            }
            Entanglement::Full => {
                for (i, &a) in group.iter().enumerate() {
                    for &b in &group[i + 1..] {
                        self.gates.push(Gate::Cx(a, b));
                    }
                }
            }
        }
    }

    fn brick(&mut self, group: &[usize], offset: usize) {
        let mut i = offset;
        while i + 1 < group.len() {
            self.gates.push(Gate::Cz(group[i], group[i + 1]));
            i += 2;
        }
    }

    /// One layer of `family` over disjoint `groups` covering `n` qubits.
    fn layer(&mut self, n: usize, groups: &[Vec<usize>], family: BlockFamily) {
        match family {
            BlockFamily::RyCx(ent) => {
                self.ry_column(n);
                for g in groups {
                    self.cx_entangler(g, ent);
                }
            }
            BlockFamily::EfficientSu2(ent) => {
                self.ry_column(n);
                self.rz_column(n);
                for g in groups {
                    self.cx_entangler(g, ent);
                }
            }
            BlockFamily::HeaU3 => {
                for g in groups {
                    self.brick(g, self.layer % 2);
                }
                self.u3_column(n);
            }
        }
        self.layer += 1;
    }

    fn finish(self, n: usize) -> Result<Circuit> {
        Circuit::new(n, self.gates)
    }
}

/// Layered circuit: `sections` run in order, each a (groups, family, layers)
/// triple.
fn layered(n: usize, sections: &[(Vec<Vec<usize>>, BlockFamily, usize)]) -> Result<Circuit> {
    let mut b = Builder::default();
    let first = sections.iter().find(|s| s.2 > 0).or(sections.first()).map(|s| s.1);
    let last = sections.iter().rev().find(|s| s.2 > 0).or(sections.last()).map(|s| s.1);
    if first == Some(BlockFamily::HeaU3) {
        b.u3_column(n);
    }
    for (groups, family, layers) in sections {
        for _ in 0..*layers {
            b.layer(n, groups, *family);
        }
    }
    if let Some(BlockFamily::EfficientSu2(_)) = last {
        b.ry_column(n);
        b.rz_column(n);
    }
    b.finish(n)
}

/// RY column then CX ladder, repeated `layers` times.
pub fn build_ladder_ry_cx(n: usize, layers: usize) -> Result<Circuit> {
    if n == 0 || layers == 0 {
        return Err(Error::invalid("ladder needs n >= 1 and layers >= 1"));
    }
    layered(n, &[(vec![(0..n).collect()], BlockFamily::LADDER, layers)])
}

/// EfficientSU2: `depth` repetitions of (RY, RZ, entangler) and a closing
/// rotation column; 2n(depth + 1) parameters.
pub fn build_efficient_su2(n: usize, depth: usize, ent: Entanglement) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::invalid("EfficientSU2 needs at least two qubits"));
    }
    layered(n, &[(vec![(0..n).collect()], BlockFamily::EfficientSu2(ent), depth)])
}

/// Classically split circuit: `k = N/m` blocks, no gate crosses a block.
pub fn build_cs(spec: &SplitSpec) -> Result<Circuit> {
    spec.validate()?;
    if spec.standard_layers != 0 {
        return Err(Error::invalid("build_cs requires standard_layers = 0"));
    }
    layered(spec.num_qubits, &[(spec.groups(), spec.block_family, spec.cs_layers)])
}

/// Extended split circuit: `L` split layers, then `T` full-width layers of
/// `tail`.
pub fn build_ecs(spec: &SplitSpec, tail: BlockFamily) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.num_qubits;
    layered(
        n,
        &[
            (spec.groups(), spec.block_family, spec.cs_layers),
            (vec![(0..n).collect()], tail, spec.standard_layers),
        ],
    )
}

/// Hardware-efficient ansatz with its two parameter groups.
#[derive(Debug, Clone)]
pub struct HeaCircuit {
    pub circuit: Circuit,
    /// First U3 column (sampled per data point).
    pub group_a: Range<usize>,
    /// Remaining U3 columns (trained or loaded).
    pub group_b: Range<usize>,
}

impl HeaCircuit {
    /// Draws group-A angles uniformly from [−1, 1].
    pub fn sample_group_a<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.group_a.clone().map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    /// Concatenates group A and group B into a full parameter vector.
    pub fn params(&self, group_a: &[f64], group_b: &[f64]) -> Result<Vec<f64>> {
        if group_a.len() != self.group_a.len() {
            return Err(Error::LengthMismatch {
                expected: self.group_a.len(),
                actual: group_a.len(),
            });
        }
        if group_b.len() != self.group_b.len() {
            return Err(Error::LengthMismatch {
                expected: self.group_b.len(),
                actual: group_b.len(),
            });
        }
        Ok(group_a.iter().chain(group_b).copied().collect())
    }
}

/// U3 column followed by `depth` (CZ brick, U3 column) layers. Brick offsets
/// alternate between 0 and 1.
pub fn build_hea_u3(n: usize, depth: usize) -> Result<HeaCircuit> {
    if n < 2 || depth == 0 {
        return Err(Error::invalid("HEA needs n >= 2 and depth >= 1"));
    }
    let circuit = layered(n, &[(vec![(0..n).collect()], BlockFamily::HeaU3, depth)])?;
    let a = 3 * n;
    Ok(HeaCircuit {
        group_b: a..circuit.num_params(),
        group_a: 0..a,
        circuit,
    })
}

/// One bound RY(x_i) on qubit i.
pub fn encode_features(features: &[f64]) -> Result<Circuit> {
    if features.is_empty() {
        return Err(Error::invalid("no features to encode"));
    }
    let gates = features.iter().enumerate().map(|(q, &x)| Gate::Ry(q, Angle::Bound(x))).collect();
    Circuit::new(features.len(), gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sv::{subsystem_purity, Statevector};
    use std::collections::BTreeSet;

    fn cx_set(c: &Circuit) -> BTreeSet<(usize, usize)> {
        c.interaction_edges().into_iter().collect()
    }

    #[test]
    fn ladder_two_qubits() {
        let c = build_ladder_ry_cx(2, 1).unwrap();
        assert_eq!(
            c.gates(),
            &[Gate::Ry(0, Angle::Param(0)), Gate::Ry(1, Angle::Param(1)), Gate::Cx(0, 1)]
        );
        assert_eq!(c.num_params(), 2);
    }

    #[test]
    fn ladder_counts() {
        let c = build_ladder_ry_cx(4, 4).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count()), (16, 12));
        let c = build_ladder_ry_cx(1, 3).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count(), c.gates().len()), (3, 0, 3));
        assert!(build_ladder_ry_cx(3, 0).is_err());
    }

    #[test]
    fn cs_structure() {
        let c = build_cs(&SplitSpec::cs(4, 2, 1, BlockFamily::LADDER)).unwrap();
        assert_eq!(cx_set(&c), [(0, 1), (2, 3)].into_iter().collect());
        let c = build_cs(&SplitSpec::cs(16, 4, 2, BlockFamily::LADDER)).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count()), (32, 24));
        assert_eq!(c.components().len(), 4);
        assert!(matches!(
            build_cs(&SplitSpec::cs(6, 4, 1, BlockFamily::LADDER)),
            Err(Error::IndivisibleBlocks { .. })
        ));
    }

    #[test]
    fn cs_with_full_block_recovers_ladder() {
        for n in [1, 3, 6] {
            for l in [1, 2, 5] {
                assert_eq!(
                    build_cs(&SplitSpec::cs(n, n, l, BlockFamily::LADDER)).unwrap(),
                    build_ladder_ry_cx(n, l).unwrap()
                );
            }
        }
    }

    #[test]
    fn efficient_su2_counts() {
        let c = build_efficient_su2(2, 1, Entanglement::Full).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count()), (8, 1));
        let c = build_efficient_su2(4, 1, Entanglement::Full).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count()), (16, 6));
        let c = build_efficient_su2(4, 2, Entanglement::Linear).unwrap();
        assert_eq!((c.num_params(), c.two_qubit_count()), (24, 6));
        assert!(build_efficient_su2(1, 2, Entanglement::Full).is_err());
    }

    #[test]
    fn ecs_prefix_is_split() {
        let spec = SplitSpec {
            num_qubits: 12,
            block_size: 4,
            cs_layers: 5,
            standard_layers: 1,
            block_family: BlockFamily::SU2_FULL,
        };
        let c = build_ecs(&spec, BlockFamily::SU2_FULL).unwrap();
        let edges = c.interaction_edges();
        let prefix = 5 * 3 * 6; // 5 layers, 3 blocks, C(4,2) CX
        assert_eq!(edges.len(), prefix + 66);
        for &(a, b) in &edges[..prefix] {
            assert_eq!(a / 4, b / 4);
        }
        assert!(edges[prefix..].iter().any(|&(a, b)| a / 4 != b / 4));
    }

    #[test]
    fn ecs_degenerate_cases() {
        for d in [1, 3] {
            let all_tail = SplitSpec {
                num_qubits: 8,
                block_size: 4,
                cs_layers: 0,
                standard_layers: d,
                block_family: BlockFamily::SU2_FULL,
            };
            assert_eq!(
                build_ecs(&all_tail, BlockFamily::SU2_FULL).unwrap(),
                build_efficient_su2(8, d, Entanglement::Full).unwrap()
            );
            let all_split = SplitSpec {
                cs_layers: d,
                standard_layers: 0,
                ..all_tail
            };
            assert_eq!(
                build_ecs(&all_split, BlockFamily::SU2_FULL).unwrap(),
                build_cs(&all_split).unwrap()
            );
        }
    }

    #[test]
    fn hea_groups() {
        let h = build_hea_u3(4, 5).unwrap();
        assert_eq!(h.group_a.len(), 12);
        assert_eq!(h.group_b.len(), 60);
        assert!(build_hea_u3(4, 0).is_err());
        let mut r1 = crate::seed::rng(5, &[]);
        let mut r2 = crate::seed::rng(5, &[]);
        let a1 = h.sample_group_a(&mut r1);
        assert_eq!(a1, h.sample_group_a(&mut r2));
        assert!(a1.iter().all(|x| (-1.0..=1.0).contains(x)));
        // bricks alternate offsets: first layer pairs (0,1),(2,3), second (1,2)
        let cz: Vec<_> = h.circuit.interaction_edges();
        assert_eq!(&cz[..3], &[(0, 1), (2, 3), (1, 2)]);
    }

    #[test]
    fn encoding() {
        let c = encode_features(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.num_params(), 0);
        let s = c.run(&[], &Statevector::zero(3)).unwrap();
        assert!(s.max_abs_diff(&Statevector::zero(3)) < 1e-15);
        let c = encode_features(&[std::f64::consts::PI, 0.0]).unwrap();
        let s = c.run(&[], &Statevector::zero(2)).unwrap();
        assert!(s.infidelity(&Statevector::basis(2, 0b01)) < 1e-15);
    }

    #[test]
    fn parameter_counts_exhaustive() {
        for n in [2usize, 4, 8, 12, 16] {
            for m in (1..=n).filter(|m| n % m == 0) {
                for l in 0..4 {
                    for t in 0..3 {
                        let spec = SplitSpec {
                            num_qubits: n,
                            block_size: m,
                            cs_layers: l,
                            standard_layers: t,
                            block_family: BlockFamily::LADDER,
                        };
                        let c = build_ecs(&spec, BlockFamily::LADDER).unwrap();
                        assert_eq!(c.num_params(), n * (l + t));
                        assert_eq!(c.two_qubit_count(), (n / m) * (m - 1) * l + (n - 1) * t);
                        let spec = SplitSpec { block_family: BlockFamily::SU2_FULL, ..spec };
                        let c = build_ecs(&spec, BlockFamily::SU2_FULL).unwrap();
                        assert_eq!(c.num_params(), 2 * n * (l + t + 1));
                        assert_eq!(
                            c.two_qubit_count(),
                            (n / m) * m * (m - 1) / 2 * l + n * (n - 1) / 2 * t
                        );
                        if t == 0 && l > 0 {
                            let comps = c.components();
                            assert_eq!(comps.len(), n / m);
                            assert!(comps.iter().all(|g| g.len() == m));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn split_prefix_light_cone() {
        let spec = SplitSpec::cs(8, 4, 3, BlockFamily::SU2_FULL);
        let c = build_cs(&spec).unwrap();
        let mut rng = crate::seed::rng(1, &[]);
        let params: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let base = c.run(&params, &Statevector::zero(8)).unwrap();
        // parameter 1 sits on qubit 1 (block 0)
        let mut p2 = params.clone();
        p2[1] += 0.9;
        let moved = c.run(&p2, &Statevector::zero(8)).unwrap();
        for q in 4..8 {
            let a = subsystem_purity(&base, &[q]).unwrap();
            let b = subsystem_purity(&moved, &[q]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        // single-qubit marginals of block 1 are unchanged
        for q in 4..8 {
            for p in [crate::sv::Pauli::X, crate::sv::Pauli::Y, crate::sv::Pauli::Z] {
                let o = crate::sv::Observable::new(8, vec![(1.0, crate::sv::PauliString::single(q, p))]).unwrap();
                assert!((o.expectation(&base).unwrap() - o.expectation(&moved).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            BlockFamily::LADDER,
            BlockFamily::RyCx(Entanglement::Full),
            BlockFamily::SU2_FULL,
            BlockFamily::EfficientSu2(Entanglement::Linear),
            BlockFamily::HeaU3,
        ] {
            assert_eq!(f.to_string().parse::<BlockFamily>().unwrap(), f);
        }
    }
}
