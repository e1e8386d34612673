//! SWAP routing onto square-lattice devices.
//!
//! The router is a greedy front-layer heuristic: gates whose predecessors
//! are done are executed when their qubits are adjacent; otherwise the SWAP
//! on an edge next to a blocked gate that most reduces the summed distance
//! of the front layer (plus a weighted lookahead set) is inserted. Several
//! initial layouts are tried, each refined by a forward/backward pass, and
//! the lowest CX count wins.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_cs, BlockFamily, Entanglement, SplitSpec};
use crate::error::{Error, Result};
use crate::seed;
use crate::sv::{Circuit, Gate, Statevector, C64};

/// CX gates per inserted SWAP.
pub const SWAP_CX: usize = 3;

/// `rows × cols` lattice; cell (r, c) is physical qubit r·cols + c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTopology {
    pub rows: usize,
    pub cols: usize,
}

impl GridTopology {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        Ok(Self { rows, cols })
    }

    /// ⌈√n⌉ × ⌈√n⌉.
    pub fn square_for(n: usize) -> Self {
        let mut s = (n as f64).sqrt().ceil() as usize;
        while s * s < n {
            s += 1;
        }
        Self {
            rows: s.max(1),
            cols: s.max(1),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn coords(&self, p: usize) -> (usize, usize) {
        (p / self.cols, p % self.cols)
    }

    pub fn cell(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb)
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.distance(a, b) == 1
    }

    pub fn neighbors(&self, p: usize) -> Vec<usize> {
        let (r, c) = self.coords(p);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.cell(r - 1, c));
        }
        if c > 0 {
            out.push(self.cell(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.cell(r, c + 1));
        }
        if r + 1 < self.rows {
            out.push(self.cell(r + 1, c));
        }
        out
    }

    /// Undirected 4-neighbour edges (a < b).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.num_cells() {
            for q in self.neighbors(p) {
                if p < q {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// Boustrophedon order over the cells of a sub-rectangle.
    fn snake(&self, r0: usize, c0: usize, h: usize, w: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(h * w);
        for r in 0..h {
            for k in 0..w {
                let c = if r % 2 == 0 { k } else { w - 1 - k };
                out.push(self.cell(r0 + r, c0 + c));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOptions {
    /// Random initial layouts tried besides the structured one.
    pub restarts: usize,
    /// Two-qubit DAG levels in the lookahead set.
    pub lookahead: usize,
    pub lookahead_weight: f64,
    pub decay: f64,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self {
            restarts: 2,
            lookahead: 4,
            lookahead_weight: 0.5,
            decay: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    pub num_physical: usize,
    /// Physical gates, SWAPs included, with the original parameter slots.
    pub gates: Vec<Gate>,
    /// Logical qubit → physical cell before the first gate.
    pub initial_layout: Vec<usize>,
    /// Logical qubit → physical cell after the last gate.
    pub final_layout: Vec<usize>,
    pub swaps: usize,
    /// Two-qubit gates of the input plus `SWAP_CX` per SWAP.
    pub cx_count: usize,
    /// Index of the winning layout attempt (0 is the structured layout).
    pub attempt: usize,
}

impl RoutedCircuit {
    pub fn to_circuit(&self) -> Result<Circuit> {
        Circuit::new(self.num_physical, self.gates.clone())
    }
}

/// Dependency structure of a gate list.
struct Dag {
    succ: Vec<Vec<usize>>,
    npred: Vec<usize>,
    qubits: Vec<Vec<usize>>,
}

impl Dag {
    fn new(gates: &[Gate], n: usize) -> Self {
        let mut last: Vec<Option<usize>> = vec![None; n];
        let mut succ = vec![Vec::new(); gates.len()];
        let mut npred = vec![0; gates.len()];
        let mut qubits = Vec::with_capacity(gates.len());
        for (g, gate) in gates.iter().enumerate() {
            let qs = gate.qubits();
            let mut preds = BTreeSet::new();
            for &q in &qs {
                if let Some(p) = last[q] {
                    preds.insert(p);
                }
                last[q] = Some(g);
            }
            for p in preds {
                succ[p].push(g);
                npred[g] += 1;
            }
            qubits.push(qs);
        }
        Self { succ, npred, qubits }
    }
}

struct Pass {
    gates: Vec<Gate>,
    final_layout: Vec<usize>,
    swaps: usize,
}

/// One greedy routing pass from `layout` (logical → physical).
fn sabre_pass(gates: &[Gate], n: usize, topo: &GridTopology, layout: &[usize], rng: &mut ChaCha8Rng, opts: &RouteOptions) -> Pass {
    let dag = Dag::new(gates, n);
    let cells = topo.num_cells();
    let mut l2p = layout.to_vec();
    let mut p2l: Vec<Option<usize>> = vec![None; cells];
    for (l, &p) in l2p.iter().enumerate() {
        p2l[p] = Some(l);
    }
    let mut npred = dag.npred.clone();
    let mut front: Vec<usize> = (0..gates.len()).filter(|&g| npred[g] == 0).collect();
    let mut out = Vec::with_capacity(gates.len());
    let mut swaps = 0;
    let mut decay = vec![1.0f64; cells];
    let mut since_exec = 0usize;
    let mut swaps_in_round = 0usize;
    let stall_limit = 4 * (topo.rows + topo.cols) + 8;
    while !front.is_empty() {
        // execute everything executable
        let mut progressed = true;
        let mut executed = false;
        while progressed {
            progressed = false;
            let mut next = Vec::with_capacity(front.len());
            for &g in &front {
                let qs = &dag.qubits[g];
                let ok = qs.len() == 1 || topo.is_edge(l2p[qs[0]], l2p[qs[1]]);
                if ok {
                    out.push(gates[g].remap(|q| l2p[q]));
                    for &s in &dag.succ[g] {
                        npred[s] -= 1;
                        if npred[s] == 0 {
                            next.push(s);
                        }
                    }
                    progressed = true;
                    executed = true;
                } else {
                    next.push(g);
                }
            }
            next.sort_unstable();
            next.dedup();
            front = next;
        }
        if executed {
            since_exec = 0;
            decay.iter_mut().for_each(|d| *d = 1.0);
            swaps_in_round = 0;
        }
        if front.is_empty() {
            break;
        }
        let blocked: Vec<(usize, usize)> = front
            .iter()
            .map(|&g| (dag.qubits[g][0], dag.qubits[g][1]))
            .collect();
        if since_exec >= stall_limit {
            // walk the first blocked pair together along a shortest path
            let (a, b) = blocked[0];
            while !topo.is_edge(l2p[a], l2p[b]) {
                let pa = l2p[a];
                let step = topo
                    .neighbors(pa)
                    .into_iter()
                    .min_by_key(|&nb| (topo.distance(nb, l2p[b]), nb))
                    .expect("grid cell has neighbours");
                apply_swap(&mut out, &mut l2p, &mut p2l, pa, step);
                swaps += 1;
            }
            since_exec = 0;
            continue;
        }
        let ext = lookahead_set(&dag, &front, &npred, opts.lookahead);
        let mut candidates = BTreeSet::new();
        for &(a, b) in &blocked {
            for p in [l2p[a], l2p[b]] {
                for nb in topo.neighbors(p) {
                    candidates.insert((p.min(nb), p.max(nb)));
                }
            }
        }
        let mut best: Vec<(usize, usize)> = Vec::new();
        let mut best_score = f64::INFINITY;
        for &(x, y) in &candidates {
            let moved = |p: usize| {
                if p == x {
                    y
                } else if p == y {
                    x
                } else {
                    p
                }
            };
            let dist = |pairs: &mut dyn Iterator<Item = (usize, usize)>| -> (f64, usize) {
                let mut s = 0.0;
                let mut k = 0;
                for (a, b) in pairs {
                    s += topo.distance(moved(l2p[a]), moved(l2p[b])) as f64;
                    k += 1;
                }
                (s, k)
            };
            let (fs, fk) = dist(&mut blocked.iter().copied());
            let (es, ek) = dist(&mut ext.iter().copied());
            let mut score = fs / fk as f64;
            if ek > 0 {
                score += opts.lookahead_weight * es / ek as f64;
            }
            score *= decay[x].max(decay[y]);
            if score < best_score - 1e-12 {
                best_score = score;
                best.clear();
                best.push((x, y));
            } else if (score - best_score).abs() <= 1e-12 {
                best.push((x, y));
            }
        }
        let (x, y) = best[rng.random_range(0..best.len())];
        apply_swap(&mut out, &mut l2p, &mut p2l, x, y);
        swaps += 1;
        since_exec += 1;
        decay[x] += opts.decay;
        decay[y] += opts.decay;
        swaps_in_round += 1;
        if swaps_in_round % 5 == 0 {
            decay.iter_mut().for_each(|d| *d = 1.0);
        }
    }
    Pass {
        gates: out,
        final_layout: l2p,
        swaps,
    }
}

fn apply_swap(out: &mut Vec<Gate>, l2p: &mut [usize], p2l: &mut [Option<usize>], x: usize, y: usize) {
    out.push(Gate::Swap(x, y));
    let (lx, ly) = (p2l[x], p2l[y]);
    p2l[x] = ly;
    p2l[y] = lx;
    if let Some(l) = lx {
        l2p[l] = y;
    }
    if let Some(l) = ly {
        l2p[l] = x;
    }
}

/// Logical pairs of two-qubit gates within `depth` two-qubit levels after
/// the front layer.
fn lookahead_set(dag: &Dag, front: &[usize], npred: &[usize], depth: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut remaining: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut queue: VecDeque<(usize, usize)> = front.iter().map(|&g| (g, 0)).collect();
    while let Some((g, level)) = queue.pop_front() {
        for &s in &dag.succ[g] {
            let r = remaining.entry(s).or_insert(npred[s]);
            *r -= 1;
            if *r > 0 || !seen.insert(s) {
                continue;
            }
            let two = dag.qubits[s].len() == 2;
            let lvl = level + usize::from(two);
            if lvl > depth {
                continue;
            }
            if two {
                out.push((dag.qubits[s][0], dag.qubits[s][1]));
            }
            queue.push_back((s, lvl));
        }
        if out.len() >= 64 {
            break;
        }
    }
    out
}

/// Packs the circuit's connected components into equal rectangles when they
/// all have the same size and tile the grid, with a snake order inside each
/// rectangle; otherwise lays qubits along a snake over the whole grid.
pub fn structured_layout(circuit: &Circuit, topo: &GridTopology) -> Vec<usize> {
    let n = circuit.num_qubits();
    let comps = circuit.components();
    let m = comps[0].len();
    if comps.iter().all(|c| c.len() == m) {
        let mut shapes: Vec<(usize, usize)> = (1..=m).filter(|h| m % h == 0).map(|h| (h, m / h)).collect();
        // squarest first
        shapes.sort_by_key(|&(h, w)| (h.abs_diff(w), h));
        for (h, w) in shapes {
            if h > topo.rows || w > topo.cols {
                continue;
            }
            let per_row = topo.cols / w;
            let tile_rows = topo.rows / h;
            if per_row * tile_rows < comps.len() {
                continue;
            }
            let mut layout = vec![0; n];
            for (k, comp) in comps.iter().enumerate() {
                let (tr, tc) = (k / per_row, k % per_row);
                // alternate tile direction per tile row to keep neighbours close
                let tc = if tr % 2 == 0 { tc } else { per_row - 1 - tc };
                let cells = topo.snake(tr * h, tc * w, h, w);
                for (&q, &p) in comp.iter().zip(&cells) {
                    layout[q] = p;
                }
            }
            return layout;
        }
    }
    let snake = topo.snake(0, 0, topo.rows, topo.cols);
    let order: Vec<usize> = comps.into_iter().flatten().collect();
    let mut layout = vec![0; n];
    for (i, &q) in order.iter().enumerate() {
        layout[q] = snake[i];
    }
    layout
}

fn route_from(circuit: &Circuit, topo: &GridTopology, layout: Vec<usize>, rng: &mut ChaCha8Rng, opts: &RouteOptions, refine: bool) -> Pass {
    let gates = circuit.gates();
    let n = circuit.num_qubits();
    if !refine {
        return sabre_pass(gates, n, topo, &layout, rng, opts);
    }
    let fwd = sabre_pass(gates, n, topo, &layout, rng, opts);
    let rev: Vec<Gate> = gates.iter().rev().cloned().collect();
    let back = sabre_pass(&rev, n, topo, &fwd.final_layout, rng, opts);
    sabre_pass(gates, n, topo, &back.final_layout, rng, opts)
}

/// Routes `circuit` with the structured layout and `restarts` random
/// layouts; the lowest CX count wins, ties going to the earlier attempt.
pub fn route(circuit: &Circuit, topo: &GridTopology, seed: u64, restarts: usize) -> Result<RoutedCircuit> {
    route_with(
        circuit,
        topo,
        seed,
        &RouteOptions {
            restarts,
            ..RouteOptions::default()
        },
    )
}

pub fn route_with(circuit: &Circuit, topo: &GridTopology, seed: u64, opts: &RouteOptions) -> Result<RoutedCircuit> {
    let n = circuit.num_qubits();
    let cells = topo.num_cells();
    if n > cells {
        return Err(Error::invalid(format!("circuit needs {n} qubits, grid has {cells} cells")));
    }
    let native = circuit.two_qubit_count();
    let attempts: Vec<(usize, Pass, Vec<usize>)> = (0..=opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed, &[seed::tag("route"), k as u64]);
            let layout = if k == 0 {
                structured_layout(circuit, topo)
            } else {
                let mut cells_v: Vec<usize> = (0..cells).collect();
                cells_v.shuffle(&mut rng);
                cells_v.truncate(n);
                cells_v
            };
            let refined = k != 0;
            let pass = route_from(circuit, topo, layout.clone(), &mut rng, opts, refined);
            let initial = if refined { initial_of(&pass, circuit, topo) } else { layout };
            (k, pass, initial)
        })
        .collect();
    let (k, pass, initial) = attempts
        .into_iter()
        .min_by_key(|(k, p, _)| (p.swaps, *k))
        .expect("at least one attempt");
    Ok(RoutedCircuit {
        num_physical: cells,
        cx_count: native + SWAP_CX * pass.swaps,
        swaps: pass.swaps,
        initial_layout: initial,
        final_layout: pass.final_layout,
        gates: pass.gates,
        attempt: k,
    })
}

/// Recovers the initial layout of a pass from its final layout by undoing
/// its SWAPs.
fn initial_of(pass: &Pass, circuit: &Circuit, topo: &GridTopology) -> Vec<usize> {
    let mut p2l: Vec<Option<usize>> = vec![None; topo.num_cells()];
    for (l, &p) in pass.final_layout.iter().enumerate() {
        p2l[p] = Some(l);
    }
    for g in pass.gates.iter().rev() {
        if let Gate::Swap(a, b) = *g {
            p2l.swap(a, b);
        }
    }
    let mut layout = vec![0; circuit.num_qubits()];
    for (p, l) in p2l.iter().enumerate() {
        if let Some(l) = l {
            layout[*l] = p;
        }
    }
    layout
}

/// Largest physical register [`embed`] will allocate.
pub const EMBED_MAX: usize = 20;

/// Places a logical state on the physical register per `layout`, other
/// cells in |0⟩.
pub fn embed(state: &Statevector, layout: &[usize], num_physical: usize) -> Result<Statevector> {
    if num_physical > EMBED_MAX {
        return Err(Error::TooManyQubits {
            what: "embedding",
            max: EMBED_MAX,
            actual: num_physical,
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << num_physical];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let mut j = 0;
        for (q, &p) in layout.iter().enumerate() {
            j |= ((i >> q) & 1) << p;
        }
        amps[j] = *a;
    }
    Statevector::from_amplitudes(amps)
}

/// Largest logical register checked by [`check_equivalence`].
pub const EQUIVALENCE_MAX: usize = 10;

/// Runs the original circuit on a random state and the routed circuit on
/// its embedding; returns the infidelity between the routed output and the
/// embedding of the original output under the final layout.
pub fn check_equivalence(original: &Circuit, routed: &RoutedCircuit, params: &[f64], seed: u64) -> Result<f64> {
    let n = original.num_qubits();
    if n > EQUIVALENCE_MAX {
        return Err(Error::TooManyQubits {
            what: "equivalence check",
            max: EQUIVALENCE_MAX,
            actual: n,
        });
    }
    let psi = Statevector::random(n, &mut seed::rng(seed, &[seed::tag("equivalence")]));
    let want = original.run(params, &psi)?;
    let phys = routed.to_circuit()?;
    let got = phys.run(params, &embed(&psi, &routed.initial_layout, routed.num_physical)?)?;
    let want = embed(&want, &routed.final_layout, routed.num_physical)?;
    Ok(got.infidelity(&want))
}

/// True when every two-qubit gate acts on a lattice edge.
pub fn edges_legal(routed: &RoutedCircuit, topo: &GridTopology) -> bool {
    routed.gates.iter().filter(|g| g.is_two_qubit()).all(|g| {
        let q = g.qubits();
        topo.is_edge(q[0], q[1])
    })
}

/// One cell of the two-qubit gate count table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub entanglement: String,
    pub m: usize,
    pub l: usize,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub native_cx: usize,
    pub swaps: usize,
    pub cx_count: usize,
    /// Infidelity of the equivalence check, when N is small enough.
    pub equivalence_infidelity: Option<f64>,
}

pub const COUNT_SCHEMA: &str = "transpile_count v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountConfig {
    #[serde(default = "default_n")]
    pub n_values: Vec<usize>,
    /// Block sizes; `"N"` is the full register.
    #[serde(default = "default_m")]
    pub m_values: Vec<crate::bp::BlockSize>,
    /// Layer counts; `0` stands for L = N.
    #[serde(default = "default_l")]
    pub l_values: Vec<usize>,
    #[serde(default = "default_ent")]
    pub entanglement: Vec<Entanglement>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> Vec<usize> {
    vec![4, 16, 36]
}
fn default_m() -> Vec<crate::bp::BlockSize> {
    vec![2.into(), 4.into(), crate::bp::BlockSize::FULL]
}
fn default_l() -> Vec<usize> {
    vec![2, 0]
}
fn default_ent() -> Vec<Entanglement> {
    vec![Entanglement::Linear, Entanglement::Full]
}
fn default_restarts() -> usize {
    2
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            n_values: default_n(),
            m_values: default_m(),
            l_values: default_l(),
            entanglement: default_ent(),
            restarts: default_restarts(),
            seed: 0,
        }
    }
}

/// Routes the split ladder / full-CX circuits of every grid cell.
pub fn count_table(config: &CountConfig) -> Result<Vec<CountRow>> {
    let mut specs = Vec::new();
    for &ent in &config.entanglement {
        for m in &config.m_values {
            for &l in &config.l_values {
                for &n in &config.n_values {
                    let m = m.resolve(n);
                    let l = if l == 0 { n } else { l };
                    specs.push((ent, m, l, n));
                }
            }
        }
    }
    specs
        .iter()
        .map(|&(ent, m, l, n)| {
            let spec = SplitSpec::cs(n, m, l, BlockFamily::RyCx(ent));
            let circuit = build_cs(&spec)?;
            let topo = GridTopology::square_for(n);
            let routed = route(&circuit, &topo, config.seed, config.restarts)?;
            let equivalence_infidelity = if n <= EQUIVALENCE_MAX {
                let mut rng = seed::rng(config.seed, &[seed::tag("count-params"), n as u64, m as u64, l as u64]);
                let params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                Some(check_equivalence(&circuit, &routed, &params, config.seed)?)
            } else {
                None
            };
            Ok(CountRow {
                entanglement: match ent {
                    Entanglement::Linear => "linear".into(),
                    Entanglement::Full => "full".into(),
                },
                m,
                l,
                n,
                rows: topo.rows,
                cols: topo.cols,
                native_cx: circuit.two_qubit_count(),
                swaps: routed.swaps,
                cx_count: routed.cx_count,
                equivalence_infidelity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_ladder_ry_cx;
    use crate::sv::Angle;

    #[test]
    fn topology() {
        let t = GridTopology::square_for(10);
        assert_eq!((t.rows, t.cols), (4, 4));
        assert_eq!(GridTopology::square_for(36).rows, 6);
        assert_eq!(GridTopology::square_for(4).rows, 2);
        let t = GridTopology::new(2, 3).unwrap();
        assert_eq!(t.edges().len(), 7);
        assert!(t.is_edge(0, 1) && t.is_edge(1, 4) && !t.is_edge(0, 4));
        assert_eq!(t.distance(0, 5), 3);
    }

    #[test]
    fn single_adjacent_cx() {
        let c = Circuit::new(2, vec![Gate::Cx(0, 1)]).unwrap();
        let r = route(&c, &GridTopology::square_for(2), 0, 2).unwrap();
        assert_eq!((r.cx_count, r.swaps), (1, 0));
    }

    #[test]
    fn split_pairs_need_no_swaps() {
        for n in [4, 8, 16, 36] {
            let c = build_cs(&SplitSpec::cs(n, 2, 2, BlockFamily::LADDER)).unwrap();
            let r = route(&c, &GridTopology::square_for(n), 1, 2).unwrap();
            assert_eq!(r.swaps, 0, "N={n}");
            assert_eq!(r.cx_count, n);
        }
    }

    #[test]
    fn distant_gate_routes_and_is_equivalent() {
        let c = Circuit::new(
            9,
            vec![
                Gate::Ry(0, Angle::Param(0)),
                Gate::Cx(0, 8),
                Gate::Ry(8, Angle::Param(1)),
                Gate::Cx(2, 6),
                Gate::Cx(1, 7),
                Gate::Cx(8, 3),
            ],
        )
        .unwrap();
        let topo = GridTopology::square_for(9);
        let r = route(&c, &topo, 4, 2).unwrap();
        assert!(edges_legal(&r, &topo));
        assert!(check_equivalence(&c, &r, &[0.4, 1.3], 2).unwrap() < 1e-10);
        assert_eq!(r.cx_count, 4 + 3 * r.swaps);
    }

    #[test]
    fn ladder_on_small_grid() {
        let c = build_ladder_ry_cx(4, 2).unwrap();
        let r = route(&c, &GridTopology::square_for(4), 0, 2).unwrap();
        assert!(r.cx_count >= 6 && r.cx_count <= 8);
    }

    #[test]
    fn deterministic() {
        let c = build_cs(&SplitSpec::cs(9, 9, 3, BlockFamily::RyCx(Entanglement::Full))).unwrap();
        let topo = GridTopology::square_for(9);
        let a = route(&c, &topo, 5, 2).unwrap();
        let b = route(&c, &topo, 5, 2).unwrap();
        assert_eq!(a, b);
        assert!(edges_legal(&a, &topo));
        let p = vec![0.3; c.num_params()];
        assert!(check_equivalence(&c, &a, &p, 1).unwrap() < 1e-10);
    }

    #[test]
    fn too_large() {
        let c = build_ladder_ry_cx(5, 1).unwrap();
        assert!(route(&c, &GridTopology::new(2, 2).unwrap(), 0, 1).is_err());
    }
}
