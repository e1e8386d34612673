use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::Rng;

use qsplit::ansatz::{build_cs, build_ecs, BlockFamily, SplitSpec};
use qsplit::grad::{finite_difference_gradient, parameter_shift_gradient, SplitCost};
use qsplit::seed;
use qsplit::sv::*;
use qsplit::tasks::build_tfih;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_product(n: usize, rng: &mut impl Rng) -> ProductState {
    ProductState::new((0..n).map(|_| *Statevector::random(1, rng).amplitudes().first_chunk::<2>().unwrap()).collect())
}

/// Dense Tr ρ_A² for the qubits in `keep`, by explicit partial trace.
fn dense_purity(psi: &Statevector, keep: &[usize]) -> f64 {
    let n = psi.num_qubits();
    let a = psi.amplitudes();
    let mut red = std::collections::HashMap::<(usize, usize), C64>::new();
    let key = |i: usize| keep.iter().enumerate().fold(0, |acc, (b, &q)| acc | ((i >> q) & 1) << b);
    let rest = |i: usize| (0..n).filter(|q| !keep.contains(q)).fold(0, |acc, q| acc | (i & (1 << q)));
    for i in 0..a.len() {
        for j in 0..a.len() {
            if rest(i) == rest(j) {
                *red.entry((key(i), key(j))).or_default() += a[i] * a[j].conj();
            }
        }
    }
    let dim = 1usize << keep.len();
    let mut p = C64::new(0.0, 0.0);
    for x in 0..dim {
        for y in 0..dim {
            p += red.get(&(x, y)).copied().unwrap_or_default() * red.get(&(y, x)).copied().unwrap_or_default();
        }
    }
    p.re
}

#[test]
fn ghz_concentrable_entanglement_matches_dense_oracle() {
    let ghz = Statevector::from_amplitudes(
        (0..8).map(|i| if i == 0 || i == 7 { c(FRAC_1_SQRT_2) } else { c(0.0) }).collect(),
    )
    .unwrap();
    let mut total = 0.0;
    for mask in 0..8usize {
        let keep: Vec<usize> = (0..3).filter(|q| mask >> q & 1 == 1).collect();
        let p = dense_purity(&ghz, &keep);
        assert!((subsystem_purity(&ghz, &keep).unwrap() - p).abs() < 1e-12);
        total += p;
    }
    let ce = concentrable_entanglement(&ghz).unwrap();
    assert!((ce - (1.0 - total / 8.0)).abs() < 1e-12);
    // 1 + 1 + 6·½ over 8 subsets
    assert!((ce - 0.375).abs() < 1e-12);
}

#[test]
fn tfih_on_all_zero_pair() {
    let h = build_tfih(2, 1.0, 1.0).unwrap();
    assert!((h.expectation(&Statevector::zero(2)).unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn shot_estimates_within_five_standard_errors() {
    let mut rng = seed::rng(4, &[]);
    let obs = Observable::new(3, vec![(1.0, PauliString::new([(0, Pauli::X), (2, Pauli::Z)]))]).unwrap();
    let mut inside = 0;
    for s in 0..200 {
        let psi = Statevector::random(3, &mut rng);
        let exact = obs.expectation(&psi).unwrap();
        let est = obs.expectation_shots(&psi, 400, s).unwrap();
        inside += usize::from((est - exact).abs() < 5.0 / 20.0);
    }
    assert!(inside >= 198);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_circuit_state_factorises(k in 1usize..=3, m in 1usize..=4, l in 1usize..=3, s in 0u64..10_000) {
        let n = k * m;
        let mut rng = seed::rng(s, &[]);
        let circuit = build_cs(&SplitSpec::cs(n, m, l, BlockFamily::LADDER)).unwrap();
        let params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let input = random_product(n, &mut rng);
        let full = circuit.run(&params, &input.to_statevector()).unwrap();
        let blocks = circuit.split_into(&(0..k).map(|b| (b * m..(b + 1) * m).collect()).collect::<Vec<_>>()).unwrap();
        let mut product: Option<Statevector> = None;
        for (b, block) in blocks.iter().enumerate() {
            let qubits: Vec<usize> = (b * m..(b + 1) * m).collect();
            let local_params: Vec<f64> = block.params.iter().map(|&j| params[j]).collect();
            let local = block.circuit.run(&local_params, &input.restrict(&qubits).to_statevector()).unwrap();
            product = Some(match product {
                None => local,
                Some(low) => low.tensor(&local),
            });
        }
        prop_assert!(full.max_abs_diff(&product.unwrap()) < 1e-10);
    }

    #[test]
    fn split_gradient_matches_full_register(k in 1usize..=3, m in 1usize..=3, l in 1usize..=3, s in 0u64..10_000) {
        let n = k * m;
        let mut rng = seed::rng(s, &[]);
        let family = if m > 1 && s % 2 == 0 { BlockFamily::SU2_FULL } else { BlockFamily::LADDER };
        let circuit = build_cs(&SplitSpec::cs(n, m, l, family)).unwrap();
        let obs = Observable::mean_z(n);
        let params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let input = random_product(n, &mut rng);
        let split = SplitCost::new(&circuit, &obs).unwrap();
        let full = parameter_shift_gradient(&circuit, &params, &obs, &input.to_statevector()).unwrap();
        let blockwise = split.gradient(&params, &input).unwrap();
        for (a, b) in full.iter().zip(&blockwise) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let cost = obs.expectation(&circuit.run(&params, &input.to_statevector()).unwrap()).unwrap();
        prop_assert!((split.cost(&params, &input).unwrap() - cost).abs() < 1e-10);
    }

    #[test]
    fn other_block_parameters_do_not_move_a_block_gradient(l in 1usize..=3, s in 0u64..10_000) {
        let (n, m) = (6, 3);
        let mut rng = seed::rng(s, &[]);
        let circuit = build_cs(&SplitSpec::cs(n, m, l, BlockFamily::LADDER)).unwrap();
        let obs = Observable::mean_z(n);
        let init = Statevector::zero(n);
        let params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        // ladder parameters are layer-major, qubit-major
        let in_block_0 = |j: usize| j % n < m;
        let mut moved = params.clone();
        for (j, p) in moved.iter_mut().enumerate() {
            if !in_block_0(j) {
                *p = rng.random_range(0.0..TAU);
            }
        }
        let g0 = finite_difference_gradient(&circuit, &params, &obs, &init, 1e-5).unwrap();
        let g1 = finite_difference_gradient(&circuit, &moved, &obs, &init, 1e-5).unwrap();
        for j in (0..params.len()).filter(|&j| in_block_0(j)) {
            prop_assert!((g0[j] - g1[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn ecs_tail_gradients_agree_with_finite_differences(l in 0usize..=2, t in 1usize..=2, s in 0u64..10_000) {
        let spec = SplitSpec { num_qubits: 4, block_size: 2, cs_layers: l, standard_layers: t, block_family: BlockFamily::SU2_FULL };
        let circuit = build_ecs(&spec, BlockFamily::SU2_FULL).unwrap();
        let obs = build_tfih(4, 1.0, 1.0).unwrap();
        let mut rng = seed::rng(s, &[]);
        let params: Vec<f64> = (0..circuit.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let init = Statevector::zero(4);
        let ps = parameter_shift_gradient(&circuit, &params, &obs, &init).unwrap();
        let fd = finite_difference_gradient(&circuit, &params, &obs, &init, 1e-5).unwrap();
        for (a, b) in ps.iter().zip(&fd) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
