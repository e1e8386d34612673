use std::fs;

use qsplit::datasets::*;
use qsplit::error::Error;
use qsplit::stats::median;
use qsplit::sv::concentrable_entanglement;

/// Perceptron with bias; returns training accuracy after convergence or
/// the epoch budget.
fn perceptron_accuracy(x: &[Vec<f64>], y: &[u8], epochs: usize) -> f64 {
    let n = x[0].len();
    let mut w = vec![0.0; n + 1];
    let predict = |w: &[f64], r: &[f64]| w[n] + r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() >= 0.0;
    for _ in 0..epochs {
        let mut mistakes = 0;
        for (r, &t) in x.iter().zip(y) {
            let want = t == 1;
            if predict(&w, r) != want {
                mistakes += 1;
                let s = if want { 1.0 } else { -1.0 };
                for (wi, ri) in w.iter_mut().zip(r) {
                    *wi += s * ri;
                }
                w[n] += s;
            }
        }
        if mistakes == 0 {
            break;
        }
    }
    x.iter().zip(y).filter(|(r, &t)| predict(&w, r) == (t == 1)).count() as f64 / x.len() as f64
}

#[test]
fn well_separated_clusters_are_linearly_separable() {
    for (n, seed) in [(4, 1), (8, 2), (16, 3)] {
        let cfg = HypercubeConfig {
            class_sep: 10.0,
            flip_frac: 0.0,
            ..HypercubeConfig::new(n, seed)
        };
        let d = gen_hypercube_classification(&cfg).unwrap();
        let acc = perceptron_accuracy(&d.features[..d.n_train], &d.labels[..d.n_train], 5000);
        assert_eq!(acc, 1.0, "n = {n}");
    }
}

#[test]
fn classical_file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let d = gen_hypercube_classification(&HypercubeConfig::new(8, 4)).unwrap();
    save_classical(&path, &d).unwrap();
    assert_eq!(load_classical(&path).unwrap(), d);

    let text = fs::read_to_string(&path).unwrap();
    let truncated: String = text.lines().take(text.lines().count() - 5).map(|l| format!("{l}\n")).collect();
    fs::write(&path, truncated).unwrap();
    assert!(load_classical(&path).is_err());

    let tampered = text.replacen(",0,train", ",1,train", 1);
    assert_ne!(tampered, text);
    fs::write(&path, tampered).unwrap();
    assert!(matches!(load_classical(&path), Err(Error::Checksum { .. })));

    fs::write(&path, text.replacen("classical_dataset v1", "classical_dataset v9", 1)).unwrap();
    assert!(matches!(load_classical(&path), Err(Error::Schema { .. })));
}

#[test]
fn quantum_dataset_four_qubits() {
    let d = gen_quantum_ce_dataset(&QuantumDatasetConfig::new(4, [0.05, 0.35], 1)).unwrap();
    assert_eq!(d.samples.len(), 600);
    assert_eq!(d.n_train, 420);
    let (c0, c1) = (d.realized_ce(0), d.realized_ce(1));
    let (m0, m1) = (median(&c0), median(&c1));
    assert!((m0 - 0.05).abs() <= 0.05 && (m1 - 0.35).abs() <= 0.05, "medians {m0} {m1}");
    assert!(m1 - m0 >= 0.2);
    assert!(histogram_overlap(&c0, &c1, 30) < 0.25);
    for (s, q) in d.states().unwrap().iter().zip(&d.samples) {
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!((concentrable_entanglement(s).unwrap() - q.ce).abs() < 1e-12);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    save_quantum(&path, &d).unwrap();
    let back = load_quantum(&path).unwrap();
    for (s, q) in back.states().unwrap().iter().zip(&d.samples) {
        assert!((concentrable_entanglement(s).unwrap() - q.ce).abs() < 1e-10);
    }
    assert_eq!(back.group_b, d.group_b);

    let text = fs::read_to_string(&path).unwrap();
    let truncated: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
    fs::write(&path, truncated).unwrap();
    assert!(load_quantum(&path).is_err());
    fs::write(&path, &text).unwrap();
    fs::remove_file(manifest_path(&path)).unwrap();
    assert!(load_quantum(&path).is_err());
}

#[test]
fn quantum_zero_target_gives_near_product_states() {
    let cfg = QuantumDatasetConfig {
        per_class: 100,
        ..QuantumDatasetConfig::new(4, [0.0, 0.2], 2)
    };
    let d = gen_quantum_ce_dataset(&cfg).unwrap();
    assert!(median(&d.realized_ce(0)) < 0.02);
}

#[test]
fn unreachable_target_is_reported() {
    // CE of a 2-qubit state is at most 1/4
    let cfg = QuantumDatasetConfig {
        per_class: 10,
        max_steps: 50,
        ..QuantumDatasetConfig::new(2, [0.0, 0.6], 3)
    };
    assert!(matches!(gen_quantum_ce_dataset(&cfg), Err(Error::NotConverged(_))));
}

#[test]
#[ignore = "about a minute; run with --ignored"]
fn quantum_dataset_eight_qubits() {
    let cfg = QuantumDatasetConfig {
        per_class: 50,
        ..QuantumDatasetConfig::new(8, [0.15, 0.45], 3)
    };
    let d = gen_quantum_ce_dataset(&cfg).unwrap();
    let (c0, c1) = (d.realized_ce(0), d.realized_ce(1));
    assert!((median(&c0) - 0.15).abs() <= 0.05);
    assert!((median(&c1) - 0.45).abs() <= 0.05);
    assert!(histogram_overlap(&c0, &c1, 30) < 0.25);
}
