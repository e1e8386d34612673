use qsplit::ansatz::BlockFamily;
use qsplit::bp::*;
use qsplit::table;

fn fixed(ms: &[usize]) -> Vec<BlockSize> {
    ms.iter().map(|&m| BlockSize::Fixed(m)).collect()
}

#[test]
fn gradient_mean_is_zero_and_split_gap_is_large() {
    let mut cfg = ScanConfig::layers_equal_n(vec![12], vec![BlockSize::Fixed(4), BlockSize::FULL], 2000, 3);
    cfg.statistic = Statistic::FirstParamGrad;
    let recs = scan_first_param_gradient(&cfg).unwrap();
    for r in &recs {
        let se = (r.variance / r.sample_count as f64).sqrt();
        assert!(r.mean.abs() < 4.0 * se, "N={} m={} mean {} se {}", r.n, r.m, r.mean, se);
    }
    let (split, full) = (&recs[0], &recs[1]);
    assert_eq!((split.m, full.m), (4, 12));
    eprintln!("first-param variance m=4 {:.3e} m=N {:.3e}", split.variance, full.variance);
    assert!(split.variance >= 10.0 * full.variance);
}

#[test]
fn halves_agree_within_thirty_percent() {
    let mut cfg = ScanConfig::layers_equal_n(vec![4, 6, 8], vec![BlockSize::Fixed(2), BlockSize::FULL], 2000, 5);
    cfg.skip_indivisible = true;
    for r in scan_delta_cost(&cfg).unwrap() {
        let (a, b) = (r.variance_first_half, r.variance_second_half);
        assert!((a - b).abs() <= 0.3 * a.max(b), "N={} m={}: {a} vs {b}", r.n, r.m);
    }
}

#[test]
fn layer_sweep_is_reproducible() {
    let mut cfg = ScanConfig::layers_equal_n(vec![8], fixed(&[4]), 200, 9);
    cfg.layers_equal_n = false;
    cfg.l_values = vec![1, 4];
    let a = scan_layers(&cfg).unwrap();
    assert_eq!(a, scan_layers(&cfg).unwrap());
    assert_eq!(a[0].l, 1);
    let mut one = cfg.clone();
    one.l_values = vec![1];
    // a cell does not depend on its neighbours in the grid
    assert_eq!(scan_layers(&one).unwrap()[0], a[0]);
}

#[test]
fn ecs_decay_steepens_with_tail_depth() {
    let cfg = ScanConfig {
        n_values: vec![4, 6, 8, 10],
        m_values: fixed(&[2]),
        l_values: Vec::new(),
        t_values: vec![0, 3, 6],
        depth: Some(6),
        layers_equal_n: false,
        samples: 2000,
        seed: 12,
        statistic: Statistic::DeltaCost,
        observable: ObservableKind::Tfih,
        family: BlockFamily::SU2_FULL,
        tail: BlockFamily::SU2_FULL,
        skip_indivisible: false,
    };
    let recs = scan_ecs(&cfg).unwrap();
    assert!(recs.iter().all(|r| r.variance.is_finite() && r.variance >= 0.0));
    let slope = |t: usize| {
        let rs: Vec<VarianceRecord> = recs.iter().filter(|r| r.t == t).cloned().collect();
        fit_decay(&rs, Axis::N, false).unwrap().slope
    };
    let (s0, s3, s6) = (slope(0), slope(3), slope(6));
    eprintln!("ECS slopes T=0 {s0:.3} T=3 {s3:.3} T=6 {s6:.3}");
    assert!(s0 > s3 && s3 > s6);
}

#[test]
fn records_round_trip_through_csv() {
    let cfg = ScanConfig::layers_equal_n(vec![4], fixed(&[2, 4]), 100, 1);
    let recs = scan_delta_cost(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    table::write(&path, RECORD_SCHEMA, &[("samples", "100".into())], &recs).unwrap();
    let (meta, back): (_, Vec<VarianceRecord>) = table::read(&path, RECORD_SCHEMA).unwrap();
    assert_eq!(meta.get("samples").map(String::as_str), Some("100"));
    assert_eq!(back, recs);
    assert!(table::read::<VarianceRecord>(&path, "transpile_count v1").is_err());
}

#[test]
fn config_parses_from_json() {
    let cfg: ScanConfig = serde_json::from_str(
        r#"{"n_values": [4, 8], "m_values": [4, "N"], "layers_equal_n": true, "seed": 2}"#,
    )
    .unwrap();
    assert_eq!(cfg.m_values, vec![BlockSize::Fixed(4), BlockSize::FULL]);
    assert_eq!(cfg.samples, 2000);
    assert!(serde_json::from_str::<ScanConfig>(r#"{"n_values": [4], "m_values": [4], "bogus": 1}"#).is_err());
}
