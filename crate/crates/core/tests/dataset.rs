use gridgan::dataset::{
    generate_target, minibatches, plan_budget, read_dataset, sample_partition, write_dataset, TargetSpec,
};
use gridgan::{CellId, Matrix};
use proptest::prelude::*;

#[test]
fn ring_modes_are_equally_likely() {
    let spec = TargetSpec::ring(8, 2.0, 0.05, 10_000);
    let data: Matrix<f64> = generate_target(&spec, 42).unwrap();
    let centers = spec.mode_centers();
    let mut counts = [0usize; 8];
    for r in data.iter_rows() {
        let nearest = (0..8)
            .min_by(|&a, &b| {
                let da = (r[0] - centers[a][0]).powi(2) + (r[1] - centers[a][1]).powi(2);
                let db = (r[0] - centers[b][0]).powi(2) + (r[1] - centers[b][1]).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        counts[nearest] += 1;
    }
    let mean = 10_000.0 / 8.0;
    let sd = (10_000.0f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
    for c in counts {
        assert!((c as f64 - mean).abs() <= 4.0 * sd, "{counts:?}");
    }
}

#[test]
fn ring_centers_lie_on_the_circle() {
    let spec = TargetSpec::ring(8, 2.0, 0.05, 1);
    for c in spec.mode_centers() {
        assert!(((c[0] * c[0] + c[1] * c[1]).sqrt() - 2.0).abs() < 1e-12);
    }
}

#[test]
fn full_partition_distinct_count_follows_coupon_collector() {
    let p = sample_partition(60_000, 1.0, CellId::new(0, 0), 17).unwrap();
    assert_eq!(p.len(), 60_000);
    // n (1 - (1 - 1/n)^n)
    let expected = 60_000.0 * (1.0 - (1.0 - 1.0 / 60_000f64).powi(60_000));
    assert!((expected - 37_927.0).abs() < 1.0);
    let got = p.distinct() as f64;
    assert!((got - expected).abs() <= 0.01 * expected, "{got} vs {expected}");
}

#[test]
fn cells_draw_different_partitions() {
    let a = sample_partition(1000, 0.5, CellId::new(0, 0), 1).unwrap();
    let b = sample_partition(1000, 0.5, CellId::new(0, 1), 2).unwrap();
    assert_ne!(a.indices, b.indices);
}

#[test]
fn bad_portions_are_config_errors() {
    for p in [0.0, -0.5, 1.01, f64::NAN] {
        assert!(sample_partition(100, p, CellId::new(0, 0), 1).unwrap_err().is_config());
    }
}

#[test]
fn dataset_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.gcds");
    let m: Matrix<f64> = generate_target(&TargetSpec::ring(8, 2.0, 0.1, 50), 3).unwrap();
    write_dataset(&path, &m).unwrap();
    let back: Matrix<f64> = read_dataset(&path).unwrap();
    assert_eq!(back, m);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 12 + 50 * 2 * 8);
    assert_eq!(&bytes[..4], b"GCDS");
}

#[test]
fn missing_dataset_file_is_io_error() {
    let err = read_dataset::<f64>(std::path::Path::new("/nonexistent/x.gcds")).unwrap_err();
    assert!(!err.is_config());
}

proptest! {
    #[test]
    fn partition_size_and_range(n in 1usize..5000, p in 0.01f64..=1.0, s in any::<u64>()) {
        let part = sample_partition(n, p, CellId::new(1, 2), s).unwrap();
        prop_assert_eq!(part.len(), (p * n as f64).round() as usize);
        prop_assert!(part.indices.iter().all(|&i| i < n));
        prop_assert_eq!(part.owner, CellId::new(1, 2));
    }

    #[test]
    fn budget_is_exact(n in 100usize..100_000, batch in 1usize..200, p in 0.05f64..=1.0, budget in 1usize..200_000) {
        if let Ok(plan) = plan_budget(n, batch, p, budget) {
            prop_assert_eq!(plan.batches_per_generation, ((p * n as f64).round() as usize) / batch);
            prop_assert!(plan.batches_per_generation >= 1);
            prop_assert!(plan.generations * plan.batches_per_generation >= budget);
            prop_assert!((plan.generations - 1) * plan.batches_per_generation < budget);
            prop_assert_eq!(plan.total_batches, plan.generations * plan.batches_per_generation);
        } else {
            prop_assert!(((p * n as f64).round() as usize) < batch);
        }
    }

    #[test]
    fn minibatches_use_whole_batches(len in 1usize..500, batch in 1usize..64, s in any::<u64>()) {
        let part = sample_partition(1000, len as f64 / 1000.0, CellId::new(0, 0), s).unwrap();
        let batches = minibatches(&part, batch, s ^ 1);
        prop_assert_eq!(batches.len(), part.len() / batch);
        prop_assert!(batches.iter().all(|b| b.len() == batch));
    }
}
