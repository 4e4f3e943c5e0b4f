use num_complex::Complex64;

use nfdoa::baselines::{near_field_music, MusicGrid};
use nfdoa::covariance::sample_covariance;
use nfdoa::cvnn::{Loss, TrainConfig};
use nfdoa::geometry::{ArrayConfig, SourcePlacement};
use nfdoa::pipeline::experiments::{rmse_vs_snr, write_rows_csv};
use nfdoa::pipeline::{
    build_dataset, evaluate, run_trials, train_model, Condition, Dataset, DatasetSpec, Methods, ModelKind, MonteCarlo,
    MusicSettings, Role, TrainOutcome, TrialCondition,
};
use nfdoa::sim::{derive_seed, received_snapshots, NoiseSpec};

fn spec(role: Role, distances: (f64, f64, f64), thetas: (f64, f64, f64)) -> DatasetSpec {
    DatasetSpec {
        distance_range: distances,
        theta_range: thetas,
        snapshots: 50,
        snr_db: 10.0,
        seed: 3,
        n_in: 9,
        array: ArrayConfig::half_wavelength(17).unwrap(),
        role,
        strict_fresnel: false,
    }
}

fn small_train() -> Dataset {
    build_dataset(&spec(Role::Train, (40.0, 120.0, 40.0), (-60.0, 60.0, 2.0))).unwrap()
}

fn trained(data: &Dataset, epochs: usize) -> TrainOutcome {
    let cfg = TrainConfig {
        epochs,
        batch_size: 16,
        learning_rate: 3e-3,
        seed: 3,
        ..TrainConfig::default()
    };
    train_model(ModelKind::Cvnn.build(9, 3).unwrap(), data, &cfg, 0.1).unwrap()
}

fn condition(distance: f64) -> Condition {
    Condition {
        snr_db: 10.0,
        snapshots: 50,
        distance: Some(distance),
        n_antennas: 17,
    }
}

#[test]
fn training_learns_and_decouples_range() {
    let data = small_train();
    let out = trained(&data, 200);
    let (first, last) = (out.history[0].train_mae, out.history[199].train_mae);
    assert!(last < 0.25 * first, "train MAE {first} -> {last}");
    assert!(out.history.iter().all(|h| h.val_mae.is_some()));

    let seen = build_dataset(&spec(Role::Test, (80.0, 80.0, 10.0), (-55.0, 55.0, 2.5))).unwrap();
    let unseen = build_dataset(&spec(Role::Test, (100.0, 100.0, 10.0), (-55.0, 55.0, 2.5))).unwrap();
    let a = evaluate(&out.network, &seen, condition(80.0)).unwrap().rmse_deg;
    let b = evaluate(&out.network, &unseen, condition(100.0)).unwrap().rmse_deg;
    assert!(b < 1.5 * a, "seen {a} deg, unseen {b} deg");
    assert!(a < 5.0, "seen-distance RMSE {a} deg");

    // the network is not invariant to a common phase; canonical features are required
    let s = &seen.samples[5];
    let rotated: Vec<Complex64> = s.feature.iter().map(|z| z * Complex64::from_polar(1.0, 0.7)).collect();
    let p0 = out.network.forward(&s.feature).unwrap();
    let p1 = out.network.forward(&rotated).unwrap();
    assert!((p0 - p1).abs() > 1e-6);
}

#[test]
fn mse_training_is_supported() {
    let data = small_train();
    let cfg = TrainConfig {
        epochs: 5,
        loss: Loss::Mse,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train_model(ModelKind::Tdnn.build(9, 3).unwrap(), &data, &cfg, 0.0).unwrap();
    assert_eq!(out.n_val, 0);
    assert_eq!(out.history.len(), 5);
    assert!(out.history.iter().all(|h| h.val_loss.is_none() && h.train_loss.is_finite()));
}

#[test]
fn music_hits_truth_at_5_db() {
    let array = ArrayConfig::half_wavelength(33).unwrap();
    let step = 0.2;
    let grid = MusicGrid::fresnel_clipped(&array, step, (50.0, 500.0, 10.0)).unwrap();
    let trials = 40;
    let mut hits = 0;
    for t in 0..trials {
        let theta = -50.0 + 100.0 * t as f64 / trials as f64 + 0.37;
        let src = SourcePlacement::from_degrees(theta, 200.0).unwrap();
        let set = received_snapshots(&[src], &array, 100, NoiseSpec::new(5.0, derive_seed(11, t))).unwrap();
        let res = near_field_music(&sample_covariance(&set).unwrap(), &array, 1, &grid).unwrap();
        if (res.estimates[0].theta.to_degrees() - theta).abs() <= 2.0 * step {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.95 * trials as f64, "{hits}/{trials}");
}

#[test]
fn experiments_share_snapshots_and_are_reproducible() {
    let data = small_train();
    let out = trained(&data, 2);
    let methods = Methods {
        cvnn: Some(&out.network),
        tdnn: None,
        music: Some(MusicSettings {
            theta_step_deg: 0.5,
            range: (20.0, 120.0, 10.0),
        }),
    };
    let base = TrialCondition {
        array: ArrayConfig::half_wavelength(17).unwrap(),
        n_in: 9,
        snr_db: 10.0,
        snapshots: 30,
        distance: 80.0,
    };
    let mc = MonteCarlo {
        trials: 5,
        seed: 2,
        theta_max_deg: 50.0,
    };
    let csv = |rows: &[_]| {
        let mut buf = Vec::new();
        write_rows_csv(rows, &mut buf).unwrap();
        buf
    };
    let a = rmse_vs_snr(&methods, &base, &[-5.0, 5.0], &mc).unwrap();
    let b = rmse_vs_snr(&methods, &base, &[-5.0, 5.0], &mc).unwrap();
    assert_eq!(a.len(), 4);
    assert_eq!(csv(&a), csv(&b));

    let fixed = run_trials(&methods, &base, &mc, Some(0.3)).unwrap();
    assert_eq!(fixed.len(), 2);
    assert!(fixed.iter().all(|(_, r)| r.errors.len() == 5));
}

#[test]
fn datasets_are_seeded() {
    let s = spec(Role::Train, (40.0, 120.0, 40.0), (-30.0, 30.0, 10.0));
    let a = build_dataset(&s).unwrap();
    assert_eq!(a, build_dataset(&s).unwrap());
    let other = build_dataset(&DatasetSpec { seed: 4, ..s }).unwrap();
    assert_ne!(a.samples[0].feature, other.samples[0].feature);
    let test = build_dataset(&DatasetSpec { role: Role::Test, ..s }).unwrap();
    assert_ne!(a.samples[0].feature, test.samples[0].feature);
}
