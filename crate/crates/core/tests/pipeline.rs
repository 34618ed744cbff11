use nqp_core::fno::{load_checkpoint, FnoConfig};
use nqp_core::integrators::{generate_dataset, Dataset, TimeGrid};
use nqp_core::lindblad::{hopping_operator, DensityState};
use nqp_core::system::System;
use nqp_core::tcf::{populations, tcf_first_order, FnoBackend, Propagator, TcfAxis};
use nqp_core::training::{train_from, validate, TrainConfig, TrainState};
use nqp_core::C64;
use ndarray::Array1;

fn fno_config() -> FnoConfig {
    FnoConfig {
        n_fourier_layers: 1,
        modes_kmax: 4,
        hidden_channels: 6,
        projection_hidden: 8,
        state_dim: 4,
        grid_points: 11,
    }
}

#[test]
fn dataset_train_checkpoint_propagate() {
    let dir = tempfile::tempdir().unwrap();
    let sys = System::dephasing_dimer(150.0);
    let grid = TimeGrid::new(30.0, 10).unwrap();
    let ds = generate_dataset(&sys, &grid, 8, 4, 3).unwrap();
    let path = dir.path().join("data.nqd");
    ds.save(&path).unwrap();
    let ds = Dataset::load(&path).unwrap();

    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 4,
        onthefly_samples: 4,
        checkpoint_every: 2,
        seed: 2,
        ..TrainConfig::default()
    };
    let l = sys.liouvillian().unwrap();
    let state = train_from(TrainState::new(&fno_config(), &cfg).unwrap(), &cfg, &ds, &l, Some(dir.path())).unwrap();
    for f in ["best.nqp", "final.nqp", "optimizer.nqa", "loss.csv", "loss.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let (best, meta) = load_checkpoint(&dir.path().join("best.nqp")).unwrap();
    assert_eq!(&best, state.best_params());
    assert_eq!(meta.t_max, 30.0);
    assert_eq!(validate(&best, &ds).unwrap(), state.report.validation_errors);
    let csv = std::fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let backend = FnoBackend::new(best, meta.t_max).unwrap();
    assert_eq!(backend.grid(), grid);
    let s0 = DensityState::site(2, 0).unwrap();
    let p = populations(&backend, &s0, 3).unwrap();
    assert_eq!(p.values.nrows(), 31);
    assert!(p.values.iter().all(|v| v.is_finite()));

    // the backend extends the network linearly in the input scale
    let v = s0.vec().clone();
    let a = backend.window(&[v.clone()]).unwrap();
    let b = backend.window(&[v.mapv(|z| z * 1e-4)]).unwrap();
    let diff = (&a[0].mapv(|z| z * 1e-4) - &b[0]).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    assert!(diff <= 1e-16);
    let zero = backend.window(&[Array1::<C64>::zeros(4)]).unwrap();
    assert!(zero[0].iter().all(|z| *z == C64::new(0.0, 0.0)));

    let r1 = tcf_first_order(&backend, &hopping_operator(2).unwrap(), &s0, TcfAxis::new(2, 2).unwrap()).unwrap();
    assert_eq!(r1.t1.len(), 11);
}
