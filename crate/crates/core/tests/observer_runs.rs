use pvobs_core::experiment::{run_experiment, ExperimentConfig, Prior};
use pvobs_core::observer::ObserverMode;
use pvobs_core::pde_solver::{Grid, InitialCondition};
use pvobs_core::probes::ProbeFleet;
use pvobs_core::traffic_model::ModelParams;

fn config(gamma: f64, ic: InitialCondition<f64>, noise: f64, seed: u64) -> ExperimentConfig<f64> {
    let fleet = ProbeFleet::new(vec![0.0, 0.4, 0.7, 1.2], noise, seed).unwrap();
    ExperimentConfig::new(
        ModelParams::new(70.0, gamma).unwrap(),
        Grid::new(-3.0, 12.0, 300).unwrap(),
        ic,
        fleet,
        0.05,
    )
}

#[test]
fn constant_traffic_is_estimated_exactly() {
    for gamma in [0.0, 3.0] {
        for mode in [ObserverMode::Viscous, ObserverMode::Inviscid] {
            let mut cfg = config(gamma, InitialCondition::constant(0.35).unwrap(), 0.0, 0);
            cfg.mode = mode;
            let rec = run_experiment(&cfg).unwrap();
            assert!(
                rec.trace.aggregate.iter().all(|e| *e < 1e-14),
                "{gamma} {mode:?}"
            );
            let spacing = rec.steps.last().unwrap().spacings();
            assert!(spacing
                .iter()
                .zip([0.4, 0.3, 0.5])
                .all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}

#[test]
fn noisy_runs_repeat_and_depend_on_the_seed() {
    let ic = InitialCondition::sine(0.5, 0.2, 3.0).unwrap();
    let a = run_experiment(&config(3.0, ic.clone(), 0.02, 5)).unwrap();
    let b = run_experiment(&config(3.0, ic.clone(), 0.02, 5)).unwrap();
    let c = run_experiment(&config(3.0, ic, 0.02, 6)).unwrap();
    assert_eq!(a.steps, b.steps);
    assert_ne!(a.steps, c.steps);
    assert!(a
        .steps
        .iter()
        .flat_map(|s| &s.readings)
        .all(|r| (0.0..=1.0).contains(r)));
}

#[test]
fn viscous_estimate_converges_from_a_constant_prior() {
    let ic = InitialCondition::sine(0.5, 0.15, 4.0).unwrap();
    let rec = run_experiment(&config(3.0, ic, 0.0, 0)).unwrap();
    let e = &rec.trace.aggregate;
    assert!(e[0] > 0.01);
    assert!(
        *e.last().unwrap() < 0.05 * e[0],
        "{} -> {}",
        e[0],
        e.last().unwrap()
    );
}

#[test]
fn truth_prior_starts_near_zero_error() {
    let ic = InitialCondition::sine(0.5, 0.15, 4.0).unwrap();
    let mut cfg = config(3.0, ic.clone(), 0.0, 0);
    let constant = run_experiment(&cfg).unwrap().trace.aggregate[0];
    cfg.prior = Prior::Truth;
    let truth = run_experiment(&cfg).unwrap().trace.aggregate[0];
    assert!(truth < 0.1 * constant, "{truth} vs {constant}");
}

#[test]
fn car_counts_stay_bounded() {
    let ic = InitialCondition::riemann(0.3, 0.6, 0.5).unwrap();
    let mut cfg = config(3.0, ic, 0.0, 0);
    cfg.horizon = 0.1;
    let rec = run_experiment(&cfg).unwrap();
    for s in &rec.steps {
        for (i, n) in s.car_counts.iter().enumerate() {
            let d = s.positions[i + 1] - s.positions[i];
            assert!(*n >= 0.3 * d - 1e-12 && *n <= 0.6 * d + 1e-12);
        }
    }
    // Growth slows down: the per-step change late in the run is below the early one.
    let segs = rec.steps[0].car_counts.len();
    let half = rec.steps.len() / 2;
    for i in 0..segs {
        let change = |r: std::ops::Range<usize>| {
            r.map(|k| (rec.steps[k + 1].car_counts[i] - rec.steps[k].car_counts[i]).abs())
                .fold(0.0, f64::max)
        };
        let early = change(0..half);
        let late = change(half..rec.steps.len() - 1);
        assert!(
            late <= early + 1e-12,
            "segment {}: {early} then {late}",
            i + 1
        );
        let n0 = rec.steps[0].car_counts[i];
        let d_max = rec
            .steps
            .iter()
            .map(|s| s.positions[i + 1] - s.positions[i])
            .fold(0.0, f64::max);
        assert!(rec.steps.iter().all(|s| s.car_counts[i] <= n0 + d_max));
    }
}

#[test]
fn lyapunov_values_respect_the_sandwich() {
    let ic = InitialCondition::sine(0.5, 0.15, 4.0).unwrap();
    let mut cfg = config(3.0, ic, 0.0, 0);
    let lambda = 4.0;
    cfg.lyapunov_lambda = Some(lambda);
    let rec = run_experiment(&cfg).unwrap();
    for s in &rec.steps {
        for (i, (v, e)) in s.lyapunov.iter().zip(&s.errors).enumerate() {
            let d = s.positions[i + 1] - s.positions[i];
            let e2 = e * e;
            assert!(*v <= e2 * (1.0 + 1e-12) + 1e-300);
            assert!(*v >= (-lambda * d).exp() * e2 * (1.0 - 1e-12));
        }
    }
}

#[test]
fn probes_near_the_road_end_are_rejected() {
    let fleet = ProbeFleet::exact(vec![10.0, 11.9]).unwrap();
    let cfg = ExperimentConfig::new(
        ModelParams::new(70.0, 0.0).unwrap(),
        Grid::new(0.0, 12.0, 120).unwrap(),
        InitialCondition::constant(0.2).unwrap(),
        fleet,
        0.1,
    );
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn snapshots_follow_the_cadence() {
    let ic = InitialCondition::sine(0.5, 0.1, 2.0).unwrap();
    let mut cfg = config(0.0, ic, 0.0, 0);
    cfg.save_every = 7;
    let rec = run_experiment(&cfg).unwrap();
    let steps = rec.steps.len() - 1;
    let expected = 1 + steps / 7 + usize::from(!steps.is_multiple_of(7));
    assert_eq!(rec.snapshots.len(), expected);
    let last = rec.snapshots.last().unwrap();
    assert!((last.truth.time() - 0.05).abs() < 1e-12);
}
