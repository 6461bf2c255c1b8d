use proptest::prelude::*;
use pvobs_core::pde_solver::{
    cole_hopf_oracle, simulate, DensityField, Grid, InitialCondition, Piece, Profile,
};
use pvobs_core::traffic_model::ModelParams;

fn linf_to_oracle(ic: &InitialCondition<f64>, cells: usize, t: f64, window: (f64, f64)) -> f64 {
    let params = ModelParams::new(70.0, 3.0).unwrap();
    let grid = Grid::new(-5.0, 15.0, cells).unwrap();
    let field = simulate(ic, grid, &params, t).unwrap().pop().unwrap();
    grid.centers()
        .zip(field.values())
        .filter(|(x, _)| *x >= window.0 && *x <= window.1)
        .map(|(x, v)| (v - cole_hopf_oracle(ic, t, x, &params).unwrap().value()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn smooth_data_converges_at_first_order() {
    let ic = InitialCondition::sine(0.5, 0.1, 2.0).unwrap();
    let errors: Vec<f64> = [75, 150, 300, 600]
        .iter()
        .map(|&n| linf_to_oracle(&ic, n, 0.01, (-1.0, 11.0)))
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.6).contains(&ratio), "ratios {errors:?}");
    }
}

#[test]
fn riemann_data_tracks_the_viscous_profile() {
    // A rarefaction and a shock smoothed by diffusion.
    for (l, r) in [(0.2, 0.7), (0.7, 0.2)] {
        let ic = InitialCondition::riemann(l, r, 5.0).unwrap();
        let coarse = linf_to_oracle(&ic, 200, 0.02, (0.0, 10.0));
        let fine = linf_to_oracle(&ic, 800, 0.02, (0.0, 10.0));
        assert!(fine < coarse, "{l}->{r}: {coarse} then {fine}");
        assert!(fine < 0.02, "{l}->{r}: {fine}");
    }
}

fn piecewise(values: &[f64], edges: &[f64]) -> InitialCondition<f64> {
    let pieces = values
        .iter()
        .enumerate()
        .map(|(k, &v)| Piece {
            start: k.checked_sub(1).map(|j| edges[j]),
            end: edges.get(k).copied(),
            profile: Profile::Constant(v),
        })
        .collect();
    InitialCondition::new(pieces).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_stays_within_initial_bounds(
        values in prop::collection::vec(0.0f64..=1.0, 2..5),
        gamma in prop::sample::select(vec![0.0, 0.5, 3.0]),
    ) {
        let edges: Vec<f64> = (1..values.len()).map(|k| -2.0 + 4.0 * k as f64 / values.len() as f64).collect();
        let ic = piecewise(&values, &edges);
        let (lo, hi) = ic.bounds();
        let params = ModelParams::new(70.0, gamma).unwrap();
        for f in simulate(&ic, Grid::new(-4.0, 4.0, 120).unwrap(), &params, 0.03).unwrap() {
            prop_assert!(f.min() >= lo - 1e-12 && f.max() <= hi + 1e-12);
        }
    }

    #[test]
    fn mass_changes_only_through_the_ends(
        values in prop::collection::vec(0.05f64..=0.95, 2..5),
        gamma in prop::sample::select(vec![0.0, 1.0]),
    ) {
        let edges: Vec<f64> = (1..values.len()).map(|k| -1.0 + 2.0 * k as f64 / values.len() as f64).collect();
        let ic = piecewise(&values, &edges);
        let params = ModelParams::new(70.0, gamma).unwrap();
        let snaps = simulate(&ic, Grid::new(-4.0, 4.0, 160).unwrap(), &params, 0.02).unwrap();
        for w in snaps.windows(2) {
            let (a, b): (&DensityField<f64>, &DensityField<f64>) = (&w[0], &w[1]);
            let dt = b.time() - a.time();
            let (q_in, q_out) = pvobs_core::pde_solver::boundary_fluxes(a, &params);
            let expected = a.mass() + dt * (q_in - q_out);
            prop_assert!((b.mass() - expected).abs() <= 1e-10 * (1.0 + a.mass()));
        }
    }
}
