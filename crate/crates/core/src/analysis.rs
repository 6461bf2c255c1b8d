//! Error norms, the weighted Lyapunov functional and related diagnostics.
//!
//! All integrals use the midpoint rule on the nodes the data already lives
//! on: observer cells for errors, solver cells for car counts.

use crate::error::{Error, Result};
use crate::observer::GlobalEstimate;
use crate::pde_solver::DensityField;
use crate::scalar::Scalar;

/// Per-segment `L²` errors over time plus their aggregate `sqrt(∑ ‖ε‖_i²)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTrace<T> {
    pub times: Vec<T>,
    /// `per_segment[n][i]` is segment `i + 1` at `times[n]`.
    pub per_segment: Vec<Vec<T>>,
    pub aggregate: Vec<T>,
}

impl<T: Scalar> ErrorTrace<T> {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            per_segment: Vec::new(),
            aggregate: Vec::new(),
        }
    }

    pub fn push(&mut self, t: T, norms: Vec<T>) {
        let total = norms.iter().map(|e| *e * *e).sum::<T>().sqrt();
        self.times.push(t);
        self.per_segment.push(norms);
        self.aggregate.push(total);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First time the aggregate error drops below `fraction` of its initial value.
    pub fn convergence_time(&self, fraction: T) -> Option<T> {
        let e0 = *self.aggregate.first()?;
        self.times
            .iter()
            .zip(&self.aggregate)
            .find(|(_, e)| **e < fraction * e0)
            .map(|(t, _)| *t)
    }
}

/// Pointwise error `ρ − ρ̂` at the cell centres of segment `i` (1-based).
pub fn segment_errors<T: Scalar>(
    truth: &DensityField<T>,
    est: &GlobalEstimate<T>,
    i: usize,
) -> Result<Vec<T>> {
    let piece = est.piece(i).ok_or(Error::SegmentIndex {
        index: i,
        max: est.pieces().len(),
    })?;
    let grid = truth.grid();
    if piece.x_left < grid.x_min() || piece.x_right > grid.x_max() {
        return Err(Error::DomainMismatch(format!(
            "segment {i} [{}, {}] leaves the simulated road [{}, {}]",
            piece.x_left,
            piece.x_right,
            grid.x_min(),
            grid.x_max()
        )));
    }
    piece
        .cell_positions()
        .zip(&piece.values)
        .map(|(x, v)| Ok(truth.value_at(x)? - *v))
        .collect()
}

/// `‖ε(t, ·)‖_i = (∫ ε² dx)^{1/2}` over segment `i` (1-based).
pub fn error_norm<T: Scalar>(
    truth: &DensityField<T>,
    est: &GlobalEstimate<T>,
    i: usize,
) -> Result<T> {
    let eps = segment_errors(truth, est, i)?;
    let piece = est.piece(i).unwrap();
    Ok(l2_norm(&eps, piece.length()))
}

/// Midpoint-rule `L²` norm of `values` sampled at the centres of `m` equal cells of an interval of `length`.
pub fn l2_norm<T: Scalar>(values: &[T], length: T) -> T {
    let h = length / T::from_usize(values.len()).unwrap();
    (values.iter().map(|e| *e * *e).sum::<T>() * h).sqrt()
}

/// `V = ∫ ε² e^{−λ(x_right − x)} dx` with `eps` given at the cell centres of `[x_left, x_right]`.
pub fn lyapunov_value<T: Scalar>(eps: &[T], lambda: T, x_left: T, x_right: T) -> T {
    let m = T::from_usize(eps.len()).unwrap();
    let h = (x_right - x_left) / m;
    eps.iter()
        .enumerate()
        .map(|(k, e)| {
            let x = x_left + (T::from_usize(k).unwrap() + T::lit(0.5)) * h;
            *e * *e * (-lambda * (x_right - x)).exp()
        })
        .sum::<T>()
        * h
}

/// True iff every per-segment sample satisfies
/// `‖ε(t)‖_i ≤ (1 + tol) K ‖ε(0)‖_i e^{−α t}`.
pub fn envelope_check<T: Scalar>(trace: &ErrorTrace<T>, k: T, alpha: T, tol: T) -> bool {
    let Some(initial) = trace.per_segment.first() else {
        return true;
    };
    let t0 = trace.times[0];
    trace
        .times
        .iter()
        .zip(&trace.per_segment)
        .all(|(t, norms)| {
            let decay = (-alpha * (*t - t0)).exp();
            norms
                .iter()
                .zip(initial)
                .all(|(e, e0)| *e <= (T::one() + tol) * k * *e0 * decay)
        })
}

/// `N_i = ∫ ρ dx` over `[x_left, x_right]`, integrating the solver's cell
/// averages exactly (partial cells weighted by overlap).
pub fn car_count<T: Scalar>(truth: &DensityField<T>, x_left: T, x_right: T) -> Result<T> {
    let grid = truth.grid();
    for x in [x_left, x_right] {
        if !grid.contains(x) {
            return Err(Error::OutOfDomain {
                x: x.as_f64(),
                min: grid.x_min().as_f64(),
                max: grid.x_max().as_f64(),
            });
        }
    }
    if x_right < x_left {
        return Err(Error::DomainMismatch(format!(
            "empty interval [{x_left}, {x_right}]"
        )));
    }
    let dx = grid.dx();
    let first = ((x_left - grid.x_min()) / dx)
        .floor()
        .to_usize()
        .unwrap_or(0);
    let last = ((x_right - grid.x_min()) / dx)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(grid.n_cells() - 1);
    let mut total = T::zero();
    for j in first..=last.min(grid.n_cells() - 1) {
        let a = grid.x_min() + T::from_usize(j).unwrap() * dx;
        let overlap = (a + dx).min(x_right) - a.max(x_left);
        if overlap > T::zero() {
            total = total + overlap * truth.values()[j];
        }
    }
    Ok(total)
}

/// Discrete norms entering the Wirtinger inequality for a field that vanishes
/// at both ends of an interval of `length`.
///
/// `interior` holds the `m − 1` interior node values of a uniform `m`-cell
/// partition. Returns `(‖ε‖, ‖ε_x‖)` where the derivative is the difference
/// quotient centred on each cell and both norms use the same spacing.
pub fn wirtinger_norms<T: Scalar>(interior: &[T], length: T) -> (T, T) {
    let m = interior.len() + 1;
    let h = length / T::from_usize(m).unwrap();
    let node = |k: usize| {
        if k == 0 || k == m {
            T::zero()
        } else {
            interior[k - 1]
        }
    };
    let norm = (interior.iter().map(|e| *e * *e).sum::<T>() * h).sqrt();
    let grad = ((0..m)
        .map(|k| {
            let g = (node(k + 1) - node(k)) / h;
            g * g
        })
        .sum::<T>()
        * h)
        .sqrt();
    (norm, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::{init_segment_with_prior, stitch, ObserverMode};
    use crate::pde_solver::{Grid, InitialCondition};
    use crate::probes::ProbeFleet;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn estimate(prior: impl Fn(f64) -> f64, xs: Vec<f64>, m: usize) -> GlobalEstimate<f64> {
        let fleet = ProbeFleet::exact(xs).unwrap();
        let ic = InitialCondition::constant(0.5).unwrap();
        let segs: Vec<_> = (1..=fleet.segments())
            .map(|i| {
                init_segment_with_prior(i, &fleet, &ic, ObserverMode::Viscous, m, &prior).unwrap()
            })
            .collect();
        stitch(&segs, &fleet).unwrap()
    }

    fn fine_constant(c: f64) -> DensityField<f64> {
        DensityField::constant(Grid::new(0.0, 4.0, 400).unwrap(), c, 0.0).unwrap()
    }

    #[test]
    fn error_norm_examples() {
        let truth = fine_constant(0.5);
        let est = estimate(|_| 0.5, vec![1.0, 2.0, 3.5], 10);
        assert_eq!(error_norm(&truth, &est, 1).unwrap(), 0.0);
        let est = estimate(|_| 0.4, vec![1.0, 2.0, 3.5], 10);
        assert_abs_diff_eq!(
            error_norm(&truth, &est, 2).unwrap(),
            0.1 * 1.5f64.sqrt(),
            epsilon = 1e-12
        );
        // ε = sin(π (x − x_i)/d) on a unit segment: ‖ε‖ = sqrt(1/2); midpoint rule is exact here
        let est = estimate(
            |x| 0.5 - 0.4 * (std::f64::consts::PI * (x - 1.0)).sin(),
            vec![1.0, 2.0],
            16,
        );
        let norm = error_norm(&truth, &est, 1).unwrap() / 0.4;
        assert_abs_diff_eq!(norm, 0.5f64.sqrt(), epsilon = 1e-12);
        assert!(error_norm(&truth, &est, 2).is_err());
    }

    #[test]
    fn error_norm_rejects_segments_off_the_road() {
        let truth = fine_constant(0.5);
        let est = estimate(|_| 0.5, vec![3.0, 5.0], 8);
        assert!(matches!(
            error_norm(&truth, &est, 1),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(&[0.0; 10], 2.0, 0.0, 1.0), 0.0);
        let eps: Vec<f64> = (0..10).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_abs_diff_eq!(
            lyapunov_value(&eps, 0.0, 0.0, 1.0),
            l2_norm(&eps, 1.0).powi(2),
            epsilon = 1e-14
        );
        // ε ≡ c on [0, 1], λ = 1: c²(1 − e^{−1}); midpoint error ≤ h²/24 · max|f''| = c² h²/24
        let m = 1000;
        let c = 0.3;
        let v = lyapunov_value(&vec![c; m], 1.0, 0.0, 1.0);
        let exact = c * c * (1.0 - (-1.0f64).exp());
        assert!((v - exact).abs() <= c * c / (24.0 * (m * m) as f64) + 1e-15);
    }

    #[test]
    fn envelope_examples() {
        let mut zero = ErrorTrace::new();
        for n in 0..5 {
            zero.push(n as f64 * 0.1, vec![0.0, 0.0]);
        }
        assert!(envelope_check(&zero, 1.0, 3.0, 0.0));

        let (k, alpha, e0) = (2.0, 4.0, 0.3);
        let mut exact = ErrorTrace::new();
        let mut over = ErrorTrace::new();
        for n in 0..20 {
            let t = n as f64 * 0.05;
            let bound = if n == 0 {
                e0
            } else {
                k * e0 * (-alpha * t).exp()
            };
            exact.push(t, vec![bound]);
            over.push(t, vec![if n == 0 { e0 } else { 1.5 * bound }]);
        }
        assert!(envelope_check(&exact, k, alpha, 0.01));
        assert!(!envelope_check(&over, k, alpha, 0.1));
    }

    #[test]
    fn car_count_examples() {
        let half = fine_constant(0.5);
        assert_abs_diff_eq!(car_count(&half, 1.0, 3.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(car_count(&half, 1.013, 1.013).unwrap(), 0.0);
        assert_eq!(car_count(&fine_constant(0.0), 0.5, 3.7).unwrap(), 0.0);
        assert!(car_count(&half, -1.0, 1.0).is_err());
    }

    #[test]
    fn car_count_sandwich() {
        let grid = Grid::<f64>::new(0.0, 4.0, 37).unwrap();
        let values: Vec<f64> = grid
            .centers()
            .map(|x| 0.4 + 0.2 * (3.0 * x).sin().abs())
            .collect();
        let field = DensityField::new(grid, values, 0.0).unwrap();
        for (a, b) in [(0.3, 1.9), (0.0, 4.0), (1.234, 1.3)] {
            let n = car_count(&field, a, b).unwrap();
            assert!(0.4 * (b - a) <= n + 1e-14 && n <= 0.6 * (b - a) + 1e-14);
        }
    }

    #[test]
    fn convergence_time() {
        let mut tr = ErrorTrace::new();
        for (t, e) in [(0.0, 1.0), (0.1, 0.5), (0.2, 0.04), (0.3, 0.01)] {
            tr.push(t, vec![e]);
        }
        assert_eq!(tr.convergence_time(0.05), Some(0.2));
        assert_eq!(tr.convergence_time(0.001), None);
    }

    #[test]
    fn wirtinger_first_mode_is_nearly_sharp() {
        let m = 512;
        let len = 1.7;
        let interior: Vec<f64> = (1..m)
            .map(|k| (std::f64::consts::PI * k as f64 / m as f64).sin())
            .collect();
        let (n, g) = wirtinger_norms(&interior, len);
        let ratio = n / (len / std::f64::consts::PI * g);
        let dy = 1.0 / m as f64;
        assert!(
            ratio <= 1.0 + 5.0 * dy && (ratio - 1.0).abs() < 0.02,
            "{ratio}"
        );
    }

    proptest! {
        #[test]
        fn lyapunov_sandwich(eps in proptest::collection::vec(-1.0f64..1.0, 4..64), lambda in 0.0f64..30.0, len in 0.05f64..3.0) {
            let v = lyapunov_value(&eps, lambda, 0.0, len);
            let n2 = l2_norm(&eps, len).powi(2);
            prop_assert!(v <= n2 * (1.0 + 1e-12));
            prop_assert!((-lambda * len).exp() * n2 <= v * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn wirtinger_holds_for_random_fields(eps in proptest::collection::vec(-1.0f64..1.0, 7..200), len in 0.1f64..5.0) {
            let (n, g) = wirtinger_norms(&eps, len);
            let dy = 1.0 / (eps.len() + 1) as f64;
            prop_assert!(n <= len / std::f64::consts::PI * g * (1.0 + 5.0 * dy));
        }
    }
}
