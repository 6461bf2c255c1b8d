//! Greenshields fundamental diagram and the exact Godunov flux built on it.
//!
//! Densities are dimensionless occupancies in `[0, 1]`, speeds are km/h and
//! the diffusion coefficient is km²/h.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Free-flow speed and diffusion of the (viscous) LWR model.
///
/// `gamma == 0` selects the inviscid code paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub v_f: T,
    pub gamma: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(v_f: T, gamma: T) -> Result<Self> {
        if !(v_f > T::zero()) || !v_f.is_finite() {
            return Err(Error::InvalidParams(format!("v_f must be > 0, got {v_f}")));
        }
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(Self { v_f, gamma })
    }

    pub fn is_inviscid(&self) -> bool {
        self.gamma == T::zero()
    }

    /// `Q(ρ) = v_f ρ (1 − ρ)`, no range check.
    #[inline]
    pub fn q(&self, rho: T) -> T {
        self.v_f * rho * (T::one() - rho)
    }

    /// `V_a(ρ) = v_f (1 − ρ)`, no range check.
    #[inline]
    pub fn speed(&self, rho: T) -> T {
        self.v_f * (T::one() - rho)
    }

    /// `Q'(ρ) = v_f (1 − 2ρ)`, no range check.
    #[inline]
    pub fn wave_speed(&self, rho: T) -> T {
        self.v_f * (T::one() - rho - rho)
    }

    /// Exact Riemann flux of `g(ρ) = Q(ρ) − s·ρ`, the flux seen from a frame
    /// moving at speed `s`. With `s = 0` this is the usual Godunov flux.
    #[inline]
    pub fn godunov_in_frame(&self, left: T, right: T, frame_speed: T) -> T {
        let half = T::lit(0.5);
        let peak = (half * (T::one() - frame_speed / self.v_f))
            .max(T::zero())
            .min(T::one());
        let g = |r: T| self.q(r) - frame_speed * r;
        let demand = g(left.min(peak));
        let supply = g(right.max(peak));
        demand.min(supply)
    }
}

/// A validated density in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Density<T>(T);

impl<T: Scalar> Density<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::DensityOutOfRange(value.as_f64()))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Critical density, where the flow peaks and the wave speed vanishes.
pub fn critical_density<T: Scalar>() -> T {
    T::lit(0.5)
}

pub fn flux<T: Scalar>(rho: Density<T>, params: &ModelParams<T>) -> T {
    params.q(rho.value())
}

pub fn avg_speed<T: Scalar>(rho: Density<T>, params: &ModelParams<T>) -> T {
    params.speed(rho.value())
}

pub fn char_speed<T: Scalar>(rho: Density<T>, params: &ModelParams<T>) -> T {
    params.wave_speed(rho.value())
}

/// Godunov flux in demand/supply form:
/// `min(Q(min(ρ_L, ρ_cr)), Q(max(ρ_R, ρ_cr)))`.
pub fn godunov_flux<T: Scalar>(left: Density<T>, right: Density<T>, params: &ModelParams<T>) -> T {
    params.godunov_in_frame(left.value(), right.value(), T::zero())
}

/// Range-checking variants operating on raw scalars.
pub mod checked {
    use super::*;

    pub fn flux<T: Scalar>(rho: T, params: &ModelParams<T>) -> Result<T> {
        Ok(super::flux(Density::new(rho)?, params))
    }

    pub fn avg_speed<T: Scalar>(rho: T, params: &ModelParams<T>) -> Result<T> {
        Ok(super::avg_speed(Density::new(rho)?, params))
    }

    pub fn char_speed<T: Scalar>(rho: T, params: &ModelParams<T>) -> Result<T> {
        Ok(super::char_speed(Density::new(rho)?, params))
    }

    pub fn godunov_flux<T: Scalar>(left: T, right: T, params: &ModelParams<T>) -> Result<T> {
        Ok(super::godunov_flux(
            Density::new(left)?,
            Density::new(right)?,
            params,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(v_f: f64) -> ModelParams<f64> {
        ModelParams::new(v_f, 0.0).unwrap()
    }

    fn d(x: f64) -> Density<f64> {
        Density::new(x).unwrap()
    }

    /// Flux through `x = 0` of the self-similar Riemann solution, sampled
    /// directly from the shock / rarefaction structure.
    fn riemann_oracle(left: f64, right: f64, params: &ModelParams<f64>) -> f64 {
        let state = if left < right {
            let sigma = (params.q(right) - params.q(left)) / (right - left);
            if sigma >= 0.0 {
                left
            } else {
                right
            }
        } else if params.wave_speed(left) >= 0.0 {
            left
        } else if params.wave_speed(right) <= 0.0 {
            right
        } else {
            0.5
        };
        params.q(state)
    }

    #[test]
    fn flux_examples() {
        assert_abs_diff_eq!(flux(d(0.5), &p(70.0)), 17.5, epsilon = 1e-12);
        assert_eq!(flux(d(0.0), &p(33.0)), 0.0);
        assert_eq!(flux(d(1.0), &p(33.0)), 0.0);
    }

    #[test]
    fn speed_examples() {
        assert_eq!(avg_speed(d(0.0), &p(70.0)), 70.0);
        assert_eq!(avg_speed(d(1.0), &p(70.0)), 0.0);
        assert_eq!(avg_speed(d(0.5), &p(70.0)), 35.0);
        assert_eq!(char_speed(d(0.5), &p(70.0)), 0.0);
        assert_eq!(char_speed(d(0.0), &p(70.0)), 70.0);
        assert_eq!(char_speed(d(0.75), &p(70.0)), -35.0);
    }

    #[test]
    fn godunov_examples() {
        let params = p(1.0);
        assert_abs_diff_eq!(godunov_flux(d(0.2), d(0.2), &params), 0.16, epsilon = 1e-15);
        for (l, r, expected) in [(0.3, 0.7, 0.21), (0.7, 0.3, 0.25)] {
            let oracle = riemann_oracle(l, r, &params);
            assert_abs_diff_eq!(oracle, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(godunov_flux(d(l), d(r), &params), oracle, epsilon = 1e-15);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let params = p(70.0);
        assert!(matches!(
            checked::flux(1.2, &params),
            Err(Error::DensityOutOfRange(_))
        ));
        assert!(checked::avg_speed(-0.1, &params).is_err());
        assert!(checked::char_speed(f64::NAN, &params).is_err());
        assert!(checked::godunov_flux(0.5, 1.5, &params).is_err());
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(70.0, -1.0).is_err());
    }

    #[test]
    fn godunov_matches_riemann_oracle_on_grid() {
        let params = p(70.0);
        for i in 0..=40 {
            for j in 0..=40 {
                let (l, r) = (i as f64 / 40.0, j as f64 / 40.0);
                let g = godunov_flux(d(l), d(r), &params);
                assert_abs_diff_eq!(g, riemann_oracle(l, r, &params), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn godunov_is_monotone() {
        let params = p(70.0);
        let n = 100;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        for &l in &grid {
            for w in grid.windows(2) {
                // non-increasing in the right state
                assert!(
                    godunov_flux(d(l), d(w[1]), &params) <= godunov_flux(d(l), d(w[0]), &params)
                );
                // non-decreasing in the left state
                assert!(
                    godunov_flux(d(w[1]), d(l), &params) >= godunov_flux(d(w[0]), d(l), &params)
                );
            }
        }
    }

    #[test]
    fn frame_flux_is_exact_riemann_flux_of_shifted_flux() {
        let params = p(70.0);
        for s in [-20.0, 0.0, 10.0, 35.0, 69.0, 90.0] {
            for i in 0..=20 {
                for j in 0..=20 {
                    let (l, r) = (i as f64 / 20.0, j as f64 / 20.0);
                    let g = |x: f64| params.q(x) - s * x;
                    // exact Riemann state at x/t = 0 for the concave flux g
                    let state = if l < r {
                        if (g(r) - g(l)) / (r - l) >= 0.0 {
                            l
                        } else {
                            r
                        }
                    } else {
                        let c = |x: f64| params.wave_speed(x) - s;
                        if c(l) >= 0.0 {
                            l
                        } else if c(r) <= 0.0 {
                            r
                        } else {
                            0.5 * (1.0 - s / 70.0)
                        }
                    };
                    assert_abs_diff_eq!(
                        params.godunov_in_frame(l, r, s),
                        g(state),
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let params = ModelParams::<f32>::new(70.0, 0.0).unwrap();
        let half = Density::new(0.5f32).unwrap();
        assert_eq!(flux(half, &params), 17.5f32);
        assert_eq!(
            godunov_flux(
                Density::new(0.7f32).unwrap(),
                Density::new(0.3f32).unwrap(),
                &params
            ),
            17.5
        );
    }

    proptest! {
        #[test]
        fn flux_symmetric(rho in 0.0f64..=1.0, v_f in 1.0f64..200.0) {
            let params = p(v_f);
            prop_assert!((flux(d(rho), &params) - flux(d(1.0 - rho), &params)).abs() <= 1e-12 * v_f);
        }

        #[test]
        fn godunov_consistent(rho in 0.0f64..=1.0, v_f in 1.0f64..200.0) {
            let params = p(v_f);
            prop_assert!((godunov_flux(d(rho), d(rho), &params) - flux(d(rho), &params)).abs() <= 1e-12 * v_f);
        }

        #[test]
        fn char_speed_is_flux_derivative(rho in 0.01f64..0.99, v_f in 1.0f64..200.0) {
            let params = p(v_f);
            let h = 1e-6;
            let fd = (params.q(rho + h) - params.q(rho - h)) / (2.0 * h);
            let exact = char_speed(d(rho), &params);
            // relative to the speed scale so the zero at rho = 0.5 is handled
            prop_assert!((fd - exact).abs() <= 1e-6 * v_f);
        }
    }
}
