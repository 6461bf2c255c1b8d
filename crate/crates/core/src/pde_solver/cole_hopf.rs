//! Closed-form viscous solution through the Cole–Hopf transformation.
//!
//! With `u = v_f (1 − 2ρ)` the model becomes `u_t + u u_x = γ u_xx`, and
//! `u = −2γ w_x / w` for the heat equation `w_t = γ w_xx` started from
//! `w₀(ξ) = exp(−(v_f / 2γ) (ξ − 2 R(ξ)))`, `R(ξ) = ∫₀^ξ ρ⁰`. Hence
//!
//! ```text
//! ρ(t, x) = 1/2 + (γ / v_f) w_x / w = 1/2 − I₁ / (2 v_f t I₀)
//! I_k = ∫ (x − ξ)^k exp(E(ξ)) dξ,  E(ξ) = −(v_f/2γ)(ξ − 2R(ξ)) − (x − ξ)² / (4γt)
//! ```

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::Scalar;
use crate::traffic_model::{Density, ModelParams};

use super::InitialCondition;

const PEAK_SAMPLES: usize = 400;
// integrand is below exp(-DROP) of its peak outside the window
const DROP: f64 = 40.0;

/// Evaluates the exact viscous solution at `(t, x)` by adaptive quadrature of
/// the heat-kernel convolution.
pub fn cole_hopf_oracle<T: Scalar>(
    ic: &InitialCondition<T>,
    t: T,
    x: T,
    params: &ModelParams<T>,
) -> Result<Density<T>> {
    let gamma = params.gamma;
    let v_f = params.v_f;
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParams(
            "the Cole-Hopf solution needs gamma > 0".into(),
        ));
    }
    if !(t > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "the Cole-Hopf solution needs t > 0, got {t}"
        )));
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let drift = v_f / (two * gamma);
    let exponent =
        |xi: T| -drift * (xi - two * ic.cumulative(xi)) - (x - xi) * (x - xi) / (four * gamma * t);

    // E' < 0 right of x + v_f t and > 0 left of x - v_f t, so the peak lies in between.
    let band = v_f * t;
    let mut peak = T::neg_infinity();
    let n = T::from_usize(PEAK_SAMPLES).unwrap();
    for k in 0..=PEAK_SAMPLES {
        let xi = x - band + two * band * T::from_usize(k).unwrap() / n;
        peak = peak.max(exponent(xi));
    }
    for b in ic.breakpoints() {
        if (b - x).abs() <= band {
            peak = peak.max(exponent(b));
        }
    }

    // Outside this half-width E(ξ) <= E(x) - DROP <= peak - DROP.
    let half_width = band + (band * band + four * T::lit(DROP) * gamma * t).sqrt();
    let (lo, hi) = (x - half_width, x + half_width);
    let mut nodes = vec![lo];
    nodes.extend(ic.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    nodes.push(hi);

    let rel_tol = (T::epsilon() * T::lit(1e5)).max(T::lit(1e-11));
    let mut i0 = T::zero();
    let mut i1 = T::zero();
    let mut err = T::zero();
    for w in nodes.windows(2) {
        let q = integrate(
            |xi: T| {
                let k = (exponent(xi) - peak).exp();
                [k, (x - xi) * k]
            },
            w[0],
            w[1],
            T::min_positive_value(),
            rel_tol,
            2000,
        );
        if !q.converged {
            return Err(Error::QuadratureNonConvergence {
                x: x.as_f64(),
                t: t.as_f64(),
                estimate: q.error.as_f64(),
            });
        }
        i0 = i0 + q.value[0];
        i1 = i1 + q.value[1];
        err = err + q.error;
    }
    if !(i0 > T::zero()) {
        return Err(Error::QuadratureNonConvergence {
            x: x.as_f64(),
            t: t.as_f64(),
            estimate: err.as_f64(),
        });
    }
    let rho = T::lit(0.5) - i1 / (two * v_f * t * i0);
    // quadrature rounding only; the exact value obeys the maximum principle
    Density::new(rho.max(T::zero()).min(T::one()))
}
