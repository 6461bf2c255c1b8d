//! Probe vehicles: Lagrangian particles moving at the local traffic speed and
//! reporting the density at their position.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pde_solver::DensityField;
use crate::scalar::Scalar;
use crate::traffic_model::{Density, ModelParams};

/// Ordered probe positions `x_1 < … < x_N` with their measurement settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFleet<T> {
    positions: Vec<T>,
    measurement_noise: T,
    rng_seed: u64,
}

impl<T: Scalar> ProbeFleet<T> {
    pub fn new(positions: Vec<T>, measurement_noise: T, rng_seed: u64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidFleet(format!(
                "need at least 2 probes, got {}",
                positions.len()
            )));
        }
        if let Some(x) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidFleet(format!("non-finite position {x}")));
        }
        check_ordering(&positions)?;
        if !(measurement_noise >= T::zero()) {
            return Err(Error::InvalidFleet(format!(
                "measurement noise must be >= 0, got {measurement_noise}"
            )));
        }
        Ok(Self {
            positions,
            measurement_noise,
            rng_seed,
        })
    }

    /// Noise-free fleet.
    pub fn exact(positions: Vec<T>) -> Result<Self> {
        Self::new(positions, T::zero(), 0)
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn measurement_noise(&self) -> T {
        self.measurement_noise
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Number of observer segments, `N − 1`.
    pub fn segments(&self) -> usize {
        self.positions.len() - 1
    }

    /// `d_i = x_{i+1} − x_i` for the 1-based segment index `i`.
    pub fn spacing(&self, i: usize) -> Result<T> {
        if i == 0 || i > self.segments() {
            return Err(Error::SegmentIndex {
                index: i,
                max: self.segments(),
            });
        }
        Ok(self.positions[i] - self.positions[i - 1])
    }

    pub fn spacings(&self) -> Vec<T> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_spacing(&self) -> T {
        self.spacings().into_iter().fold(T::zero(), T::max)
    }
}

fn check_ordering<T: Scalar>(positions: &[T]) -> Result<()> {
    for (i, w) in positions.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::OrderingViolation {
                left: i + 1,
                right: i + 2,
                x_left: w[0].as_f64(),
                x_right: w[1].as_f64(),
            });
        }
    }
    Ok(())
}

/// Density readings of every probe at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    pub time: T,
    pub readings: Vec<T>,
}

impl<T: Scalar> MeasurementSet<T> {
    /// Reading of probe `k` (1-based, as in `x_k`).
    pub fn reading(&self, k: usize) -> T {
        self.readings[k - 1]
    }
}

/// Density at `x` by linear interpolation between cell centres.
pub fn sample_density<T: Scalar>(field: &DensityField<T>, x: T) -> Result<Density<T>> {
    let v = field.value_at(x)?;
    // interpolation of in-range cells stays in range up to rounding
    Density::new(v.max(T::zero()).min(T::one()))
}

/// One explicit Euler step of `ẋ_i = v_f (1 − ρ(t, x_i))`.
pub fn advance_fleet<T: Scalar>(
    fleet: &ProbeFleet<T>,
    field: &DensityField<T>,
    dt: T,
    params: &ModelParams<T>,
) -> Result<ProbeFleet<T>> {
    let positions = fleet
        .positions
        .iter()
        .map(|&x| Ok(x + dt * params.speed(sample_density(field, x)?.value())))
        .collect::<Result<Vec<_>>>()?;
    check_ordering(&positions)?;
    Ok(ProbeFleet {
        positions,
        measurement_noise: fleet.measurement_noise,
        rng_seed: fleet.rng_seed,
    })
}

/// Reads the density at every probe. With positive noise the perturbation is
/// Gaussian, drawn from a stream keyed by the seed and the field time, and the
/// noisy reading is clamped to `[0, 1]`.
pub fn measure<T: Scalar>(
    fleet: &ProbeFleet<T>,
    field: &DensityField<T>,
) -> Result<MeasurementSet<T>> {
    let mut readings = fleet
        .positions
        .iter()
        .map(|&x| sample_density(field, x).map(Density::value))
        .collect::<Result<Vec<_>>>()?;
    if fleet.measurement_noise > T::zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(fleet.rng_seed);
        rng.set_stream(field.time().as_f64().to_bits());
        let normal = Normal::new(0.0, fleet.measurement_noise.as_f64())
            .map_err(|e| Error::InvalidFleet(e.to_string()))?;
        for r in readings.iter_mut() {
            let noisy = *r + T::lit(normal.sample(&mut rng));
            *r = noisy.max(T::zero()).min(T::one());
        }
    }
    Ok(MeasurementSet {
        time: field.time(),
        readings,
    })
}
