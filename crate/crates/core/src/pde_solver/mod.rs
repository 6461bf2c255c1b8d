//! Ground-truth finite-volume solver for the (viscous) LWR model and the
//! Cole–Hopf reference solution it is checked against.
//!
//! The road is truncated to `[x_min, x_max]` with zero-gradient extension at
//! both ends. Each step is a conservative Godunov update for the convective
//! flux plus an explicit three-point diffusion term.

mod cole_hopf;
mod initial;

pub use cole_hopf::cole_hopf_oracle;
pub use initial::{InitialCondition, Piece, Profile};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traffic_model::ModelParams;

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    x_min: T,
    x_max: T,
    n_cells: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(x_min: T, x_max: T, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize(self.n_cells).unwrap()
    }

    pub fn center(&self, j: usize) -> T {
        self.x_min + (T::from_usize(j).unwrap() + T::lit(0.5)) * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n_cells).map(move |j| self.center(j))
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    fn check_inside(&self, x: T) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x: x.as_f64(),
                min: self.x_min.as_f64(),
                max: self.x_max.as_f64(),
            })
        }
    }
}

/// Cell averages of the density at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    grid: Grid<T>,
    values: Vec<T>,
    time: T,
}

impl<T: Scalar> DensityField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>, time: T) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::DensityOutOfRange(v.as_f64()));
        }
        Ok(Self { grid, values, time })
    }

    /// Exact cell averages of `ic`.
    pub fn from_initial(ic: &InitialCondition<T>, grid: Grid<T>) -> Self {
        let dx = grid.dx();
        let half = T::lit(0.5) * dx;
        let values = grid
            .centers()
            .map(|c| {
                let avg = (ic.cumulative(c + half) - ic.cumulative(c - half)) / dx;
                // rounding in the difference of primitives can leave the piece's range
                let (lo, hi) = ic.bounds_on(c - half, c + half);
                avg.max(lo).min(hi)
            })
            .collect();
        Self {
            grid,
            values,
            time: T::zero(),
        }
    }

    pub fn constant(grid: Grid<T>, value: T, time: T) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_cells()], time)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// `∑ ρ_j dx`
    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.dx()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Linear interpolation between cell centres, constant beyond the outer centres.
    pub fn value_at(&self, x: T) -> Result<T> {
        self.grid.check_inside(x)?;
        let dx = self.grid.dx();
        let s = (x - self.grid.x_min) / dx - T::lit(0.5);
        if s <= T::zero() {
            return Ok(self.values[0]);
        }
        let last = self.values.len() - 1;
        let j = s.floor().to_usize().unwrap_or(last);
        if j >= last {
            return Ok(self.values[last]);
        }
        let w = s - T::from_usize(j).unwrap();
        Ok(self.values[j] * (T::one() - w) + self.values[j + 1] * w)
    }
}

/// Largest stable step scaled by `safety`: `safety / (v_f/dx + 2γ/dx²)`.
pub fn cfl_timestep<T: Scalar>(grid: &Grid<T>, params: &ModelParams<T>, safety: T) -> T {
    let dx = grid.dx();
    safety / (params.v_f / dx + T::lit(2.0) * params.gamma / (dx * dx))
}

/// Convective fluxes through the two ends of the domain, `(at x_min, at x_max)`.
/// Diffusive boundary fluxes vanish under zero-gradient extension.
pub fn boundary_fluxes<T: Scalar>(field: &DensityField<T>, params: &ModelParams<T>) -> (T, T) {
    let v = field.values();
    (params.q(v[0]), params.q(v[v.len() - 1]))
}

fn check_cfl<T: Scalar>(grid: &Grid<T>, params: &ModelParams<T>, dt: T) -> Result<()> {
    let limit = cfl_timestep(grid, params, T::one());
    if !(dt > T::zero()) || dt > limit * (T::one() + T::lit(64.0) * T::epsilon()) {
        return Err(Error::CflViolation {
            dt: dt.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

fn update_into<T: Scalar>(values: &[T], dt: T, dx: T, params: &ModelParams<T>, out: &mut Vec<T>) {
    let n = values.len();
    let lambda = dt / dx;
    let mu = params.gamma * dt / (dx * dx);
    let flux = |k: usize| {
        // interface k sits between cells k-1 and k; ghosts copy the edge cells
        let l = values[k.saturating_sub(1)];
        let r = values[k.min(n - 1)];
        params.godunov_in_frame(l, r, T::zero())
    };
    out.clear();
    let mut f_left = flux(0);
    for j in 0..n {
        let f_right = flux(j + 1);
        let west = values[j.saturating_sub(1)];
        let east = values[(j + 1).min(n - 1)];
        let diffusion = mu * (east - values[j] - values[j] + west);
        out.push(values[j] - lambda * (f_right - f_left) + diffusion);
        f_left = f_right;
    }
}

/// Advances `field` by `dt`.
pub fn step<T: Scalar>(
    field: &DensityField<T>,
    dt: T,
    params: &ModelParams<T>,
) -> Result<DensityField<T>> {
    check_cfl(&field.grid, params, dt)?;
    let mut out = Vec::with_capacity(field.values.len());
    update_into(&field.values, dt, field.grid.dx(), params, &mut out);
    Ok(DensityField {
        grid: field.grid,
        values: out,
        time: field.time + dt,
    })
}

/// Stateful time stepper with a fixed CFL step, reused by coupled experiments.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    params: ModelParams<T>,
    dt: T,
    field: DensityField<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Solver<T> {
    pub fn new(field: DensityField<T>, params: ModelParams<T>, safety: T) -> Result<Self> {
        if !(safety > T::zero() && safety <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "CFL safety must lie in (0, 1], got {safety}"
            )));
        }
        let dt = cfl_timestep(&field.grid, &params, safety);
        Ok(Self {
            params,
            dt,
            field,
            scratch: Vec::new(),
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn field(&self) -> &DensityField<T> {
        &self.field
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// Advances by `dt` (at most the fixed step).
    pub fn advance(&mut self, dt: T) -> Result<()> {
        check_cfl(&self.field.grid, &self.params, dt)?;
        update_into(
            &self.field.values,
            dt,
            self.field.grid.dx(),
            &self.params,
            &mut self.scratch,
        );
        std::mem::swap(&mut self.field.values, &mut self.scratch);
        self.field.time = self.field.time + dt;
        Ok(())
    }

    /// Step length that lands exactly on `t_end` without exceeding the fixed step.
    pub fn next_dt(&self, t_end: T) -> T {
        let remaining = t_end - self.field.time;
        if remaining <= self.dt * (T::one() + T::lit(1e-9)) {
            remaining
        } else {
            self.dt
        }
    }
}

/// Runs the solver from `ic` to `t_end`, returning the initial field and one
/// snapshot per accepted step. Uses a CFL safety factor of 0.9.
pub fn simulate<T: Scalar>(
    ic: &InitialCondition<T>,
    grid: Grid<T>,
    params: &ModelParams<T>,
    t_end: T,
) -> Result<Vec<DensityField<T>>> {
    simulate_with_safety(ic, grid, params, t_end, T::lit(0.9))
}

pub fn simulate_with_safety<T: Scalar>(
    ic: &InitialCondition<T>,
    grid: Grid<T>,
    params: &ModelParams<T>,
    t_end: T,
    safety: T,
) -> Result<Vec<DensityField<T>>> {
    if !(t_end > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "t_end must be > 0, got {t_end}"
        )));
    }
    let mut solver = Solver::new(DensityField::from_initial(ic, grid), *params, safety)?;
    let mut out = vec![solver.field().clone()];
    while solver.field().time() < t_end {
        let dt = solver.next_dt(t_end);
        if dt <= T::zero() {
            break;
        }
        solver.advance(dt)?;
        out.push(solver.field().clone());
    }
    Ok(out)
}
