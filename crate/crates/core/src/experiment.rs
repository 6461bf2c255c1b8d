//! Coupled run: ground truth, probe fleet and observers advanced in lock-step.
//!
//! Every step moves the probes with the current field, advances the field,
//! takes readings at the new probe positions and feeds them to the observers.

use crate::analysis::{car_count, l2_norm, lyapunov_value, segment_errors, ErrorTrace};
use crate::error::{Error, Result};
use crate::observer::{
    default_m_cells, init_segment, init_segment_with_prior, step_segment, stitch, GlobalEstimate,
    ObserverMode, ObserverSegment,
};
use crate::pde_solver::{DensityField, Grid, InitialCondition, Solver};
use crate::probes::{advance_fleet, measure, ProbeFleet};
use crate::scalar::Scalar;
use crate::traffic_model::ModelParams;

/// Initial observer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prior {
    /// `ρ⁰(x_i⁰)` across segment `i`.
    #[default]
    Constant,
    /// The initial density itself (no initial error up to discretization).
    Truth,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig<T> {
    pub params: ModelParams<T>,
    pub grid: Grid<T>,
    pub ic: InitialCondition<T>,
    pub fleet: ProbeFleet<T>,
    pub mode: ObserverMode,
    pub horizon: T,
    pub safety: T,
    /// Observer cells per segment; `None` picks [`default_m_cells`].
    pub m_cells: Option<usize>,
    pub prior: Prior,
    /// Keep a truth/estimate snapshot every this many steps (and at both ends).
    pub save_every: usize,
    /// Weight rate of the Lyapunov functional; `None` records no functional.
    pub lyapunov_lambda: Option<T>,
    /// Minimum distance from the road ends, as a fraction of the road length.
    pub boundary_margin: T,
}

impl<T: Scalar> ExperimentConfig<T> {
    pub fn new(
        params: ModelParams<T>,
        grid: Grid<T>,
        ic: InitialCondition<T>,
        fleet: ProbeFleet<T>,
        horizon: T,
    ) -> Self {
        Self {
            mode: ObserverMode::for_params(&params),
            params,
            grid,
            ic,
            fleet,
            horizon,
            safety: T::lit(0.9),
            m_cells: None,
            prior: Prior::Constant,
            save_every: 20,
            lyapunov_lambda: None,
            boundary_margin: T::lit(0.02),
        }
    }
}

/// Per-step quantities, one entry per probe or per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub time: T,
    pub positions: Vec<T>,
    pub readings: Vec<T>,
    pub errors: Vec<T>,
    pub lyapunov: Vec<T>,
    pub car_counts: Vec<T>,
}

impl<T: Scalar> StepRecord<T> {
    pub fn spacings(&self) -> Vec<T> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub truth: DensityField<T>,
    pub estimate: GlobalEstimate<T>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRecord<T> {
    pub dt: T,
    pub steps: Vec<StepRecord<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub trace: ErrorTrace<T>,
    pub segments: Vec<ObserverSegment<T>>,
}

impl<T: Scalar> ExperimentRecord<T> {
    /// Largest probe spacing over the whole run.
    pub fn max_spacing(&self) -> T {
        self.steps
            .iter()
            .flat_map(|s| s.spacings())
            .fold(T::zero(), T::max)
    }

    /// `V_i(t)` series for segment `i` (1-based), if recorded.
    pub fn lyapunov_series(&self, i: usize) -> Vec<(T, T)> {
        self.steps
            .iter()
            .filter_map(|s| s.lyapunov.get(i - 1).map(|v| (s.time, *v)))
            .collect()
    }
}

fn check_margin<T: Scalar>(fleet: &ProbeFleet<T>, grid: &Grid<T>, margin: T) -> Result<()> {
    let band = margin * (grid.x_max() - grid.x_min());
    let (lo, hi) = (grid.x_min() + band, grid.x_max() - band);
    let x = fleet.positions();
    if x[0] < lo || x[x.len() - 1] > hi {
        return Err(Error::DomainMismatch(format!(
            "probes span [{}, {}] but must stay inside [{lo}, {hi}]",
            x[0],
            x[x.len() - 1]
        )));
    }
    Ok(())
}

fn record_step<T: Scalar>(
    cfg: &ExperimentConfig<T>,
    field: &DensityField<T>,
    fleet: &ProbeFleet<T>,
    readings: Vec<T>,
    estimate: &GlobalEstimate<T>,
) -> Result<StepRecord<T>> {
    let mut errors = Vec::with_capacity(fleet.segments());
    let mut lyapunov = Vec::new();
    let mut car_counts = Vec::with_capacity(fleet.segments());
    for (i, piece) in estimate.pieces().iter().enumerate() {
        let eps = segment_errors(field, estimate, i + 1)?;
        errors.push(l2_norm(&eps, piece.length()));
        if let Some(lambda) = cfg.lyapunov_lambda {
            lyapunov.push(lyapunov_value(&eps, lambda, piece.x_left, piece.x_right));
        }
        car_counts.push(car_count(field, piece.x_left, piece.x_right)?);
    }
    Ok(StepRecord {
        time: field.time(),
        positions: fleet.positions().to_vec(),
        readings,
        errors,
        lyapunov,
        car_counts,
    })
}

pub fn run_experiment<T: Scalar>(cfg: &ExperimentConfig<T>) -> Result<ExperimentRecord<T>> {
    if !(cfg.horizon > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "horizon must be > 0, got {}",
            cfg.horizon
        )));
    }
    let save_every = cfg.save_every.max(1);
    check_margin(&cfg.fleet, &cfg.grid, cfg.boundary_margin)?;

    let mut solver = Solver::new(
        DensityField::from_initial(&cfg.ic, cfg.grid),
        cfg.params,
        cfg.safety,
    )?;
    let mut fleet = cfg.fleet.clone();
    let mut segments = (1..=fleet.segments())
        .map(|i| {
            let len = fleet.spacing(i)?;
            let m = cfg
                .m_cells
                .unwrap_or_else(|| default_m_cells(len, cfg.grid.dx()));
            match cfg.prior {
                Prior::Constant => init_segment(i, &fleet, &cfg.ic, cfg.mode, m),
                Prior::Truth => {
                    init_segment_with_prior(i, &fleet, &cfg.ic, cfg.mode, m, |x| cfg.ic.value(x))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let initial_readings = measure(&fleet, solver.field())?.readings;
    let estimate = stitch(&segments, &fleet)?;
    let first = record_step(cfg, solver.field(), &fleet, initial_readings, &estimate)?;
    let mut trace = ErrorTrace::new();
    trace.push(first.time, first.errors.clone());
    let mut steps = vec![first];
    let mut snapshots = vec![Snapshot {
        truth: solver.field().clone(),
        estimate,
    }];

    let mut n = 0usize;
    while solver.field().time() < cfg.horizon {
        let dt = solver.next_dt(cfg.horizon);
        if dt <= T::zero() {
            break;
        }
        let next = advance_fleet(&fleet, solver.field(), dt, &cfg.params)?;
        check_margin(&next, &cfg.grid, cfg.boundary_margin)?;
        solver.advance(dt)?;
        let meas = measure(&next, solver.field())?;
        segments = segments
            .iter()
            .map(|s| step_segment(s, &meas, &fleet, &next, dt, &cfg.params))
            .collect::<Result<Vec<_>>>()?;
        fleet = next;
        n += 1;

        let estimate = stitch(&segments, &fleet)?;
        let rec = record_step(cfg, solver.field(), &fleet, meas.readings, &estimate)?;
        trace.push(rec.time, rec.errors.clone());
        steps.push(rec);
        let done = solver.field().time() >= cfg.horizon;
        if n.is_multiple_of(save_every) || done {
            snapshots.push(Snapshot {
                truth: solver.field().clone(),
                estimate,
            });
        }
    }

    Ok(ExperimentRecord {
        dt: solver.dt(),
        steps,
        snapshots,
        trace,
        segments,
    })
}
