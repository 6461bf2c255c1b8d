//! Moving-boundary observers between consecutive probes.
//!
//! Segment `i` lives on `[x_i(t), x_{i+1}(t)]`. It is solved on the fixed
//! interval `y ∈ [0, 1]` through `x = x_i(t) + y d_i(t)`, where the density
//! obeys the conservative law
//!
//! ```text
//! ∂t (d v) + ∂y [Q(v) − (ẋ_i + y ḋ_i) v] = (γ / d) ∂yy v
//! ```
//!
//! The flux is upwinded with the exact Godunov flux of `Q(v) − s v` for the
//! local frame speed `s`. In viscous mode both ends carry the probes'
//! readings; in inviscid mode only the right (downstream) end does and the
//! left end is an outflow boundary.

use crate::error::{Error, Result};
use crate::pde_solver::InitialCondition;
use crate::probes::{MeasurementSet, ProbeFleet};
use crate::scalar::Scalar;
use crate::traffic_model::{Density, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObserverMode {
    /// Diffusion plus readings at both ends.
    Viscous,
    /// Pure transport, reading at the right end only.
    Inviscid,
}

impl ObserverMode {
    /// Mode matching the model: inviscid when `γ = 0`.
    pub fn for_params<T: Scalar>(params: &ModelParams<T>) -> Self {
        if params.is_inviscid() {
            ObserverMode::Inviscid
        } else {
            ObserverMode::Viscous
        }
    }
}

/// Boundary data an observer step consumes. The inviscid variant has no
/// left value, so the left probe's reading cannot reach the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData<T> {
    Viscous { left: T, right: T },
    Inviscid { right: T },
}

impl<T: Scalar> BoundaryData<T> {
    fn right(&self) -> T {
        match *self {
            BoundaryData::Viscous { right, .. } | BoundaryData::Inviscid { right } => right,
        }
    }
}

/// Observer state for one pair of consecutive probes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSegment<T> {
    index: usize,
    x_left: T,
    x_right: T,
    values: Vec<T>,
    left_value: T,
    right_value: T,
    mode: ObserverMode,
    time: T,
    substeps: usize,
}

impl<T: Scalar> ObserverSegment<T> {
    /// 1-based segment index `i` (between probes `i` and `i + 1`).
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn x_left(&self) -> T {
        self.x_left
    }

    pub fn x_right(&self) -> T {
        self.x_right
    }

    pub fn length(&self) -> T {
        self.x_right - self.x_left
    }

    /// Estimate on the `y`-cells.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn m_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dy(&self) -> T {
        T::one() / T::from_usize(self.values.len()).unwrap()
    }

    /// Value at `y = 0`: the left reading (viscous) or the upwind extrapolation (inviscid).
    pub fn left_value(&self) -> T {
        self.left_value
    }

    /// Value at `y = 1`: always the right probe's latest reading.
    pub fn right_value(&self) -> T {
        self.right_value
    }

    pub fn mode(&self) -> ObserverMode {
        self.mode
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Sub-steps used by the last call to [`step_segment`].
    pub fn last_substeps(&self) -> usize {
        self.substeps
    }

    /// Road coordinate of cell `k`'s centre.
    pub fn cell_position(&self, k: usize) -> T {
        let y = (T::from_usize(k).unwrap() + T::lit(0.5)) * self.dy();
        self.x_left + y * self.length()
    }

    /// Piecewise-linear reconstruction through `(0, left)`, the cell centres and `(1, right)`.
    pub fn value_at_y(&self, y: T) -> T {
        reconstruct(self.left_value, &self.values, self.right_value, y)
    }

    fn boundary_data(&self, meas: &MeasurementSet<T>) -> BoundaryData<T> {
        let right = meas.reading(self.index + 1);
        match self.mode {
            ObserverMode::Viscous => BoundaryData::Viscous {
                left: meas.reading(self.index),
                right,
            },
            ObserverMode::Inviscid => BoundaryData::Inviscid { right },
        }
    }
}

fn reconstruct<T: Scalar>(left: T, values: &[T], right: T, y: T) -> T {
    let m = values.len();
    let s = y * T::from_usize(m).unwrap() - T::lit(0.5);
    if s < T::zero() {
        let w = (s + T::lit(0.5)) / T::lit(0.5);
        return left * (T::one() - w) + values[0] * w;
    }
    let j = s.floor().to_usize().unwrap_or(m);
    if j >= m - 1 {
        let w = ((s - T::from_usize(m - 1).unwrap()) / T::lit(0.5)).min(T::one());
        return values[m - 1] * (T::one() - w) + right * w;
    }
    let w = s - T::from_usize(j).unwrap();
    values[j] * (T::one() - w) + values[j + 1] * w
}

/// Default resolution: one observer cell per ground-truth cell, at least 8.
pub fn default_m_cells<T: Scalar>(initial_length: T, dx: T) -> usize {
    (initial_length / dx).round().to_usize().unwrap_or(0).max(8)
}

/// Observer for segment `i` started from the constant `ρ⁰(x_i⁰)`.
pub fn init_segment<T: Scalar>(
    i: usize,
    fleet: &ProbeFleet<T>,
    ic: &InitialCondition<T>,
    mode: ObserverMode,
    m_cells: usize,
) -> Result<ObserverSegment<T>> {
    let fill = ic.value(segment_bounds(i, fleet)?.0);
    init_segment_with_prior(i, fleet, ic, mode, m_cells, |_| fill)
}

/// Observer for segment `i` started from an arbitrary prior `x ↦ ρ̂(0, x)`.
/// Boundary values start at the initial density at the two probes.
pub fn init_segment_with_prior<T: Scalar>(
    i: usize,
    fleet: &ProbeFleet<T>,
    ic: &InitialCondition<T>,
    mode: ObserverMode,
    m_cells: usize,
    prior: impl Fn(T) -> T,
) -> Result<ObserverSegment<T>> {
    let (x_left, x_right) = segment_bounds(i, fleet)?;
    if m_cells < 2 {
        return Err(Error::InvalidParams(format!(
            "observer needs at least 2 cells, got {m_cells}"
        )));
    }
    let mut seg = ObserverSegment {
        index: i,
        x_left,
        x_right,
        values: Vec::with_capacity(m_cells),
        left_value: ic.value(x_left),
        right_value: ic.value(x_right),
        mode,
        time: T::zero(),
        substeps: 0,
    };
    let len = x_right - x_left;
    let mf = T::from_usize(m_cells).unwrap();
    for k in 0..m_cells {
        let x = x_left + (T::from_usize(k).unwrap() + T::lit(0.5)) / mf * len;
        seg.values.push(Density::new(prior(x))?.value());
    }
    if mode == ObserverMode::Inviscid {
        seg.left_value = seg.values[0];
    }
    Ok(seg)
}

fn segment_bounds<T: Scalar>(i: usize, fleet: &ProbeFleet<T>) -> Result<(T, T)> {
    if i == 0 || i > fleet.segments() {
        return Err(Error::SegmentIndex {
            index: i,
            max: fleet.segments(),
        });
    }
    let x = fleet.positions();
    Ok((x[i - 1], x[i]))
}

/// `v_f(1 − 2v) − v_f(1 − ρ_frame)`: characteristic speed seen from a vehicle
/// driving at the traffic speed of `rho_frame`.
pub fn relative_char_speed<T: Scalar>(
    v: Density<T>,
    rho_frame: Density<T>,
    params: &ModelParams<T>,
) -> T {
    params.wave_speed(v.value()) - params.speed(rho_frame.value())
}

/// Largest stable observer step for the given geometry and state:
/// `safety / (max|a|/dy + 2γ/(d dy)²)` with `a = (v_f(1 − 2v) − s) / d`.
pub fn observer_cfl<T: Scalar>(
    values: &[T],
    boundary: (T, T),
    d: T,
    frame_speeds: (T, T),
    gamma: T,
    params: &ModelParams<T>,
    safety: T,
) -> T {
    let dy = T::one() / T::from_usize(values.len()).unwrap();
    let (s_lo, s_hi) = (
        frame_speeds.0.min(frame_speeds.1),
        frame_speeds.0.max(frame_speeds.1),
    );
    let max_speed = values
        .iter()
        .chain([boundary.0, boundary.1].iter())
        .map(|&v| {
            let c = params.wave_speed(v);
            (c - s_lo).abs().max((c - s_hi).abs())
        })
        .fold(T::zero(), T::max);
    let h = d * dy;
    let denom = max_speed / h + T::lit(2.0) * gamma / (h * h);
    if denom > T::zero() {
        safety / denom
    } else {
        T::infinity()
    }
}

const OBSERVER_SAFETY: f64 = 0.9;

/// Advances segment `seg` from the geometry of `before` to that of `after`
/// over `dt`, using the readings `meas` taken at the new probe positions.
pub fn step_segment<T: Scalar>(
    seg: &ObserverSegment<T>,
    meas: &MeasurementSet<T>,
    before: &ProbeFleet<T>,
    after: &ProbeFleet<T>,
    dt: T,
    params: &ModelParams<T>,
) -> Result<ObserverSegment<T>> {
    let (xl0, xr0) = segment_bounds(seg.index, before)?;
    let (xl1, xr1) = segment_bounds(seg.index, after)?;
    if meas.readings.len() != after.len() {
        return Err(Error::DomainMismatch(format!(
            "{} readings for {} probes",
            meas.readings.len(),
            after.len()
        )));
    }
    if !(xr1 > xl1) || !(xr0 > xl0) {
        return Err(Error::OrderingViolation {
            left: seg.index,
            right: seg.index + 1,
            x_left: xl1.as_f64(),
            x_right: xr1.as_f64(),
        });
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "observer step needs dt > 0, got {dt}"
        )));
    }
    let data = seg.boundary_data(meas);
    advance(seg, &data, (xl0, xr0), (xl1, xr1), dt, params)
}

/// Scheme core. Only the values carried by `data` enter the update.
fn advance<T: Scalar>(
    seg: &ObserverSegment<T>,
    data: &BoundaryData<T>,
    (xl0, xr0): (T, T),
    (xl1, xr1): (T, T),
    dt: T,
    params: &ModelParams<T>,
) -> Result<ObserverSegment<T>> {
    let m = seg.values.len();
    let mf = T::from_usize(m).unwrap();
    let dy = T::one() / mf;
    let left_speed = (xl1 - xl0) / dt;
    let right_speed = (xr1 - xr0) / dt;
    let growth = right_speed - left_speed;
    let d0 = xr0 - xl0;
    let gamma = match seg.mode {
        ObserverMode::Viscous => params.gamma,
        ObserverMode::Inviscid => T::zero(),
    };
    let right = data.right();
    let left_bc = match *data {
        BoundaryData::Viscous { left, .. } => Some(left),
        BoundaryData::Inviscid { .. } => None,
    };

    let d_min = d0.min(xr1 - xl1);
    let probe_left = left_bc.unwrap_or(seg.values[0]);
    let limit = observer_cfl(
        &seg.values,
        (probe_left, right),
        d_min,
        (left_speed, right_speed),
        gamma,
        params,
        T::lit(OBSERVER_SAFETY),
    );
    let n_sub = (dt / limit).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    if n_sub > 1_000_000 {
        return Err(Error::CflViolation {
            dt: dt.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let h = dt / T::from_usize(n_sub).unwrap();

    let mut v = seg.values.clone();
    let mut next = vec![T::zero(); m];
    let mut fluxes = vec![T::zero(); m + 1];
    let mut d = d0;
    for _ in 0..n_sub {
        let d_next = d + h * growth;
        let ghost_left = left_bc.unwrap_or(v[0]);
        for (k, f) in fluxes.iter_mut().enumerate() {
            let y = T::from_usize(k).unwrap() * dy;
            let frame = left_speed + y * growth;
            let l = if k == 0 { ghost_left } else { v[k - 1] };
            let r = if k == m { right } else { v[k] };
            *f = params.godunov_in_frame(l, r, frame);
        }
        let mu = gamma * h / (d * dy * dy);
        for k in 0..m {
            let west = if k == 0 { ghost_left } else { v[k - 1] };
            let east = if k == m - 1 { right } else { v[k + 1] };
            let mass =
                d * v[k] - h / dy * (fluxes[k + 1] - fluxes[k]) + mu * (east - v[k] - v[k] + west);
            next[k] = mass / d_next;
        }
        std::mem::swap(&mut v, &mut next);
        d = d_next;
    }

    let left_value = left_bc.unwrap_or(v[0]);
    Ok(ObserverSegment {
        index: seg.index,
        x_left: xl1,
        x_right: xr1,
        values: v,
        left_value,
        right_value: right,
        mode: seg.mode,
        time: seg.time + dt,
        substeps: n_sub,
    })
}

/// One stitched piece of the global estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePiece<T> {
    pub x_left: T,
    pub x_right: T,
    pub left_value: T,
    pub right_value: T,
    pub values: Vec<T>,
}

impl<T: Scalar> EstimatePiece<T> {
    pub fn length(&self) -> T {
        self.x_right - self.x_left
    }

    pub fn dy(&self) -> T {
        T::one() / T::from_usize(self.values.len()).unwrap()
    }

    /// Road positions of the cell centres.
    pub fn cell_positions(&self) -> impl Iterator<Item = T> + '_ {
        let dy = self.dy();
        (0..self.values.len()).map(move |k| {
            self.x_left + (T::from_usize(k).unwrap() + T::lit(0.5)) * dy * self.length()
        })
    }

    fn value_at_y(&self, y: T) -> T {
        reconstruct(self.left_value, &self.values, self.right_value, y)
    }
}

/// Density estimate on `[x_1(t), x_N(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalEstimate<T> {
    pieces: Vec<EstimatePiece<T>>,
}

impl<T: Scalar> GlobalEstimate<T> {
    pub fn pieces(&self) -> &[EstimatePiece<T>] {
        &self.pieces
    }

    /// Piece for the 1-based segment index.
    pub fn piece(&self, i: usize) -> Option<&EstimatePiece<T>> {
        i.checked_sub(1).and_then(|k| self.pieces.get(k))
    }

    pub fn extent(&self) -> (T, T) {
        (
            self.pieces[0].x_left,
            self.pieces[self.pieces.len() - 1].x_right,
        )
    }

    /// Estimate at road position `x`. Segment `i` owns `(x_i, x_{i+1}]`, and
    /// the first segment also owns `x_1`, so probe positions return the
    /// reading carried by the segment on their left.
    pub fn value_at(&self, x: T) -> Result<T> {
        let (lo, hi) = self.extent();
        if x < lo || x > hi {
            return Err(Error::OutOfDomain {
                x: x.as_f64(),
                min: lo.as_f64(),
                max: hi.as_f64(),
            });
        }
        let piece = self
            .pieces
            .iter()
            .find(|p| x <= p.x_right)
            .unwrap_or(&self.pieces[self.pieces.len() - 1]);
        let y = ((x - piece.x_left) / piece.length())
            .max(T::zero())
            .min(T::one());
        Ok(piece.value_at_y(y))
    }
}

/// Assembles the segment estimates into one estimate on `[x_1, x_N]`.
pub fn stitch<T: Scalar>(
    segments: &[ObserverSegment<T>],
    fleet: &ProbeFleet<T>,
) -> Result<GlobalEstimate<T>> {
    if segments.len() != fleet.segments() {
        return Err(Error::Stitch(format!(
            "{} segments for {} probes",
            segments.len(),
            fleet.len()
        )));
    }
    let x = fleet.positions();
    let mut pieces = Vec::with_capacity(segments.len());
    for (k, seg) in segments.iter().enumerate() {
        if seg.index != k + 1 {
            return Err(Error::Stitch(format!(
                "segment {} found at slot {}",
                seg.index,
                k + 1
            )));
        }
        let scale = T::one().max(x[k].abs()).max(x[k + 1].abs());
        let tol = T::lit(1e3) * T::epsilon() * scale;
        if (seg.x_left - x[k]).abs() > tol || (seg.x_right - x[k + 1]).abs() > tol {
            return Err(Error::Stitch(format!(
                "segment {} spans [{}, {}] but probes sit at [{}, {}]",
                seg.index,
                seg.x_left,
                seg.x_right,
                x[k],
                x[k + 1]
            )));
        }
        pieces.push(EstimatePiece {
            x_left: x[k],
            x_right: x[k + 1],
            left_value: seg.left_value,
            right_value: seg.right_value,
            values: seg.values.clone(),
        });
    }
    Ok(GlobalEstimate { pieces })
}
