//! CSV and SVG emission.
//!
//! Numbers are written with `Display`, which for `f32`/`f64` is the shortest
//! representation that parses back to the same value.
//!
//! Heatmaps use a fixed 256-entry ramp interpolated linearly between the
//! anchors in [`RAMP_ANCHORS`] (dark blue, teal, green, yellow), low to high.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::experiment::{Snapshot, StepRecord};
use crate::scalar::Scalar;
use crate::stability::FeasibilityMap;

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn num<T: Scalar>(x: T) -> String {
    x.to_string()
}

/// Ground truth: `t,x,rho` at every solver cell centre.
pub fn write_truth<T: Scalar, W: Write>(w: W, snapshots: &[Snapshot<T>]) -> Result<()> {
    let mut out = writer(w, &["t", "x", "rho"])?;
    for s in snapshots {
        let t = num(s.truth.time());
        for (x, rho) in s.truth.grid().centers().zip(s.truth.values()) {
            out.write_record([t.as_str(), &num(x), &num(*rho)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Estimate: `t,x,rho_hat` at every observer cell centre, segments left to right.
pub fn write_estimates<T: Scalar, W: Write>(w: W, snapshots: &[Snapshot<T>]) -> Result<()> {
    let mut out = writer(w, &["t", "x", "rho_hat"])?;
    for s in snapshots {
        let t = num(s.truth.time());
        for piece in s.estimate.pieces() {
            for (x, v) in piece.cell_positions().zip(&piece.values) {
                out.write_record([t.as_str(), &num(x), &num(*v)])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Probe trajectories: `t,pv_index,x,rho_measured`, 1-based probe index.
pub fn write_trajectories<T: Scalar, W: Write>(w: W, steps: &[StepRecord<T>]) -> Result<()> {
    let mut out = writer(w, &["t", "pv_index", "x", "rho_measured"])?;
    for s in steps {
        let t = num(s.time);
        for (k, (x, r)) in s.positions.iter().zip(&s.readings).enumerate() {
            out.write_record([t.as_str(), &(k + 1).to_string(), &num(*x), &num(*r)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Per-segment diagnostics: `t,i,x_left,x_right,d_i,err_L2`.
pub fn write_segment_diagnostics<T: Scalar, W: Write>(w: W, steps: &[StepRecord<T>]) -> Result<()> {
    let mut out = writer(w, &["t", "i", "x_left", "x_right", "d_i", "err_L2"])?;
    for s in steps {
        let t = num(s.time);
        for (i, e) in s.errors.iter().enumerate() {
            let (a, b) = (s.positions[i], s.positions[i + 1]);
            out.write_record([
                t.as_str(),
                &(i + 1).to_string(),
                &num(a),
                &num(b),
                &num(b - a),
                &num(*e),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Error trace: `t,segment,err_L2,V,envelope_bound`.
///
/// `V` is empty when the run recorded no Lyapunov functional; the bound
/// `K ‖ε(0)‖_i e^{−α t}` is empty without `(K, α)`.
pub fn write_error_trace<T: Scalar, W: Write>(
    w: W,
    steps: &[StepRecord<T>],
    envelope: Option<(T, T)>,
) -> Result<()> {
    let mut out = writer(w, &["t", "segment", "err_L2", "V", "envelope_bound"])?;
    let (t0, e0) = match steps.first() {
        Some(s) => (s.time, s.errors.clone()),
        None => return Ok(out.flush()?),
    };
    for s in steps {
        let t = num(s.time);
        for (i, e) in s.errors.iter().enumerate() {
            let v = s.lyapunov.get(i).map(|v| num(*v)).unwrap_or_default();
            let bound = envelope
                .map(|(k, alpha)| num(k * e0[i] * (-alpha * (s.time - t0)).exp()))
                .unwrap_or_default();
            out.write_record([t.as_str(), &(i + 1).to_string(), &num(*e), &v, &bound])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Distances between consecutive probes: `t,i,distance` for the pair `(i, i+1)`.
pub fn write_distances<T: Scalar, W: Write>(w: W, steps: &[StepRecord<T>]) -> Result<()> {
    let mut out = writer(w, &["t", "i", "distance"])?;
    for s in steps {
        let t = num(s.time);
        for (i, d) in s.spacings().into_iter().enumerate() {
            out.write_record([t.as_str(), &(i + 1).to_string(), &num(d)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Feasibility map: `rho_min,rho_max,d_M_max`.
pub fn write_map<T: Scalar, W: Write>(w: W, map: &FeasibilityMap<T>) -> Result<()> {
    let mut out = writer(w, &["rho_min", "rho_max", "d_M_max"])?;
    for c in &map.cells {
        out.write_record([num(c.rho_min), num(c.rho_max), num(c.d_m_max)])?;
    }
    out.flush()?;
    Ok(())
}

pub const RAMP_ANCHORS: [(u8, u8, u8); 4] =
    [(33, 44, 110), (32, 140, 150), (90, 190, 90), (250, 230, 60)];

/// Colour of ramp entry `k` in `0..256`.
pub fn ramp(k: u8) -> (u8, u8, u8) {
    let pos = f64::from(k) / 255.0 * (RAMP_ANCHORS.len() - 1) as f64;
    let j = (pos.floor() as usize).min(RAMP_ANCHORS.len() - 2);
    let f = pos - j as f64;
    let (a, b) = (RAMP_ANCHORS[j], RAMP_ANCHORS[j + 1]);
    let mix = |p: u8, q: u8| (f64::from(p) + f * (f64::from(q) - f64::from(p))).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn ramp_index(v: f64, lo: f64, hi: f64) -> u8 {
    if hi > lo {
        ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
    } else {
        0
    }
}

/// Axis-aligned rectangle in data coordinates with its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub cells: Vec<HeatCell>,
    /// Colour range; `None` uses the data range.
    pub range: Option<(f64, f64)>,
}

const PLOT_W: f64 = 560.0;
const PLOT_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 40.0;
const BAR_X: f64 = MARGIN_L + PLOT_W + 30.0;

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let finite = self.cells.iter().map(|c| c.value).filter(|v| v.is_finite());
        let (lo, hi) = self.range.unwrap_or_else(|| {
            finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            })
        });
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        let bounds = self.cells.iter().fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |b, c| (b.0.min(c.x0), b.1.max(c.x1), b.2.min(c.y0), b.3.max(c.y1)),
        );
        let (x_lo, x_hi, y_lo, y_hi) = if bounds.0.is_finite() {
            bounds
        } else {
            (0.0, 1.0, 0.0, 1.0)
        };
        let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo).max(f64::MIN_POSITIVE) * PLOT_W;
        let sy =
            |y: f64| MARGIN_T + PLOT_H - (y - y_lo) / (y_hi - y_lo).max(f64::MIN_POSITIVE) * PLOT_H;

        let mut s = String::new();
        let width = BAR_X + 90.0;
        let height = MARGIN_T + PLOT_H + 60.0;
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" font-size="15">{}</text>"#,
            MARGIN_L,
            escape(&self.title)
        );
        for c in &self.cells {
            let (r, g, b) = ramp(ramp_index(c.value, lo, hi));
            let (x0, x1) = (sx(c.x0), sx(c.x1));
            let (y0, y1) = (sy(c.y1), sy(c.y0));
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="rgb({r},{g},{b})"/>"#,
                (x1 - x0).max(0.0),
                (y1 - y0).max(0.0)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let f = f64::from(k) / 4.0;
            let xv = x_lo + f * (x_hi - x_lo);
            let yv = y_lo + f * (y_hi - y_lo);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                sx(xv),
                MARGIN_T + PLOT_H + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN_L - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_L + PLOT_W / 2.0,
            MARGIN_T + PLOT_H + 40.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            MARGIN_T + PLOT_H / 2.0,
            MARGIN_T + PLOT_H / 2.0,
            escape(&self.y_label)
        );

        // Colour bar, one band per ramp entry.
        let band = PLOT_H / 256.0;
        for k in 0..=255u8 {
            let (r, g, b) = ramp(k);
            let y = MARGIN_T + PLOT_H - band * (f64::from(k) + 1.0);
            let _ = writeln!(
                s,
                r#"<rect x="{BAR_X}" y="{y:.3}" width="20" height="{:.3}" fill="rgb({r},{g},{b})"/>"#,
                band + 0.05
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{BAR_X}" y="{MARGIN_T}" width="20" height="{PLOT_H}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            BAR_X + 26.0,
            MARGIN_T + PLOT_H,
            tick(lo)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            BAR_X + 26.0,
            MARGIN_T + 10.0,
            tick(hi)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    format!("{:.3}", v)
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Feasibility map over the `(ρ_min, ρ_max)` triangle.
pub fn map_heatmap<T: Scalar>(map: &FeasibilityMap<T>) -> Heatmap {
    let h = 1.0 / map.n as f64;
    let cells = map
        .cells
        .iter()
        .map(|c| {
            let (x, y) = (c.rho_min.as_f64(), c.rho_max.as_f64());
            HeatCell {
                x0: x - h,
                x1: x,
                y0: y - h,
                y1: y,
                value: c.d_m_max.as_f64(),
            }
        })
        .collect();
    Heatmap {
        title: format!("max d_M (km), v_f = {}, gamma = {}", map.v_f, map.gamma),
        x_label: "rho_min".into(),
        y_label: "rho_max".into(),
        cells,
        range: None,
    }
}

/// Time bands between consecutive snapshots; the last one reuses the previous width.
fn time_bands<T: Scalar>(snapshots: &[Snapshot<T>]) -> Vec<(f64, f64)> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.truth.time().as_f64()).collect();
    (0..times.len())
        .map(
            |k| match (times.get(k + 1), k.checked_sub(1).map(|j| times[j])) {
                (Some(&next), _) => (times[k], next),
                (None, Some(prev)) => (times[k], times[k] + (times[k] - prev)),
                (None, None) => (times[k], times[k] + 1.0),
            },
        )
        .collect()
}

/// Space-time heatmaps of the truth (restricted to the probe span) and of the estimate,
/// sharing the colour range `[0, 1]`.
pub fn space_time_heatmaps<T: Scalar>(snapshots: &[Snapshot<T>]) -> (Heatmap, Heatmap) {
    let bands = time_bands(snapshots);
    let mut truth = Vec::new();
    let mut est = Vec::new();
    for (s, &(t0, t1)) in snapshots.iter().zip(&bands) {
        let (a, b) = s.estimate.extent();
        let (a, b) = (a.as_f64(), b.as_f64());
        let grid = s.truth.grid();
        let dx = grid.dx().as_f64();
        for (x, v) in grid.centers().zip(s.truth.values()) {
            let x = x.as_f64();
            if x + dx / 2.0 > a && x - dx / 2.0 < b {
                truth.push(HeatCell {
                    x0: (x - dx / 2.0).max(a),
                    x1: (x + dx / 2.0).min(b),
                    y0: t0,
                    y1: t1,
                    value: v.as_f64(),
                });
            }
        }
        for piece in s.estimate.pieces() {
            let half = (piece.dy() * piece.length()).as_f64() / 2.0;
            for (x, v) in piece.cell_positions().zip(&piece.values) {
                est.push(HeatCell {
                    x0: x.as_f64() - half,
                    x1: x.as_f64() + half,
                    y0: t0,
                    y1: t1,
                    value: v.as_f64(),
                });
            }
        }
    }
    let make = |title: &str, cells| Heatmap {
        title: title.into(),
        x_label: "x (km)".into(),
        y_label: "t (h)".into(),
        cells,
        range: Some((0.0, 1.0)),
    };
    (make("density", truth), make("estimated density", est))
}
