//! Scenario files.
//!
//! A scenario is a TOML document; `docs/scenario.md` in the repository root
//! lists every key. Parsing happens in two passes: serde checks the schema
//! (unknown keys are rejected), then [`Scenario::from_spec`] checks the
//! physical invariants and fills the defaults.

use std::path::{Path, PathBuf};

use pvobs_core::experiment::{ExperimentConfig, Prior};
use pvobs_core::observer::ObserverMode;
use pvobs_core::pde_solver::{Grid, InitialCondition, Piece, Profile};
use pvobs_core::probes::ProbeFleet;
use pvobs_core::traffic_model::ModelParams;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_CELLS: usize = 300;
pub const DEFAULT_SAFETY: f64 = 0.9;
pub const DEFAULT_SAVE_EVERY: usize = 20;
/// Extra road kept behind the last probe and ahead of the first one when the grid is omitted, km.
pub const DEFAULT_PADDING: f64 = 2.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: Option<String>,
    pub model: ModelSpec,
    pub grid: Option<GridSpec>,
    pub initial_condition: Vec<PieceSpec>,
    pub probes: ProbeSpec,
    #[serde(default)]
    pub observer: ObserverSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub v_f: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub constant: Option<f64>,
    pub sine: Option<SineSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineSpec {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub positions: Vec<f64>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    #[default]
    Auto,
    Viscous,
    Inviscid,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSpec {
    #[default]
    Constant,
    Truth,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    #[serde(default)]
    pub mode: ModeSpec,
    pub cells_per_segment: Option<usize>,
    #[serde(default)]
    pub prior: PriorSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub horizon: f64,
    pub safety: Option<f64>,
    pub save_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: ScenarioSpec,
    pub params: ModelParams<f64>,
    pub grid: Grid<f64>,
    pub ic: InitialCondition<f64>,
    pub fleet: ProbeFleet<f64>,
    pub mode: ObserverMode,
    pub horizon: f64,
    pub safety: f64,
    pub m_cells: Option<usize>,
    pub prior: Prior,
    pub save_every: usize,
    pub out_dir: Option<PathBuf>,
}

/// Command line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cells: Option<usize>,
    pub horizon: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

fn invariant(name: &'static str, detail: impl Into<String>) -> CliError {
    CliError::Invariant {
        invariant: name,
        detail: detail.into(),
    }
}

fn piece(p: &PieceSpec, k: usize) -> Result<Piece<f64>, CliError> {
    let profile = match (p.constant, p.sine) {
        (Some(c), None) => Profile::Constant(c),
        (None, Some(s)) => Profile::Sine {
            offset: s.offset,
            amplitude: s.amplitude,
            frequency: s.frequency,
        },
        _ => {
            return Err(CliError::Schema(format!(
                "initial_condition[{k}]: exactly one of `constant` or `sine` is required"
            )))
        }
    };
    Ok(Piece {
        start: p.start,
        end: p.end,
        profile,
    })
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self, CliError> {
        let params = ModelParams::new(spec.model.v_f, spec.model.gamma)
            .map_err(|e| invariant("model parameters (v_f > 0, gamma >= 0)", e.to_string()))?;

        let x = &spec.probes.positions;
        if x.len() < 2 {
            return Err(invariant("at least two probes", format!("got {}", x.len())));
        }
        if let Some(k) = x.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(invariant(
                "probe positions strictly increasing",
                format!(
                    "positions[{k}] = {} is not below positions[{}] = {}",
                    x[k],
                    k + 1,
                    x[k + 1]
                ),
            ));
        }
        let fleet = ProbeFleet::new(x.clone(), spec.probes.noise, spec.probes.seed)
            .map_err(|e| invariant("probe fleet (finite positions, noise >= 0)", e.to_string()))?;

        if !(spec.run.horizon > 0.0 && spec.run.horizon.is_finite()) {
            return Err(invariant(
                "horizon > 0",
                format!("got {}", spec.run.horizon),
            ));
        }
        let horizon = spec.run.horizon;
        let safety = spec.run.safety.unwrap_or(DEFAULT_SAFETY);
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(invariant("safety in (0, 1]", format!("got {safety}")));
        }

        let gs = spec.grid.clone().unwrap_or(GridSpec {
            x_min: None,
            x_max: None,
            cells: None,
        });
        let x_min = gs.x_min.unwrap_or(x[0] - DEFAULT_PADDING);
        let x_max = gs
            .x_max
            .unwrap_or(x[x.len() - 1] + params.v_f * horizon + DEFAULT_PADDING);
        let cells = gs.cells.unwrap_or(DEFAULT_CELLS);
        let grid = Grid::new(x_min, x_max, cells)
            .map_err(|e| invariant("grid (x_min < x_max, cells >= 1)", e.to_string()))?;
        if !(x[0] > x_min && x[x.len() - 1] < x_max) {
            return Err(invariant(
                "probes inside the grid",
                format!(
                    "probes span [{}, {}], grid is [{x_min}, {x_max}]",
                    x[0],
                    x[x.len() - 1]
                ),
            ));
        }

        if spec.initial_condition.is_empty() {
            return Err(CliError::Schema(
                "initial_condition: at least one piece is required".into(),
            ));
        }
        let pieces = spec
            .initial_condition
            .iter()
            .enumerate()
            .map(|(k, p)| piece(p, k))
            .collect::<Result<Vec<_>, _>>()?;
        let ic = InitialCondition::new(pieces).map_err(|e| {
            invariant(
                "initial condition (contiguous pieces covering the road, values in [0, 1])",
                e.to_string(),
            )
        })?;

        let mode = match spec.observer.mode {
            ModeSpec::Auto => ObserverMode::for_params(&params),
            ModeSpec::Viscous => ObserverMode::Viscous,
            ModeSpec::Inviscid => ObserverMode::Inviscid,
        };
        if let Some(m) = spec.observer.cells_per_segment {
            if m < 2 {
                return Err(invariant("cells_per_segment >= 2", format!("got {m}")));
            }
        }
        let prior = match spec.observer.prior {
            PriorSpec::Constant => Prior::Constant,
            PriorSpec::Truth => Prior::Truth,
        };
        let save_every = spec.run.save_every.unwrap_or(DEFAULT_SAVE_EVERY);
        if save_every == 0 {
            return Err(invariant("save_every >= 1", "got 0"));
        }

        Ok(Self {
            name: spec.name.clone().unwrap_or_else(|| "scenario".into()),
            params,
            grid,
            ic,
            fleet,
            mode,
            horizon,
            safety,
            m_cells: spec.observer.cells_per_segment,
            prior,
            save_every,
            out_dir: spec.output.dir.clone(),
            spec,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        Self::from_spec(spec)
    }

    /// Re-validates with the overrides applied.
    pub fn with_overrides(&self, o: &Overrides) -> Result<Self, CliError> {
        let mut spec = self.spec.clone();
        if let Some(seed) = o.seed {
            spec.probes.seed = seed;
        }
        if let Some(h) = o.horizon {
            spec.run.horizon = h;
        }
        if let Some(cells) = o.cells {
            // Keep the domain the file implied, not the one the new horizon would imply.
            spec.grid = Some(GridSpec {
                x_min: Some(self.grid.x_min()),
                x_max: Some(self.grid.x_max()),
                cells: Some(cells),
            });
        }
        if let Some(dir) = &o.out_dir {
            spec.output.dir = Some(dir.clone());
        }
        Self::from_spec(spec)
    }

    pub fn experiment_config(&self) -> ExperimentConfig<f64> {
        let mut cfg = ExperimentConfig::new(
            self.params,
            self.grid,
            self.ic.clone(),
            self.fleet.clone(),
            self.horizon,
        );
        cfg.mode = self.mode;
        cfg.safety = self.safety;
        cfg.m_cells = self.m_cells;
        cfg.prior = self.prior;
        cfg.save_every = self.save_every;
        cfg
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml(&text)
}
