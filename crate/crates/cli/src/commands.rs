use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pvobs_core::experiment::{run_experiment, ExperimentRecord};
use pvobs_core::export;
use pvobs_core::stability::{self, CertificateQuery, FeasibilityMap, StabilityCertificate};
use serde::Serialize;

use crate::scenario::Scenario;
use crate::CliError;

/// Files created so far; removed again if a later step fails.
struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(BufWriter<File>) -> pvobs_core::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let fail = |message: String| CliError::Output {
            path: path.clone(),
            message,
        };
        let file = File::create(&path).map_err(|e| fail(e.to_string()))?;
        self.written.push(path.clone());
        write(BufWriter::new(file)).map_err(|e| fail(e.to_string()))?;
        Ok(path)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        std::fs::write(&path, body).map_err(|e| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(path)
    }

    fn discard(self) {
        for p in self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Certificate outcome with every witness and derived constant.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub v_f: f64,
    pub gamma: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub d_m: f64,
    pub feasible: bool,
    pub certificate: Option<StabilityCertificate<f64>>,
    pub lambda: Option<f64>,
    pub t_star_minutes: Option<f64>,
}

impl CertifyReport {
    fn new(q: &CertificateQuery<f64>, cert: Option<StabilityCertificate<f64>>) -> Self {
        Self {
            v_f: q.v_f(),
            gamma: q.gamma(),
            rho_min: q.rho_min(),
            rho_max: q.rho_max(),
            d_m: q.d_m(),
            feasible: cert.is_some(),
            lambda: cert.map(|c| c.candidate.lambda(q.gamma())),
            t_star_minutes: cert.map(|c| c.t_star * 60.0),
            certificate: cert,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        self.certificate.map(|c| c.candidate.beta)
    }
}

impl std::fmt::Display for CertifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "query: v_f = {}, gamma = {}, rho in [{}, {}], d_M = {}",
            self.v_f, self.gamma, self.rho_min, self.rho_max, self.d_m
        )?;
        match &self.certificate {
            None => writeln!(f, "feasible: no"),
            Some(c) => {
                writeln!(f, "feasible: yes")?;
                writeln!(f, "xi = {}", c.candidate.xi)?;
                writeln!(f, "beta = {}", c.candidate.beta)?;
                writeln!(f, "p0 = {}", c.candidate.p0)?;
                writeln!(f, "p1 = {}", c.candidate.p1)?;
                writeln!(f, "lambda = {}", c.candidate.xi / self.gamma)?;
                writeln!(f, "K = {}", c.k)?;
                writeln!(f, "alpha = {}", c.alpha)?;
                writeln!(f, "t_star = {} h ({} min)", c.t_star, c.t_star * 60.0)
            }
        }
    }
}

pub fn cmd_certify(
    v_f: f64,
    gamma: f64,
    rho_min: f64,
    rho_max: f64,
    d_m: f64,
) -> Result<CertifyReport, CliError> {
    let q = CertificateQuery::new(v_f, gamma, rho_min, rho_max, d_m)
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(CertifyReport::new(&q, stability::max_beta(&q)))
}

#[derive(Debug, Clone)]
pub struct MapOutput {
    pub map: FeasibilityMap<f64>,
    pub files: Vec<PathBuf>,
}

pub const MIN_MAP_RESOLUTION: usize = 5;

pub fn cmd_feasibility_map(
    v_f: f64,
    gamma: f64,
    n: usize,
    out_dir: &Path,
) -> Result<MapOutput, CliError> {
    if n < MIN_MAP_RESOLUTION {
        return Err(CliError::Input(format!(
            "resolution must be >= {MIN_MAP_RESOLUTION}, got {n}"
        )));
    }
    // Validates v_f and gamma before the parallel sweep.
    CertificateQuery::new(v_f, gamma, 1.0, 1.0, 1.0).map_err(|e| CliError::Input(e.to_string()))?;
    let map = stability::feasibility_map(v_f, gamma, n, stability::DEFAULT_DM_CAP)?;
    let mut out = Emitter::new(out_dir)?;
    let result = (|| {
        let csv = out.csv("feasibility_map.csv", |w| export::write_map(w, &map))?;
        let svg = out.text("feasibility_map.svg", &export::map_heatmap(&map).to_svg())?;
        Ok(vec![csv, svg])
    })();
    match result {
        Ok(files) => Ok(MapOutput { map, files }),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub name: String,
    pub steps: usize,
    pub dt: f64,
    pub horizon: f64,
    pub initial_error: f64,
    pub final_error: f64,
    /// First time the aggregate error is below 5% of its initial value, hours.
    pub convergence_time: Option<f64>,
    /// Same with a 10% threshold.
    pub convergence_time_10: Option<f64>,
    pub max_spacing: f64,
    pub certificate: Option<CertifyReport>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
    #[serde(skip)]
    pub record: Option<ExperimentRecord<f64>>,
}

/// Certificate for a viscous run: density bounds from the initial data and
/// the largest spacing the probes actually reached.
fn run_certificate(s: &Scenario, max_spacing: f64) -> Option<CertifyReport> {
    if s.params.is_inviscid() {
        return None;
    }
    let (lo, hi) = s.ic.bounds();
    let q = CertificateQuery::new(s.params.v_f, s.params.gamma, lo, hi, max_spacing).ok()?;
    Some(CertifyReport::new(&q, stability::max_beta(&q)))
}

/// Runs the scenario and writes every output into `out_dir`.
pub fn cmd_simulate(s: &Scenario, out_dir: &Path) -> Result<SimulationSummary, CliError> {
    let mut cfg = s.experiment_config();
    let mut record = run_experiment(&cfg)?;
    let certificate = run_certificate(s, record.max_spacing());
    let envelope = certificate.as_ref().and_then(|r| {
        r.certificate
            .map(|c| (c.candidate.lambda(s.params.gamma), (c.k, c.alpha)))
    });
    if let Some((lambda, _)) = envelope {
        cfg.lyapunov_lambda = Some(lambda);
        record = run_experiment(&cfg)?;
    }

    let mut out = Emitter::new(out_dir)?;
    let result = (|| {
        let (truth_map, est_map) = export::space_time_heatmaps(&record.snapshots);
        Ok(vec![
            out.csv("truth.csv", |w| export::write_truth(w, &record.snapshots))?,
            out.csv("estimate.csv", |w| {
                export::write_estimates(w, &record.snapshots)
            })?,
            out.csv("trajectories.csv", |w| {
                export::write_trajectories(w, &record.steps)
            })?,
            out.csv("segments.csv", |w| {
                export::write_segment_diagnostics(w, &record.steps)
            })?,
            out.csv("error_trace.csv", |w| {
                export::write_error_trace(w, &record.steps, envelope.map(|e| e.1))
            })?,
            out.csv("distances.csv", |w| {
                export::write_distances(w, &record.steps)
            })?,
            out.text("truth.svg", &truth_map.to_svg())?,
            out.text("estimate.svg", &est_map.to_svg())?,
        ])
    })();
    let mut files = match result {
        Ok(files) => files,
        Err(e) => {
            out.discard();
            return Err(e);
        }
    };

    let trace = &record.trace;
    let mut summary = SimulationSummary {
        name: s.name.clone(),
        steps: record.steps.len() - 1,
        dt: record.dt,
        horizon: s.horizon,
        initial_error: trace.aggregate[0],
        final_error: *trace.aggregate.last().unwrap_or(&0.0),
        convergence_time: trace.convergence_time(0.05),
        convergence_time_10: trace.convergence_time(0.1),
        max_spacing: record.max_spacing(),
        certificate,
        files: Vec::new(),
        record: None,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match out.text("summary.json", &(json + "\n")) {
        Ok(p) => files.push(p),
        Err(e) => {
            out.discard();
            return Err(e);
        }
    }
    summary.files = files;
    summary.record = Some(record);
    Ok(summary)
}
