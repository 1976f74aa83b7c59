//! Monte Carlo sweeps over placements and fading draws, with CSV and JSON
//! output.
//!
//! Every trial is a pure function of the base seed and its indices: the
//! placement `p` drops WDs from key `seed ^ p`, and fading draw `f` of that
//! placement uses stream `1 + f` of the same key. Sweep values share the
//! placements and draws, so neighbouring points of a curve see common random
//! numbers.

mod output;

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{compare_schemes, Scheme};
use crate::error::{Error, Result};
use crate::model::{build_geometry, dbm_to_watts, link_gains, sample_draw, seeded_rng, ScenarioCase, SystemParams};
use crate::solver::SolverConfig;

pub use output::{
    aggregate, read_aggregate_csv, read_raw_csv, write_aggregate_csv, write_raw_csv, Aggregate, RAW_HEADER,
};

/// Swept parameter. Values are watts for `Pmax` and `Pp`, dBm for `Imax`
/// and WD counts for `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Pmax,
    Imax,
    N,
    Pp,
}

impl SweepVariable {
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Self::Pmax => vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
            Self::Imax => (0..7).map(|k| -80.0 + 5.0 * k as f64).collect(),
            Self::N => vec![15.0, 20.0, 25.0, 30.0],
            Self::Pp => vec![0.1, 1.0],
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(&self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let bad = |what: &str| Err(Error::Config(format!("sweep value {value} is not {what}")));
        let mut p = base.clone();
        match self {
            Self::Pmax if value >= 0.0 && value.is_finite() => p.hap_tx_power = value,
            Self::Imax if value.is_finite() => p.itc_threshold = dbm_to_watts(value),
            Self::N if value >= 1.0 && value.fract() == 0.0 && value <= 1e6 => p = p.with_num_wds(value as usize),
            Self::Pp if value >= 0.0 && value.is_finite() => p.primary_tx_power = value,
            Self::Pmax | Self::Pp => return bad("a finite non-negative power"),
            Self::Imax => return bad("a finite dBm level"),
            Self::N => return bad("a positive WD count"),
        }
        p.validate()?;
        Ok(p)
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pmax" => Ok(Self::Pmax),
            "imax" => Ok(Self::Imax),
            "n" => Ok(Self::N),
            "pp" => Ok(Self::Pp),
            _ => Err(Error::Config(format!("unknown sweep variable '{s}' (expected pmax, imax, n or pp)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub case: ScenarioCase,
    pub schemes: Vec<Scheme>,
    pub sweep: SweepVariable,
    pub values: Vec<f64>,
    pub placements: usize,
    pub fading: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub cluster_radius: f64,
    pub hap_cluster_distance: f64,
    /// Record solver wall time; off by default so output is reproducible.
    pub timing: bool,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let sweep = SweepVariable::Pmax;
        Self {
            case: ScenarioCase::Case1,
            schemes: Scheme::ALL.to_vec(),
            sweep,
            values: sweep.default_values(),
            placements: 20,
            fading: 50,
            seed: 1,
            output: PathBuf::from("results"),
            params: SystemParams::default(),
            solver: SolverConfig::default(),
            cluster_radius: 3.0,
            hap_cluster_distance: 6.0,
            timing: false,
            threads: None,
        }
    }
}

impl ExperimentSpec {
    /// Parse a JSON config; absent fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut spec: Self = serde_json::from_str(text)?;
        spec.params = spec.params.clone().with_num_wds(spec.params.num_wds);
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.placements == 0 || self.fading == 0 {
            return bad("placement and fading counts must be at least 1");
        }
        if self.values.is_empty() || self.schemes.is_empty() {
            return bad("need at least one sweep value and one scheme");
        }
        if !(self.cluster_radius > 0.0 && self.hap_cluster_distance > 0.0) {
            return bad("cluster radius and HAP distance must be positive");
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1");
        }
        self.solver.validate()?;
        self.resolved_params().map(|_| ())
    }

    /// Parameters at every sweep value, in order.
    pub fn resolved_params(&self) -> Result<Vec<SystemParams>> {
        self.values.iter().map(|&v| self.sweep.apply(&self.params, v)).collect()
    }
}

/// One scheme on one fading draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_value: f64,
    pub placement: usize,
    pub fading: usize,
    pub scheme: Scheme,
    pub maxmin_bps_hz: f64,
    pub sum_bps_hz: f64,
    /// Per-WD rates in geometry order; empty when the solve failed.
    pub rates: Vec<f64>,
    pub status: String,
    pub wall_ms: f64,
}

impl TrialRecord {
    /// Counted in the aggregate means.
    pub fn succeeded(&self) -> bool {
        self.status == "optimal"
    }
}

/// Status written for solves that returned an error instead of a solution.
pub const ERROR_STATUS: &str = "error";

/// All schemes of `spec` on fading draw `fading` of placement `placement`,
/// with `params` already set to `sweep_value`. Solver failures become
/// records with a non-optimal status and NaN rates.
pub fn run_trial(
    spec: &ExperimentSpec,
    params: &SystemParams,
    sweep_value: f64,
    placement: usize,
    fading: usize,
) -> Vec<TrialRecord> {
    let key = spec.seed ^ placement as u64;
    let failed = |scheme: Scheme, status: &str| TrialRecord {
        sweep_value,
        placement,
        fading,
        scheme,
        maxmin_bps_hz: f64::NAN,
        sum_bps_hz: f64::NAN,
        rates: Vec::new(),
        status: status.to_string(),
        wall_ms: 0.0,
    };
    let setup = build_geometry(spec.case, key, params.num_wds, spec.cluster_radius, spec.hap_cluster_distance)
        .and_then(|g| link_gains(&g, params).map(|l| (g, l)));
    let (geometry, gains) = match setup {
        Ok(v) => v,
        Err(_) => return spec.schemes.iter().map(|&s| failed(s, ERROR_STATUS)).collect(),
    };
    let draw = sample_draw(&gains, params, &mut seeded_rng(key, 1 + fading as u64));

    spec.schemes
        .iter()
        .map(|&scheme| match compare_schemes(&geometry, &draw, params, &spec.solver, &[scheme]) {
            Ok(mut res) => {
                let r = res.pop().expect("one result per scheme");
                TrialRecord {
                    sweep_value,
                    placement,
                    fading,
                    scheme,
                    maxmin_bps_hz: r.s_bar,
                    sum_bps_hz: r.sum_rate,
                    rates: r.rates,
                    status: r.status.as_str().to_string(),
                    wall_ms: if spec.timing { r.stats.elapsed_ms } else { 0.0 },
                }
            }
            Err(_) => failed(scheme, ERROR_STATUS),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    spec: &'a ExperimentSpec,
    resolved_params: &'a [SystemParams],
    version: &'static str,
}

/// Run every trial of `spec` and write `raw.csv`, `aggregate.csv` and
/// `run.json` under `spec.output`. All three files are created before any
/// solving starts, so an unwritable destination fails fast.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let resolved = spec.resolved_params()?;

    fs::create_dir_all(&spec.output)?;
    let raw_file = File::create(spec.output.join("raw.csv"))?;
    let agg_file = File::create(spec.output.join("aggregate.csv"))?;
    let manifest = RunManifest { spec, resolved_params: &resolved, version: env!("CARGO_PKG_VERSION") };
    fs::write(spec.output.join("run.json"), serde_json::to_string_pretty(&manifest)?)?;

    let records = run_trials(spec, &resolved)?;
    let aggregates = aggregate(&records);
    write_raw_csv(raw_file, &records)?;
    write_aggregate_csv(agg_file, &aggregates)?;
    Ok(SweepOutcome { records, aggregates })
}

/// Every record of the sweep in (value, placement, fading, scheme) order,
/// independent of the thread count.
pub fn run_trials(spec: &ExperimentSpec, resolved: &[SystemParams]) -> Result<Vec<TrialRecord>> {
    let jobs: Vec<(usize, usize, usize)> = (0..resolved.len())
        .flat_map(|v| (0..spec.placements).flat_map(move |p| (0..spec.fading).map(move |f| (v, p, f))))
        .collect();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(v, p, f)| run_trial(spec, &resolved[v], spec.values[v], p, f))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}
