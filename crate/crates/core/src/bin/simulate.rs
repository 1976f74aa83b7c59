use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cwpcn::benchmarks::Scheme;
use cwpcn::harness::{run_sweep, ExperimentSpec, SweepVariable};
use cwpcn::model::{ItcConvention, ScenarioCase};
use cwpcn::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Convention {
    Paper,
    Receiver,
}

/// Monte Carlo sweep of the max-min throughput of the cooperative scheme and
/// its baselines. Writes raw.csv, aggregate.csv and run.json to --out.
///
/// Worker threads come from CWPCN_THREADS (default: all cores).
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// Scenario: 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    case: Option<u8>,
    /// Comma-separated subset of cc-center, cc-hap, hybrid, it.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// pmax (W), imax (dBm), n or pp (W).
    #[arg(long)]
    sweep: Option<SweepVariable>,
    /// Sweep values; defaults depend on --sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    placements: Option<usize>,
    /// Fading realizations per placement.
    #[arg(long)]
    fading: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    itc_convention: Option<Convention>,
    /// JSON experiment spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record solver wall time in raw.csv.
    #[arg(long)]
    timing: bool,
}

fn resolve(cli: Cli) -> cwpcn::Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(c) = cli.case {
        spec.case = ScenarioCase::from_number(c).expect("range checked by clap");
    }
    if let Some(s) = cli.schemes {
        spec.schemes = s;
    }
    if let Some(s) = cli.sweep {
        spec.sweep = s;
        if cli.values.is_none() {
            spec.values = s.default_values();
        }
    }
    if let Some(v) = cli.values {
        spec.values = v;
    }
    if let Some(p) = cli.placements {
        spec.placements = p;
    }
    if let Some(f) = cli.fading {
        spec.fading = f;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(o) = cli.out {
        spec.output = o;
    }
    if let Some(c) = cli.itc_convention {
        spec.params.itc_convention = match c {
            Convention::Paper => ItcConvention::PaperLiteral,
            Convention::Receiver => ItcConvention::ToReceiver,
        };
    }
    spec.timing |= cli.timing;
    if let Ok(t) = std::env::var("CWPCN_THREADS") {
        let n = t.trim().parse().map_err(|_| Error::Config(format!("CWPCN_THREADS must be a number, got '{t}'")))?;
        spec.threads = Some(n);
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match resolve(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("simulate: {e}");
            return ExitCode::from(2);
        }
    };
    match run_sweep(&spec) {
        Ok(out) => {
            for a in &out.aggregates {
                println!(
                    "{:>8} {:<9} maxmin {:.6e} ± {:.1e}  sum {:.6e}  failed {}/{}",
                    a.sweep_value, a.scheme, a.maxmin_mean, a.maxmin_stderr, a.sum_mean, a.failed, a.trials
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
