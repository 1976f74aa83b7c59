//! A small interference-threshold sweep written to a directory of CSV files.

use cwpcn::benchmarks::Scheme;
use cwpcn::harness::{run_sweep, ExperimentSpec, SweepVariable};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let spec = ExperimentSpec {
        schemes: vec![Scheme::CcCenter, Scheme::It],
        sweep: SweepVariable::Imax,
        values: vec![-70.0, -60.0, -50.0],
        placements: 3,
        fading: 4,
        output: out.into(),
        ..ExperimentSpec::default()
    };
    let outcome = run_sweep(&spec)?;
    for a in &outcome.aggregates {
        println!(
            "I_max {:>5} dBm  {:<9}  max-min {:.4e} ± {:.1e}  sum {:.4e}",
            a.sweep_value, a.scheme.tag(), a.maxmin_mean, a.maxmin_stderr, a.sum_mean
        );
    }
    println!("{} records written to {}", outcome.records.len(), spec.output.display());
    Ok(())
}
