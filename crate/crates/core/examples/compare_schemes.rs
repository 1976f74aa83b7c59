//! Run the four transmission schemes on the same placements and draws and
//! print their average max-min and sum throughput.

use cwpcn::benchmarks::{compare_schemes, Scheme};
use cwpcn::model::{build_geometry, link_gains, sample_draw, seeded_rng, ScenarioCase, SystemParams};
use cwpcn::solver::SolverConfig;

fn main() -> anyhow::Result<()> {
    let trials: u64 = std::env::args().nth(1).map_or(Ok(10), |s| s.parse())?;
    let params = SystemParams::default();
    let cfg = SolverConfig::default();
    let mut maxmin = [0.0; 4];
    let mut sum = [0.0; 4];
    for t in 0..trials {
        let geometry = build_geometry(ScenarioCase::Case1, t, params.num_wds, 3.0, 6.0)?;
        let draw = sample_draw(&link_gains(&geometry, &params)?, &params, &mut seeded_rng(t, 1));
        for (k, r) in compare_schemes(&geometry, &draw, &params, &cfg, &Scheme::ALL)?.iter().enumerate() {
            maxmin[k] += r.s_bar / trials as f64;
            sum[k] += r.sum_rate / trials as f64;
        }
    }
    println!("{trials} trials, Case 1, N = {}, M = {}", params.num_wds, params.antennas);
    for (k, s) in Scheme::ALL.iter().enumerate() {
        println!("  {:<10} max-min {:.4e}  sum {:.4e}  (max-min vs IT {:+.1}%)", s.tag(), maxmin[k], sum[k], 100.0 * (maxmin[k] / maxmin[3] - 1.0));
    }
    Ok(())
}
