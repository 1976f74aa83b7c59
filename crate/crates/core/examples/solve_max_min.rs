//! Solve one default Case 1 instance and verify the optimum.

use cwpcn::model::{build_geometry, sample_channels, seeded_rng, ScenarioCase, SystemParams};
use cwpcn::solver::{solve_by_bisection, solve_max_min, verify_solution, SolverConfig};

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(15), |s| s.parse())?;
    let params = SystemParams::default().with_num_wds(n);
    let cfg = SolverConfig::default();
    let geometry = build_geometry(ScenarioCase::Case1, 7, n, 3.0, 6.0)?;
    let ch = sample_channels(&geometry, &params, &mut seeded_rng(7, 1))?;

    let sol = solve_max_min(&ch, &params, &cfg)?;
    println!(
        "interior point: S = {:.6e} bits/s/Hz  status {:?}  {} vars  {} Newton steps  {:.1} ms",
        sol.s_bar, sol.status, sol.stats.num_vars, sol.stats.newton_steps, sol.stats.elapsed_ms
    );
    let report = verify_solution(&sol, &ch, &params)?;
    for c in &report.checks {
        println!("  {:<12} {}", c.name, c.detail);
    }
    println!("  transfer {:.4}, rates {:?}", sol.point.tau1, sol.rates(&ch, &params).iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>());

    let bis = solve_by_bisection(&ch, &params, &cfg)?;
    println!(
        "bisection:      S = {:.6e} bits/s/Hz  ({} feasibility solves, {:.1} ms)",
        bis.s_bar, bis.stats.feasibility_solves, bis.stats.elapsed_ms
    );
    Ok(())
}
