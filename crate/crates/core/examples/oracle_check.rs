//! Compare the interior-point optimum with the exhaustive grid search on
//! single-antenna networks of one and two WDs.

use cwpcn::model::{build_geometry, sample_channels, seeded_rng, ScenarioCase, SystemParams};
use cwpcn::rates::Topology;
use cwpcn::solver::{brute_force_oracle_for, solve_for, SolverConfig};

fn main() -> anyhow::Result<()> {
    let resolution: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let cfg = SolverConfig::default();
    for seed in 0..4u64 {
        let n = 1 + (seed as usize % 2);
        let params = SystemParams { antennas: 1, ..SystemParams::default() }.with_num_wds(n);
        let geometry = build_geometry(ScenarioCase::Case1, seed, n, 3.0, 6.0)?;
        let ch = sample_channels(&geometry, &params, &mut seeded_rng(seed, 1))?;
        for (name, topo) in [("cc", Topology::cooperative(n)), ("it", Topology::independent(n))] {
            let ip = solve_for(&topo, &ch, &params, &cfg)?.s_bar;
            let grid = brute_force_oracle_for(&topo, &ch, &params, resolution)?;
            println!("seed {seed} N={n} {name}: solver {ip:.6e}  grid {grid:.6e}  gap {:.3}%", 100.0 * (ip - grid) / ip);
        }
    }
    Ok(())
}
