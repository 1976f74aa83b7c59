//! Map an allocation to the convex variables and back, and show the
//! perspective rate that makes the transformed problem concave.

use cwpcn::model::{build_geometry, sample_channels, seeded_rng, ScenarioCase, SystemParams};
use cwpcn::solver::{solve_max_min, SolverConfig};
use cwpcn::transform::{perspective_rate, recover_allocation, to_transformed};

fn main() -> anyhow::Result<()> {
    for x in [0.0, 1e-4, 1e-3, 1e-2] {
        println!("tau log2(1 + rho x / tau), tau = 0.1, rho = 5e5, x = {x:e}: {:.6}", perspective_rate(0.1, x, 5e5)?);
    }
    let params = SystemParams::default().with_num_wds(6);
    let geometry = build_geometry(ScenarioCase::Case2, 5, 6, 3.0, 6.0)?;
    let ch = sample_channels(&geometry, &params, &mut seeded_rng(5, 1))?;
    let sol = solve_max_min(&ch, &params, &SolverConfig::default())?;

    let alloc = recover_allocation(&sol.point, &params)?;
    let back = to_transformed(&alloc, &ch, &params);
    let worst = alloc.p2.iter().zip(&sol.allocation.p2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("S = {:.6e}, tau1 = {:.4}, tr Q = {:.4} W", sol.s_bar, alloc.tau1, alloc.q.trace().re);
    println!("round trip: |dW| = {:.2e}, max |dP2| = {worst:.2e}", (&back.w - &sol.point.w).norm());
    Ok(())
}
