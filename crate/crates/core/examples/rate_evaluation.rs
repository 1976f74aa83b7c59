//! Evaluate a hand-made allocation: equal time slots and a beam split
//! evenly over the antennas, with every WD spending its whole battery.

use cwpcn::linalg::CMatrix;
use cwpcn::model::{build_geometry, sample_channels, seeded_rng, ScenarioCase, SystemParams};
use cwpcn::rates::{evaluate_unchecked, harvested_energy, ResourceAllocation, Topology};

fn main() -> anyhow::Result<()> {
    let n = 5;
    let params = SystemParams::default().with_num_wds(n);
    let geometry = build_geometry(ScenarioCase::Case1, 11, n, 3.0, 6.0)?;
    let ch = sample_channels(&geometry, &params, &mut seeded_rng(11, 1))?;

    let m = params.antennas;
    let mut alloc = ResourceAllocation::zeros(n, m);
    alloc.q = CMatrix::identity(m, m).scale(params.hap_tx_power / m as f64);
    alloc.tau1 = 0.5;
    let slot = 0.5 / (2 * n - 1) as f64;
    let energy = harvested_energy(&alloc.q, alloc.tau1, &ch, &params)?;
    for (i, &energy) in energy.iter().enumerate() {
        if i == 0 {
            alloc.tau3.iter_mut().for_each(|t| *t = slot);
            alloc.p3.iter_mut().for_each(|p| *p = energy / (n as f64 * slot));
        } else {
            alloc.tau2[i] = slot;
            alloc.p2[i] = energy / slot;
        }
    }

    let report = evaluate_unchecked(&Topology::cooperative(n), &alloc, &ch, &params);
    println!("rates (cluster order, head first):");
    for (i, r) in report.rates.iter().enumerate() {
        println!("  WD {:>2}  {:.4e} bits/s/Hz  harvested {:.3e} J", report.wd_order[i], r, report.harvested[i]);
    }
    println!("min {:.4e}  sum {:.4e}", report.min_rate, report.sum_rate);
    println!("interference at PR: transfer {:.3e} W", report.interference.phase1);
    match report.constraints.violations().map(|r| r.name.as_str()).collect::<Vec<_>>() {
        v if v.is_empty() => println!("allocation is feasible"),
        v => println!("violated: {}", v.join(", ")),
    }
    Ok(())
}
