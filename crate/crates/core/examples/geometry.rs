//! Drop a cluster in each scenario and print the distances and mean gains
//! of the links that matter to the primary pair.

use cwpcn::model::{build_geometry, distance, link_gains, ClusterHeadRule, ScenarioCase, SystemParams};

fn main() -> anyhow::Result<()> {
    let params = SystemParams::default();
    for case in [ScenarioCase::Case1, ScenarioCase::Case2, ScenarioCase::Case3] {
        let g = build_geometry(case, 42, params.num_wds, 3.0, 6.0)?;
        let gains = link_gains(&g, &params)?;
        let near_hap = g.clone().with_cluster_head(ClusterHeadRule::ClosestToHap).ch_index;
        println!("{case:?}: HAP at {:?}, cluster center {:?}", g.hap_pos, g.cluster_center);
        println!(
            "  HAP-PR {:.1} m (gain {:.3e}), PT-HAP {:.1} m (gain {:.3e})",
            distance(g.hap_pos, g.pr_pos),
            gains.hap_pr,
            distance(g.pt_pos, g.hap_pos),
            gains.pt_hap
        );
        println!("  head: WD {} (center rule), WD {near_hap} (HAP rule)", g.ch_index);
        for (i, p) in g.wd_pos.iter().enumerate().take(4) {
            println!(
                "  WD {i:>2} at ({:7.2}, {:5.2}): HAP {:.2} m, gain {:.3e}, to PR {:.3e}",
                p[0],
                p[1],
                distance(*p, g.hap_pos),
                gains.hap_wd[i],
                gains.wd_pr[i]
            );
        }
    }
    Ok(())
}
