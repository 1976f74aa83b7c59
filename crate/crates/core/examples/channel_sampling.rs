//! Sample Rayleigh fading around one placement and compare the empirical
//! mean gains with the path-loss model.

use cwpcn::model::{build_geometry, link_gains, sample_draw, seeded_rng, ScenarioCase, SystemParams};

fn main() -> anyhow::Result<()> {
    let draws: usize = std::env::args().nth(1).map_or(Ok(20_000), |s| s.parse())?;
    let params = SystemParams::default();
    let geometry = build_geometry(ScenarioCase::Case1, 3, params.num_wds, 3.0, 6.0)?;
    let gains = link_gains(&geometry, &params)?;
    let mut rng = seeded_rng(3, 1);

    let m = params.antennas as f64;
    let (mut h0, mut hr0, mut b) = (0.0, 0.0, 0.0);
    for _ in 0..draws {
        let ch = sample_draw(&gains, &params, &mut rng).realization(geometry.ch_index);
        h0 += ch.h[0];
        hr0 += ch.h_ir[0];
        b += ch.b.norm_squared();
    }
    let k = draws as f64;
    let ch = geometry.ch_index;
    println!("{draws} draws, head WD {ch}");
    println!("  |a_0|^2   mean {:.4e}  model M*gain {:.4e}", h0 / k, m * gains.hap_wd[ch]);
    println!("  h_0R      mean {:.4e}  model {:.4e}", hr0 / k, gains.wd_pr[ch]);
    println!("  |b|^2     mean {:.4e}  model M*gain {:.4e}", b / k, m * gains.hap_pr);
    Ok(())
}
