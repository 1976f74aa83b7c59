#![allow(dead_code)]

use cwpcn::model::{build_geometry, sample_channels, seeded_rng, ChannelRealization, ScenarioCase, SystemParams};

/// Default parameters with `m` antennas and `n` WDs, placed with `seed`.
pub fn instance(case: ScenarioCase, seed: u64, n: usize, m: usize) -> (ChannelRealization, SystemParams) {
    let params = SystemParams { antennas: m, ..SystemParams::default() }.with_num_wds(n);
    let geometry = build_geometry(case, seed, n, 3.0, 6.0).expect("valid geometry");
    let ch = sample_channels(&geometry, &params, &mut seeded_rng(seed, 1)).expect("valid channels");
    (ch, params)
}

/// Scenario picked by `seed`, so random instances cover all three.
pub fn any_case(seed: u64) -> ScenarioCase {
    [ScenarioCase::Case1, ScenarioCase::Case2, ScenarioCase::Case3][(seed % 3) as usize]
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
