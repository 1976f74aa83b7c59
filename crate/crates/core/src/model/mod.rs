//! Network geometry, path-loss statistics and Rayleigh fading draws.

pub mod channel;
pub mod geometry;
pub mod params;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use channel::{
    complex_gaussian, link_gains, sample_channels, sample_draw, ChannelRealization, FadingDraw, LinkGains,
};
pub use geometry::{
    build_geometry, distance, pathloss_gain, select_cluster_head, ClusterHeadRule, NetworkGeometry, Point,
    ScenarioCase,
};
pub use params::{dbm_to_watts, watts_to_dbm, AntennaVariance, ItcConvention, SystemParams};

/// Counter-based RNG: stream `stream` of the ChaCha generator keyed by
/// `seed`. The harness keys placement `p` with `seed ^ p`, draws geometry
/// from stream 0 and fading draw `f` from stream `1 + f`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
