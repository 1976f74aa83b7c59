//! Baseline schemes: independent harvest-then-transmit, the hybrid split
//! between direct and cooperative WDs, and cluster cooperation under both
//! cluster-head rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, ClusterHeadRule, FadingDraw, NetworkGeometry, SystemParams};
use crate::rates::{Role, Topology};
use crate::solver::{solve_for, Solution, SolveStats, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Cluster cooperation, head closest to the cluster center.
    CcCenter,
    /// Cluster cooperation, head closest to the HAP.
    CcHap,
    Hybrid,
    /// Independent transmission.
    It,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::CcCenter, Scheme::CcHap, Scheme::Hybrid, Scheme::It];

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::CcCenter => "cc-center",
            Scheme::CcHap => "cc-hap",
            Scheme::Hybrid => "hybrid",
            Scheme::It => "it",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.tag() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected cc-center, cc-hap, hybrid or it)")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub status: SolveStatus,
    pub s_bar: f64,
    /// Per-WD rates in geometry order.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub topology: Topology,
    pub stats: SolveStats,
}

impl SchemeResult {
    fn new(scheme: Scheme, sol: &Solution, ch: &ChannelRealization, params: &SystemParams) -> Self {
        let cluster = sol.rates(ch, params);
        let mut rates = vec![0.0; cluster.len()];
        for (i, &orig) in ch.order.iter().enumerate() {
            rates[orig] = cluster[i];
        }
        Self {
            scheme,
            status: sol.status,
            s_bar: sol.s_bar,
            sum_rate: rates.iter().sum(),
            rates,
            topology: sol.topology.clone(),
            stats: sol.stats.clone(),
        }
    }
}

/// Every WD transmits straight to the HAP in its own slot after a shared
/// energy-transfer phase.
pub fn solve_independent(ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<SchemeResult> {
    let sol = solve_for(&Topology::independent(ch.num_wds()), ch, params, cfg)?;
    Ok(SchemeResult::new(Scheme::It, &sol, ch, params))
}

/// WD `i ≠ 0` goes direct iff its HAP channel beats its channel to the head
/// (`h_i > g_i`); ties stay cooperative. WD 0 always heads the cluster.
pub fn hybrid_topology(ch: &ChannelRealization) -> Topology {
    let roles = (0..ch.num_wds())
        .map(|i| match i {
            0 => Role::Head,
            _ if ch.h[i] > ch.g[i] => Role::Direct,
            _ => Role::Member,
        })
        .collect();
    Topology::new(roles).expect("head at index 0 is always valid")
}

/// One shared transfer phase, then the cooperative group (head relaying its
/// members and itself), then the direct group, all optimized jointly.
pub fn solve_hybrid(ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<SchemeResult> {
    let sol = solve_for(&hybrid_topology(ch), ch, params, cfg)?;
    Ok(SchemeResult::new(Scheme::Hybrid, &sol, ch, params))
}

/// Cluster cooperation with WD 0 of `ch` as head.
pub fn solve_cooperative(
    scheme: Scheme,
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<SchemeResult> {
    let sol = solve_for(&Topology::cooperative(ch.num_wds()), ch, params, cfg)?;
    Ok(SchemeResult::new(scheme, &sol, ch, params))
}

/// Run `schemes` on one fading draw. The cluster-center head labels the
/// realization for CC-center, hybrid and IT; CC-HAP relabels the same draw
/// around the WD closest to the HAP.
pub fn compare_schemes(
    geometry: &NetworkGeometry,
    draw: &FadingDraw,
    params: &SystemParams,
    cfg: &SolverConfig,
    schemes: &[Scheme],
) -> Result<Vec<SchemeResult>> {
    let center = draw.realization(geometry.clone().with_cluster_head(ClusterHeadRule::ClosestToCenter).ch_index);
    let near_hap = || draw.realization(geometry.clone().with_cluster_head(ClusterHeadRule::ClosestToHap).ch_index);
    schemes
        .iter()
        .map(|&s| match s {
            Scheme::CcCenter => solve_cooperative(s, &center, params, cfg),
            Scheme::CcHap => solve_cooperative(s, &near_hap(), params, cfg),
            Scheme::Hybrid => solve_hybrid(&center, params, cfg),
            Scheme::It => solve_independent(&center, params, cfg),
        })
        .collect()
}
