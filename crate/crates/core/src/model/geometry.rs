use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::seeded_rng;

/// Speed of light used by the path-loss model (m/s).
pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Distance between the primary transmitter and receiver (m).
pub const PT_PR_DISTANCE: f64 = 200.0;

/// Mean power gain of a link of length `d` meters:
/// `G_A (c / (4π d f_c))^α`.
pub fn pathloss_gain(d: f64, carrier_freq: f64, antenna_gain: f64, exponent: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("link distance must be positive, got {d}")));
    }
    if !(carrier_freq > 0.0) {
        return Err(Error::Domain(format!("carrier frequency must be positive, got {carrier_freq}")));
    }
    if !(antenna_gain > 0.0) {
        return Err(Error::Domain(format!("antenna gain must be positive, got {antenna_gain}")));
    }
    let ratio = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * d * carrier_freq);
    Ok(antenna_gain * ratio.powf(exponent))
}

pub type Point = [f64; 2];

pub fn distance(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Placement of the secondary network relative to the primary pair, which
/// always sits at PT = (0, 0), PR = (200, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioCase {
    /// HAP beyond the PR, 202 m from the PT.
    Case1,
    /// HAP equidistant (100 m) from PT and PR.
    Case2,
    /// HAP 30 m from the PT.
    Case3,
    Custom { hap: Point },
}

impl ScenarioCase {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::Case1),
            2 => Some(Self::Case2),
            3 => Some(Self::Case3),
            _ => None,
        }
    }

    pub fn hap_position(&self) -> Point {
        match *self {
            Self::Case1 => [PT_PR_DISTANCE + 2.0, 0.0],
            Self::Case2 => [PT_PR_DISTANCE / 2.0, 0.0],
            Self::Case3 => [30.0, 0.0],
            Self::Custom { hap } => hap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterHeadRule {
    ClosestToCenter,
    ClosestToHap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub hap_pos: Point,
    pub pt_pos: Point,
    pub pr_pos: Point,
    pub wd_pos: Vec<Point>,
    pub cluster_center: Point,
    pub ch_index: usize,
}

impl NetworkGeometry {
    pub fn num_wds(&self) -> usize {
        self.wd_pos.len()
    }

    pub fn with_cluster_head(mut self, rule: ClusterHeadRule) -> Self {
        self.ch_index = select_cluster_head(&self, rule);
        self
    }
}

/// Drop `n` WDs uniformly on a disk of radius `radius` whose center lies
/// `hap_cluster_dist` meters from the HAP, perpendicular to the PT–PR axis.
/// The cluster head defaults to the WD closest to the cluster center.
pub fn build_geometry(
    case: ScenarioCase,
    seed: u64,
    n: usize,
    radius: f64,
    hap_cluster_dist: f64,
) -> Result<NetworkGeometry> {
    if n == 0 {
        return Err(Error::Domain("need at least one WD".into()));
    }
    if !(radius > 0.0 && hap_cluster_dist > 0.0) {
        return Err(Error::Domain("cluster radius and HAP distance must be positive".into()));
    }
    let hap = case.hap_position();
    let center = [hap[0], hap[1] + hap_cluster_dist];
    let mut rng = seeded_rng(seed, 0);
    let wd_pos = (0..n)
        .map(|_| {
            let rho = radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [center[0] + rho * phi.cos(), center[1] + rho * phi.sin()]
        })
        .collect();
    let geometry = NetworkGeometry {
        hap_pos: hap,
        pt_pos: [0.0, 0.0],
        pr_pos: [PT_PR_DISTANCE, 0.0],
        wd_pos,
        cluster_center: center,
        ch_index: 0,
    };
    Ok(geometry.with_cluster_head(ClusterHeadRule::ClosestToCenter))
}

/// Index of the WD minimizing the rule's distance; ties go to the lower index.
pub fn select_cluster_head(geometry: &NetworkGeometry, rule: ClusterHeadRule) -> usize {
    let anchor = match rule {
        ClusterHeadRule::ClosestToCenter => geometry.cluster_center,
        ClusterHeadRule::ClosestToHap => geometry.hap_pos,
    };
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &p) in geometry.wd_pos.iter().enumerate() {
        let d = distance(p, anchor);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}
