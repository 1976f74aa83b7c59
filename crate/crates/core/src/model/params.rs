use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which path-gain the interference constraints of the uplink phases use.
///
/// `ToReceiver` charges a WD transmission with its own WD→PR gain
/// (`h_iR`, `h_0R`), which is the physical interference seen at the primary
/// receiver. `PaperLiteral` uses the PT→WD gains (`h_iD`, `h_0D`) exactly as
/// the published constraint set prints them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ItcConvention {
    PaperLiteral,
    #[default]
    ToReceiver,
}

/// How the mean gain of a multi-antenna link is spread over its entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AntennaVariance {
    /// Every entry of `a_i` and `b` has variance `δ²`, so `E[|a_i|²] = M δ²`.
    #[default]
    PerEntry,
    /// Entries have variance `δ² / M`, so `E[|a_i|²] = δ²`.
    TotalPower,
}

/// Physical constants and protocol parameters of one network instance.
///
/// Powers are in watts, energies in joules, durations are fractions of a
/// unit-length block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemParams {
    pub noise_power: f64,
    pub harvest_efficiency: f64,
    pub primary_tx_power: f64,
    pub hap_tx_power: f64,
    pub itc_threshold: f64,
    pub ce_duration: f64,
    pub antennas: usize,
    pub num_wds: usize,
    /// Per-WD circuit energy, indexed in geometry order.
    pub circuit_energy: Vec<f64>,
    /// Per-WD battery level at the start of the block, geometry order.
    pub battery_init: Vec<f64>,
    /// Battery capacity; `None` in JSON means unlimited.
    #[serde(with = "unbounded")]
    pub battery_cap: f64,
    pub carrier_freq: f64,
    pub antenna_gain: f64,
    pub pathloss_exp: f64,
    pub itc_convention: ItcConvention,
    pub antenna_variance: AntennaVariance,
}

impl Default for SystemParams {
    fn default() -> Self {
        let n = 15;
        Self {
            noise_power: 1e-12,
            harvest_efficiency: 0.5,
            primary_tx_power: 0.1,
            hap_tx_power: 3.0,
            itc_threshold: dbm_to_watts(-60.0),
            ce_duration: 0.0,
            antennas: 5,
            num_wds: n,
            circuit_energy: vec![0.0; n],
            battery_init: vec![0.0; n],
            battery_cap: f64::INFINITY,
            carrier_freq: 915e6,
            antenna_gain: 4.0,
            pathloss_exp: 3.0,
            itc_convention: ItcConvention::ToReceiver,
            antenna_variance: AntennaVariance::PerEntry,
        }
    }
}

impl SystemParams {
    /// Same parameters with the per-WD vectors resized to `n` entries.
    /// New entries repeat the last existing value (or zero).
    pub fn with_num_wds(mut self, n: usize) -> Self {
        let fill = |v: &mut Vec<f64>| {
            let last = v.last().copied().unwrap_or(0.0);
            v.resize(n, last);
        };
        fill(&mut self.circuit_energy);
        fill(&mut self.battery_init);
        self.num_wds = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.noise_power > 0.0) {
            return bad("noise power must be positive");
        }
        if !(self.harvest_efficiency > 0.0 && self.harvest_efficiency <= 1.0) {
            return bad("harvest efficiency must lie in (0, 1]");
        }
        if !(self.primary_tx_power >= 0.0) {
            return bad("primary transmit power must be non-negative");
        }
        if !(self.hap_tx_power >= 0.0 && self.hap_tx_power.is_finite()) {
            return bad("HAP transmit power must be finite and non-negative");
        }
        if !(self.itc_threshold >= 0.0 && self.itc_threshold.is_finite()) {
            return bad("interference threshold must be finite and non-negative");
        }
        // τ₀ ≥ 1 is a valid but infeasible instance; solvers report it as such
        if !(self.ce_duration >= 0.0 && self.ce_duration.is_finite()) {
            return bad("channel-estimation duration must be finite and non-negative");
        }
        if self.antennas == 0 || self.num_wds == 0 {
            return bad("need at least one antenna and one WD");
        }
        if self.circuit_energy.len() != self.num_wds || self.battery_init.len() != self.num_wds {
            return bad("per-WD energy vectors must have num_wds entries");
        }
        if self.circuit_energy.iter().chain(&self.battery_init).any(|&e| !(e >= 0.0 && e.is_finite())) {
            return bad("circuit and initial battery energies must be finite and non-negative");
        }
        if !(self.battery_cap >= 0.0) {
            return bad("battery capacity must be non-negative");
        }
        if !(self.carrier_freq > 0.0 && self.antenna_gain > 0.0 && self.pathloss_exp >= 0.0) {
            return bad("path-loss parameters out of range");
        }
        Ok(())
    }
}

/// `x` dBm in watts: `10^(x/10)` mW.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(-60.0) - 1e-9).abs() < 1e-24);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(1e-10) + 70.0).abs() < 1e-9);
    }

    #[test]
    fn defaults_are_valid() {
        SystemParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_efficiency() {
        let p = SystemParams { harvest_efficiency: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = SystemParams { ce_duration: -0.1, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn infinite_capacity_round_trips_through_json() {
        let p = SystemParams::default();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"battery_cap\":null"));
        let back: SystemParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn resize_keeps_last_value() {
        let p = SystemParams { circuit_energy: vec![1e-9; 15], ..Default::default() }.with_num_wds(20);
        assert_eq!(p.circuit_energy.len(), 20);
        assert_eq!(p.circuit_energy[19], 1e-9);
        p.validate().unwrap();
    }
}
