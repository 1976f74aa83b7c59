//! Change of variables that turns the max-min problem into a convex one.
//!
//! Products of durations and powers become scaled energies
//! `Ψ = τ₂P₂/η`, `θ = τ₃P₃/η`, the beam covariance is lifted to
//! `W = τ₁Q`, and every rate becomes a perspective `τ log₂(1 + ρx/τ)`,
//! jointly concave in `(τ, x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, min_eigenvalue, quad_form, serde_cmatrix, trace_re, CMatrix, C64};
use crate::model::{ChannelRealization, SystemParams};
use crate::rates::{
    self, battery_level, hap_noise, head_noise, interference_gain, ConstraintReport, ResourceAllocation, Residual,
    Role, Topology,
};

/// Consistency tolerance for `τ = 0 ⇒ x = 0`, in scaled-energy units.
pub const ZERO_SLOT_TOL: f64 = 1e-12;

/// A point of the convex problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedPoint {
    pub tau1: f64,
    pub tau2: Vec<f64>,
    pub tau3: Vec<f64>,
    /// `τ₂P₂/η` per WD uplink slot.
    pub psi: Vec<f64>,
    /// `τ₃P₃/η` per phase-III slot.
    pub theta: Vec<f64>,
    /// `tr(A_i W)`.
    pub z: Vec<f64>,
    #[serde(with = "serde_cmatrix")]
    pub w: CMatrix,
    pub s_bar: f64,
    /// Battery level after harvesting, `min(E₀ + ηz, E_max)`.
    pub battery: Vec<f64>,
}

/// Per-instance constants of the perspective rates and interference caps.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCoefficients {
    /// Member-to-head coefficient `η g_i / (N₀ + h₀D P_p)`; entry 0 unused.
    pub rho_bar: Vec<f64>,
    /// WD-to-HAP coefficient `η h_i / (N₀ + h_TH P_p)`.
    pub rho: Vec<f64>,
    /// `η × interference gain` of each WD.
    pub phi: Vec<f64>,
}

impl RateCoefficients {
    pub fn new(ch: &ChannelRealization, params: &SystemParams) -> Self {
        let eta = params.harvest_efficiency;
        let at_head = head_noise(ch, params);
        let at_hap = hap_noise(ch, params);
        let n = ch.num_wds();
        Self {
            rho_bar: (0..n).map(|i| if i == 0 { 0.0 } else { eta * ch.g[i] / at_head }).collect(),
            rho: ch.h.iter().map(|h| eta * h / at_hap).collect(),
            phi: (0..n).map(|i| eta * interference_gain(ch, params, i)).collect(),
        }
    }

    /// The head's phase-III coefficient `ρ₀`.
    pub fn rho0(&self) -> f64 {
        self.rho[0]
    }
}

/// `τ log₂(1 + ρx/τ)`, continuously extended by 0 at `τ = 0`.
pub fn perspective_rate(tau: f64, x: f64, rho: f64) -> Result<f64> {
    if tau < 0.0 || x < 0.0 || rho < 0.0 {
        return Err(Error::Domain(format!("perspective rate needs non-negative inputs, got ({tau}, {x}, {rho})")));
    }
    Ok(perspective(tau, x, rho))
}

pub(crate) fn perspective(tau: f64, x: f64, rho: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else {
        tau * (rho * x / tau).ln_1p() / std::f64::consts::LN_2
    }
}

/// Lift a cluster-cooperation allocation; `S̄` is set to its min rate.
pub fn to_transformed(alloc: &ResourceAllocation, ch: &ChannelRealization, params: &SystemParams) -> TransformedPoint {
    to_transformed_for(&Topology::cooperative(ch.num_wds()), alloc, ch, params)
}

pub fn to_transformed_for(
    topo: &Topology,
    alloc: &ResourceAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> TransformedPoint {
    let eta = params.harvest_efficiency;
    let w = &alloc.q * C64::new(alloc.tau1, 0.0);
    let z: Vec<f64> = ch.a.iter().map(|a| quad_form(a, &w)).collect();
    let battery = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| battery_level(params.battery_init[ch.order[i]], eta * zi.max(0.0), params.battery_cap))
        .collect();
    let s_bar = rates::wd_rates(topo, alloc, ch, params).into_iter().fold(f64::INFINITY, f64::min).max(0.0);
    TransformedPoint {
        tau1: alloc.tau1,
        tau2: alloc.tau2.clone(),
        tau3: alloc.tau3.clone(),
        psi: alloc.tau2.iter().zip(&alloc.p2).map(|(t, p)| t * p / eta).collect(),
        theta: alloc.tau3.iter().zip(&alloc.p3).map(|(t, p)| t * p / eta).collect(),
        z,
        w,
        s_bar,
        battery,
    }
}

/// Undo the change of variables. Empty slots get zero power; an empty slot
/// carrying energy above [`ZERO_SLOT_TOL`] is an error.
pub fn recover_allocation(point: &TransformedPoint, params: &SystemParams) -> Result<ResourceAllocation> {
    let eta = params.harvest_efficiency;
    let power = |label: &str, i: usize, tau: f64, x: f64| -> Result<f64> {
        if tau > 0.0 {
            Ok(eta * x / tau)
        } else if x.abs() <= ZERO_SLOT_TOL {
            Ok(0.0)
        } else {
            Err(Error::Inconsistent(format!("{label}[{i}] = {x:e} with an empty slot")))
        }
    };
    let q = if point.tau1 > 0.0 {
        &point.w / C64::new(point.tau1, 0.0)
    } else if point.w.norm() <= ZERO_SLOT_TOL {
        CMatrix::zeros(point.w.nrows(), point.w.ncols())
    } else {
        return Err(Error::Inconsistent("nonzero W with an empty transfer phase".into()));
    };
    let p2 = (0..point.psi.len()).map(|i| power("psi", i, point.tau2[i], point.psi[i])).collect::<Result<_>>()?;
    let p3 = (0..point.theta.len()).map(|i| power("theta", i, point.tau3[i], point.theta[i])).collect::<Result<_>>()?;
    Ok(ResourceAllocation {
        tau1: point.tau1,
        tau2: point.tau2.clone(),
        tau3: point.tau3.clone(),
        p2,
        p3,
        q,
    })
}

/// Every constraint of the convex problem for cluster cooperation.
pub fn transformed_residuals(point: &TransformedPoint, ch: &ChannelRealization, params: &SystemParams) -> ConstraintReport {
    transformed_residuals_for(&Topology::cooperative(ch.num_wds()), point, ch, params)
}

/// Rates of the transformed point: one or two bounds per WD that must each
/// be at least `S̄`, as `(label, rate)` pairs.
pub fn rate_bounds(topo: &Topology, point: &TransformedPoint, coef: &RateCoefficients) -> Vec<(String, f64)> {
    let rho0 = coef.rho0();
    let mut out = Vec::new();
    for (i, role) in topo.roles().iter().enumerate() {
        match role {
            Role::Head => out.push((format!("rate_head[{i}]"), perspective(point.tau3[0], point.theta[0], rho0))),
            Role::Member => {
                let r2 = perspective(point.tau2[i], point.psi[i], coef.rho_bar[i]);
                let v2 = perspective(point.tau2[i], point.psi[i], coef.rho[i]);
                let v3 = perspective(point.tau3[i], point.theta[i], rho0);
                out.push((format!("rate_intra[{i}]"), r2));
                out.push((format!("rate_joint[{i}]"), v2 + v3));
            }
            Role::Direct => out.push((format!("rate_direct[{i}]"), perspective(point.tau2[i], point.psi[i], coef.rho[i]))),
        }
    }
    out
}

pub fn transformed_residuals_for(
    topo: &Topology,
    point: &TransformedPoint,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> ConstraintReport {
    let n = ch.num_wds();
    let eta = params.harvest_efficiency;
    let coef = RateCoefficients::new(ch, params);
    let j_floor = params.noise_power / eta;
    let w_floor = params.noise_power;
    let mut res = Vec::new();

    let total = params.ce_duration + point.tau1 + point.tau2.iter().sum::<f64>() + point.tau3.iter().sum::<f64>();
    res.push(Residual::le("time", total, 1.0, 1.0));
    res.push(Residual::le("tau1>=0", -point.tau1, 0.0, 1.0));
    for i in 0..n {
        res.push(Residual::le(format!("tau2[{i}]>=0"), -point.tau2[i], 0.0, 1.0));
        res.push(Residual::le(format!("tau3[{i}]>=0"), -point.tau3[i], 0.0, 1.0));
        res.push(Residual::le(format!("psi[{i}]>=0"), -point.psi[i], 0.0, j_floor));
        res.push(Residual::le(format!("theta[{i}]>=0"), -point.theta[i], 0.0, j_floor));
    }
    res.push(Residual::le("s_bar>=0", -point.s_bar, 0.0, 1e-12));

    let w_scale = point.w.norm().max(w_floor);
    let defect = hermitian_defect(&point.w);
    let min_ev = if defect <= 1e-9 * w_scale { min_eigenvalue(&point.w) } else { -defect };
    res.push(Residual { name: "psd".into(), value: -min_ev, scale: w_scale });
    res.push(Residual::le("w_power", trace_re(&point.w), point.tau1 * params.hap_tx_power, w_floor));
    res.push(Residual::le("itc1", quad_form(&ch.b, &point.w), point.tau1 * params.itc_threshold, w_floor));

    for i in 0..n {
        let orig = ch.order[i];
        let zi = quad_form(&ch.a[i], &point.w);
        res.push(Residual { name: format!("z[{i}]"), value: (point.z[i] - zi).abs(), scale: zi.abs().max(j_floor) });
        res.push(Residual::le(format!("battery[{i}]"), point.battery[i], params.battery_init[orig] + eta * point.z[i], j_floor));
        res.push(Residual::le(format!("battery_cap[{i}]"), point.battery[i], params.battery_cap, j_floor));
        let spent = match topo.roles()[i] {
            Role::Head => point.theta.iter().sum::<f64>(),
            _ => point.psi[i],
        };
        res.push(Residual::le(
            format!("energy[{i}]"),
            spent + params.circuit_energy[orig] / eta,
            point.battery[i] / eta,
            j_floor,
        ));
        // written as φ x ≤ τ I_max so a zero gain needs no division
        if topo.roles()[i] != Role::Head {
            res.push(Residual::le(
                format!("itc2[{i}]"),
                coef.phi[i] * point.psi[i],
                point.tau2[i] * params.itc_threshold,
                w_floor,
            ));
        }
        if topo.has_head() && topo.roles()[i] != Role::Direct {
            res.push(Residual::le(
                format!("itc3[{i}]"),
                coef.phi[0] * point.theta[i],
                point.tau3[i] * params.itc_threshold,
                w_floor,
            ));
        }
    }
    for (label, rate) in rate_bounds(topo, point, &coef) {
        res.push(Residual::le(label, point.s_bar, rate, 1e-12));
    }
    ConstraintReport { residuals: res, tolerance: rates::FEASIBILITY_TOL }
}
