//! Ground-truth evaluation of energy, rates, interference and feasibility
//! for an allocation in the original (non-convex) variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, min_eigenvalue, quad_form, serde_cmatrix, trace_re, CMatrix};
use crate::model::{ChannelRealization, ItcConvention, SystemParams};

/// Default relative tolerance of every feasibility residual.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Role of a WD (in cluster order) within a transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Relays members and sends its own message in phase III. Only index 0.
    Head,
    /// Sends to the head in phase II; the head forwards in phase III.
    Member,
    /// Sends straight to the HAP in its own slot.
    Direct,
}

/// Assignment of roles to the WDs of a realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    roles: Vec<Role>,
}

impl Topology {
    /// Cluster-based cooperation: WD 0 heads, everyone else is a member.
    pub fn cooperative(n: usize) -> Self {
        let mut roles = vec![Role::Member; n];
        roles[0] = Role::Head;
        Self { roles }
    }

    /// Independent harvest-then-transmit: every WD talks to the HAP directly.
    pub fn independent(n: usize) -> Self {
        Self { roles: vec![Role::Direct; n] }
    }

    pub fn new(roles: Vec<Role>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::Domain("topology needs at least one WD".into()));
        }
        if roles.iter().skip(1).any(|&r| r == Role::Head) {
            return Err(Error::Domain("only WD 0 may be the cluster head".into()));
        }
        if roles[0] != Role::Head && roles.contains(&Role::Member) {
            return Err(Error::Domain("members need WD 0 as cluster head".into()));
        }
        Ok(Self { roles })
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn has_head(&self) -> bool {
        self.roles[0] == Role::Head
    }

    /// WDs whose message the head forwards in phase III (head included).
    pub fn relayed(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles.iter().enumerate().filter(|(_, r)| **r != Role::Direct).map(|(i, _)| i)
    }
}

/// Decision variables of the max-min problem in their physical units.
///
/// All vectors are in cluster order and have one entry per WD. `tau2[i]` and
/// `p2[i]` are the uplink slot of WD `i` (to the head for members, to the
/// HAP for direct WDs, unused for the head). `tau3[i]` and `p3[i]` are the
/// head's phase-III slot carrying WD `i`'s message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceAllocation {
    pub tau1: f64,
    pub tau2: Vec<f64>,
    pub tau3: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    #[serde(with = "serde_cmatrix")]
    pub q: CMatrix,
}

impl ResourceAllocation {
    pub fn zeros(n: usize, antennas: usize) -> Self {
        Self {
            tau1: 0.0,
            tau2: vec![0.0; n],
            tau3: vec![0.0; n],
            p2: vec![0.0; n],
            p3: vec![0.0; n],
            q: CMatrix::zeros(antennas, antennas),
        }
    }

    pub fn total_time(&self, ce_duration: f64) -> f64 {
        ce_duration + self.tau1 + self.tau2.iter().sum::<f64>() + self.tau3.iter().sum::<f64>()
    }
}

/// `τ log₂(1 + snr)`, zero whenever `τ = 0`.
pub fn slot_rate(tau: f64, snr: f64) -> f64 {
    if tau == 0.0 {
        0.0
    } else {
        tau * snr.ln_1p() / std::f64::consts::LN_2
    }
}

/// Interference-plus-noise at the head (primary transmitter → head).
pub fn head_noise(ch: &ChannelRealization, params: &SystemParams) -> f64 {
    params.noise_power + ch.h_id[0] * params.primary_tx_power
}

/// Interference-plus-noise at the HAP (primary transmitter → HAP).
pub fn hap_noise(ch: &ChannelRealization, params: &SystemParams) -> f64 {
    params.noise_power + ch.h_th * params.primary_tx_power
}

/// Gain that converts WD `i`'s transmit power into interference at the PR.
pub fn interference_gain(ch: &ChannelRealization, params: &SystemParams, i: usize) -> f64 {
    match params.itc_convention {
        ItcConvention::ToReceiver => ch.h_ir[i],
        ItcConvention::PaperLiteral => ch.h_id[i],
    }
}

/// Energy harvested by every WD during the transfer phase,
/// `η τ₁ tr(A_i Q)`.
pub fn harvested_energy(
    q: &CMatrix,
    tau1: f64,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> Result<Vec<f64>> {
    if tau1 < 0.0 {
        return Err(Error::Domain(format!("negative transfer duration {tau1}")));
    }
    check_psd(q)?;
    Ok(ch.a.iter().map(|a| (params.harvest_efficiency * tau1 * quad_form(a, q)).max(0.0)).collect())
}

fn check_psd(q: &CMatrix) -> Result<()> {
    let scale = q.norm().max(f64::MIN_POSITIVE);
    if hermitian_defect(q) > 1e-9 * scale {
        return Err(Error::NotPsd { min_eigenvalue: f64::NAN });
    }
    let min_ev = min_eigenvalue(q);
    if min_ev < -1e-9 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min_ev });
    }
    Ok(())
}

/// Battery level after harvesting, capped at capacity.
pub fn battery_level(initial: f64, harvested: f64, capacity: f64) -> f64 {
    (initial + harvested).min(capacity)
}

/// Phase-II rate of a member at the head.
pub fn intra_cluster_rate(tau2: f64, p2: f64, g: f64, h0d: f64, params: &SystemParams) -> f64 {
    slot_rate(tau2, g * p2 / (params.noise_power + h0d * params.primary_tx_power))
}

/// Information the HAP extracts by overhearing a phase-II slot. Also the
/// rate of a direct WD-to-HAP slot.
pub fn hap_overheard_rate(tau2: f64, p2: f64, h: f64, h_th: f64, params: &SystemParams) -> f64 {
    slot_rate(tau2, h * p2 / (params.noise_power + h_th * params.primary_tx_power))
}

/// Phase-III rates of the head's slots. Entry 0 is the head's own rate,
/// entry `i ≥ 1` the forwarding rate of WD `i`'s message.
pub fn ch_rates(tau3: &[f64], p3: &[f64], h0: f64, h_th: f64, params: &SystemParams) -> Vec<f64> {
    tau3.iter().zip(p3).map(|(&t, &p)| hap_overheard_rate(t, p, h0, h_th, params)).collect()
}

/// Joint-decoding rate of a member across phases II and III.
pub fn joint_cm_rate(r2: f64, v2: f64, v3: f64) -> f64 {
    r2.min(v2 + v3)
}

/// Interference power inflicted on the primary receiver in each phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferencePowers {
    pub phase1: f64,
    /// Per-WD uplink slot (zero for the head).
    pub phase2: Vec<f64>,
    /// Per phase-III slot of the head.
    pub phase3: Vec<f64>,
}

impl InterferencePowers {
    pub fn max(&self) -> f64 {
        self.phase2.iter().chain(&self.phase3).fold(self.phase1, |m, &x| m.max(x))
    }
}

pub fn interference_powers(
    alloc: &ResourceAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> InterferencePowers {
    let n = ch.num_wds();
    let g0 = interference_gain(ch, params, 0);
    InterferencePowers {
        phase1: quad_form(&ch.b, &alloc.q),
        phase2: (0..n).map(|i| interference_gain(ch, params, i) * alloc.p2[i]).collect(),
        phase3: alloc.p3.iter().map(|&p| g0 * p).collect(),
    }
}

/// Signed violation of one constraint: feasible when `value ≤ tol · scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    /// `lhs − rhs` in the constraint's native units.
    pub value: f64,
    /// Magnitude of the constraint's terms; the tolerance is relative to it.
    pub scale: f64,
}

impl Residual {
    /// `lhs ≤ rhs` with a unit floor on the scale.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, floor: f64) -> Self {
        Self { name: name.into(), value: lhs - rhs, scale: lhs.abs().max(rhs.abs()).max(floor) }
    }

    pub fn normalized(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            self.value
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.value <= tol * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub residuals: Vec<Residual>,
    pub tolerance: f64,
}

impl ConstraintReport {
    pub fn feasible(&self) -> bool {
        self.residuals.iter().all(|r| r.holds(self.tolerance))
    }

    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.holds(self.tolerance))
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    /// Largest normalized residual (negative when strictly feasible).
    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(Residual::normalized).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Feasibility of a cluster-cooperation allocation.
pub fn check_feasibility(alloc: &ResourceAllocation, ch: &ChannelRealization, params: &SystemParams) -> ConstraintReport {
    check_feasibility_for(&Topology::cooperative(ch.num_wds()), alloc, ch, params)
}

/// Feasibility of an allocation under an arbitrary role assignment.
pub fn check_feasibility_for(
    topo: &Topology,
    alloc: &ResourceAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> ConstraintReport {
    let n = ch.num_wds();
    let tol = FEASIBILITY_TOL;
    let mut res = Vec::new();
    if [&alloc.tau2, &alloc.tau3, &alloc.p2, &alloc.p3].iter().any(|v| v.len() != n)
        || topo.len() != n
        || alloc.q.nrows() != ch.antennas()
        || alloc.q.ncols() != ch.antennas()
    {
        res.push(Residual { name: "shape".into(), value: 1.0, scale: 1.0 });
        return ConstraintReport { residuals: res, tolerance: tol };
    }
    // Unit floors: one block for time, the noise power for watts and the
    // noise energy over one block for joules.
    let (t_floor, w_floor, j_floor) = (1.0, params.noise_power, params.noise_power);
    let eta = params.harvest_efficiency;

    res.push(Residual::le("time", alloc.total_time(params.ce_duration), 1.0, t_floor));
    res.push(Residual::le("tau1>=0", -alloc.tau1, 0.0, t_floor));
    for i in 0..n {
        res.push(Residual::le(format!("tau2[{i}]>=0"), -alloc.tau2[i], 0.0, t_floor));
        res.push(Residual::le(format!("tau3[{i}]>=0"), -alloc.tau3[i], 0.0, t_floor));
        res.push(Residual::le(format!("p2[{i}]>=0"), -alloc.p2[i], 0.0, w_floor));
        res.push(Residual::le(format!("p3[{i}]>=0"), -alloc.p3[i], 0.0, w_floor));
    }
    // slots a role does not own must stay empty
    for (i, role) in topo.roles().iter().enumerate() {
        let owns_uplink = *role != Role::Head;
        let owns_relay = topo.has_head() && *role != Role::Direct;
        if !owns_uplink {
            res.push(Residual::le(format!("unused tau2[{i}]"), alloc.tau2[i].abs(), 0.0, t_floor));
        }
        if !owns_relay {
            res.push(Residual::le(format!("unused tau3[{i}]"), alloc.tau3[i].abs(), 0.0, t_floor));
        }
    }

    let q_scale = alloc.q.norm().max(w_floor);
    let defect = hermitian_defect(&alloc.q);
    let min_ev = if defect <= 1e-9 * q_scale { min_eigenvalue(&alloc.q) } else { -defect };
    res.push(Residual { name: "psd".into(), value: -min_ev, scale: q_scale });
    res.push(Residual::le("hap_power", trace_re(&alloc.q), params.hap_tx_power, w_floor));

    let harvested: Vec<f64> =
        ch.a.iter().map(|a| eta * alloc.tau1.max(0.0) * quad_form(a, &alloc.q).max(0.0)).collect();
    for i in 0..n {
        let orig = ch.order[i];
        let e_i = battery_level(params.battery_init[orig], harvested[i], params.battery_cap);
        let spent = match topo.roles()[i] {
            Role::Head => alloc.tau3.iter().zip(&alloc.p3).map(|(t, p)| t * p).sum::<f64>(),
            _ => alloc.tau2[i] * alloc.p2[i],
        };
        res.push(Residual::le(format!("energy[{i}]"), spent + params.circuit_energy[orig], e_i, j_floor));
    }

    let itc = interference_powers(alloc, ch, params);
    let imax = params.itc_threshold;
    res.push(Residual::le("itc1", itc.phase1, imax, w_floor));
    for i in 0..n {
        if topo.roles()[i] != Role::Head {
            res.push(Residual::le(format!("itc2[{i}]"), itc.phase2[i], imax, w_floor));
        }
        if topo.has_head() && topo.roles()[i] != Role::Direct {
            res.push(Residual::le(format!("itc3[{i}]"), itc.phase3[i], imax, w_floor));
        }
    }
    ConstraintReport { residuals: res, tolerance: tol }
}

/// Throughput of every WD plus the diagnostics behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Geometry index of each WD, in cluster order.
    pub wd_order: Vec<usize>,
    pub rates: Vec<f64>,
    pub min_rate: f64,
    pub sum_rate: f64,
    pub harvested: Vec<f64>,
    pub battery: Vec<f64>,
    pub interference: InterferencePowers,
    pub constraints: ConstraintReport,
}

/// Per-WD rates of an allocation under `topo`, without feasibility checks.
pub fn wd_rates(topo: &Topology, alloc: &ResourceAllocation, ch: &ChannelRealization, params: &SystemParams) -> Vec<f64> {
    let relay = ch_rates(&alloc.tau3, &alloc.p3, ch.h[0], ch.h_th, params);
    topo.roles()
        .iter()
        .enumerate()
        .map(|(i, role)| match role {
            Role::Head => relay[0],
            Role::Member => {
                let r2 = intra_cluster_rate(alloc.tau2[i], alloc.p2[i], ch.g[i], ch.h_id[0], params);
                let v2 = hap_overheard_rate(alloc.tau2[i], alloc.p2[i], ch.h[i], ch.h_th, params);
                joint_cm_rate(r2, v2, relay[i])
            }
            Role::Direct => hap_overheard_rate(alloc.tau2[i], alloc.p2[i], ch.h[i], ch.h_th, params),
        })
        .collect()
}

pub fn evaluate_unchecked(
    topo: &Topology,
    alloc: &ResourceAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> ThroughputReport {
    let rates = wd_rates(topo, alloc, ch, params);
    let eta = params.harvest_efficiency;
    let harvested: Vec<f64> =
        ch.a.iter().map(|a| eta * alloc.tau1.max(0.0) * quad_form(a, &alloc.q).max(0.0)).collect();
    let battery = harvested
        .iter()
        .enumerate()
        .map(|(i, &h)| battery_level(params.battery_init[ch.order[i]], h, params.battery_cap))
        .collect();
    ThroughputReport {
        wd_order: ch.order.clone(),
        min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
        sum_rate: rates.iter().sum(),
        rates,
        harvested,
        battery,
        interference: interference_powers(alloc, ch, params),
        constraints: check_feasibility_for(topo, alloc, ch, params),
    }
}

/// Evaluate a feasible cluster-cooperation allocation.
pub fn evaluate(alloc: &ResourceAllocation, ch: &ChannelRealization, params: &SystemParams) -> Result<ThroughputReport> {
    evaluate_for(&Topology::cooperative(ch.num_wds()), alloc, ch, params)
}

pub fn evaluate_for(
    topo: &Topology,
    alloc: &ResourceAllocation,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> Result<ThroughputReport> {
    let report = evaluate_unchecked(topo, alloc, ch, params);
    if report.constraints.feasible() {
        Ok(report)
    } else {
        Err(Error::Infeasible(Box::new(report.constraints)))
    }
}
