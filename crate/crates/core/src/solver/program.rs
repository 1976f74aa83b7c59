//! Lowering of the convex max-min problem (or its min-time feasibility
//! variant) onto the barrier engine.

use crate::linalg::{complement_basis, orthonormal_basis, project_out, quad_form, CMatrix, CVector, C64};
use crate::model::{ChannelRealization, SystemParams};
use crate::rates::{battery_level, Role, Topology};
use crate::transform::{perspective, rate_bounds, RateCoefficients, TransformedPoint};

use super::barrier::{LinearRow, Perspective, Program, PsdBlock, RateRow};
use super::{PsdMode, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Goal {
    /// Maximize `S̄` within the time budget.
    MaxMin,
    /// Minimize total time subject to every rate reaching `target`.
    MinTime { target: f64 },
}

/// Where each physical quantity lives in the variable vector. `None` marks a
/// quantity pinned to zero.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub s_bar: Option<usize>,
    pub tau1: Option<usize>,
    pub block: Option<PsdBlock>,
    /// Columns span the subspace `W` lives in.
    pub basis: CMatrix,
    pub tau2: Vec<Option<usize>>,
    pub psi: Vec<Option<usize>>,
    pub tau3: Vec<Option<usize>>,
    pub theta: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Lowered {
    pub program: Program,
    pub layout: Layout,
    pub coef: RateCoefficients,
    pub available_time: f64,
    /// `ã_i = Uᴴ a_i`.
    a_red: Vec<Vec<C64>>,
    b_red: Vec<C64>,
    energy: Vec<EnergyBudget>,
}

/// `spend ≤ constant/η + z` (with `z` only when `harvests`), and
/// `spend ≤ cap/η`.
#[derive(Debug, Clone, Copy)]
struct EnergyBudget {
    harvests: bool,
    base: f64,
    cap: f64,
}

impl Lowered {
    pub fn build(
        topo: &Topology,
        ch: &ChannelRealization,
        params: &SystemParams,
        cfg: &SolverConfig,
        goal: Goal,
    ) -> Result<Self, String> {
        let n = ch.num_wds();
        let m = ch.antennas();
        let eta = params.harvest_efficiency;
        let imax = params.itc_threshold;
        let available_time = 1.0 - params.ce_duration;
        if available_time <= 0.0 {
            return Err(format!("channel estimation takes the whole block (tau0 = {})", params.ce_duration));
        }
        let coef = RateCoefficients::new(ch, params);

        // subspace of W
        let b_norm = ch.b.norm();
        let blocks_b = imax <= 0.0 && b_norm > 0.0;
        let basis = if params.hap_tx_power <= 0.0 || m == 0 {
            CMatrix::zeros(m, 0)
        } else {
            // b (when allowed) leads the basis so the phase-1 interference
            // row touches a single coordinate
            let full = || {
                let comp = complement_basis(&ch.b);
                if blocks_b || b_norm == 0.0 {
                    comp
                } else {
                    let mut u = CMatrix::zeros(m, m);
                    u.set_column(0, &(&ch.b / C64::new(b_norm, 0.0)));
                    u.columns_mut(1, m - 1).copy_from(&comp);
                    u
                }
            };
            match cfg.psd_mode {
                PsdMode::Full => full(),
                PsdMode::Reduced => {
                    let vecs: Vec<CVector> = if blocks_b {
                        project_out(&ch.a, &ch.b)
                    } else {
                        std::iter::once(ch.b.clone()).chain(ch.a.iter().cloned()).collect()
                    };
                    orthonormal_basis(&vecs, m, 1e-10)
                }
            }
        };
        let k = basis.ncols();
        let reduce = |v: &CVector| -> Vec<C64> { (basis.adjoint() * v).iter().copied().collect() };
        let a_red: Vec<Vec<C64>> = ch.a.iter().map(reduce).collect();
        let b_red: Vec<C64> = if blocks_b { vec![C64::new(0.0, 0.0); k] } else { reduce(&ch.b) };
        let a_scale = a_red.iter().flatten().map(|c| c.norm_sqr()).fold(0.0, f64::max);

        let mut p = Program::default();
        let mut next = 0usize;
        let mut alloc = |count: usize| {
            let start = next;
            next += count;
            start
        };
        let s_bar = matches!(goal, Goal::MaxMin).then(|| alloc(1));
        let (tau1, block) = if k > 0 {
            let t = alloc(1);
            let off = alloc(k * k);
            (Some(t), Some(PsdBlock { offset: off, k }))
        } else {
            (None, None)
        };
        let harvests: Vec<bool> = a_red
            .iter()
            .map(|a| block.is_some() && a.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-24 * a_scale)
            .collect();

        let energy: Vec<EnergyBudget> = (0..n)
            .map(|i| {
                let orig = ch.order[i];
                let e = params.circuit_energy[orig];
                EnergyBudget {
                    harvests: harvests[i],
                    base: (params.battery_init[orig] - e) / eta,
                    cap: (params.battery_cap - e) / eta,
                }
            })
            .collect();
        let no_energy = |i: usize| {
            let en = energy[i];
            en.cap <= 0.0 || (!en.harvests && en.base <= 0.0)
        };
        let silenced = |i: usize| coef.phi[i] > 0.0 && imax <= 0.0;

        let mut tau2 = vec![None; n];
        let mut psi = vec![None; n];
        let mut tau3 = vec![None; n];
        let mut theta = vec![None; n];
        let head_off = topo.has_head() && (no_energy(0) || silenced(0));
        for (i, role) in topo.roles().iter().enumerate() {
            if *role != Role::Head && !(no_energy(i) || silenced(i)) {
                tau2[i] = Some(alloc(1));
                psi[i] = Some(alloc(1));
            }
            if topo.has_head() && *role != Role::Direct && !head_off {
                tau3[i] = Some(alloc(1));
                theta[i] = Some(alloc(1));
            }
        }
        p.n = next;
        let taus: Vec<usize> = tau1.iter().chain(tau2.iter().flatten()).chain(tau3.iter().flatten()).copied().collect();

        match goal {
            Goal::MaxMin => {
                p.objective = vec![(s_bar.unwrap(), -1.0)];
                if !taus.is_empty() {
                    p.linear.push(LinearRow { entries: taus.iter().map(|&t| (t, 1.0)).collect(), rhs: available_time });
                }
            }
            Goal::MinTime { .. } => p.objective = taus.iter().map(|&t| (t, 1.0)).collect(),
        }
        p.lower = taus.iter().map(|&t| (t, cfg.tau_floor)).collect();
        p.lower.extend(psi.iter().chain(theta.iter()).flatten().map(|&x| (x, 0.0)));

        if let (Some(t1), Some(blk)) = (tau1, block) {
            let mut tr: Vec<(usize, f64)> =
                blk.trace_coefficients().into_iter().enumerate().map(|(r, c)| (blk.offset + r, c)).collect();
            tr.push((t1, -params.hap_tx_power));
            p.linear.push(LinearRow { entries: tr, rhs: 0.0 });
            if b_red.iter().any(|c| c.norm_sqr() > 0.0) {
                let mut row = sparse_block(blk, &blk.quad_coefficients(&b_red));
                row.push((t1, -imax));
                p.linear.push(LinearRow { entries: row, rhs: 0.0 });
            }
        }

        for i in 0..n {
            let spend: Vec<usize> = match topo.roles()[i] {
                Role::Head => theta.iter().flatten().copied().collect(),
                _ => psi[i].into_iter().collect(),
            };
            let en = energy[i];
            let mut entries: Vec<(usize, f64)> = spend.iter().map(|&v| (v, 1.0)).collect();
            if en.harvests {
                let blk = block.unwrap();
                let coefs = blk.quad_coefficients(&a_red[i]);
                entries.extend(sparse_block(blk, &coefs).into_iter().map(|(j, c)| (j, -c)));
            }
            let rhs = if en.harvests { en.base } else { en.base.min(en.cap) };
            if entries.is_empty() {
                if rhs < 0.0 {
                    return Err(format!("WD {i} cannot cover its circuit energy"));
                }
            } else {
                p.linear.push(LinearRow { entries, rhs });
            }
            if en.harvests && en.cap.is_finite() && !spend.is_empty() {
                p.linear.push(LinearRow { entries: spend.iter().map(|&v| (v, 1.0)).collect(), rhs: en.cap });
            }
        }

        for i in 0..n {
            if let (Some(t), Some(x)) = (tau2[i], psi[i]) {
                if coef.phi[i] > 0.0 {
                    p.linear.push(LinearRow { entries: vec![(x, coef.phi[i]), (t, -imax)], rhs: 0.0 });
                }
            }
            if let (Some(t), Some(x)) = (tau3[i], theta[i]) {
                if coef.phi[0] > 0.0 {
                    p.linear.push(LinearRow { entries: vec![(x, coef.phi[0]), (t, -imax)], rhs: 0.0 });
                }
            }
        }

        let persp = |t: Option<usize>, x: Option<usize>, rho: f64| -> Option<Perspective> {
            match (t, x) {
                (Some(tau), Some(x)) if rho > 0.0 => Some(Perspective { tau, x, rho }),
                _ => None,
            }
        };
        let rho0 = coef.rho0();
        for (i, role) in topo.roles().iter().enumerate() {
            let rows: Vec<Vec<Perspective>> = match role {
                Role::Head => vec![persp(tau3[0], theta[0], rho0).into_iter().collect()],
                Role::Member => vec![
                    persp(tau2[i], psi[i], coef.rho_bar[i]).into_iter().collect(),
                    persp(tau2[i], psi[i], coef.rho[i]).into_iter().chain(persp(tau3[i], theta[i], rho0)).collect(),
                ],
                Role::Direct => vec![persp(tau2[i], psi[i], coef.rho[i]).into_iter().collect()],
            };
            for terms in rows {
                let row = match goal {
                    Goal::MaxMin => RateRow { lin: vec![(s_bar.unwrap(), 1.0)], constant: 0.0, terms },
                    Goal::MinTime { target } => {
                        if terms.is_empty() && target > 0.0 {
                            return Err(format!("WD {i} cannot reach any positive rate"));
                        }
                        RateRow { lin: vec![], constant: target, terms }
                    }
                };
                p.rates.push(row);
            }
        }
        p.psd = block;

        Ok(Self {
            program: p,
            layout: Layout { s_bar, tau1, block, basis, tau2, psi, tau3, theta },
            coef,
            available_time,
            a_red,
            b_red,
            energy,
        })
    }

    /// Strictly feasible starting point with `τ₁` set to `tau1` and the
    /// remaining time split evenly over `slot_time` per slot.
    fn candidate(&self, tau1: f64, slot_time: f64, params: &SystemParams, topo: &Topology) -> Option<Vec<f64>> {
        let l = &self.layout;
        let mut x = vec![0.0; self.program.n];
        let imax = params.itc_threshold;
        let mut z = vec![0.0; self.a_red.len()];
        if let (Some(t1), Some(blk)) = (l.tau1, l.block) {
            x[t1] = tau1;
            let b2: f64 = self.b_red.iter().map(|c| c.norm_sqr()).sum();
            let mut c = params.hap_tx_power / blk.k as f64;
            if b2 > 0.0 {
                c = c.min(imax / b2);
            }
            let c = 0.5 * tau1 * c;
            x[blk.offset..blk.offset + blk.dim()].copy_from_slice(&blk.scaled_identity(c));
            for (zi, a) in z.iter_mut().zip(&self.a_red) {
                *zi = c * a.iter().map(|v| v.norm_sqr()).sum::<f64>();
            }
        }
        for t in l.tau2.iter().chain(l.tau3.iter()).flatten() {
            x[*t] = slot_time;
        }
        let budget = |i: usize| {
            let en = self.energy[i];
            let b = if en.harvests { en.base + z[i] } else { en.base };
            b.min(en.cap)
        };
        let itc_cap = |phi: f64, tau: f64| if phi > 0.0 { tau * imax / phi } else { f64::INFINITY };
        for i in 0..l.psi.len() {
            if let (Some(t), Some(v)) = (l.tau2[i], l.psi[i]) {
                x[v] = 0.5 * budget(i).min(itc_cap(self.coef.phi[i], x[t]));
            }
        }
        if topo.has_head() {
            let count = l.theta.iter().flatten().count().max(1) as f64;
            for i in 0..l.theta.len() {
                if let (Some(t), Some(v)) = (l.tau3[i], l.theta[i]) {
                    x[v] = 0.5 * (budget(0) / count).min(itc_cap(self.coef.phi[0], x[t]));
                }
            }
        }
        Some(x)
    }

    fn min_rate_terms(&self, x: &[f64]) -> f64 {
        self.program
            .rates
            .iter()
            .map(|r| r.terms.iter().map(|t| crate::transform::perspective(x[t.tau], x[t.x], t.rho)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Interior starting point for the max-min program.
    pub fn start_max_min(&self, params: &SystemParams, topo: &Topology) -> Option<Vec<f64>> {
        let l = &self.layout;
        let slots = l.tau2.iter().chain(l.tau3.iter()).flatten().count();
        let count = slots + l.tau1.is_some() as usize;
        let even = self.available_time / (count + 1) as f64;
        let shares: &[f64] = if l.tau1.is_some() { &[0.0, 0.5, 0.8, 0.95] } else { &[0.0] };
        for &share in shares {
            let (tau1, slot) = if share == 0.0 {
                (even, even)
            } else {
                let t1 = share * self.available_time;
                (t1, (self.available_time - t1) / (slots + 1) as f64)
            };
            let Some(mut x) = self.candidate(tau1, slot, params, topo) else { continue };
            let rate = self.min_rate_terms(&x);
            x[l.s_bar.unwrap()] = if rate > 0.0 && rate.is_finite() { 0.5 * rate } else { -1e-3 };
            if self.program.is_strictly_feasible(&x) {
                return Some(x);
            }
        }
        None
    }

    /// Interior starting point for the min-time program: grow every
    /// duration geometrically until the target rate is strictly exceeded.
    pub fn start_min_time(&self, params: &SystemParams, topo: &Topology) -> Option<Vec<f64>> {
        let mut kappa = 1e-3;
        for _ in 0..80 {
            if let Some(x) = self.candidate(kappa, kappa, params, topo) {
                if self.program.is_strictly_feasible(&x) {
                    return Some(x);
                }
            }
            kappa *= 2.0;
        }
        None
    }

    pub fn total_time(&self, x: &[f64]) -> f64 {
        let l = &self.layout;
        l.tau1.iter().chain(l.tau2.iter().flatten()).chain(l.tau3.iter().flatten()).map(|&t| x[t]).sum()
    }

    /// Map engine variables back to a transformed point. Durations below
    /// `snap` are zeroed with their paired energies; `S̄` is set to the
    /// smallest rate bound of the result.
    pub fn extract(
        &self,
        x: &[f64],
        topo: &Topology,
        ch: &ChannelRealization,
        params: &SystemParams,
        snap: f64,
    ) -> TransformedPoint {
        let l = &self.layout;
        let n = ch.num_wds();
        let m = ch.antennas();
        let get = |v: Option<usize>| v.map_or(0.0, |i| x[i]);
        let mut tau1 = get(l.tau1);
        let mut w = CMatrix::zeros(m, m);
        if let Some(blk) = l.block {
            if tau1 < snap {
                tau1 = 0.0;
            } else {
                let xm = blk.matrix(x);
                w = &l.basis * xm * l.basis.adjoint();
                w = (&w + w.adjoint()) * C64::new(0.5, 0.0);
            }
        }
        let mut tau2 = vec![0.0; n];
        let mut psi = vec![0.0; n];
        let mut tau3 = vec![0.0; n];
        let mut theta = vec![0.0; n];
        for i in 0..n {
            (tau2[i], psi[i]) = (get(l.tau2[i]), get(l.psi[i]).max(0.0));
            (tau3[i], theta[i]) = (get(l.tau3[i]), get(l.theta[i]).max(0.0));
        }
        let eta = params.harvest_efficiency;
        let z: Vec<f64> = ch.a.iter().map(|a| quad_form(a, &w).max(0.0)).collect();
        let battery =
            (0..n).map(|i| battery_level(params.battery_init[ch.order[i]], eta * z[i], params.battery_cap)).collect();
        let mut point = TransformedPoint { tau1, tau2, tau3, psi, theta, z, w, s_bar: 0.0, battery };
        let min_rate = |p: &TransformedPoint| {
            rate_bounds(topo, p, &self.coef).into_iter().map(|(_, r)| r).fold(f64::INFINITY, f64::min).max(0.0)
        };

        // Zero each vanishing slot together with its energy, unless the rate
        // it still carries is visible next to the optimum. Dropping a slot
        // only frees time and energy, so feasibility is preserved.
        let keep = min_rate(&point) * (1.0 - SNAP_LOSS);
        for i in 0..n {
            for phase in [2, 3] {
                let (tau, energy) = slot_mut(&mut point, phase, i);
                if *tau == 0.0 || *tau >= snap {
                    continue;
                }
                let saved = (*tau, *energy);
                (*tau, *energy) = (0.0, 0.0);
                if min_rate(&point) < keep {
                    let (tau, energy) = slot_mut(&mut point, phase, i);
                    (*tau, *energy) = saved;
                }
            }
        }
        point.s_bar = min_rate(&point);
        self.release_surplus(topo, &mut point);
        point
    }
}

impl Lowered {
    /// Lower each WD's own transmit energy until its rate equals `S̄`.
    ///
    /// Near the optimum a WD may keep a surplus whose value to the objective
    /// lies below the duality-gap resolution (slots of ~1e-7 with high SNR).
    /// Giving it back leaves `S̄` unchanged and only loosens the energy and
    /// interference rows.
    fn release_surplus(&self, topo: &Topology, point: &mut TransformedPoint) {
        let target = point.s_bar;
        if !(target > 0.0) {
            return;
        }
        let coef = &self.coef;
        let rho0 = coef.rho0();
        for (i, role) in topo.roles().iter().enumerate() {
            let rate = |p: &TransformedPoint, e: f64| match role {
                Role::Head => perspective(p.tau3[0], e, rho0),
                Role::Member => perspective(p.tau2[i], e, coef.rho_bar[i])
                    .min(perspective(p.tau2[i], e, coef.rho[i]) + perspective(p.tau3[i], p.theta[i], rho0)),
                Role::Direct => perspective(p.tau2[i], e, coef.rho[i]),
            };
            let current = if *role == Role::Head { point.theta[0] } else { point.psi[i] };
            if rate(point, current) <= target * (1.0 + SURPLUS_TOL) {
                continue;
            }
            let (mut lo, mut hi) = (0.0, current);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rate(point, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if *role == Role::Head {
                point.theta[0] = hi;
            } else {
                point.psi[i] = hi;
            }
        }
    }
}

/// Relative rate surplus left in place by [`Lowered::release_surplus`].
const SURPLUS_TOL: f64 = 1e-9;

/// Duration and energy of WD `i`'s slot in phase 2 or 3.
fn slot_mut(p: &mut TransformedPoint, phase: u8, i: usize) -> (&mut f64, &mut f64) {
    if phase == 2 {
        (&mut p.tau2[i], &mut p.psi[i])
    } else {
        (&mut p.tau3[i], &mut p.theta[i])
    }
}

/// Largest relative loss of `S̄` accepted when zeroing a vanishing slot.
const SNAP_LOSS: f64 = 1e-9;

fn sparse_block(blk: PsdBlock, coefs: &[f64]) -> Vec<(usize, f64)> {
    coefs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(r, &c)| (blk.offset + r, c)).collect()
}

/// The all-zero transformed point (nothing transmitted).
pub(crate) fn zero_point(ch: &ChannelRealization, params: &SystemParams) -> TransformedPoint {
    let n = ch.num_wds();
    let m = ch.antennas();
    TransformedPoint {
        tau1: 0.0,
        tau2: vec![0.0; n],
        tau3: vec![0.0; n],
        psi: vec![0.0; n],
        theta: vec![0.0; n],
        z: vec![0.0; n],
        w: CMatrix::zeros(m, m),
        s_bar: 0.0,
        battery: (0..n).map(|i| params.battery_init[ch.order[i]].min(params.battery_cap)).collect(),
    }
}
