//! Exhaustive grid search for single-antenna networks of one or two WDs.
//!
//! With `M = 1` the beam is a scalar and the best one saturates its caps,
//! `w = τ₁ min(P_H, I_max/|b|²)`. Each uplink energy is set to its largest
//! admissible value (rates only grow with it and it costs nobody else), and
//! the head's relay energies follow in closed form from the rate targets.
//! Durations live on a grid of step `(1 − τ₀)/resolution`; the last slot takes
//! whatever time remains.

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, SystemParams};
use crate::rates::{Role, Topology};
use crate::transform::{perspective, RateCoefficients};

/// Largest `S̄` found for cluster cooperation.
pub fn brute_force_oracle(ch: &ChannelRealization, params: &SystemParams, resolution: usize) -> Result<f64> {
    brute_force_oracle_for(&Topology::cooperative(ch.num_wds()), ch, params, resolution)
}

pub fn brute_force_oracle_for(
    topo: &Topology,
    ch: &ChannelRealization,
    params: &SystemParams,
    resolution: usize,
) -> Result<f64> {
    let n = ch.num_wds();
    if ch.antennas() != 1 || n > 2 || n == 0 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs M = 1 and N <= 2, got M = {}, N = {n}",
            ch.antennas()
        )));
    }
    if resolution < 100 {
        return Err(Error::InvalidParams(format!("oracle resolution must be at least 100, got {resolution}")));
    }
    if topo.len() != n {
        return Err(Error::InvalidParams("topology size does not match the channels".into()));
    }
    params.validate()?;
    let avail = 1.0 - params.ce_duration;
    if avail <= 0.0 {
        return Ok(0.0);
    }
    let inst = Instance::new(ch, params, avail / resolution as f64);
    Ok(if topo.roles().contains(&Role::Member) { inst.cooperative(resolution) } else { inst.direct(topo, resolution) })
}

struct Instance {
    step: f64,
    avail: f64,
    imax: f64,
    /// `min(P_H, I_max/|b|²)`.
    beam: f64,
    gain: Vec<f64>,
    base: Vec<f64>,
    cap: Vec<f64>,
    coef: RateCoefficients,
}

impl Instance {
    fn new(ch: &ChannelRealization, params: &SystemParams, step: f64) -> Self {
        let eta = params.harvest_efficiency;
        let b2 = ch.b[0].norm_sqr();
        let mut beam = params.hap_tx_power;
        if b2 > 0.0 {
            beam = beam.min(params.itc_threshold / b2);
        }
        let per = |f: &dyn Fn(usize) -> f64| (0..ch.num_wds()).map(f).collect::<Vec<_>>();
        Self {
            step,
            avail: 1.0 - params.ce_duration,
            imax: params.itc_threshold,
            beam,
            gain: per(&|i| ch.a[i][0].norm_sqr()),
            base: per(&|i| (params.battery_init[ch.order[i]] - params.circuit_energy[ch.order[i]]) / eta),
            cap: per(&|i| (params.battery_cap - params.circuit_energy[ch.order[i]]) / eta),
            coef: RateCoefficients::new(ch, params),
        }
    }

    /// Scaled energy WD `i` may spend after a transfer phase of `tau1`
    /// (negative when even silence is unaffordable).
    fn budget(&self, i: usize, tau1: f64) -> f64 {
        (self.base[i] + self.gain[i] * self.beam * tau1).min(self.cap[i])
    }

    fn itc_cap(&self, phi: f64, tau: f64) -> f64 {
        if phi > 0.0 {
            tau * self.imax / phi
        } else {
            f64::INFINITY
        }
    }

    /// Every WD has one slot of its own; `S̄` of a grid point is the smallest
    /// slot rate, so no bisection is needed.
    fn direct(&self, topo: &Topology, res: usize) -> f64 {
        let n = topo.len();
        let rho = |i: usize| if topo.roles()[i] == Role::Head { self.coef.rho0() } else { self.coef.rho[i] };
        let phi = |i: usize| if topo.roles()[i] == Role::Head { self.coef.phi[0] } else { self.coef.phi[i] };
        let rate = |i: usize, tau1: f64, tau: f64| {
            let budget = self.budget(i, tau1);
            if budget < 0.0 {
                return f64::NEG_INFINITY;
            }
            perspective(tau, budget.min(self.itc_cap(phi(i), tau)), rho(i))
        };
        let mut best = f64::NEG_INFINITY;
        for i in 0..=res {
            let tau1 = i as f64 * self.step;
            if n == 1 {
                best = best.max(rate(0, tau1, (self.avail - tau1).max(0.0)));
                continue;
            }
            for j in 0..=(res - i) {
                let t0 = j as f64 * self.step;
                let t1 = (self.avail - tau1 - t0).max(0.0);
                best = best.max(rate(0, tau1, t0).min(rate(1, tau1, t1)));
            }
        }
        best.max(0.0)
    }

    /// Head 0 and member 1: outer bisection on `S̄` over a 3-D grid of
    /// `(τ₁, τ₂,₁, τ₃,₀)` with `τ₃,₁` taking the rest.
    fn cooperative(&self, res: usize) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        let rho0 = self.coef.rho0();
        let (rho_bar, rho1) = (self.coef.rho_bar[1], self.coef.rho[1]);
        let (phi0, phi1) = (self.coef.phi[0], self.coef.phi[1]);
        // least θ with τ log₂(1 + ρθ/τ) ≥ need
        let theta_min = |need: f64, tau: f64| -> f64 {
            if need <= 0.0 {
                0.0
            } else if tau <= 0.0 || rho0 <= 0.0 {
                f64::INFINITY
            } else {
                tau * (need * ln2 / tau).exp_m1() / rho0
            }
        };
        let feasible = |s: f64, hint: &mut Option<(usize, usize, usize)>| -> bool {
            let check = |i: usize, j: usize, k: usize| -> bool {
                let tau1 = i as f64 * self.step;
                let tau2 = j as f64 * self.step;
                let t30 = k as f64 * self.step;
                let t31 = (self.avail - tau1 - tau2 - t30).max(0.0);
                let b1 = self.budget(1, tau1);
                let b0 = self.budget(0, tau1);
                if b1 < 0.0 || b0 < 0.0 {
                    return false;
                }
                let psi = b1.min(self.itc_cap(phi1, tau2));
                if perspective(tau2, psi, rho_bar) < s {
                    return false;
                }
                let th1 = theta_min(s - perspective(tau2, psi, rho1), t31);
                let th0 = theta_min(s, t30);
                th0 + th1 <= b0 && th0 <= self.itc_cap(phi0, t30) && th1 <= self.itc_cap(phi0, t31)
            };
            if let Some((i, j, k)) = *hint {
                if check(i, j, k) {
                    return true;
                }
            }
            for i in 0..=res {
                for j in 0..=(res - i) {
                    let tau1 = i as f64 * self.step;
                    let tau2 = j as f64 * self.step;
                    let b1 = self.budget(1, tau1);
                    if b1 < 0.0 || perspective(tau2, b1.min(self.itc_cap(phi1, tau2)), rho_bar) < s {
                        continue;
                    }
                    for k in 0..=(res - i - j) {
                        if check(i, j, k) {
                            *hint = Some((i, j, k));
                            return true;
                        }
                    }
                }
            }
            false
        };

        let mut hint = None;
        // no rate beats the whole block at the largest coefficient and budget
        let mut hi = {
            let b = self.budget(0, self.avail).max(self.budget(1, self.avail)).max(0.0);
            let rho = rho0.max(rho_bar).max(rho1);
            perspective(self.avail, b, rho).max(1e-300)
        };
        let mut lo = 0.0;
        if feasible(hi, &mut hint) {
            return hi;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-9 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if feasible(mid, &mut hint) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}
