//! Global solution of the convex max-min problem: a barrier interior-point
//! solve, a bisection cross-check built on min-time feasibility programs,
//! a brute-force grid oracle for tiny instances and a verifier.

mod barrier;
mod oracle;
mod program;
mod verify;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, SystemParams};
use crate::rates::{self, ConstraintReport, ResourceAllocation, Topology};
use crate::transform::{recover_allocation, transformed_residuals_for, TransformedPoint};

pub use barrier::OuterIterate;
pub use oracle::{brute_force_oracle, brute_force_oracle_for};
pub use verify::{check_solution, verify_solution, VerificationCheck, VerificationReport};

use barrier::BarrierSettings;
use program::{zero_point, Goal, Lowered};

/// How the beamforming covariance enters the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdMode {
    /// `W = U X Uᴴ` with `U` an orthonormal basis of `span{a_i, b}`.
    #[default]
    Reduced,
    /// Log-det barrier on the full `M×M` matrix.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial barrier weight; chosen from the starting point when absent.
    pub t_init: Option<f64>,
    pub t_growth: f64,
    /// Centering stops once half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    /// Stop once the duality-gap bound `m/t` drops below this fraction of
    /// the objective magnitude.
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Lower bound on every duration during centering.
    pub tau_floor: f64,
    pub psd_mode: PsdMode,
    /// Relative width of the final bisection bracket on `S̄`.
    pub bisection_tol: f64,
    /// Write iterates and residuals of every solve to this JSON file.
    pub debug_dump: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_init: None,
            t_growth: 10.0,
            newton_tol: 1e-9,
            gap_tol: 1e-9,
            max_outer: 40,
            max_newton: 200,
            tau_floor: 1e-9,
            psd_mode: PsdMode::Reduced,
            bisection_tol: 1e-6,
            debug_dump: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("gap_tol", self.gap_tol),
            ("bisection_tol", self.bisection_tol),
            ("t_init", self.t_init.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_growth > 1.0) || !self.t_growth.is_finite() {
            return Err(Error::Config(format!("t_growth must exceed 1, got {}", self.t_growth)));
        }
        if !(self.tau_floor > 0.0 && self.tau_floor <= 1e-6) {
            return Err(Error::Config(format!("tau_floor must lie in (0, 1e-6], got {}", self.tau_floor)));
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }

    fn barrier(&self, t_init: f64) -> BarrierSettings {
        BarrierSettings {
            t_init: self.t_init.unwrap_or(t_init),
            growth: self.t_growth,
            newton_tol: self.newton_tol,
            gap_tol: self.gap_tol,
            max_outer: self.max_outer,
            max_newton: self.max_newton,
            armijo_sigma: 0.1,
            armijo_beta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub num_vars: usize,
    pub psd_dim: usize,
    pub outer_iterations: usize,
    pub newton_steps: usize,
    /// Feasibility programs solved (bisection only).
    pub feasibility_solves: usize,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default, skip_deserializing)]
    pub history: Vec<OuterIterate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub topology: Topology,
    pub point: TransformedPoint,
    pub allocation: ResourceAllocation,
    pub s_bar: f64,
    pub stats: SolveStats,
    pub residuals: ConstraintReport,
    /// Why the instance was declared infeasible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Solution {
    fn from_point(
        status: SolveStatus,
        topo: &Topology,
        point: TransformedPoint,
        ch: &ChannelRealization,
        params: &SystemParams,
        stats: SolveStats,
    ) -> Result<Self> {
        let allocation = recover_allocation(&point, params)?;
        let residuals = transformed_residuals_for(topo, &point, ch, params);
        Ok(Self { status, topology: topo.clone(), s_bar: point.s_bar, point, allocation, stats, residuals, reason: None })
    }

    fn infeasible(topo: &Topology, ch: &ChannelRealization, params: &SystemParams, reason: String, stats: SolveStats) -> Result<Self> {
        let mut s = Self::from_point(SolveStatus::Infeasible, topo, zero_point(ch, params), ch, params, stats)?;
        s.reason = Some(reason);
        Ok(s)
    }

    /// Per-WD rates of the recovered allocation, in cluster order.
    pub fn rates(&self, ch: &ChannelRealization, params: &SystemParams) -> Vec<f64> {
        rates::wd_rates(&self.topology, &self.allocation, ch, params)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn check_inputs(topo: &Topology, ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    params.validate()?;
    if topo.len() != ch.num_wds() {
        return Err(Error::InvalidParams(format!(
            "topology has {} WDs but the channels have {}",
            topo.len(),
            ch.num_wds()
        )));
    }
    if ch.order.iter().any(|&o| o >= params.circuit_energy.len() || o >= params.battery_init.len()) {
        return Err(Error::InvalidParams("per-WD parameter vectors are shorter than the network".into()));
    }
    Ok(())
}

/// Max-min throughput of cluster cooperation with WD 0 as head.
pub fn solve_max_min(ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<Solution> {
    solve_for(&Topology::cooperative(ch.num_wds()), ch, params, cfg)
}

/// Max-min throughput under an arbitrary role assignment.
pub fn solve_for(topo: &Topology, ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<Solution> {
    check_inputs(topo, ch, params, cfg)?;
    let started = Instant::now();
    let lowered = match Lowered::build(topo, ch, params, cfg, Goal::MaxMin) {
        Ok(l) => l,
        Err(reason) => return Solution::infeasible(topo, ch, params, reason, SolveStats::default()),
    };
    let mut stats = SolveStats {
        num_vars: lowered.program.n,
        psd_dim: lowered.layout.block.map_or(0, |b| b.k),
        ..Default::default()
    };
    let Some(x0) = lowered.start_max_min(params, topo) else {
        return Solution::infeasible(topo, ch, params, "no strictly feasible starting point".into(), stats);
    };
    let t0 = lowered.program.central_weight(&x0).unwrap_or(lowered.program.barrier_weight());
    let out = lowered.program.solve(x0, &cfg.barrier(t0));
    let point = lowered.extract(&out.x, topo, ch, params, 10.0 * cfg.tau_floor);
    stats.outer_iterations = out.history.len();
    stats.newton_steps = out.newton_steps;
    stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    if cfg.debug_dump.is_some() {
        stats.history = out.history;
    }
    let status = if out.converged { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    let sol = Solution::from_point(status, topo, point, ch, params, stats)?;
    if let Some(path) = &cfg.debug_dump {
        write_debug_dump(path, &sol)?;
    }
    Ok(sol)
}

fn write_debug_dump(path: &std::path::Path, sol: &Solution) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), sol)?;
    Ok(())
}

/// Outcome of a feasibility query at a fixed rate target.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub feasible: bool,
    /// `τ₀` plus the least total time reaching the target (infinite when no
    /// amount of time suffices).
    pub min_total_time: f64,
    /// A point meeting the target within the time budget.
    pub witness: Option<TransformedPoint>,
    pub newton_steps: usize,
}

/// Whether every WD can reach `s_bar` within one block (cluster cooperation).
pub fn feasibility_at(s_bar: f64, ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<Feasibility> {
    feasibility_at_for(&Topology::cooperative(ch.num_wds()), s_bar, ch, params, cfg)
}

pub fn feasibility_at_for(
    topo: &Topology,
    s_bar: f64,
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<Feasibility> {
    check_inputs(topo, ch, params, cfg)?;
    if !(s_bar >= 0.0) || !s_bar.is_finite() {
        return Err(Error::Domain(format!("rate target must be non-negative, got {s_bar}")));
    }
    let infeasible = |steps| Feasibility { feasible: false, min_total_time: f64::INFINITY, witness: None, newton_steps: steps };
    if s_bar == 0.0 {
        let zero = zero_point(ch, params);
        if transformed_residuals_for(topo, &zero, ch, params).feasible() {
            return Ok(Feasibility { feasible: true, min_total_time: params.ce_duration, witness: Some(zero), newton_steps: 0 });
        }
    }
    let lowered = match Lowered::build(topo, ch, params, cfg, Goal::MinTime { target: s_bar }) {
        Ok(l) => l,
        Err(_) => return Ok(infeasible(0)),
    };
    let Some(x0) = lowered.start_min_time(params, topo) else {
        return Ok(infeasible(0));
    };
    let t0 = lowered.program.central_weight(&x0).unwrap_or(lowered.program.barrier_weight());
    let out = lowered.program.solve(x0, &cfg.barrier(t0));
    let total = params.ce_duration + lowered.total_time(&out.x);
    let feasible = total <= 1.0;
    let witness = feasible.then(|| lowered.extract(&out.x, topo, ch, params, 10.0 * cfg.tau_floor));
    Ok(Feasibility { feasible, min_total_time: total, witness, newton_steps: out.newton_steps })
}

/// Max-min throughput of cluster cooperation by bisection on `S̄`.
pub fn solve_by_bisection(ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<Solution> {
    solve_by_bisection_for(&Topology::cooperative(ch.num_wds()), ch, params, cfg)
}

pub fn solve_by_bisection_for(
    topo: &Topology,
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<Solution> {
    check_inputs(topo, ch, params, cfg)?;
    let started = Instant::now();
    let mut stats = SolveStats::default();
    let query = |target: f64, stats: &mut SolveStats| -> Result<Feasibility> {
        let f = feasibility_at_for(topo, target, ch, params, cfg)?;
        stats.feasibility_solves += 1;
        stats.newton_steps += f.newton_steps;
        Ok(f)
    };
    let base = query(0.0, &mut stats)?;
    let Some(mut best) = base.witness else {
        return Solution::infeasible(topo, ch, params, "the zero-rate target is infeasible".into(), stats);
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut bracketed = false;
    for _ in 0..64 {
        let f = query(hi, &mut stats)?;
        match f.witness {
            Some(w) => {
                lo = hi;
                best = w;
                hi *= 2.0;
            }
            None => {
                bracketed = true;
                break;
            }
        }
    }
    let mut converged = false;
    if bracketed {
        for _ in 0..200 {
            if hi - lo <= cfg.bisection_tol * hi || hi < 1e-12 {
                converged = true;
                break;
            }
            let mid = 0.5 * (lo + hi);
            let f = query(mid, &mut stats)?;
            match f.witness {
                Some(w) => {
                    lo = mid;
                    best = w;
                }
                None => hi = mid,
            }
        }
    }
    stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let status = if converged { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    Solution::from_point(status, topo, best, ch, params, stats)
}

#[cfg(test)]
mod tests;
