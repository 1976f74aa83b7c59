use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, SystemParams};
use crate::rates::{check_feasibility_for, wd_rates};
use crate::transform::{recover_allocation, transformed_residuals_for};

use super::{Solution, SolveStatus};

const RESIDUAL_TOL: f64 = 1e-8;
const RATE_MATCH_TOL: f64 = 1e-6;
const ACTIVITY_TOL: f64 = 1e-5;
/// Below this `S̄` every WD trivially attains the optimum and activity is
/// not checked.
const RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<VerificationCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&VerificationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect()
    }
}

/// Run every check and report each outcome.
pub fn check_solution(sol: &Solution, ch: &ChannelRealization, params: &SystemParams) -> VerificationReport {
    let topo = &sol.topology;
    let point = &sol.point;
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(VerificationCheck { name, passed, detail });

    push("status", sol.status == SolveStatus::Optimal, format!("{:?}", sol.status));

    let report = transformed_residuals_for(topo, point, ch, params);
    let worst = report
        .residuals
        .iter()
        .max_by(|a, b| a.normalized().total_cmp(&b.normalized()))
        .map(|r| (r.name.clone(), r.normalized()));
    let (name, value) = worst.unwrap_or_default();
    push("residuals", value <= RESIDUAL_TOL, format!("worst {name} = {value:e}"));

    match recover_allocation(point, params) {
        Ok(alloc) => {
            let p1 = check_feasibility_for(topo, &alloc, ch, params);
            let detail = p1.violations().map(|r| r.name.clone()).collect::<Vec<_>>().join(", ");
            push("p1_feasible", p1.feasible(), if detail.is_empty() { "ok".into() } else { detail });

            let rates = wd_rates(topo, &alloc, ch, params);
            let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = sol.s_bar.abs().max(RATE_FLOOR);
            let gap = (min - sol.s_bar).abs() / scale;
            push("rate_match", gap <= RATE_MATCH_TOL, format!("min rate {min:e} vs S̄ {:e}", sol.s_bar));

            if sol.s_bar <= RATE_FLOOR {
                push("activity", true, "zero optimum".into());
            } else {
                let slack: Vec<String> = rates
                    .iter()
                    .enumerate()
                    .filter(|(_, &r)| (r - sol.s_bar) / scale > ACTIVITY_TOL)
                    .map(|(i, r)| format!("WD {i} rate {r:e}"))
                    .collect();
                push("activity", slack.is_empty(), if slack.is_empty() { "ok".into() } else { slack.join(", ") });
            }
        }
        Err(e) => push("p1_feasible", false, e.to_string()),
    }
    VerificationReport { checks }
}

/// [`check_solution`], failing with the list of violated items.
pub fn verify_solution(sol: &Solution, ch: &ChannelRealization, params: &SystemParams) -> Result<VerificationReport> {
    let report = check_solution(sol, ch, params);
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::Verification(report.failures()))
    }
}
