use super::*;
use crate::linalg::{CVector, C64};
use crate::model::{build_geometry, sample_channels, seeded_rng, ScenarioCase};

fn case1(n: usize, m: usize, seed: u64) -> (ChannelRealization, SystemParams) {
    let params = SystemParams { antennas: m, ..SystemParams::default() }.with_num_wds(n);
    let geometry = build_geometry(ScenarioCase::Case1, seed, n, 3.0, 6.0).unwrap();
    let ch = sample_channels(&geometry, &params, &mut seeded_rng(seed, 1)).unwrap();
    (ch, params)
}

#[test]
fn default_instance_solves_and_verifies() {
    let (ch, p) = case1(6, 5, 11);
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.s_bar > 0.0);
    verify_solution(&sol, &ch, &p).unwrap();
}

#[test]
fn zero_interference_budget_forces_zero_rate() {
    let (ch, mut p) = case1(4, 3, 2);
    p.itc_threshold = 0.0;
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.s_bar, 0.0);
    verify_solution(&sol, &ch, &p).unwrap();
}

#[test]
fn zero_hap_power_forces_zero_rate() {
    let (ch, mut p) = case1(4, 3, 3);
    p.hap_tx_power = 0.0;
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.s_bar, 0.0);
    assert!(sol.residuals.feasible());
}

#[test]
fn whole_block_spent_on_estimation_is_infeasible() {
    let (ch, mut p) = case1(3, 2, 4);
    p.ce_duration = 1.0;
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.reason.is_some());
}

#[test]
fn single_wd_matches_oracle() {
    let (ch, p) = case1(1, 1, 5);
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    let oracle = brute_force_oracle(&ch, &p, 400).unwrap();
    assert!(oracle <= sol.s_bar * (1.0 + 1e-9));
    assert!((sol.s_bar - oracle) / oracle <= 0.02, "{} vs {oracle}", sol.s_bar);
}

#[test]
fn two_wd_cooperation_matches_oracle() {
    let (ch, p) = case1(2, 1, 6);
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    let oracle = brute_force_oracle(&ch, &p, 200).unwrap();
    assert!(oracle <= sol.s_bar * (1.0 + 1e-9));
    assert!((sol.s_bar - oracle) / oracle <= 0.02, "{} vs {oracle}", sol.s_bar);
}

#[test]
fn single_wd_oracle_closed_form() {
    // one head, unit gains: the best split of τ₁ has a closed form checked
    // at three grid points against the oracle's own grid
    let ch = ChannelRealization::from_gains(&[1e-6], &[0.0], 1e-6, 0.0, &[1e-7], &[0.0]);
    let p = SystemParams { antennas: 1, primary_tx_power: 0.0, ..SystemParams::default() }.with_num_wds(1);
    let eta = p.harvest_efficiency;
    let beam = p.hap_tx_power.min(p.itc_threshold / 1e-6);
    let rho0 = eta * 1e-6 / p.noise_power;
    let phi0 = eta * 1e-7;
    let rate = |t1: f64| {
        let t3 = 1.0 - t1;
        let theta = (1e-6 * beam * t1).min(t3 * p.itc_threshold / phi0);
        t3 * (1.0 + rho0 * theta / t3).log2()
    };
    let best = (0..=100).map(|i| rate(i as f64 / 100.0)).fold(0.0, f64::max);
    let oracle = brute_force_oracle(&ch, &p, 100).unwrap();
    assert!((oracle - best).abs() <= 1e-12 * best);
    for t1 in [0.25, 0.5, 0.75] {
        assert!(rate(t1) <= oracle + 1e-15);
    }
}

#[test]
fn oracle_rejects_large_instances() {
    let (ch, p) = case1(3, 1, 1);
    assert!(matches!(brute_force_oracle(&ch, &p, 200), Err(Error::Unsupported(_))));
    let (ch, p) = case1(2, 2, 1);
    assert!(matches!(brute_force_oracle(&ch, &p, 200), Err(Error::Unsupported(_))));
    let (ch, p) = case1(2, 1, 1);
    assert!(matches!(brute_force_oracle(&ch, &p, 50), Err(Error::InvalidParams(_))));
}

#[test]
fn oracle_zero_interference_budget() {
    let (ch, mut p) = case1(2, 1, 8);
    p.itc_threshold = 0.0;
    assert_eq!(brute_force_oracle(&ch, &p, 100).unwrap(), 0.0);
}

#[test]
fn bisection_agrees_with_interior_point() {
    let (ch, p) = case1(4, 3, 9);
    let cfg = SolverConfig::default();
    let ip = solve_max_min(&ch, &p, &cfg).unwrap();
    let bis = solve_by_bisection(&ch, &p, &cfg).unwrap();
    assert_eq!(bis.status, SolveStatus::Optimal);
    assert!((ip.s_bar - bis.s_bar).abs() <= 1e-4 * ip.s_bar);
    assert!(bis.residuals.feasible());
}

#[test]
fn feasibility_brackets_the_optimum() {
    let (ch, p) = case1(4, 3, 10);
    let cfg = SolverConfig::default();
    let opt = solve_max_min(&ch, &p, &cfg).unwrap().s_bar;
    let tol = cfg.bisection_tol * opt;
    assert!(feasibility_at(0.0, &ch, &p, &cfg).unwrap().feasible);
    let half = feasibility_at(0.5 * opt, &ch, &p, &cfg).unwrap();
    assert!(half.feasible);
    let w = half.witness.unwrap();
    assert!(w.s_bar >= 0.5 * opt * (1.0 - 1e-9));
    assert!(transformed_residuals_for(&Topology::cooperative(4), &w, &ch, &p).feasible());
    assert!(!feasibility_at(opt + 10.0 * tol, &ch, &p, &cfg).unwrap().feasible);
    assert!(feasibility_at(-1.0, &ch, &p, &cfg).is_err());
}

#[test]
fn full_and_reduced_psd_modes_agree() {
    let (ch, p) = case1(3, 5, 12);
    let reduced = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    let full = solve_max_min(&ch, &p, &SolverConfig { psd_mode: PsdMode::Full, ..Default::default() }).unwrap();
    assert!(reduced.stats.psd_dim <= 4);
    assert_eq!(full.stats.psd_dim, 5);
    assert!((reduced.s_bar - full.s_bar).abs() <= 1e-5 * full.s_bar);
}

#[test]
fn identical_inputs_identical_output() {
    let (ch, p) = case1(5, 4, 13);
    let cfg = SolverConfig::default();
    let a = solve_max_min(&ch, &p, &cfg).unwrap();
    let b = solve_max_min(&ch, &p, &cfg).unwrap();
    assert_eq!(a.s_bar, b.s_bar);
    assert_eq!(a.point, b.point);
}

#[test]
fn verifier_flags_non_optimal_and_perturbed_points() {
    let (ch, p) = case1(3, 2, 14);
    let cfg = SolverConfig::default();
    let sol = solve_max_min(&ch, &p, &cfg).unwrap();

    // same allocation with one member's power halved: feasible, S̄ lower, others slack
    let mut weak = sol.clone();
    weak.allocation.p2[2] *= 0.5;
    weak.point = crate::transform::to_transformed(&weak.allocation, &ch, &p);
    weak.s_bar = weak.point.s_bar;
    let rep = check_solution(&weak, &ch, &p);
    assert!(rep.get("residuals").unwrap().passed);
    assert!(rep.get("p1_feasible").unwrap().passed);
    assert!(rep.get("rate_match").unwrap().passed);
    assert!(!rep.get("activity").unwrap().passed);

    let mut nudged = sol.clone();
    nudged.point.tau1 += 1e-3;
    nudged.allocation = recover_allocation(&nudged.point, &p).unwrap();
    assert!(verify_solution(&nudged, &ch, &p).is_err());
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    assert!(SolverConfig { t_growth: 1.0, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { tau_floor: 1e-5, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { gap_tol: 0.0, ..Default::default() }.validate().is_err());
}

#[test]
fn debug_dump_written() {
    let (ch, p) = case1(2, 2, 15);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dump.json");
    let cfg = SolverConfig { debug_dump: Some(path.clone()), ..Default::default() };
    solve_max_min(&ch, &p, &cfg).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(v["stats"]["history"].as_array().unwrap().len() > 1);
    assert!(v["point"]["w"]["re"].is_array());
}

#[test]
fn unreachable_wd_gives_zero_rate() {
    let (mut ch, p) = case1(3, 2, 16);
    // WD 2 can neither harvest nor be heard
    ch.a[2] = CVector::zeros(2);
    ch.h[2] = 0.0;
    ch.g[2] = 0.0;
    let _ = C64::new(0.0, 0.0);
    let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.s_bar, 0.0);
    assert!(sol.residuals.feasible());
}

#[test]
fn no_wd_keeps_rate_surplus() {
    for seed in 40..46 {
        let (ch, p) = case1(5, 4, seed);
        let sol = solve_max_min(&ch, &p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        for r in sol.rates(&ch, &p) {
            assert!(r <= sol.s_bar * (1.0 + 1e-6), "seed {seed}: rate {r} above S̄ {}", sol.s_bar);
        }
    }
}
