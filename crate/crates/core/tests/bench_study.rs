use levyest_core::analysis::Verdict;
use levyest_core::bench::{
    coupled_grid, run_bound_suite, run_brownian_robustness, run_convergence_study, run_h1_h2_diagnostics,
    ExperimentPlan, GridCell, SamplingMode, Target,
};
use levyest_core::{JumpLaw, LevyModel, TruncationGeometry};

fn cp() -> LevyModel {
    LevyModel::compound_poisson(1.0, JumpLaw::truncated_normal(0.0, 1.0, -5.0, 5.0).unwrap()).unwrap()
}

#[test]
fn zero_sigma_matches_plain_study() {
    let m = cp();
    let g = TruncationGeometry::for_model(&m, 0.0, 5.0).unwrap();
    let mut plan = ExperimentPlan::new("cp", m, g);
    plan.grid = coupled_grid(&[1024, 4096], 1.0, 0.5);
    plan.replicates = 5;
    plan.wavelet_order = 3;
    let cmp = run_brownian_robustness(&plan).unwrap();
    assert_eq!(cmp.baseline, run_convergence_study(&plan).unwrap());
    assert_eq!(cmp.baseline, cmp.perturbed);
}

#[test]
fn small_brownian_component_keeps_density_risk() {
    let m = cp();
    let g = TruncationGeometry::for_model(&m, 1.0, 5.0).unwrap();
    let mut plan = ExperimentPlan::new("cp", m, g);
    plan.grid = vec![GridCell { n: 100_000, delta: 1e-3 }];
    plan.replicates = 20;
    plan.sigma = 0.1;
    let cmp = run_brownian_robustness(&plan).unwrap();
    let ratio = cmp.ratios(Target::Density)[0];
    assert!(ratio < 2.0, "risk ratio {ratio}");
}

#[test]
fn large_brownian_component_inflates_intensity() {
    let m = cp();
    let g = TruncationGeometry::for_model(&m, 0.05, 5.0).unwrap();
    let mut plan = ExperimentPlan::new("cp", m, g);
    plan.grid = vec![GridCell { n: 20_000, delta: 1e-2 }];
    plan.replicates = 5;
    plan.sigma = 1.0;
    plan.mode = SamplingMode::Decomposed;
    let cmp = run_brownian_robustness(&plan).unwrap();
    let r0 = cmp.baseline.cells[0].risk(Target::Intensity).mean;
    let r1 = cmp.perturbed.cells[0].risk(Target::Intensity).mean;
    // most increments now exceed ε, so λ̂ far overshoots λ_ε
    assert!(r1 > 100.0 * r0, "{r0} {r1}");
}

#[test]
fn intensity_risk_decays_like_inverse_horizon() {
    let m = LevyModel::cauchy();
    let g = TruncationGeometry::new(1.0, 10.0).unwrap();
    let mut plan = ExperimentPlan::new("cauchy", m, g);
    plan.grid = [1_000usize, 4_000, 16_000, 64_000]
        .iter()
        .map(|&n| GridCell { n, delta: 0.01 })
        .collect();
    plan.replicates = 200;
    plan.wavelet_order = 2;
    let r = run_convergence_study(&plan).unwrap();
    let s = r.slopes.iter().find(|s| s.target == Target::Intensity).unwrap();
    assert!((s.slope + 1.0).abs() < 0.15, "{s:?}");
    assert!(s.lo.is_finite() && s.hi.is_finite());
}

#[test]
fn gamma_bound_suite_passes() {
    let m = LevyModel::gamma();
    let g = TruncationGeometry::new(0.5, 10.0).unwrap();
    let mut plan = ExperimentPlan::new("gamma", m, g);
    plan.grid = vec![GridCell { n: 2_000, delta: 0.01 }];
    plan.replicates = 20;
    plan.diag_replicates = 200_000;
    let reports = run_bound_suite(&plan).unwrap();
    for name in ["mixture_vs_jump_density", "count_inverse_moment", "small_jump_tail", "split_count_moment"] {
        let rs: Vec<_> = reports.iter().filter(|r| r.name == name).collect();
        assert!(!rs.is_empty(), "{name} missing");
        for r in rs {
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        }
    }
}

#[test]
fn split_counts_skip_when_small_part_dominates() {
    // large Δ with a small threshold: most exceedances come from small jumps
    let m = LevyModel::gamma();
    let g = TruncationGeometry::new(0.2, 10.0).unwrap();
    let mut plan = ExperimentPlan::new("gamma", m, g);
    plan.grid = vec![GridCell { n: 200, delta: 2.0 }];
    plan.replicates = 4;
    plan.bound_runs = 20;
    plan.diag_replicates = 1_000;
    let reports = run_bound_suite(&plan).unwrap();
    let split: Vec<_> = reports.iter().filter(|r| r.name == "split_count_moment").collect();
    assert!(split.iter().all(|r| matches!(r.verdict, Verdict::Skipped(_))), "{split:?}");
}

#[test]
fn stable_ratio_stays_below_reference() {
    let m = LevyModel::stable(1.0).unwrap();
    let g = TruncationGeometry::new(1.0, 10.0).unwrap();
    let mut plan = ExperimentPlan::new("stable", m, g);
    plan.eps_exponent = Some(0.25);
    plan.diag_deltas = vec![0.01];
    plan.diag_replicates = 50_000;
    let rows = run_h1_h2_diagnostics(&plan).unwrap();
    let k2 = rows.iter().find(|r| r.kind == "stable_ratio_k2").unwrap();
    assert!(k2.ci_lo <= k2.reference, "{k2:?}");
}
