use levyest_core::analysis::{
    check_count_moment_bounds, check_hpeps_bound, check_small_jump_tail, check_small_time_limit,
    check_split_count_bounds, lp_distance, LossSpec, Verdict,
};
use levyest_core::rng::{stream_id, SeedProvenance};
use levyest_core::simulate::{estimate_small_jump_tail, sample_decomposed, SmallJumpPolicy};
use levyest_core::{JumpLaw, LevyModel, TruncationGeometry};
use proptest::prelude::*;

fn geom(eps: f64, a: f64) -> TruncationGeometry {
    TruncationGeometry::new(eps, a).unwrap()
}

#[test]
fn mixture_bound_holds_for_gamma_grid() {
    let m = LevyModel::gamma();
    for eps in [0.25, 0.5, 1.0] {
        for delta in [0.01, 0.05, 0.1] {
            let r = check_hpeps_bound(&m, &geom(eps, 10.0), delta, 2.0).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "eps {eps} delta {delta}: {r:?}");
            assert!(r.slack > 0.0);
        }
    }
}

#[test]
fn mixture_bound_vanishes_as_delta_shrinks() {
    let m = LevyModel::compound_poisson(1.0, JumpLaw::uniform(1.0, 2.0).unwrap()).unwrap();
    let a = check_hpeps_bound(&m, &geom(0.5, 3.0), 1e-2, 2.0).unwrap();
    let b = check_hpeps_bound(&m, &geom(0.5, 3.0), 1e-4, 2.0).unwrap();
    assert!(b.lhs < a.lhs / 50.0);
}

#[test]
fn small_time_limit_for_closed_form_models() {
    for m in [LevyModel::cauchy(), LevyModel::gamma(), LevyModel::inverse_gaussian()] {
        let r = check_small_time_limit(&m, 1e-3, 1.0, 0.02).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}: {r:?}", m.name());
    }
}

#[test]
fn tail_bound_far_out_is_trivial() {
    let m = LevyModel::stable(0.5).unwrap();
    let g = geom(1.0, 10.0);
    let ci = estimate_small_jump_tail(&m, &g, &SmallJumpPolicy::default_for(1.0), 1e-4, 5.0, 10_000, SeedProvenance::new(3, 0)).unwrap();
    assert_eq!(ci.estimate, 0.0);
    let r = check_small_jump_tail(&m, &g, 1e-4, 5.0, &ci).unwrap();
    assert!(r.rhs < 1e-10);
    assert!(r.lhs <= r.rhs);
    // 10⁴ replicates cannot resolve a probability this small
    assert_eq!(r.verdict, Verdict::Fail);
}

#[test]
fn count_moment_bound_at_r_zero() {
    let r = check_count_moment_bounds(&LevyModel::cauchy(), &geom(1.0, 10.0), 200, 0.01, 0.0, 500, 9, 0).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert_eq!(r.lhs, 1.0);
}

#[test]
fn split_counts_vanish_for_compound_poisson() {
    let m = LevyModel::compound_poisson(1.0, JumpLaw::uniform(1.0, 2.0).unwrap()).unwrap();
    let g = TruncationGeometry::for_model(&m, 0.0, 3.0).unwrap();
    let pol = SmallJumpPolicy::default_for(1.0);
    let samples: Vec<_> = (0..20)
        .map(|i| sample_decomposed(&m, &g, &pol, 500, 0.1, SeedProvenance::new(1, stream_id(0, i))).unwrap())
        .collect();
    let r = check_split_count_bounds(&samples, &g, 1.0, 2.0).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert_eq!(r.verdict, Verdict::Pass);
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn lp_distance_triangle_inequality(
        a in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform4(-2.0f64..2.0),
        c in prop::array::uniform4(-2.0f64..2.0),
        p in 1.0f64..4.0,
    ) {
        let spec = LossSpec::new(p, geom(0.5, 3.0), 256).unwrap();
        let f = |k: [f64; 4]| move |x: f64| k[0] + k[1] * x + k[2] * (k[3] * x).sin();
        let ab = lp_distance(f(a), f(b), &spec).unwrap();
        let bc = lp_distance(f(b), f(c), &spec).unwrap();
        let ac = lp_distance(f(a), f(c), &spec).unwrap();
        prop_assert!(ac <= ab + bc + 1e-8);
    }
}
