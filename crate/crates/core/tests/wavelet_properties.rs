use levyest_core::quadrature::trapezoid;
use levyest_core::simulate::IncrementSample;
use levyest_core::stats::ols;
use levyest_core::wavelet::{build_basis, estimate_h, projection, DEFAULT_DEPTH};
use levyest_core::{Density1D, TruncationGeometry};
use proptest::prelude::*;

fn geom(eps: f64, a: f64) -> TruncationGeometry {
    TruncationGeometry::new(eps, a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    // Haar ĥ is the normalized histogram on dyadic cells
    #[test]
    fn haar_matches_histogram(
        xs in prop::collection::vec(0.1f64..3.9, 1..200),
        j in 0u32..6,
        probe in 0.1f64..3.9,
    ) {
        let b = build_basis(1, j, DEFAULT_DEPTH, geom(0.1, 4.0)).unwrap();
        let s = IncrementSample::new(1.0, xs.clone()).unwrap();
        let h = estimate_h(&s, &b).unwrap();
        let width = 1.0 / (1u64 << j) as f64;
        let cell = (probe / width).floor();
        let kept: Vec<f64> = xs.iter().copied().filter(|x| x.abs() > 0.1).collect();
        let in_cell = kept.iter().filter(|x| (*x / width).floor() == cell).count();
        let want = in_cell as f64 / (kept.len() as f64 * width);
        prop_assert!((h.eval(probe) - want).abs() <= 1e-12 * want.max(1.0));
    }

    // shifting the data by m 2^{-J} shifts the estimate
    #[test]
    fn dyadic_shift_equivariance(
        xs in prop::collection::vec(1.0f64..2.0, 1..60),
        m in 1i64..8,
        order in 1usize..5,
        x in 1.0f64..2.0,
    ) {
        let j = 3u32;
        let shift = m as f64 / 8.0;
        let b = build_basis(order, j, DEFAULT_DEPTH, geom(0.5, 10.0)).unwrap();
        let s0 = IncrementSample::new(1.0, xs.clone()).unwrap();
        let s1 = IncrementSample::new(1.0, xs.iter().map(|v| v + shift).collect()).unwrap();
        let h0 = estimate_h(&s0, &b).unwrap();
        let h1 = estimate_h(&s1, &b).unwrap();
        prop_assert!((h1.eval(x + shift) - h0.eval(x)).abs() < 1e-9);
    }

    // ĥ integrates to one when all data sit well inside A(ε)
    #[test]
    fn estimate_has_unit_mass(xs in prop::collection::vec(2.0f64..3.0, 1..40), order in 1usize..5) {
        let b = build_basis(order, 3, DEFAULT_DEPTH, geom(0.5, 6.0)).unwrap();
        let s = IncrementSample::new(1.0, xs).unwrap();
        let h = estimate_h(&s, &b).unwrap();
        let mass = trapezoid(|x| h.eval(x), 0.5, 6.0, 11 * (1 << 16) + 1);
        prop_assert!((mass - 1.0).abs() < 1e-4, "{}", mass);
    }
}

// C² bump on [1, 2] with unit mass
fn bump() -> Density1D {
    Density1D::new(|x: f64| 140.0 * ((x - 1.0) * (2.0 - x)).powi(3), vec![(1.0, 2.0)]).unwrap()
}

#[test]
fn projection_error_decays_at_order_two() {
    let g = bump();
    let mut js = Vec::new();
    let mut errs = Vec::new();
    for j in 3..=7u32 {
        let b = build_basis(2, j, DEFAULT_DEPTH, geom(0.5, 4.0)).unwrap();
        let p = projection(&g, &b).unwrap();
        let e2 = trapezoid(|x| (p.eval(x) - g.eval(x)).powi(2), 0.5, 2.5, (1 << 21) + 1);
        js.push(j as f64);
        errs.push(e2.sqrt().log2());
    }
    let fit = ols(&js, &errs).unwrap();
    assert!(fit.slope < -1.7 && fit.slope > -2.4, "slope {}", fit.slope);
}

#[test]
fn haar_projection_of_step_is_exact() {
    let g = Density1D::uniform(1.0, 1.5).unwrap();
    let b = build_basis(1, 1, DEFAULT_DEPTH, geom(0.5, 4.0)).unwrap();
    let p = projection(&g, &b).unwrap();
    for x in [1.0, 1.2, 1.49] {
        assert!((p.eval(x) - 2.0).abs() < 1e-10);
    }
    assert!(p.eval(1.6).abs() < 1e-10);
}
