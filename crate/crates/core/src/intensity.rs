//! Exceedance-count estimators of the tail mass λ_ε.

use crate::error::{LevyError, Result};
use crate::levy_models::LevyModel;
use crate::simulate::IncrementSample;

/// λ̂ together with the counts it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityEstimate {
    pub lambda_hat: f64,
    pub exceed_count: usize,
    pub sample_size: usize,
    pub delta: f64,
    pub eps: f64,
    pub corrected_order: u32,
}

impl IntensityEstimate {
    /// True when no increment exceeded ε, so λ̂ = 0 by convention.
    pub fn is_empty(&self) -> bool {
        self.exceed_count == 0
    }

    /// Empirical exceedance frequency F̂ = 𝐧(ε)/n.
    pub fn f_hat(&self) -> f64 {
        self.exceed_count as f64 / self.sample_size as f64
    }
}

/// Number of increments with |X| > ε (strict).
pub fn count_exceedances(sample: &IncrementSample, eps: f64) -> usize {
    sample.values.iter().filter(|x| x.abs() > eps).count()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        return Err(LevyError::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    Ok(())
}

/// λ̂ = 𝐧(ε)/(nΔ).
pub fn lambda_hat(sample: &IncrementSample, eps: f64) -> Result<IntensityEstimate> {
    check_eps(eps)?;
    let count = count_exceedances(sample, eps);
    Ok(IntensityEstimate {
        lambda_hat: count as f64 / (sample.n() as f64 * sample.delta),
        exceed_count: count,
        sample_size: sample.n(),
        delta: sample.delta,
        eps,
        corrected_order: 1,
    })
}

/// (1/Δ) Σ_{k=2}^{K} F̂^k/k, the correction added to λ̂ at order K.
fn correction(f_hat: f64, delta: f64, order: u32) -> f64 {
    let mut pow = f_hat;
    let mut s = 0.0;
    for k in 2..=order {
        pow *= f_hat;
        s += pow / k as f64;
    }
    s / delta
}

/// λ̃ᴷ = (1/Δ) Σ_{k=1}^{K} F̂^k/k from an exceedance frequency.
pub fn corrected_from_frequency(f_hat: f64, delta: f64, order: u32) -> f64 {
    f_hat / delta + correction(f_hat, delta, order)
}

/// Order-K corrected estimator; K = 1 returns λ̂ unchanged.
pub fn corrected_lambda(sample: &IncrementSample, eps: f64, order: u32) -> Result<IntensityEstimate> {
    if order == 0 {
        return Err(LevyError::InvalidParameter("correction order must be >= 1".into()));
    }
    let mut est = lambda_hat(sample, eps)?;
    if order > 1 {
        est.lambda_hat += correction(est.f_hat(), sample.delta, order);
        est.corrected_order = order;
    }
    Ok(est)
}

/// Deterministic bias |λ_ε − F_Δ(ε)/Δ|.
pub fn bias_term(model: &LevyModel, delta: f64, eps: f64) -> Result<f64> {
    Ok(model.exceedance_gap(delta, eps)?.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::JumpLaw;
    use std::f64::consts::PI;

    fn sample(values: &[f64], delta: f64) -> IncrementSample {
        IncrementSample::new(delta, values.to_vec()).unwrap()
    }

    #[test]
    fn counting_is_strict() {
        let s = sample(&[0.5, -2.0, 0.1, 3.0], 0.5);
        assert_eq!(count_exceedances(&s, 1.0), 2);
        assert_eq!(count_exceedances(&s, 0.0), 4);
        assert_eq!(count_exceedances(&s, 3.0), 0);
        assert_eq!(count_exceedances(&sample(&[1.0, -1.0], 1.0), 1.0), 0);
    }

    #[test]
    fn lambda_hat_arithmetic() {
        let s = sample(&[0.5, -2.0, 0.1, 3.0], 0.5);
        let e = lambda_hat(&s, 1.0).unwrap();
        assert_eq!(e.lambda_hat, 1.0);
        assert_eq!(e.corrected_order, 1);
        let z = lambda_hat(&s, 10.0).unwrap();
        assert_eq!(z.lambda_hat, 0.0);
        assert!(z.is_empty());
    }

    #[test]
    fn first_order_correction_is_identity() {
        let s = sample(&[0.3, -1.7, 2.2, 0.01, 5.0, -0.4, 1.1], 0.37);
        for eps in [0.0, 0.5, 1.0, 2.0] {
            let a = lambda_hat(&s, eps).unwrap();
            let b = corrected_lambda(&s, eps, 1).unwrap();
            assert_eq!(a.lambda_hat.to_bits(), b.lambda_hat.to_bits());
        }
    }

    #[test]
    fn second_order_arithmetic() {
        assert!((corrected_from_frequency(0.2, 0.1, 2) - 2.2).abs() < 1e-14);
        // K → ∞ gives −log(1 − F̂)/Δ
        let f: f64 = 0.3;
        assert!((corrected_from_frequency(f, 1.0, 200) + (1.0 - f).ln()).abs() < 1e-14);
    }

    #[test]
    fn compound_poisson_bias_expansion() {
        let m = LevyModel::compound_poisson(1.5, JumpLaw::point(1.0).unwrap()).unwrap();
        for delta in [1e-2, 1e-3, 1e-4] {
            let b = bias_term(&m, delta, 0.0).unwrap();
            let lead = 1.5f64 * 1.5 * delta / 2.0;
            assert!(((b - lead) / lead).abs() < 2.0 * 1.5 * delta);
        }
    }

    #[test]
    fn cauchy_bias_constant() {
        let c = LevyModel::cauchy();
        let v = bias_term(&c, 1e-5, 1.0).unwrap() / 1e-10;
        assert!((v - 2.0 / (3.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn unsupported_model_bias_is_not_available() {
        let s = LevyModel::stable(0.7).unwrap();
        assert!(matches!(bias_term(&s, 0.01, 1.0), Err(LevyError::NotAvailable(_))));
    }
}
