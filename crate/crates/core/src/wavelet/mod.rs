//! Daubechies scaling functions and the linear wavelet density estimator
//! on the estimation set A(ε).
//!
//! Φ and Ψ are tabulated on a dyadic grid of step 2^{−D} by the cascade
//! algorithm and evaluated by linear interpolation (Haar is exact).
//!
//! Choosing the order: the estimator needs a scaling function of Hölder
//! regularity r > s. Approximate regularity by number of vanishing
//! moments N:
//!
//! | N | 1 | 2    | 3    | 4    | 5    | 6    | 7    | 8    | 9    | 10   |
//! |---|---|------|------|------|------|------|------|------|------|------|
//! | r | 0 | 0.55 | 1.08 | 1.62 | 1.97 | 2.19 | 2.46 | 2.76 | 3.07 | 3.38 |
//!
//! so s = 1 needs N ≥ 3 and s = 2 needs N ≥ 6. [`min_order_for_smoothness`]
//! reads this table.

pub mod filters;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{LevyError, Result};
use crate::intensity::IntensityEstimate;
use crate::levy_models::{Density1D, TruncationGeometry};
use crate::quadrature::{integrate, QuadConfig};
use crate::simulate::IncrementSample;

/// Default table depth D.
pub const DEFAULT_DEPTH: u32 = 14;
/// Largest resolution level returned by [`choose_j`].
pub const J_MAX: u32 = DEFAULT_DEPTH;

/// (N, approximate Hölder exponent of the order-N Daubechies Φ).
pub const HOLDER_EXPONENT: [(usize, f64); 10] = [
    (1, 0.0),
    (2, 0.550),
    (3, 1.088),
    (4, 1.618),
    (5, 1.969),
    (6, 2.189),
    (7, 2.460),
    (8, 2.761),
    (9, 3.074),
    (10, 3.381),
];

/// Smallest tabulated order whose regularity exceeds `s`.
pub fn min_order_for_smoothness(s: f64) -> Option<usize> {
    HOLDER_EXPONENT.iter().find(|(_, r)| *r > s).map(|(n, _)| *n)
}

/// Φ and Ψ sampled at x = i 2^{−D} over their support [0, 2N − 1].
#[derive(Debug)]
pub struct ScalingTable {
    order: usize,
    depth: u32,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl ScalingTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Support length 2N − 1.
    pub fn support_len(&self) -> usize {
        2 * self.order - 1
    }

    /// Table values of Φ; entry i sits at i 2^{−D}.
    pub fn phi_values(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_values(&self) -> &[f64] {
        &self.psi
    }

    fn interp(&self, v: &[f64], x: f64) -> f64 {
        let t = x * (1u64 << self.depth) as f64;
        let i = t.floor();
        let last = v.len() - 1;
        if i < 0.0 || i as usize >= last {
            return if i as usize == last && t == i { v[last] } else { 0.0 };
        }
        let i = i as usize;
        let w = t - i as f64;
        v[i] + w * (v[i + 1] - v[i])
    }

    pub fn phi(&self, x: f64) -> f64 {
        if self.order == 1 {
            return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        if !(x > 0.0 && x < self.support_len() as f64) {
            return 0.0;
        }
        self.interp(&self.phi, x)
    }

    pub fn psi(&self, x: f64) -> f64 {
        if self.order == 1 {
            return if (0.0..0.5).contains(&x) {
                1.0
            } else if (0.5..1.0).contains(&x) {
                -1.0
            } else {
                0.0
            };
        }
        if !(x > 0.0 && x < self.support_len() as f64) {
            return 0.0;
        }
        self.interp(&self.psi, x)
    }
}

// solves A x = b in place by Gaussian elimination with partial pivoting
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn cascade(order: usize, depth: u32) -> Result<ScalingTable> {
    let h = filters::daubechies(order)
        .ok_or_else(|| LevyError::InvalidParameter(format!("no filter for order {order}")))?;
    let len = 2 * order - 1;
    let scale = 1usize << depth;
    let size = len * scale + 1;
    let r2 = std::f64::consts::SQRT_2;
    let mut phi = vec![0.0; size];
    if order == 1 {
        phi[..scale].iter_mut().for_each(|v| *v = 1.0);
    } else {
        // Φ at the integers: eigenvector of M_ij = √2 h_{2i−j} for the
        // eigenvalue 1, normalized to sum 1 (the last equation is redundant)
        let m = len + 1;
        let mut a = vec![vec![0.0; m]; m];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let k = 2 * i as i64 - j as i64;
                if (0..h.len() as i64).contains(&k) {
                    *v = r2 * h[k as usize];
                }
                if i == j {
                    *v -= 1.0;
                }
            }
        }
        a[m - 1] = vec![1.0; m];
        let mut b = vec![0.0; m];
        b[m - 1] = 1.0;
        let ints = solve_dense(a, b).ok_or_else(|| {
            LevyError::Domain(format!("refinement matrix is singular for order {order}"))
        })?;
        for (i, v) in ints.iter().enumerate() {
            phi[i * scale] = *v;
        }
        for level in 1..=depth {
            let step = 1usize << (depth - level);
            let mut idx = step;
            while idx < size - 1 {
                let mut acc = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    let src = 2 * idx as i64 - (k * scale) as i64;
                    if src >= 0 && (src as usize) < size {
                        acc += hk * phi[src as usize];
                    }
                }
                phi[idx] = r2 * acc;
                idx += 2 * step;
            }
        }
    }
    let mut psi = vec![0.0; size];
    for (i, out) in psi.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..h.len() {
            let g = if k % 2 == 0 { h[len - k] } else { -h[len - k] };
            let src = 2 * i as i64 - (k * scale) as i64;
            if src >= 0 && (src as usize) < size {
                acc += g * phi[src as usize];
            }
        }
        *out = r2 * acc;
    }
    Ok(ScalingTable {
        order,
        depth,
        phi,
        psi,
    })
}

type TableCache = Mutex<HashMap<(usize, u32), Arc<ScalingTable>>>;

/// Cached cascade table for (order, depth).
pub fn scaling_table(order: usize, depth: u32) -> Result<Arc<ScalingTable>> {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&(order, depth)) {
        return Ok(t.clone());
    }
    let t = Arc::new(cascade(order, depth)?);
    cache
        .lock()
        .expect("table cache poisoned")
        .insert((order, depth), t.clone());
    Ok(t)
}

/// Scaling functions Φ_{Jk} = 2^{J/2} Φ(2^J · − k) adapted to A(ε).
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    table: Arc<ScalingTable>,
    j: u32,
    geometry: TruncationGeometry,
}

/// Builds the level-J basis of order `order` (N vanishing moments).
pub fn build_basis(order: usize, j: u32, depth: u32, geometry: TruncationGeometry) -> Result<WaveletBasis> {
    if order == 0 || order > filters::MAX_ORDER {
        return Err(LevyError::InvalidParameter(format!(
            "wavelet order must be in 1..={}, got {order}",
            filters::MAX_ORDER
        )));
    }
    if depth < 10 {
        return Err(LevyError::InvalidParameter(format!(
            "table depth must be at least 10, got {depth}"
        )));
    }
    if j > 30 {
        return Err(LevyError::InvalidParameter(format!("level J = {j} is too fine")));
    }
    Ok(WaveletBasis {
        table: scaling_table(order, depth)?,
        j,
        geometry,
    })
}

impl WaveletBasis {
    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn level(&self) -> u32 {
        self.j
    }

    pub fn geometry(&self) -> &TruncationGeometry {
        &self.geometry
    }

    pub fn table(&self) -> &ScalingTable {
        &self.table
    }

    fn scale(&self) -> f64 {
        (1u64 << self.j) as f64
    }

    fn support_len(&self) -> i64 {
        self.table.support_len() as i64
    }

    /// Range of k (inclusive) whose support meets the positive (or
    /// negative) component of A(ε); `None` when Ā is infinite.
    fn component_range(&self, positive: bool) -> Option<(i64, i64)> {
        let a = self.geometry.a_bar;
        if !a.is_finite() {
            return None;
        }
        let s = self.scale();
        let l = self.support_len() as f64;
        let e = self.geometry.eps;
        let (lo, hi) = if positive { (e, a) } else { (-a, -e) };
        Some(((lo * s - l).floor() as i64 + 1, (hi * s).ceil() as i64 - 1))
    }

    /// Whether k ∈ Λ_J. Always true when Ā is infinite.
    pub fn in_lambda(&self, k: i64) -> bool {
        match (self.component_range(false), self.component_range(true)) {
            (Some(n), Some(p)) => (n.0..=n.1).contains(&k) || (p.0..=p.1).contains(&k),
            _ => true,
        }
    }

    /// Hull [k_lo, k_hi] of Λ_J, if Ā is finite.
    pub fn lambda_hull(&self) -> Option<(i64, i64)> {
        Some((self.component_range(false)?.0, self.component_range(true)?.1))
    }

    /// |Λ_J|, if Ā is finite.
    pub fn lambda_len(&self) -> Option<usize> {
        let (lo, hi) = self.lambda_hull()?;
        Some((lo..=hi).filter(|&k| self.in_lambda(k)).count())
    }

    /// 2^{J/2} Φ(2^J x − k).
    pub fn scaling_eval(&self, k: i64, x: f64) -> f64 {
        self.scale().sqrt() * self.table.phi(self.scale() * x - k as f64)
    }

    /// Indices k with Φ(t − k) possibly nonzero at t = 2^J x.
    fn active(&self, t: f64) -> std::ops::RangeInclusive<i64> {
        let hi = t.floor() as i64;
        if self.order() == 1 {
            return hi..=hi;
        }
        (hi - self.support_len() + 1)..=hi
    }
}

/// Linear wavelet density estimate Σ_k α̂_k Φ_{Jk}, optionally scaled by λ̂.
///
/// Coefficients are stored without the 2^{J/2} factor, as
/// β_k = (1/n) Σ_i Φ(2^J X_i − k), and evaluated as 2^J Σ_k β_k Φ(2^J x − k);
/// this keeps the Haar case equal to a histogram to the last bit.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    basis: WaveletBasis,
    k_lo: i64,
    beta: Vec<f64>,
    lambda_scale: Option<f64>,
    clip_negative: bool,
    n_used: usize,
}

impl DensityEstimate {
    /// Builds an estimate from coefficients α_k, k = k_lo, k_lo + 1, ...
    pub fn from_alpha(basis: WaveletBasis, k_lo: i64, alpha: &[f64]) -> Self {
        let c = basis.scale().sqrt();
        DensityEstimate {
            k_lo,
            beta: alpha.iter().map(|a| a / c).collect(),
            basis,
            lambda_scale: None,
            clip_negative: false,
            n_used: 0,
        }
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn lambda_scale(&self) -> Option<f64> {
        self.lambda_scale
    }

    /// Number of exceedances the coefficients were computed from.
    pub fn n_used(&self) -> usize {
        self.n_used
    }

    /// First index of the coefficient vector.
    pub fn k_lo(&self) -> i64 {
        self.k_lo
    }

    /// α̂_k for k = k_lo, k_lo + 1, ...
    pub fn alpha(&self) -> Vec<f64> {
        let c = self.basis.scale().sqrt();
        self.beta.iter().map(|b| b * c).collect()
    }

    pub fn alpha_at(&self, k: i64) -> f64 {
        let i = k - self.k_lo;
        if i < 0 || i as usize >= self.beta.len() {
            0.0
        } else {
            self.beta[i as usize] * self.basis.scale().sqrt()
        }
    }

    /// Returns a copy that clips negative values to 0 on evaluation.
    pub fn clipped(mut self) -> Self {
        self.clip_negative = true;
        self
    }

    /// Unscaled sum Σ_k α̂_k Φ_{Jk}(x), restricted to A(ε).
    fn eval_h(&self, x: f64) -> f64 {
        if !self.basis.geometry.contains(x) {
            return 0.0;
        }
        let s = self.basis.scale();
        let t = s * x;
        let mut acc = 0.0;
        for k in self.basis.active(t) {
            let i = k - self.k_lo;
            if i >= 0 && (i as usize) < self.beta.len() {
                acc += self.beta[i as usize] * self.basis.table.phi(t - k as f64);
            }
        }
        s * acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.eval_h(x);
        let v = match self.lambda_scale {
            Some(l) => l * h,
            None => h,
        };
        if self.clip_negative {
            v.max(0.0)
        } else {
            v
        }
    }
}

/// ĥ from the increments with |X| > ε.
pub fn estimate_h(sample: &IncrementSample, basis: &WaveletBasis) -> Result<DensityEstimate> {
    let eps = basis.geometry.eps;
    let data: Vec<f64> = sample.values.iter().copied().filter(|x| x.abs() > eps).collect();
    if data.is_empty() {
        return Err(LevyError::EmptySample { eps });
    }
    let s = basis.scale();
    let (k_lo, k_hi) = match basis.lambda_hull() {
        Some(r) => r,
        None => {
            let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (
                (s * lo).floor() as i64 - basis.support_len() + 1,
                (s * hi).floor() as i64,
            )
        }
    };
    let mut beta = vec![0.0; (k_hi - k_lo + 1) as usize];
    for &x in &data {
        let t = s * x;
        for k in basis.active(t) {
            if k < k_lo || k > k_hi {
                continue;
            }
            beta[(k - k_lo) as usize] += basis.table.phi(t - k as f64);
        }
    }
    let n = data.len() as f64;
    for (i, b) in beta.iter_mut().enumerate() {
        if basis.in_lambda(k_lo + i as i64) {
            *b /= n;
        } else {
            *b = 0.0;
        }
    }
    Ok(DensityEstimate {
        basis: basis.clone(),
        k_lo,
        beta,
        lambda_scale: None,
        clip_negative: false,
        n_used: data.len(),
    })
}

/// f̂ = λ̂ ĥ 1_{A(ε)}.
pub fn estimate_f(
    sample: &IncrementSample,
    basis: &WaveletBasis,
    intensity: &IntensityEstimate,
) -> Result<DensityEstimate> {
    let mut h = estimate_h(sample, basis)?;
    h.lambda_scale = Some(intensity.lambda_hat);
    Ok(h)
}

/// J = round(log₂(n_eff)/(2s + 1)), clamped to [0, J_MAX].
pub fn choose_j(n_eff: f64, s: f64) -> u32 {
    if !(n_eff >= 1.0) || !(s > 0.0) {
        return 0;
    }
    let j = (n_eff.log2() / (2.0 * s + 1.0)).round();
    j.clamp(0.0, J_MAX as f64) as u32
}

fn coef_quad() -> QuadConfig {
    QuadConfig {
        // Φ is only Hölder continuous for small N; tighter tolerances stall
        abs_tol: 1e-9,
        rel_tol: 1e-8,
        max_intervals: 20000,
    }
}

/// ∫_{A(ε) ∩ supp g} w(2^j x − k) g(x) dx over the unit cells of w's support.
fn project<W>(g: &Density1D, geometry: &TruncationGeometry, j: u32, k: i64, len: i64, w: W) -> Result<f64>
where
    W: Fn(f64) -> f64,
{
    let s = (1u64 << j) as f64;
    let mut total = 0.0;
    for cell in 0..len {
        let (c0, c1) = ((k + cell) as f64 / s, (k + cell + 1) as f64 / s);
        for (a0, a1) in geometry.components() {
            for &(g0, g1) in g.support() {
                let lo = c0.max(a0).max(g0);
                let hi = c1.min(a1).min(g1);
                if lo < hi {
                    total += integrate(|x| w(s * x - k as f64) * g.eval(x), lo, hi, &coef_quad())?.value;
                }
            }
        }
    }
    Ok(total)
}

fn index_range(g: &Density1D, basis: &WaveletBasis, j: u32) -> (i64, i64) {
    let s = (1u64 << j) as f64;
    let l = basis.support_len();
    let sup = g.support();
    let (g0, g1) = (sup[0].0, sup[sup.len() - 1].1);
    let a = basis.geometry.a_bar;
    let lo = g0.max(-a);
    let hi = g1.min(a);
    ((lo * s).floor() as i64 - l + 1, (hi * s).ceil() as i64)
}

/// Exact coefficients α_{Jk} = ∫_{A(ε)} Φ_{Jk} g, returned with the first
/// index k_lo (consecutive k after that).
pub fn exact_coefficients(g: &Density1D, basis: &WaveletBasis) -> Result<(i64, Vec<f64>)> {
    let (lo, hi) = index_range(g, basis, basis.j);
    if lo > hi || !(lo as f64).is_finite() {
        return Err(LevyError::Domain("density support does not meet A(eps)".into()));
    }
    let c = basis.scale().sqrt();
    let l = basis.support_len();
    let table = basis.table.clone();
    let alpha: Result<Vec<f64>> = (lo..=hi)
        .into_par_iter()
        .map(|k| Ok(c * project(g, &basis.geometry, basis.j, k, l, |t| table.phi(t))?))
        .collect();
    Ok((lo, alpha?))
}

/// Projection P_J g as an evaluable estimate.
pub fn projection(g: &Density1D, basis: &WaveletBasis) -> Result<DensityEstimate> {
    let (lo, alpha) = exact_coefficients(g, basis)?;
    Ok(DensityEstimate::from_alpha(basis.clone(), lo, &alpha))
}

/// Detail coefficients β_{jk} = ∫_{A(ε)} 2^{j/2} Ψ(2^j x − k) g(x) dx.
pub fn detail_coefficients(g: &Density1D, basis: &WaveletBasis, j: u32) -> Result<Vec<f64>> {
    let (lo, hi) = index_range(g, basis, j);
    let c = ((1u64 << j) as f64).sqrt();
    let l = basis.support_len();
    let table = basis.table.clone();
    (lo..=hi)
        .into_par_iter()
        .map(|k| Ok(c * project(g, &basis.geometry, j, k, l, |t| table.psi(t))?))
        .collect()
}

fn lp_seq(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Besov norm ‖α_{J·}‖_p + (Σ_{j=J}^{j_max} (2^{j(s+1/2−1/p)} ‖β_{j·}‖_p)^q)^{1/q},
/// computed from the coefficients of g on A(ε); q may be infinite.
pub fn besov_norm_truncated(g: &Density1D, basis: &WaveletBasis, s: f64, p: f64, q: f64, j_max: u32) -> Result<f64> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(LevyError::InvalidParameter(format!(
            "Besov exponents need p, q >= 1, got p = {p}, q = {q}"
        )));
    }
    let (_, alpha) = exact_coefficients(g, basis)?;
    let coarse = lp_seq(&alpha, p);
    let mut terms = Vec::new();
    for j in basis.j..=j_max {
        let beta = detail_coefficients(g, basis, j)?;
        terms.push(2f64.powf(j as f64 * (s + 0.5 - 1.0 / p)) * lp_seq(&beta, p));
    }
    Ok(coarse + lp_seq(&terms, q))
}
