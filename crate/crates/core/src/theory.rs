//! Convergence and stability constants for the heavy-ball thresholding
//! solvers, and a brute-force restricted-isometry oracle.
//!
//! For parameters (alpha, beta) and restricted isometry constants the
//! evaluators produce the geometric contraction data of the solvers:
//!
//! * HBHT: b = eta (|1-alpha+beta| + alpha d3k), tau = (b + sqrt(b^2 +
//!   4 eta beta)) / 2, with eta the golden ratio. The guarantee applies
//!   when d3k < (sqrt(5)-1)/2 and (alpha, beta) lie in the stated
//!   window; then tau < 1 and the recovery error decays like tau^p up
//!   to a noise floor.
//! * HBHTP: same shape with eta replaced by eta_hat = sqrt(2) /
//!   sqrt(1 - d2k^2), the guarantee window keyed to d3k < 1/sqrt(3),
//!   plus a finite-iteration count p* for exact-k signals.
//! * Both have order-2k variants where d3k is replaced by sqrt(3) d2k
//!   throughout the contraction factor.
//!
//! The RIC oracle enumerates all order-k column subsets when feasible
//! (eigenvalues of the k x k Grams) and otherwise samples supports,
//! which yields a lower bound on the true constant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub, DenseMatrix};
use crate::rng::{mix64, SplitMix64};
use crate::sparsity::{best_term_residual, support_of, NormOrder, SupportSet};

/// eta = (sqrt(5)+1)/2, the positive root of t^2 - t = 1.
pub fn eta_constant() -> f64 {
    (5.0_f64.sqrt() + 1.0) / 2.0
}

/// Largest delta_3k under which the HBHT guarantee can hold: (sqrt(5)-1)/2.
pub fn hbht_delta3k_threshold() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// Largest delta_3k under which the HBHTP guarantee can hold: 1/sqrt(3).
pub fn hbhtp_delta3k_threshold() -> f64 {
    1.0 / 3.0_f64.sqrt()
}

/// Order-2k variant of the HBHT threshold: (sqrt(5)-1)/(2 sqrt(3)).
pub fn hbht_delta2k_threshold() -> f64 {
    (5.0_f64.sqrt() - 1.0) / (2.0 * 3.0_f64.sqrt())
}

/// Order-2k variant of the HBHTP threshold: 1/sqrt(7).
pub fn hbhtp_delta2k_threshold() -> f64 {
    1.0 / 7.0_f64.sqrt()
}

/// How a restricted isometry constant was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RicMethod {
    ExactBruteForce,
    MonteCarloLowerBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RipEstimate {
    pub order: usize,
    pub delta: f64,
    pub method: RicMethod,
    /// Sampled support count; zero for exact enumeration.
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HbhtBounds {
    pub eta: f64,
    pub b: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub condition_met: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HbhtpBounds {
    pub eta_hat: f64,
    pub b_hat: f64,
    pub tau_hat: f64,
    pub c3: f64,
    pub c4: f64,
    /// Iterations guaranteeing exact recovery of an exact-k signal;
    /// absent when the smallest signal entry was not supplied or the
    /// formula diverges.
    pub p_star: Option<u64>,
    pub condition_met: bool,
}

/// Either family of constants, tagged by solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ConvergenceBounds {
    Hbht(HbhtBounds),
    Hbhtp(HbhtpBounds),
}

impl ConvergenceBounds {
    pub fn condition_met(&self) -> bool {
        match self {
            ConvergenceBounds::Hbht(b) => b.condition_met,
            ConvergenceBounds::Hbhtp(b) => b.condition_met,
        }
    }

    /// (noise coefficient, contraction factor, linear coefficient):
    /// (C2, tau, b) for HBHT, (C4, tau_hat, b_hat) for HBHTP.
    pub fn contraction(&self) -> (f64, f64, f64) {
        match self {
            ConvergenceBounds::Hbht(b) => (b.c2, b.tau, b.b),
            ConvergenceBounds::Hbhtp(b) => (b.c4, b.tau_hat, b.b_hat),
        }
    }
}

fn check_probe_norms(e0: f64, e1: f64) -> Result<()> {
    if e0 < 0.0 || e1 < 0.0 || !e0.is_finite() || !e1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "initial error norms must be finite and >= 0, got e0={e0}, e1={e1}"
        )));
    }
    Ok(())
}

fn check_step_params(alpha: f64, beta: f64) -> Result<()> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

fn check_delta_chain(deltas: &[(&str, f64)]) -> Result<()> {
    let mut prev = 0.0;
    for &(name, d) in deltas {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0,1), got {d}")));
        }
        if d < prev - 1e-15 {
            return Err(Error::InvalidArgument(format!(
                "restricted isometry constants must be nondecreasing in the order; {name}={d} < {prev}"
            )));
        }
        prev = d;
    }
    Ok(())
}

/// (alpha, beta) window of the HBHT guarantee for an effective delta
/// (delta_3k, or sqrt(3) delta_2k in the order-2k variant):
/// beta < eta/(1+delta) - 1 and alpha inside its interval.
fn hbht_window(alpha: f64, beta: f64, delta: f64) -> bool {
    let eta = eta_constant();
    if delta >= 1.0 {
        return false;
    }
    if beta >= eta / (1.0 + delta) - 1.0 {
        return false;
    }
    let lower = (2.0 * (1.0 + beta) - eta) / (1.0 - delta);
    let upper = eta / (1.0 + delta);
    lower < alpha && alpha < upper
}

/// (alpha, beta) window of the HBHTP guarantee for an effective delta
/// given eta_hat. The window is nonempty exactly when 1/eta_hat exceeds
/// the effective delta, which is what the order thresholds encode.
fn hbhtp_window(alpha: f64, beta: f64, delta: f64, eta_hat: f64) -> bool {
    if delta >= 1.0 {
        return false;
    }
    let inv = 1.0 / eta_hat;
    if beta >= (inv + 1.0) / (1.0 + delta) - 1.0 {
        return false;
    }
    let lower = (1.0 + 2.0 * beta - inv) / (1.0 - delta);
    let upper = (inv + 1.0) / (1.0 + delta);
    lower < alpha && alpha < upper
}

fn hbht_bounds_with(
    alpha: f64,
    beta: f64,
    effective_d3k: f64,
    delta2k: f64,
    e0: f64,
    e1: f64,
    condition_met: bool,
) -> HbhtBounds {
    let eta = eta_constant();
    let b = eta * ((1.0 - alpha + beta).abs() + alpha * effective_d3k);
    let tau = (b + (b * b + 4.0 * eta * beta).sqrt()) / 2.0;
    let c1 = e1 + (tau - b) * e0;
    let c2 = eta * alpha * (1.0 + delta2k).sqrt() / (1.0 - tau);
    if condition_met {
        assert!(tau < 1.0, "guarantee window must force tau < 1, got {tau}");
    }
    HbhtBounds { eta, b, tau, c1, c2, condition_met }
}

/// HBHT constants under the order-3k guarantee.
///
/// `e0` and `e1` are the starting error norms ||x_S - x^0||_2 and
/// ||x_S - x^1||_2 supplied by the caller.
pub fn hbht_bounds(
    alpha: f64,
    beta: f64,
    delta3k: f64,
    delta2k: f64,
    e0: f64,
    e1: f64,
) -> Result<HbhtBounds> {
    check_step_params(alpha, beta)?;
    check_delta_chain(&[("delta2k", delta2k), ("delta3k", delta3k)])?;
    check_probe_norms(e0, e1)?;
    let condition = delta3k < hbht_delta3k_threshold() && hbht_window(alpha, beta, delta3k);
    Ok(hbht_bounds_with(alpha, beta, delta3k, delta2k, e0, e1, condition))
}

/// HBHT constants under the order-2k guarantee: delta_3k is replaced by
/// sqrt(3) delta_2k in the contraction and in the admissibility window.
pub fn hbht_bounds_2k(alpha: f64, beta: f64, delta2k: f64, e0: f64, e1: f64) -> Result<HbhtBounds> {
    check_step_params(alpha, beta)?;
    check_delta_chain(&[("delta2k", delta2k)])?;
    check_probe_norms(e0, e1)?;
    let effective = 3.0_f64.sqrt() * delta2k;
    let condition = delta2k < hbht_delta2k_threshold() && hbht_window(alpha, beta, effective);
    Ok(hbht_bounds_with(alpha, beta, effective, delta2k, e0, e1, condition))
}

#[allow(clippy::too_many_arguments)]
fn hbhtp_bounds_with(
    alpha: f64,
    beta: f64,
    effective_d3k: f64,
    delta_k: f64,
    delta2k: f64,
    e0: f64,
    e1: f64,
    condition_met: bool,
    mu: Option<f64>,
) -> HbhtpBounds {
    let eta_hat = 2.0_f64.sqrt() / (1.0 - delta2k * delta2k).sqrt();
    let b_hat = eta_hat * ((1.0 - alpha + beta).abs() + alpha * effective_d3k);
    let tau_hat = (b_hat + (b_hat * b_hat + 4.0 * eta_hat * beta).sqrt()) / 2.0;
    let c3 = e1 + (tau_hat - b_hat) * e0;
    let c4 = (eta_hat * alpha * (1.0 + delta2k).sqrt() + (1.0 + delta_k).sqrt() / (1.0 - delta2k))
        / (1.0 - tau_hat);
    if condition_met {
        assert!(tau_hat < 1.0, "guarantee window must force tau_hat < 1, got {tau_hat}");
    }
    let p_star = match mu {
        Some(mu) if condition_met && tau_hat < 1.0 && c3 > 0.0 && mu > 0.0 && mu.is_finite() => {
            let ratio = 2.0_f64.sqrt() * c3 / (eta_hat * mu);
            if !ratio.is_finite() {
                None
            } else if ratio <= 1.0 {
                Some(1)
            } else {
                let p = (ratio.ln() / (1.0 / tau_hat).ln()).ceil() + 1.0;
                (p.is_finite() && p <= 1e9).then_some(p.max(1.0) as u64)
            }
        }
        _ => None,
    };
    HbhtpBounds { eta_hat, b_hat, tau_hat, c3, c4, p_star, condition_met }
}

/// HBHTP constants under the order-3k guarantee.
///
/// `mu`, when given, is the smallest nonzero signal magnitude; it feeds
/// the finite-convergence iteration count p*.
#[allow(clippy::too_many_arguments)]
pub fn hbhtp_bounds(
    alpha: f64,
    beta: f64,
    delta_k: f64,
    delta2k: f64,
    delta3k: f64,
    e0: f64,
    e1: f64,
    mu: Option<f64>,
) -> Result<HbhtpBounds> {
    check_step_params(alpha, beta)?;
    check_delta_chain(&[("delta_k", delta_k), ("delta2k", delta2k), ("delta3k", delta3k)])?;
    check_probe_norms(e0, e1)?;
    let eta_hat = 2.0_f64.sqrt() / (1.0 - delta2k * delta2k).sqrt();
    let condition =
        delta3k < hbhtp_delta3k_threshold() && hbhtp_window(alpha, beta, delta3k, eta_hat);
    Ok(hbhtp_bounds_with(alpha, beta, delta3k, delta_k, delta2k, e0, e1, condition, mu))
}

/// HBHTP constants under the order-2k guarantee (delta_3k replaced by
/// sqrt(3) delta_2k, admissible when delta_2k < 1/sqrt(7)).
pub fn hbhtp_bounds_2k(
    alpha: f64,
    beta: f64,
    delta_k: f64,
    delta2k: f64,
    e0: f64,
    e1: f64,
) -> Result<HbhtpBounds> {
    check_step_params(alpha, beta)?;
    check_delta_chain(&[("delta_k", delta_k), ("delta2k", delta2k)])?;
    check_probe_norms(e0, e1)?;
    let eta_hat = 2.0_f64.sqrt() / (1.0 - delta2k * delta2k).sqrt();
    let effective = 3.0_f64.sqrt() * delta2k;
    let condition =
        delta2k < hbhtp_delta2k_threshold() && hbhtp_window(alpha, beta, effective, eta_hat);
    Ok(hbhtp_bounds_with(alpha, beta, effective, delta_k, delta2k, e0, e1, condition, None))
}

/// Closed-form majorant for nonnegative sequences satisfying
/// a^{p+1} <= b1 a^p + b2 a^{p-1} + b3 with b1 + b2 < 1:
/// a^p <= theta^{p-1} [a^1 + (theta - b1) a^0] + b3 / (1 - theta),
/// theta = (b1 + sqrt(b1^2 + 4 b2)) / 2.
pub fn geometric_envelope(a0: f64, a1: f64, b1: f64, b2: f64, b3: f64, p: usize) -> Result<f64> {
    for (name, v) in [("a0", a0), ("a1", a1), ("b1", b1), ("b2", b2), ("b3", b3)] {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if b1 + b2 >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "two-level recursion needs b1 + b2 < 1, got {}",
            b1 + b2
        )));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("envelope index p starts at 1".into()));
    }
    let theta = (b1 + (b1 * b1 + 4.0 * b2).sqrt()) / 2.0;
    assert!(theta < 1.0, "b1 + b2 < 1 must force theta < 1, got {theta}");
    let tail = if b3 > 0.0 { b3 / (1.0 - theta) } else { 0.0 };
    Ok(theta.powi((p - 1) as i32) * (a1 + (theta - b1) * a0) + tail)
}

/// C(n, k) if it does not exceed `cap`, else None.
fn binomial_capped(n: usize, k: usize, cap: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c.checked_mul((n - k + i) as u128)?;
        c /= i as u128;
        if c > cap {
            return None;
        }
    }
    Some(c)
}

/// Visits order-k index subsets of {0..n-1} in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn gram_deviation(gram_full: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let mut gram = DMatrix::zeros(k, k);
    for (i, &si) in support.iter().enumerate() {
        for (j, &sj) in support.iter().enumerate() {
            gram[(i, j)] = gram_full[(si, sj)];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    (hi - 1.0).max(1.0 - lo)
}

/// The order-k restricted isometry constant of `a`.
///
/// When C(cols, order) <= max_enumeration every support is enumerated
/// and the result is exact; otherwise `max_enumeration` random supports
/// are sampled (fixed internal seed, reproducible), yielding a lower
/// bound. delta is the largest deviation of a k-column Gram spectrum
/// from 1.
pub fn brute_force_ric(
    a: &DenseMatrix,
    order: usize,
    max_enumeration: usize,
) -> Result<RipEstimate> {
    let n = a.cols();
    if order == 0 || order > n {
        return Err(Error::InvalidArgument(format!("ric order must lie in [1, {n}], got {order}")));
    }
    let na = a.to_nalgebra();
    let gram_full = na.transpose() * &na;

    let exact = binomial_capped(n, order, max_enumeration as u128).is_some();
    let mut delta: f64 = 0.0;
    if exact {
        for_each_combination(n, order, |support| {
            delta = delta.max(gram_deviation(&gram_full, support));
        });
        Ok(RipEstimate { order, delta, method: RicMethod::ExactBruteForce, samples: 0 })
    } else {
        // Seed depends only on (order, sample budget): repeated calls
        // report the same lower bound.
        let mut rng = SplitMix64::new(mix64(
            0x5249_4353_414D_504C ^ (order as u64) << 32 ^ max_enumeration as u64,
        ));
        for _ in 0..max_enumeration {
            let support = rng.subset(n, order);
            delta = delta.max(gram_deviation(&gram_full, &support));
        }
        Ok(RipEstimate {
            order,
            delta,
            method: RicMethod::MonteCarloLowerBound,
            samples: max_enumeration,
        })
    }
}

/// Checks ||[(I - A^T A)(x - z)]_{S union S*}||_2 <= sqrt(3) delta_2k
/// ||x - z||_2 for k-sparse x and z, S = supp(x), with 1e-12 slack.
/// `delta2k_exact` must be the exact order-2k constant of `a`.
pub fn sqrt3_delta2k_bound_check(
    a: &DenseMatrix,
    x: &[f64],
    z: &[f64],
    s_star: &SupportSet,
    k: usize,
    delta2k_exact: f64,
) -> Result<bool> {
    if x.len() != a.cols() || z.len() != a.cols() {
        return Err(Error::DimensionMismatch(
            "signal vectors must match the matrix column count".into(),
        ));
    }
    s_star.check_within(a.cols())?;
    let sx = support_of(x);
    let sz = support_of(z);
    if sx.len() > k || sz.len() > k {
        return Err(Error::InvalidArgument(format!(
            "x and z must be {k}-sparse, got supports of size {} and {}",
            sx.len(),
            sz.len()
        )));
    }
    let union = sx.union(s_star);
    if union.len() > 2 * k {
        return Err(Error::InvalidArgument(format!(
            "|supp(x) union S*| must be <= 2k = {}, got {}",
            2 * k,
            union.len()
        )));
    }
    let d = sub(x, z);
    let ad = a.matvec(&d)?;
    let atad = a.transpose_matvec(&ad)?;
    let mut restricted_sq = 0.0;
    for i in union.iter() {
        let w = d[i] - atad[i];
        restricted_sq += w * w;
    }
    Ok(restricted_sq.sqrt() <= 3.0_f64.sqrt() * delta2k_exact * norm2(&d) + 1e-12)
}

/// Coefficients of the three-term stability estimate for a solver whose
/// guarantee window holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityBound {
    /// Multiplies sigma_j(x)_1: (1 + 2 C sqrt(1 + delta_j)) / (2 sqrt(j)).
    pub approx_coeff: f64,
    /// Multiplies the noise norm: C2 or C4.
    pub noise_coeff: f64,
    /// Multiplies tau^{p-1} ||x||_2: tau - b + 1.
    pub transient_coeff: f64,
    /// j = floor(k / 2).
    pub j: usize,
}

/// Stability coefficients for zero starting points.
pub fn stability_coefficients(
    bounds: &ConvergenceBounds,
    k: usize,
    delta_j: f64,
) -> Result<StabilityBound> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("stability estimate needs k >= 2, got {k}")));
    }
    if !(0.0..1.0).contains(&delta_j) {
        return Err(Error::InvalidArgument(format!("delta_j must lie in [0,1), got {delta_j}")));
    }
    if !bounds.condition_met() {
        return Err(Error::InvalidArgument(
            "stability estimate requires the guarantee window to hold".into(),
        ));
    }
    let (c, tau, b) = bounds.contraction();
    let j = k / 2;
    Ok(StabilityBound {
        approx_coeff: (1.0 + 2.0 * c * (1.0 + delta_j).sqrt()) / (2.0 * (j as f64).sqrt()),
        noise_coeff: c,
        transient_coeff: tau - b + 1.0,
        j,
    })
}

/// Full stability estimate at iteration p for a solver started at zero:
/// approx_coeff sigma_j(x)_1 + C ||nu||_2 + (tau - b + 1) tau^{p-1}
/// ||x||_2.
pub fn stability_bound(
    bounds: &ConvergenceBounds,
    x: &[f64],
    k: usize,
    delta_j: f64,
    noise_norm: f64,
    p: usize,
) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("iteration index p starts at 1".into()));
    }
    if noise_norm < 0.0 {
        return Err(Error::InvalidArgument("noise norm must be >= 0".into()));
    }
    let coeffs = stability_coefficients(bounds, k, delta_j)?;
    let (_, tau, _) = bounds.contraction();
    let sigma_j = best_term_residual(x, coeffs.j.min(x.len()), NormOrder::L1)?;
    Ok(coeffs.approx_coeff * sigma_j
        + coeffs.noise_coeff * noise_norm
        + coeffs.transient_coeff * tau.powi((p - 1) as i32) * norm2(x))
}
