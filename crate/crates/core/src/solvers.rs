//! Recovery algorithms: HBHT and HBHTP (heavy-ball accelerated hard
//! thresholding, with and without a pursuit step) plus the IHT, HTP,
//! OMP, SP, and CoSaMP baselines.
//!
//! All algorithms share the driver `run_solver`, which records a full
//! iteration trace. IHT and HTP execute the same arithmetic path as
//! HBHT and HBHTP with the momentum weight forced to zero, so the
//! reduction identities hold exactly, not just to rounding.
//!
//! The heavy-ball search direction at iterate x^p is
//! `alpha * A^T (y - A x^p) + beta * (x^p - x^{p-1})`; HBHT applies H_k
//! to the moved point, HBHTP instead re-fits by least squares on the k
//! best coordinates of the moved point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_scaled, least_squares_on_support, norm2, sub, DenseMatrix};
use crate::sparsity::{hard_threshold, support_of, top_k_indices, SupportSet};

/// Relative l2 error threshold under which a recovery counts as success.
pub const SUCCESS_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hbht,
    Hbhtp,
    Iht,
    Htp,
    Omp,
    Sp,
    Cosamp,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Hbht => "hbht",
            Algorithm::Hbhtp => "hbhtp",
            Algorithm::Iht => "iht",
            Algorithm::Htp => "htp",
            Algorithm::Omp => "omp",
            Algorithm::Sp => "sp",
            Algorithm::Cosamp => "cosamp",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "hbht" => Ok(Algorithm::Hbht),
            "hbhtp" => Ok(Algorithm::Hbhtp),
            "iht" => Ok(Algorithm::Iht),
            "htp" => Ok(Algorithm::Htp),
            "omp" => Ok(Algorithm::Omp),
            "sp" => Ok(Algorithm::Sp),
            "cosamp" => Ok(Algorithm::Cosamp),
            other => Err(Error::Parse(format!("unknown algorithm '{other}'"))),
        }
    }

    pub fn all() -> [Algorithm; 7] {
        [
            Algorithm::Hbht,
            Algorithm::Hbhtp,
            Algorithm::Iht,
            Algorithm::Htp,
            Algorithm::Omp,
            Algorithm::Sp,
            Algorithm::Cosamp,
        ]
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Gradient stepsize, > 0. Ignored by OMP/SP/CoSaMP.
    pub alpha: f64,
    /// Momentum weight, >= 0. Only HBHT and HBHTP use it.
    pub beta: f64,
    /// Target sparsity level k.
    pub sparsity: usize,
    pub max_iterations: usize,
    /// Stop once ||y - A x^p||_2 falls to or below this value.
    pub residual_tolerance: f64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, sparsity: usize) -> Self {
        Self {
            algorithm,
            alpha: 1.0,
            beta: 0.0,
            sparsity,
            max_iterations: 50,
            residual_tolerance: 1e-6,
        }
    }

    /// Parameter recommendations for N(0,1/m) matrices: HBHT (0.6, 0.1),
    /// HBHTP (1.7, 0.7), unit stepsize for IHT/HTP.
    pub fn normalized_preset(algorithm: Algorithm, sparsity: usize) -> Self {
        let mut cfg = Self::new(algorithm, sparsity);
        match algorithm {
            Algorithm::Hbht => {
                cfg.alpha = 0.6;
                cfg.beta = 0.1;
            }
            Algorithm::Hbhtp => {
                cfg.alpha = 1.7;
                cfg.beta = 0.7;
            }
            Algorithm::Iht | Algorithm::Htp => cfg.alpha = 1.0,
            _ => {}
        }
        cfg
    }

    /// Parameter recommendations for N(0,1) matrices: HBHT (1.5e-3, 0.6),
    /// HBHTP (7e-3, 0.7), 1e-3 stepsize for IHT/HTP.
    pub fn unnormalized_preset(algorithm: Algorithm, sparsity: usize) -> Self {
        let mut cfg = Self::new(algorithm, sparsity);
        match algorithm {
            Algorithm::Hbht => {
                cfg.alpha = 1.5e-3;
                cfg.beta = 0.6;
            }
            Algorithm::Hbhtp => {
                cfg.alpha = 7e-3;
                cfg.beta = 0.7;
            }
            Algorithm::Iht | Algorithm::Htp => cfg.alpha = 1e-3,
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.sparsity == 0 {
            return Err(Error::InvalidConfig("sparsity level must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.residual_tolerance < 0.0 || !self.residual_tolerance.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "residual tolerance must be finite and >= 0, got {}",
                self.residual_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    ResidualConverged,
    MaxIterations,
    SupportStabilized,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationTrace {
    pub final_estimate: Vec<f64>,
    /// Number of update steps performed.
    pub iterations_used: usize,
    /// ||y - A x^p||_2 per iterate, starting point included
    /// (length iterations_used + 1).
    pub residual_history: Vec<f64>,
    /// Support chosen at each update step (length iterations_used).
    pub support_history: Vec<SupportSet>,
    pub status: SolveStatus,
    /// Set when any least-squares subproblem was rank deficient.
    pub degenerate_ls: bool,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }

    /// Trace export schema:
    /// {algorithm, alpha, beta, k, iterations_used, status,
    ///  residual_history, final_support}.
    pub fn to_json(&self, cfg: &SolverConfig) -> serde_json::Value {
        serde_json::json!({
            "algorithm": cfg.algorithm.name(),
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "k": cfg.sparsity,
            "iterations_used": self.iterations_used,
            "status": self.status,
            "residual_history": self.residual_history,
            "final_support": support_of(&self.final_estimate).indices(),
        })
    }
}

fn check_problem_dims(a: &DenseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "measurements have length {}, matrix has {} rows",
            y.len(),
            a.rows()
        )));
    }
    Ok(())
}

fn check_iterate_dims(a: &DenseMatrix, x: &[f64]) -> Result<()> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "iterate has length {}, matrix has {} columns",
            x.len(),
            a.cols()
        )));
    }
    Ok(())
}

/// The moved point u^p = x^p + alpha A^T (y - A x^p) + beta (x^p - x^{p-1}).
///
/// When beta == 0 the momentum term is skipped entirely so the zero-beta
/// path is arithmetically identical to plain gradient thresholding.
fn search_point(
    a: &DenseMatrix,
    y: &[f64],
    x_curr: &[f64],
    x_prev: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let residual = sub(y, &a.matvec(x_curr)?);
    let gradient = a.transpose_matvec(&residual)?;
    let mut u = x_curr.to_vec();
    add_scaled(&mut u, alpha, &gradient);
    if beta != 0.0 {
        for (slot, (c, p)) in u.iter_mut().zip(x_curr.iter().zip(x_prev)) {
            *slot += beta * (c - p);
        }
    }
    Ok(u)
}

/// One HBHT update: H_k of the moved point.
pub fn hbht_step(
    x_curr: &[f64],
    x_prev: &[f64],
    a: &DenseMatrix,
    y: &[f64],
    alpha: f64,
    beta: f64,
    k: usize,
) -> Result<Vec<f64>> {
    check_problem_dims(a, y)?;
    check_iterate_dims(a, x_curr)?;
    check_iterate_dims(a, x_prev)?;
    let u = search_point(a, y, x_curr, x_prev, alpha, beta)?;
    Ok(hard_threshold(&u, k))
}

/// One HBHTP update: least squares on the k best coordinates of the
/// moved point. Returns the new iterate, the chosen support, and whether
/// the least-squares subproblem was degenerate.
pub fn hbhtp_step(
    x_curr: &[f64],
    x_prev: &[f64],
    a: &DenseMatrix,
    y: &[f64],
    alpha: f64,
    beta: f64,
    k: usize,
) -> Result<(Vec<f64>, SupportSet, bool)> {
    check_problem_dims(a, y)?;
    check_iterate_dims(a, x_curr)?;
    check_iterate_dims(a, x_prev)?;
    let u = search_point(a, y, x_curr, x_prev, alpha, beta)?;
    let support = top_k_indices(&u, k);
    let ls = least_squares_on_support(a, y, &support)?;
    Ok((ls.coefficients, support, ls.degenerate))
}

/// Runs the configured algorithm from the pair of starting points.
///
/// HBHT/HBHTP treat (x0, x1) as the two heavy-ball initial points and
/// iterate from x1. IHT/HTP start from x0 with the momentum weight
/// forced to zero; SP/CoSaMP seed their first support merge with
/// supp(x0); OMP always starts from the empty support. x1 is ignored by
/// every non-momentum algorithm.
pub fn run_solver(
    a: &DenseMatrix,
    y: &[f64],
    cfg: &SolverConfig,
    x0: &[f64],
    x1: &[f64],
) -> Result<IterationTrace> {
    cfg.validate()?;
    check_problem_dims(a, y)?;
    check_iterate_dims(a, x0)?;
    match cfg.algorithm {
        Algorithm::Hbht => {
            check_iterate_dims(a, x1)?;
            threshold_loop(a, y, cfg, x0, x1, cfg.beta)
        }
        Algorithm::Iht => threshold_loop(a, y, cfg, x0, x0, 0.0),
        Algorithm::Hbhtp => {
            check_iterate_dims(a, x1)?;
            pursuit_loop(a, y, cfg, x0, x1, cfg.beta)
        }
        Algorithm::Htp => pursuit_loop(a, y, cfg, x0, x0, 0.0),
        Algorithm::Omp => omp_loop(a, y, cfg),
        Algorithm::Sp => sp_loop(a, y, cfg, x0),
        Algorithm::Cosamp => cosamp_loop(a, y, cfg, x0),
    }
}

/// Convenience wrapper with the zero starting points used throughout the
/// experiments.
pub fn run_solver_from_zero(
    a: &DenseMatrix,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<IterationTrace> {
    let zero = vec![0.0; a.cols()];
    run_solver(a, y, cfg, &zero, &zero)
}

fn threshold_loop(
    a: &DenseMatrix,
    y: &[f64],
    cfg: &SolverConfig,
    x_prev0: &[f64],
    x_curr0: &[f64],
    beta: f64,
) -> Result<IterationTrace> {
    let mut x_prev = x_prev0.to_vec();
    let mut x_curr = x_curr0.to_vec();
    let mut residuals = vec![norm2(&sub(y, &a.matvec(&x_curr)?))];
    let mut supports = Vec::new();
    let mut iterations = 0;
    let status;
    loop {
        if *residuals.last().unwrap() <= cfg.residual_tolerance {
            status = SolveStatus::ResidualConverged;
            break;
        }
        if iterations == cfg.max_iterations {
            status = SolveStatus::MaxIterations;
            break;
        }
        let u = search_point(a, y, &x_curr, &x_prev, cfg.alpha, beta)?;
        let x_next = hard_threshold(&u, cfg.sparsity);
        residuals.push(norm2(&sub(y, &a.matvec(&x_next)?)));
        supports.push(support_of(&x_next));
        x_prev = std::mem::replace(&mut x_curr, x_next);
        iterations += 1;
    }
    Ok(IterationTrace {
        final_estimate: x_curr,
        iterations_used: iterations,
        residual_history: residuals,
        support_history: supports,
        status,
        degenerate_ls: false,
    })
}

fn pursuit_loop(
    a: &DenseMatrix,
    y: &[f64],
    cfg: &SolverConfig,
    x_prev0: &[f64],
    x_curr0: &[f64],
    beta: f64,
) -> Result<IterationTrace> {
    let mut x_prev = x_prev0.to_vec();
    let mut x_curr = x_curr0.to_vec();
    let mut residuals = vec![norm2(&sub(y, &a.matvec(&x_curr)?))];
    let mut supports = Vec::new();
    let mut iterations = 0;
    let mut degenerate = false;
    let status;
    loop {
        if *residuals.last().unwrap() <= cfg.residual_tolerance {
            status = SolveStatus::ResidualConverged;
            break;
        }
        if iterations == cfg.max_iterations {
            status = SolveStatus::MaxIterations;
            break;
        }
        let u = search_point(a, y, &x_curr, &x_prev, cfg.alpha, beta)?;
        let support = top_k_indices(&u, cfg.sparsity);
        let ls = least_squares_on_support(a, y, &support)?;
        degenerate |= ls.degenerate;
        let x_next = ls.coefficients;
        residuals.push(norm2(&sub(y, &a.matvec(&x_next)?)));
        supports.push(support);
        // Once the iterate and the heavy-ball state repeat, every later
        // iteration would reproduce them; stop instead of spinning.
        let frozen = x_next == x_curr && (beta == 0.0 || x_curr == x_prev);
        x_prev = std::mem::replace(&mut x_curr, x_next);
        iterations += 1;
        if frozen {
            status = if *residuals.last().unwrap() <= cfg.residual_tolerance {
                SolveStatus::ResidualConverged
            } else {
                SolveStatus::SupportStabilized
            };
            break;
        }
    }
    Ok(IterationTrace {
        final_estimate: x_curr,
        iterations_used: iterations,
        residual_history: residuals,
        support_history: supports,
        status,
        degenerate_ls: degenerate,
    })
}

/// Greedy atom selection: exactly k iterations from any non-converged
/// start, each adding the column most correlated with the residual and
/// re-solving on the accumulated support. Mid-run convergence does not
/// shorten the selection budget.
fn omp_loop(a: &DenseMatrix, y: &[f64], cfg: &SolverConfig) -> Result<IterationTrace> {
    let k = cfg.sparsity;
    if k > a.rows() {
        return Err(Error::InvalidConfig(format!("omp needs k <= m, got k={k}, m={}", a.rows())));
    }
    let n = a.cols();
    let mut estimate = vec![0.0; n];
    let mut residual = y.to_vec();
    let mut residuals = vec![norm2(&residual)];
    let mut supports = Vec::new();
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut in_support = vec![false; n];
    let mut degenerate = false;

    if residuals[0] <= cfg.residual_tolerance {
        return Ok(IterationTrace {
            final_estimate: estimate,
            iterations_used: 0,
            residual_history: residuals,
            support_history: supports,
            status: SolveStatus::ResidualConverged,
            degenerate_ls: false,
        });
    }

    for _ in 0..k {
        let proxy = a.transpose_matvec(&residual)?;
        let mut best: Option<usize> = None;
        for (j, &p) in proxy.iter().enumerate() {
            if in_support[j] {
                continue;
            }
            match best {
                // Strict improvement keeps the lowest index on ties.
                Some(b) if p.abs() <= proxy[b].abs() => {}
                _ => best = Some(j),
            }
        }
        let chosen = best.expect("k <= m <= n leaves an unused column");
        picked.push(chosen);
        in_support[chosen] = true;

        let support = SupportSet::new(picked.clone());
        let ls = least_squares_on_support(a, y, &support)?;
        degenerate |= ls.degenerate;
        estimate = ls.coefficients;
        residual = sub(y, &a.matvec(&estimate)?);
        residuals.push(norm2(&residual));
        supports.push(support);
    }

    let status = if *residuals.last().unwrap() <= cfg.residual_tolerance {
        SolveStatus::ResidualConverged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(IterationTrace {
        final_estimate: estimate,
        iterations_used: k,
        residual_history: residuals,
        support_history: supports,
        status,
        degenerate_ls: degenerate,
    })
}

/// Subspace pursuit: merge the current support with the k strongest
/// proxy coordinates, least squares on the merged set, re-prune to the
/// k largest coefficients, and re-solve on the pruned support.
fn sp_loop(a: &DenseMatrix, y: &[f64], cfg: &SolverConfig, x0: &[f64]) -> Result<IterationTrace> {
    let k = cfg.sparsity;
    let mut x_curr = x0.to_vec();
    let mut residuals = vec![norm2(&sub(y, &a.matvec(&x_curr)?))];
    let mut supports = Vec::new();
    let mut iterations = 0;
    let mut degenerate = false;
    let status;
    loop {
        if *residuals.last().unwrap() <= cfg.residual_tolerance {
            status = SolveStatus::ResidualConverged;
            break;
        }
        if iterations == cfg.max_iterations {
            status = SolveStatus::MaxIterations;
            break;
        }
        let residual = sub(y, &a.matvec(&x_curr)?);
        let proxy = a.transpose_matvec(&residual)?;
        let merged = support_of(&x_curr).union(&top_k_indices(&proxy, k));
        let wide = least_squares_on_support(a, y, &merged)?;
        degenerate |= wide.degenerate;
        let pruned = top_k_indices(&wide.coefficients, k);
        let narrow = least_squares_on_support(a, y, &pruned)?;
        degenerate |= narrow.degenerate;
        let x_next = narrow.coefficients;
        residuals.push(norm2(&sub(y, &a.matvec(&x_next)?)));
        supports.push(pruned);
        let frozen = x_next == x_curr;
        x_curr = x_next;
        iterations += 1;
        if frozen {
            status = if *residuals.last().unwrap() <= cfg.residual_tolerance {
                SolveStatus::ResidualConverged
            } else {
                SolveStatus::SupportStabilized
            };
            break;
        }
    }
    Ok(IterationTrace {
        final_estimate: x_curr,
        iterations_used: iterations,
        residual_history: residuals,
        support_history: supports,
        status,
        degenerate_ls: degenerate,
    })
}

/// CoSaMP: merge the current support with the 2k strongest proxy
/// coordinates, least squares on the merged set, hard-threshold the
/// coefficients to k.
fn cosamp_loop(
    a: &DenseMatrix,
    y: &[f64],
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<IterationTrace> {
    let k = cfg.sparsity;
    let mut x_curr = x0.to_vec();
    let mut residuals = vec![norm2(&sub(y, &a.matvec(&x_curr)?))];
    let mut supports = Vec::new();
    let mut iterations = 0;
    let mut degenerate = false;
    let status;
    loop {
        if *residuals.last().unwrap() <= cfg.residual_tolerance {
            status = SolveStatus::ResidualConverged;
            break;
        }
        if iterations == cfg.max_iterations {
            status = SolveStatus::MaxIterations;
            break;
        }
        let residual = sub(y, &a.matvec(&x_curr)?);
        let proxy = a.transpose_matvec(&residual)?;
        let merged = support_of(&x_curr).union(&top_k_indices(&proxy, 2 * k));
        let ls = least_squares_on_support(a, y, &merged)?;
        degenerate |= ls.degenerate;
        let x_next = hard_threshold(&ls.coefficients, k);
        residuals.push(norm2(&sub(y, &a.matvec(&x_next)?)));
        supports.push(support_of(&x_next));
        x_curr = x_next;
        iterations += 1;
    }
    Ok(IterationTrace {
        final_estimate: x_curr,
        iterations_used: iterations,
        residual_history: residuals,
        support_history: supports,
        status,
        degenerate_ls: degenerate,
    })
}

pub fn baseline_omp(a: &DenseMatrix, y: &[f64], k: usize) -> Result<IterationTrace> {
    let cfg = SolverConfig::new(Algorithm::Omp, k);
    run_solver_from_zero(a, y, &cfg)
}

pub fn baseline_sp(a: &DenseMatrix, y: &[f64], k: usize) -> Result<IterationTrace> {
    let cfg = SolverConfig::new(Algorithm::Sp, k);
    run_solver_from_zero(a, y, &cfg)
}

pub fn baseline_cosamp(a: &DenseMatrix, y: &[f64], k: usize) -> Result<IterationTrace> {
    let cfg = SolverConfig::new(Algorithm::Cosamp, k);
    run_solver_from_zero(a, y, &cfg)
}

/// True when ||estimate - truth||_2 / ||truth||_2 <= 1e-3.
pub fn check_success(estimate: &[f64], truth: &[f64]) -> Result<bool> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth has length {}",
            estimate.len(),
            truth.len()
        )));
    }
    let truth_norm = norm2(truth);
    if truth_norm == 0.0 {
        return Err(Error::InvalidArgument(
            "success criterion is undefined for a zero truth vector".into(),
        ));
    }
    Ok(norm2(&sub(estimate, truth)) / truth_norm <= SUCCESS_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gaussian_instance, Regime};
    use crate::rng::SplitMix64;

    #[test]
    fn hbht_step_hand_example() {
        // Identity matrix, y=(1,0,2), both iterates zero, alpha=0.5,
        // beta=0.3: u = (0.5, 0, 1), H_1(u) = (0, 0, 1).
        let a = DenseMatrix::identity(3);
        let zero = vec![0.0; 3];
        let next = hbht_step(&zero, &zero, &a, &[1.0, 0.0, 2.0], 0.5, 0.3, 1).unwrap();
        assert_eq!(next, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn hbhtp_step_hand_example() {
        let a = DenseMatrix::identity(3);
        let zero = vec![0.0; 3];
        let (next, support, degenerate) =
            hbhtp_step(&zero, &zero, &a, &[1.0, 0.0, 2.0], 0.5, 0.0, 1).unwrap();
        assert_eq!(support.indices(), &[2]);
        assert_eq!(next[0], 0.0);
        assert_eq!(next[1], 0.0);
        assert!((next[2] - 2.0).abs() < 1e-12);
        assert!(!degenerate);
    }

    #[test]
    fn fixed_point_of_exact_data() {
        let inst = gaussian_instance(12, 24, 3, Regime::Normalized, 0.0, 42).unwrap();
        let x = &inst.true_signal;
        let next = hbht_step(x, x, &inst.matrix, &inst.measurements, 0.7, 0.4, 3).unwrap();
        let drift: f64 = next.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12, "HBHT fixed point drift {drift}");

        let (next_p, _, _) =
            hbhtp_step(x, x, &inst.matrix, &inst.measurements, 0.7, 0.4, 3).unwrap();
        let drift: f64 = next_p.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "HBHTP fixed point drift {drift}");
    }

    #[test]
    fn zero_measurements_converge_immediately() {
        let a = DenseMatrix::identity(4);
        for algorithm in Algorithm::all() {
            let cfg = SolverConfig::new(algorithm, 2);
            let trace = run_solver_from_zero(&a, &[0.0; 4], &cfg).unwrap();
            assert_eq!(trace.status, SolveStatus::ResidualConverged, "{algorithm}");
            assert_eq!(trace.iterations_used, 0, "{algorithm}");
            assert_eq!(trace.residual_history, vec![0.0]);
            assert_eq!(trace.final_estimate, vec![0.0; 4]);
        }
    }

    #[test]
    fn reduction_identities_hold_exactly() {
        for seed in [1_u64, 2, 3] {
            let inst = gaussian_instance(20, 40, 4, Regime::Normalized, 0.0, seed).unwrap();
            for (momentum, plain) in
                [(Algorithm::Hbht, Algorithm::Iht), (Algorithm::Hbhtp, Algorithm::Htp)]
            {
                let mut cfg_m = SolverConfig::new(momentum, 4);
                cfg_m.alpha = 0.9;
                cfg_m.beta = 0.0;
                cfg_m.max_iterations = 30;
                let mut cfg_p = SolverConfig::new(plain, 4);
                cfg_p.alpha = 0.9;
                cfg_p.max_iterations = 30;
                let tm = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg_m).unwrap();
                let tp = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg_p).unwrap();
                assert_eq!(tm.final_estimate, tp.final_estimate);
                assert_eq!(tm.residual_history, tp.residual_history);
                assert_eq!(tm.iterations_used, tp.iterations_used);
                assert_eq!(tm.status, tp.status);
            }
        }
    }

    #[test]
    fn iterates_stay_k_sparse() {
        let inst = gaussian_instance(16, 32, 3, Regime::Normalized, 0.0, 8).unwrap();
        for algorithm in Algorithm::all() {
            let mut cfg = SolverConfig::normalized_preset(algorithm, 3);
            cfg.max_iterations = 15;
            let trace = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg).unwrap();
            let nz = trace.final_estimate.iter().filter(|&&v| v != 0.0).count();
            assert!(nz <= 3, "{algorithm}: {nz} nonzeros");
            assert_eq!(trace.residual_history.len(), trace.iterations_used + 1);
        }
    }

    #[test]
    fn pursuit_residual_not_worse_than_thresholded_point() {
        // The pursuit refit minimizes over the chosen support, so it can
        // only improve on H_k(u) there.
        let inst = gaussian_instance(20, 40, 5, Regime::Normalized, 0.0, 13).unwrap();
        let a = &inst.matrix;
        let y = &inst.measurements;
        let mut x_prev = vec![0.0; 40];
        let mut x_curr = vec![0.0; 40];
        for _ in 0..10 {
            let u = search_point(a, y, &x_curr, &x_prev, 1.0, 0.3).unwrap();
            let thresholded = hard_threshold(&u, 5);
            let res_threshold = norm2(&sub(y, &a.matvec(&thresholded).unwrap()));
            let (pursued, _, _) = hbhtp_step(&x_curr, &x_prev, a, y, 1.0, 0.3, 5).unwrap();
            let res_pursuit = norm2(&sub(y, &a.matvec(&pursued).unwrap()));
            assert!(res_pursuit <= res_threshold + 1e-12);
            x_prev = std::mem::replace(&mut x_curr, pursued);
        }
    }

    #[test]
    fn omp_runs_exactly_k_iterations() {
        let inst = gaussian_instance(20, 40, 4, Regime::Normalized, 0.0, 10).unwrap();
        let trace = baseline_omp(&inst.matrix, &inst.measurements, 4).unwrap();
        assert_eq!(trace.iterations_used, 4);
        assert_eq!(trace.support_history.last().unwrap().len(), 4);
    }

    #[test]
    fn omp_first_pick_is_strongest_proxy_column() {
        // 1-sparse hand-checkable instance.
        let a = DenseMatrix::from_vec(
            3,
            4,
            vec![
                1.0, 0.0, 0.5, 0.2, //
                0.0, 1.0, 0.5, 0.1, //
                0.0, 0.0, 0.0, 0.9,
            ],
        )
        .unwrap();
        let x = [0.0, 0.0, 0.0, 2.0];
        let y = a.matvec(&x).unwrap();
        let proxy = a.transpose_matvec(&y).unwrap();
        let best = proxy
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.abs().total_cmp(&q.abs()))
            .unwrap()
            .0;
        let trace = baseline_omp(&a, &y, 1).unwrap();
        assert_eq!(trace.support_history[0].indices(), &[best]);
    }

    #[test]
    fn baselines_recover_under_orthonormal_columns() {
        // Identity-embedded orthonormal columns: proxy equals the signal,
        // so OMP/SP/CoSaMP all recover exactly.
        let n = 8;
        let a = DenseMatrix::identity(n);
        let mut x = vec![0.0; n];
        x[1] = 1.5;
        x[6] = -2.0;
        let y = a.matvec(&x).unwrap();
        for runner in [baseline_omp, baseline_sp, baseline_cosamp] {
            let trace = runner(&a, &y, 2).unwrap();
            assert!(check_success(&trace.final_estimate, &x).unwrap());
            assert!(trace.iterations_used <= 2);
        }
    }

    #[test]
    fn momentum_solvers_recover_well_posed_instance() {
        // m=20, n=40, k=3 normalized instances with the recommended
        // parameters recover in at least 95 of 100 seeded trials.
        let mut successes = 0;
        for seed in 0..100 {
            let inst = gaussian_instance(20, 40, 3, Regime::Normalized, 0.0, 500 + seed).unwrap();
            let cfg = SolverConfig::normalized_preset(Algorithm::Hbhtp, 3);
            let trace = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg).unwrap();
            if check_success(&trace.final_estimate, &inst.true_signal).unwrap() {
                successes += 1;
            }
        }
        assert!(successes >= 95, "only {successes}/100 recovered");
    }

    #[test]
    fn check_success_contract() {
        let truth = vec![3.0, 0.0, 4.0];
        assert!(check_success(&truth, &truth).unwrap());
        let inflated: Vec<f64> = truth.iter().map(|x| x * (1.0 + 2e-3)).collect();
        assert!(!check_success(&inflated, &truth).unwrap());
        // Perturbation of half the allowed size passes.
        let mut nudged = truth.clone();
        nudged[0] += 1e-3 * 5.0 * 0.5;
        assert!(check_success(&nudged, &truth).unwrap());
        assert!(check_success(&[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let a = DenseMatrix::identity(3);
        let y = [1.0, 0.0, 0.0];
        let mut cfg = SolverConfig::new(Algorithm::Hbht, 1);
        cfg.alpha = 0.0;
        assert!(run_solver_from_zero(&a, &y, &cfg).is_err());
        let mut cfg = SolverConfig::new(Algorithm::Hbht, 0);
        cfg.alpha = 1.0;
        assert!(run_solver_from_zero(&a, &y, &cfg).is_err());
        let cfg = SolverConfig::new(Algorithm::Omp, 4);
        assert!(run_solver_from_zero(&a, &y, &cfg).is_err(), "omp k > m");
    }

    #[test]
    fn support_stabilized_fires_on_stalled_pursuit() {
        // A pursuit run that cannot reach the tolerance settles on a
        // fixed support and stops early.
        let mut rng = SplitMix64::new(77);
        let data: Vec<f64> = (0..6 * 12).map(|_| rng.next_gaussian()).collect();
        let a = DenseMatrix::from_vec(6, 12, data).unwrap();
        let y: Vec<f64> = (0..6).map(|_| rng.next_gaussian()).collect();
        let mut cfg = SolverConfig::new(Algorithm::Htp, 2);
        cfg.alpha = 0.05;
        cfg.max_iterations = 200;
        cfg.residual_tolerance = 0.0;
        let trace = run_solver_from_zero(&a, &y, &cfg).unwrap();
        assert_eq!(trace.status, SolveStatus::SupportStabilized);
        assert!(trace.iterations_used < 200);
    }

    #[test]
    fn trace_json_schema() {
        let inst = gaussian_instance(10, 20, 2, Regime::Normalized, 0.0, 4).unwrap();
        let cfg = SolverConfig::normalized_preset(Algorithm::Hbhtp, 2);
        let trace = run_solver_from_zero(&inst.matrix, &inst.measurements, &cfg).unwrap();
        let json = trace.to_json(&cfg);
        for key in [
            "algorithm",
            "alpha",
            "beta",
            "k",
            "iterations_used",
            "status",
            "residual_history",
            "final_support",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(json["algorithm"], "hbhtp");
    }
}
