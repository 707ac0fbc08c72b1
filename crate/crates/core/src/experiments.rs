//! Experiment harness: success-rate sweeps over sparsity, 50%-success
//! phase-transition estimation (bisection plus an L1 logistic fit), and
//! algorithm selection maps over the (delta, rho) = (m/n, k/m) plane.
//!
//! Every trial seed is derived as `base_seed ^ hash(k, trial)`, so a
//! sweep is reproducible from its spec alone and all algorithms see the
//! same instances. Solver failures inside a sweep are recorded and
//! counted as unsuccessful trials; they never abort the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{gaussian_instance, ProblemInstance, Regime};
use crate::rng::mix64;
use crate::solvers::{check_success, run_solver_from_zero, SolverConfig};

/// Deterministic per-trial seed: base_seed xor hash(k, trial).
pub fn trial_seed(base_seed: u64, k: usize, trial: usize) -> u64 {
    base_seed ^ mix64(((k as u64) << 32) ^ (trial as u64) ^ 0x7472_6961_6C73_6565)
}

/// Anything that can be run against a generated instance. The sparsity
/// target is taken from the instance itself.
pub trait TrialSolver: Sync {
    fn name(&self) -> &str;
    fn solve(&self, instance: &ProblemInstance) -> Result<SolveRun>;
}

/// Minimal per-trial outcome used by the harness.
#[derive(Clone, Debug)]
pub struct SolveRun {
    pub estimate: Vec<f64>,
    pub iterations: usize,
}

/// A named `SolverConfig` template; the sparsity field is replaced by
/// each instance's sparsity before solving, starting points are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfiguredSolver {
    pub label: String,
    pub config: SolverConfig,
}

impl ConfiguredSolver {
    pub fn new(label: impl Into<String>, config: SolverConfig) -> Self {
        Self { label: label.into(), config }
    }
}

impl TrialSolver for ConfiguredSolver {
    fn name(&self) -> &str {
        &self.label
    }

    fn solve(&self, instance: &ProblemInstance) -> Result<SolveRun> {
        let mut cfg = self.config.clone();
        cfg.sparsity = instance.sparsity;
        let trace = run_solver_from_zero(&instance.matrix, &instance.measurements, &cfg)?;
        Ok(SolveRun { estimate: trace.final_estimate, iterations: trace.iterations_used })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub m: usize,
    pub n: usize,
    pub k_values: Vec<usize>,
    pub trials_per_k: usize,
    pub regime: Regime,
    pub noise_level: f64,
    pub algorithms: Vec<ConfiguredSolver>,
    pub base_seed: u64,
    /// Worker threads; 1 means fully serial.
    pub jobs: usize,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one sparsity level".into()));
        }
        if self.k_values.iter().any(|&k| k == 0 || k > self.m) {
            return Err(Error::InvalidArgument("every sweep k must satisfy 1 <= k <= m".into()));
        }
        if self.trials_per_k == 0 {
            return Err(Error::InvalidArgument("trials_per_k must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one algorithm".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// Iterations used on success; the iteration budget on failure.
    pub iterations: usize,
    pub seconds: f64,
    /// Set when the solver returned an error instead of an estimate.
    pub error_flagged: bool,
}

/// Per-(algorithm, k) aggregate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub algorithm: String,
    pub k: usize,
    pub success_count: usize,
    pub trials: usize,
    /// Mean over all trials, failures counted at the iteration budget.
    pub mean_iterations: f64,
    /// Mean wall-clock seconds over successful trials; absent when none
    /// succeeded.
    pub mean_seconds: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn aggregates(&self, spec: &SweepSpec) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for solver in &spec.algorithms {
            for &k in &spec.k_values {
                let rows: Vec<&TrialRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.algorithm == solver.label && r.k == k)
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                let trials = rows.len();
                let success_count = rows.iter().filter(|r| r.success).count();
                let mean_iterations =
                    rows.iter().map(|r| r.iterations as f64).sum::<f64>() / trials as f64;
                let mean_seconds = if success_count > 0 {
                    Some(
                        rows.iter().filter(|r| r.success).map(|r| r.seconds).sum::<f64>()
                            / success_count as f64,
                    )
                } else {
                    None
                };
                cells.push(SweepCell {
                    algorithm: solver.label.clone(),
                    k,
                    success_count,
                    trials,
                    mean_iterations,
                    mean_seconds,
                });
            }
        }
        cells
    }

    pub fn success_rate(&self, algorithm: &str, k: usize) -> Option<f64> {
        let rows: Vec<&TrialRecord> =
            self.records.iter().filter(|r| r.algorithm == algorithm && r.k == k).collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64)
    }
}

fn run_cell(spec: &SweepSpec, k: usize, trial: usize) -> Vec<TrialRecord> {
    let seed = trial_seed(spec.base_seed, k, trial);
    let instance = match gaussian_instance(spec.m, spec.n, k, spec.regime, spec.noise_level, seed) {
        Ok(instance) => instance,
        Err(_) => {
            // Instance generation only fails on a malformed spec; mark
            // every algorithm's trial as a flagged failure.
            return spec
                .algorithms
                .iter()
                .map(|solver| TrialRecord {
                    algorithm: solver.label.clone(),
                    k,
                    trial,
                    seed,
                    success: false,
                    iterations: solver.config.max_iterations,
                    seconds: 0.0,
                    error_flagged: true,
                })
                .collect();
        }
    };
    spec.algorithms
        .iter()
        .map(|solver| {
            let started = Instant::now();
            let outcome = solver.solve(&instance);
            let seconds = started.elapsed().as_secs_f64();
            match outcome {
                Ok(run) => {
                    let success =
                        check_success(&run.estimate, &instance.true_signal).unwrap_or(false);
                    TrialRecord {
                        algorithm: solver.label.clone(),
                        k,
                        trial,
                        seed,
                        success,
                        iterations: if success {
                            run.iterations
                        } else {
                            solver.config.max_iterations
                        },
                        seconds,
                        error_flagged: false,
                    }
                }
                Err(_) => TrialRecord {
                    algorithm: solver.label.clone(),
                    k,
                    trial,
                    seed,
                    success: false,
                    iterations: solver.config.max_iterations,
                    seconds,
                    error_flagged: true,
                },
            }
        })
        .collect()
}

/// Runs `trials_per_k` seeded instances per sparsity level and times
/// each algorithm on them. All algorithms share the same instances.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for &k in &spec.k_values {
        for trial in 0..spec.trials_per_k {
            cells.push((k, trial));
        }
    }
    let jobs = spec.jobs.max(1);
    let nested: Vec<Vec<TrialRecord>> = if jobs == 1 {
        cells.iter().map(|&(k, t)| run_cell(spec, k, t)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        pool.install(|| cells.par_iter().map(|&(k, t)| run_cell(spec, k, t)).collect())
    };
    Ok(SweepResult { records: nested.into_iter().flatten().collect() })
}

/// CSV rows for persisted sweeps: one line per (algorithm, k, trial).
pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("algorithm,k,trial,seed,success,iterations,seconds\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.algorithm, r.k, r.trial, r.seed, r.success as u8, r.iterations, r.seconds
        );
    }
    out
}

/// The logistic success model g(rho) = 1 / (1 + exp(-gamma0 (1 - gamma1 rho))).
pub fn logistic_curve(rho: f64, gamma0: f64, gamma1: f64) -> f64 {
    let t = gamma0 * (1.0 - gamma1 * rho);
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PtcFit {
    pub gamma0: f64,
    pub gamma1: f64,
    /// The 50% transition point 1/gamma1; absent for degenerate fits.
    pub rho_half: Option<f64>,
    /// The (rho, success fraction) data behind the fit.
    pub points: Vec<(f64, f64)>,
    /// All fractions were equal; the parameters carry no information.
    pub degenerate: bool,
    /// No sparsity level reached a 90% success rate, so the fit ran on
    /// the coarse bisection probes instead of a transition-window grid.
    pub bisection_fallback: bool,
}

fn l1_objective(points: &[(f64, f64)], gamma0: f64, gamma1: f64) -> f64 {
    points.iter().map(|&(rho, frac)| (logistic_curve(rho, gamma0, gamma1) - frac).abs()).sum()
}

/// Derivative-free Nelder-Mead on a 2-d objective.
fn nelder_mead_2d(
    f: &impl Fn(f64, f64) -> f64,
    start: (f64, f64),
    scale: f64,
    max_evals: usize,
) -> ((f64, f64), f64) {
    let mut simplex = [
        (start, f(start.0, start.1)),
        ((start.0 + scale, start.1), f(start.0 + scale, start.1)),
        ((start.0, start.1 + scale.max(0.25)), f(start.0, start.1 + scale.max(0.25))),
    ];
    let mut evals = 3;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let [(best, fb), (mid, fm), (worst, fw)] = simplex;
        let spread = fw - fb;
        let diameter = ((best.0 - worst.0).abs()).max((best.1 - worst.1).abs());
        if spread <= 1e-13 && diameter <= 1e-10 {
            break;
        }
        let centroid = ((best.0 + mid.0) / 2.0, (best.1 + mid.1) / 2.0);
        let reflect = (2.0 * centroid.0 - worst.0, 2.0 * centroid.1 - worst.1);
        let fr = f(reflect.0, reflect.1);
        evals += 1;
        if fr < fb {
            let expand = (
                centroid.0 + 2.0 * (reflect.0 - centroid.0),
                centroid.1 + 2.0 * (reflect.1 - centroid.1),
            );
            let fe = f(expand.0, expand.1);
            evals += 1;
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < fm {
            simplex[2] = (reflect, fr);
        } else {
            let contract = (
                centroid.0 + 0.5 * (worst.0 - centroid.0),
                centroid.1 + 0.5 * (worst.1 - centroid.1),
            );
            let fc = f(contract.0, contract.1);
            evals += 1;
            if fc < fw {
                simplex[2] = (contract, fc);
            } else {
                // shrink toward the best vertex
                for slot in simplex.iter_mut().skip(1) {
                    let p =
                        (best.0 + 0.5 * (slot.0 .0 - best.0), best.1 + 0.5 * (slot.0 .1 - best.1));
                    *slot = (p, f(p.0, p.1));
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1)
}

/// Fits (gamma0, gamma1) by minimizing sum |g(rho_j) - frac_j| with
/// multi-start Nelder-Mead: gamma0 in {1, 4, 16}, gamma1 from the
/// reciprocal data quartiles.
pub fn fit_logistic(points: &[(f64, f64)]) -> Result<PtcFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "logistic fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(rho, frac) in points {
        if !rho.is_finite() || !frac.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&frac) {
            return Err(Error::InvalidArgument(format!(
                "bad fit point (rho={rho}, fraction={frac})"
            )));
        }
    }
    if points.iter().all(|&(_, f)| f == points[0].1) {
        return Ok(PtcFit {
            gamma0: 0.0,
            gamma1: 0.0,
            rho_half: None,
            points: points.to_vec(),
            degenerate: true,
            bisection_fallback: false,
        });
    }

    let mut rhos: Vec<f64> = points.iter().map(|&(r, _)| r).collect();
    rhos.sort_by(f64::total_cmp);
    let quartile = |q: f64| rhos[((rhos.len() - 1) as f64 * q).round() as usize];
    let objective = |g0: f64, g1: f64| l1_objective(points, g0, g1);

    let mut best = ((1.0, 1.0), f64::INFINITY);
    for &g0 in &[1.0, 4.0, 16.0] {
        for q in [0.25, 0.5, 0.75] {
            let anchor = quartile(q);
            if anchor <= 0.0 {
                continue;
            }
            let candidate = nelder_mead_2d(&objective, (g0, 1.0 / anchor), 0.5, 800);
            if candidate.1 < best.1 {
                best = candidate;
            }
        }
    }
    // One polishing restart from the incumbent with a tighter simplex.
    let polished = nelder_mead_2d(&objective, best.0, 0.02, 1200);
    if polished.1 < best.1 {
        best = polished;
    }

    let (gamma0, gamma1) = best.0;
    let rho_half = (gamma1 > 0.0).then(|| 1.0 / gamma1);
    Ok(PtcFit {
        gamma0,
        gamma1,
        rho_half,
        points: points.to_vec(),
        degenerate: false,
        bisection_fallback: false,
    })
}

/// Empirical success rate of `solver` at sparsity k over seeded trials.
#[allow(clippy::too_many_arguments)]
fn success_rate(
    solver: &dyn TrialSolver,
    m: usize,
    n: usize,
    k: usize,
    trials: usize,
    regime: Regime,
    noise_level: f64,
    base_seed: u64,
) -> f64 {
    let mut successes = 0usize;
    for trial in 0..trials {
        let seed = trial_seed(base_seed, k, trial);
        let ok = gaussian_instance(m, n, k, regime, noise_level, seed)
            .and_then(|inst| {
                let run = solver.solve(&inst)?;
                check_success(&run.estimate, &inst.true_signal)
            })
            .unwrap_or(false);
        successes += ok as usize;
    }
    successes as f64 / trials as f64
}

/// Phase-transition estimate for one solver at fixed (m, n).
///
/// Bisection over k locates the last k with success rate >= 90%
/// (k_min) and the first with rate <= 10% (k_max); a grid of at most 51
/// sparsity levels spanning [k_min, k_max] is then measured and fed to
/// the logistic fit. If no sparsity level reaches 90% the coarse probe
/// rates are fitted instead and the result is flagged.
#[allow(clippy::too_many_arguments)]
pub fn ptc_estimate(
    solver: &dyn TrialSolver,
    m: usize,
    n: usize,
    trials: usize,
    regime: Regime,
    noise_level: f64,
    base_seed: u64,
) -> Result<PtcFit> {
    if trials == 0 {
        return Err(Error::InvalidArgument("ptc_estimate needs trials >= 1".into()));
    }
    if m < 2 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "ptc_estimate needs 2 <= m < n, got m={m}, n={n}"
        )));
    }
    let mut cache: BTreeMap<usize, f64> = BTreeMap::new();
    let rate = |k: usize, cache: &mut BTreeMap<usize, f64>| -> f64 {
        *cache.entry(k).or_insert_with(|| {
            success_rate(solver, m, n, k, trials, regime, noise_level, base_seed)
        })
    };

    if rate(1, &mut cache) < 0.9 {
        // Probe a coarse ladder so the fallback fit has data.
        for k in [m / 4, m / 2, 3 * m / 4, m] {
            if k >= 1 {
                rate(k, &mut cache);
            }
        }
        let probes: Vec<(f64, f64)> =
            cache.iter().map(|(&k, &r)| (k as f64 / m as f64, r)).collect();
        let mut fit = if probes.len() >= 3 {
            fit_logistic(&probes)?
        } else {
            PtcFit {
                gamma0: 0.0,
                gamma1: 0.0,
                rho_half: None,
                points: probes,
                degenerate: true,
                bisection_fallback: true,
            }
        };
        fit.bisection_fallback = true;
        return Ok(fit);
    }

    // Largest k with rate >= 0.9.
    let mut lo = 1usize;
    let mut hi = m;
    if rate(m, &mut cache) >= 0.9 {
        lo = m;
    } else {
        while lo < hi - 1 {
            let mid = lo + (hi - lo) / 2;
            if rate(mid, &mut cache) >= 0.9 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let mut k_min = lo;

    // Smallest k > k_min with rate <= 0.1 (capped at m).
    let mut k_max = m;
    if rate(m, &mut cache) <= 0.1 {
        let mut lo = k_min;
        let mut hi = m;
        while lo < hi - 1 {
            let mid = lo + (hi - lo) / 2;
            if rate(mid, &mut cache) <= 0.1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        k_max = hi;
    }

    // The logistic fit needs at least three grid points.
    while k_max - k_min < 2 && (k_min > 1 || k_max < m) {
        k_min = k_min.saturating_sub(1).max(1);
        k_max = (k_max + 1).min(m);
    }

    let span = k_max - k_min;
    let j_count = span.min(50);
    let delta_k = span as f64 / j_count as f64;
    let mut grid: Vec<usize> =
        (0..=j_count).map(|j| k_min + (j as f64 * delta_k).ceil() as usize).collect();
    grid.dedup();

    let points: Vec<(f64, f64)> =
        grid.into_iter().map(|k| (k as f64 / m as f64, rate(k, &mut cache))).collect();
    fit_logistic(&points)
}

/// One sampled (delta, rho) cell of an algorithm selection map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionCell {
    pub delta: f64,
    pub rho: f64,
    pub m: usize,
    pub k: usize,
    /// Success rate of every algorithm still competing at this rho.
    pub success_rate: BTreeMap<String, f64>,
    /// Mean seconds over successful trials only.
    pub mean_seconds: BTreeMap<String, f64>,
    /// Fastest algorithm among those with >= 90% success.
    pub fastest_algorithm: Option<String>,
}

/// Times every algorithm over the sampled phase plane.
///
/// For each delta (m = ceil(delta n)) the rho grid is scanned upward;
/// an algorithm leaves the competition for the remaining rho values
/// once its success rate falls below 90%. Timing runs with
/// `timing_jobs` concurrent trials (default callers pass 1 so wall
/// clocks do not fight for cores).
#[allow(clippy::too_many_arguments)]
pub fn selection_map(
    delta_values: &[f64],
    rho_grid: &[f64],
    algorithms: &[&dyn TrialSolver],
    n: usize,
    trials: usize,
    regime: Regime,
    noise_level: f64,
    base_seed: u64,
    timing_jobs: usize,
) -> Result<Vec<SelectionCell>> {
    if delta_values.is_empty() || rho_grid.is_empty() {
        return Err(Error::InvalidArgument("selection map needs nonempty grids".into()));
    }
    if algorithms.is_empty() {
        return Err(Error::InvalidArgument("selection map needs at least one algorithm".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("selection map needs trials >= 1".into()));
    }
    let timing_jobs = timing_jobs.max(1);
    let mut cells = Vec::new();
    for &delta in delta_values {
        let m = ((delta * n as f64).ceil() as usize).clamp(1, n - 1);
        let cell_base = base_seed ^ mix64(m as u64 ^ 0x6D61_705F_6365_6C6C);
        let mut competing: Vec<usize> = (0..algorithms.len()).collect();
        let mut rhos: Vec<f64> = rho_grid.to_vec();
        rhos.sort_by(f64::total_cmp);
        for rho in rhos {
            if competing.is_empty() {
                break;
            }
            let k = (rho * m as f64).ceil() as usize;
            if k < 1 {
                continue;
            }
            if k > m {
                break;
            }
            let instances: Vec<ProblemInstance> = (0..trials)
                .map(|trial| {
                    gaussian_instance(m, n, k, regime, noise_level, trial_seed(cell_base, k, trial))
                })
                .collect::<Result<_>>()?;
            let mut cell = SelectionCell {
                delta,
                rho,
                m,
                k,
                success_rate: BTreeMap::new(),
                mean_seconds: BTreeMap::new(),
                fastest_algorithm: None,
            };
            let mut survivors: Vec<usize> = Vec::new();
            for &ai in &competing {
                let solver = algorithms[ai];
                let outcomes: Vec<(bool, f64)> = if timing_jobs == 1 {
                    instances.iter().map(|inst| timed_trial(solver, inst)).collect()
                } else {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(timing_jobs)
                        .build()
                        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
                    pool.install(|| {
                        instances.par_iter().map(|inst| timed_trial(solver, inst)).collect()
                    })
                };
                let successes = outcomes.iter().filter(|(ok, _)| *ok).count();
                let rate = successes as f64 / trials as f64;
                cell.success_rate.insert(solver.name().to_string(), rate);
                if successes > 0 {
                    let mean = outcomes.iter().filter(|(ok, _)| *ok).map(|(_, s)| s).sum::<f64>()
                        / successes as f64;
                    cell.mean_seconds.insert(solver.name().to_string(), mean);
                }
                if rate >= 0.9 {
                    survivors.push(ai);
                }
            }
            cell.fastest_algorithm = survivors
                .iter()
                .filter_map(|&ai| {
                    let name = algorithms[ai].name();
                    cell.mean_seconds.get(name).map(|&s| (s, name.to_string()))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
                .map(|(_, name)| name);
            competing = survivors;
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn timed_trial(solver: &dyn TrialSolver, instance: &ProblemInstance) -> (bool, f64) {
    let started = Instant::now();
    let outcome = solver.solve(instance);
    let seconds = started.elapsed().as_secs_f64();
    let ok = outcome
        .and_then(|run| check_success(&run.estimate, &instance.true_signal))
        .unwrap_or(false);
    (ok, seconds)
}

/// The 25 undersampling ratios used for phase-transition grids:
/// {0.02, 0.04, 0.06, 0.08} followed by [0.1, 0.99] in 20 equal parts.
pub fn delta_grid_paper() -> Vec<f64> {
    let mut grid = vec![0.02, 0.04, 0.06, 0.08];
    let step = 0.89 / 20.0;
    grid.extend((0..=20).map(|j| 0.1 + j as f64 * step));
    grid
}
