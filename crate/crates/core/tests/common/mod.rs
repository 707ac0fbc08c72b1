//! Shared helpers for the integration suites: low-coherence frame
//! generation (so the RIP hypotheses are actually satisfiable at tiny
//! sizes), sparse test signals, and admissible (alpha, beta) picks.

use nalgebra::{DMatrix, SymmetricEigen};

use hbthresh::linalg::DenseMatrix;
use hbthresh::rng::SplitMix64;
use hbthresh::theory::{eta_constant, hbht_delta3k_threshold, hbhtp_delta3k_threshold};

fn normalize_columns(a: &mut DMatrix<f64>) {
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// Unit-norm frame with near-minimal coherence, via alternating
/// projection between the clipped Gram set and the rank-m factorizable
/// set. Deterministic in the seed.
///
/// Random Gaussian columns at these tiny sizes have restricted isometry
/// constants well above every guarantee threshold, so certified
/// instances have to come from packed frames like these.
pub fn packed_frame(m: usize, n: usize, rounds: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut a = DMatrix::from_fn(m, n, |_, _| rng.next_gaussian());
    normalize_columns(&mut a);
    let mu = ((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt();
    for _ in 0..rounds {
        let mut gram = a.transpose() * &a;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    gram[(i, j)] = 1.0;
                } else {
                    gram[(i, j)] = gram[(i, j)].clamp(-mu, mu);
                }
            }
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let mut next = DMatrix::zeros(m, n);
        for (row, &ei) in order.iter().take(m).enumerate() {
            let weight = eig.eigenvalues[ei].max(0.0).sqrt();
            for col in 0..n {
                next[(row, col)] = weight * eig.eigenvectors[(col, ei)];
            }
        }
        a = next;
        normalize_columns(&mut a);
    }
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            data.push(a[(i, j)]);
        }
    }
    DenseMatrix::from_vec(m, n, data).expect("packed frame entries are finite")
}

/// Exactly k-sparse Gaussian signal on a uniform support.
pub fn sparse_signal(n: usize, k: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for idx in rng.subset(n, k) {
        let mut v = rng.next_gaussian();
        while v == 0.0 {
            v = rng.next_gaussian();
        }
        x[idx] = v;
    }
    x
}

/// k-sparse signal whose nonzero magnitudes stay above `floor`, so the
/// recovered support is stable under small measurement noise.
pub fn sparse_signal_floored(n: usize, k: usize, floor: f64, rng: &mut SplitMix64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for idx in rng.subset(n, k) {
        let g = rng.next_gaussian();
        x[idx] = g.signum() * (floor + g.abs());
    }
    x
}

/// Midpoint-of-window (alpha, beta) satisfying the HBHT guarantee for
/// the given delta_3k, when the window is nonempty.
pub fn hbht_params_for(delta3k: f64) -> Option<(f64, f64)> {
    if delta3k >= hbht_delta3k_threshold() {
        return None;
    }
    let eta = eta_constant();
    let beta = 0.5 * (eta / (1.0 + delta3k) - 1.0);
    let lower = (2.0 * (1.0 + beta) - eta) / (1.0 - delta3k);
    let upper = eta / (1.0 + delta3k);
    (lower < upper).then_some((0.5 * (lower + upper), beta))
}

/// Midpoint-of-window (alpha, beta) satisfying the HBHTP guarantee.
pub fn hbhtp_params_for(delta3k: f64, delta2k: f64) -> Option<(f64, f64)> {
    if delta3k >= hbhtp_delta3k_threshold() {
        return None;
    }
    let eta_hat = 2.0_f64.sqrt() / (1.0 - delta2k * delta2k).sqrt();
    let inv = 1.0 / eta_hat;
    let beta = 0.5 * ((inv + 1.0) / (1.0 + delta3k) - 1.0);
    if beta < 0.0 {
        return None;
    }
    let lower = (1.0 + 2.0 * beta - inv) / (1.0 - delta3k);
    let upper = (inv + 1.0) / (1.0 + delta3k);
    (lower < upper).then_some((0.5 * (lower + upper), beta))
}

/// A packed frame together with its exact restricted isometry constants
/// at orders k, 2k, and 3k.
pub struct CertifiedFrame {
    pub frame: DenseMatrix,
    pub delta_k: f64,
    pub delta_2k: f64,
    pub delta_3k: f64,
    pub seed: u64,
}

/// Packs `count` frames and measures their exact order-k/2k/3k
/// constants by full enumeration. Runs the frames in parallel.
pub fn measured_frames(
    m: usize,
    n: usize,
    k: usize,
    count: usize,
    seed0: u64,
) -> Vec<CertifiedFrame> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|rep| {
            let seed = seed0 + rep as u64;
            let frame = packed_frame(m, n, 700, seed);
            let exact = |order: usize| {
                let est = hbthresh::theory::brute_force_ric(&frame, order, 500_000)
                    .expect("ric within range");
                assert!(matches!(est.method, hbthresh::theory::RicMethod::ExactBruteForce));
                est.delta
            };
            CertifiedFrame {
                delta_k: exact(k),
                delta_2k: exact(2 * k),
                delta_3k: exact(3 * k),
                frame,
                seed,
            }
        })
        .collect()
}
