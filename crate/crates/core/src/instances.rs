//! Seeded generation of random recovery problems.
//!
//! An instance is a Gaussian measurement matrix, a k-sparse Gaussian
//! signal, and measurements y = A x + eps h. Everything derives
//! deterministically from a single 64-bit seed: the matrix, the signal
//! support, the signal values, and the noise come from four fixed
//! sub-streams, so changing the noise level never changes A or x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{derive_stream, SplitMix64};

/// Matrix entry scaling: N(0,1) entries or N(0,1/m) entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Unnormalized,
    Normalized,
}

impl Regime {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "unnormalized" | "unnorm" => Ok(Regime::Unnormalized),
            "normalized" | "norm" => Ok(Regime::Normalized),
            other => Err(Error::Parse(format!("unknown regime '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Unnormalized => "unnormalized",
            Regime::Normalized => "normalized",
        }
    }
}

/// Sub-stream ids feeding `derive_stream`.
const STREAM_MATRIX: u64 = 0;
const STREAM_SUPPORT: u64 = 1;
const STREAM_VALUES: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub matrix: DenseMatrix,
    /// The k-sparse signal the measurements were taken from.
    pub true_signal: Vec<f64>,
    /// y = A x + noise_level * h.
    pub measurements: Vec<f64>,
    pub sparsity: usize,
    pub noise_level: f64,
    pub regime: Regime,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

/// Draws an m x n Gaussian instance with a k-sparse Gaussian signal.
///
/// Unnormalized entries are N(0,1); normalized entries are N(0,1/m).
/// Nonzero signal positions are a uniform k-subset, values are N(0,1),
/// and the noise vector h is standard Gaussian scaled by `noise_level`.
pub fn gaussian_instance(
    m: usize,
    n: usize,
    k: usize,
    regime: Regime,
    noise_level: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if k == 0 || k > m || m >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= m < n, got k={k}, m={m}, n={n}"
        )));
    }
    if noise_level < 0.0 || !noise_level.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise level must be finite and >= 0, got {noise_level}"
        )));
    }

    let mut matrix_rng = SplitMix64::new(derive_stream(seed, STREAM_MATRIX));
    let scale = match regime {
        Regime::Unnormalized => 1.0,
        Regime::Normalized => 1.0 / (m as f64).sqrt(),
    };
    let mut entries = vec![0.0; m * n];
    for slot in entries.iter_mut() {
        *slot = scale * matrix_rng.next_gaussian();
    }
    let matrix = DenseMatrix::from_vec(m, n, entries)?;

    let mut support_rng = SplitMix64::new(derive_stream(seed, STREAM_SUPPORT));
    let positions = support_rng.subset(n, k);

    let mut value_rng = SplitMix64::new(derive_stream(seed, STREAM_VALUES));
    let mut true_signal = vec![0.0; n];
    for &pos in &positions {
        true_signal[pos] = value_rng.next_gaussian();
    }

    let mut measurements = matrix.matvec(&true_signal)?;
    if noise_level > 0.0 {
        let mut noise_rng = SplitMix64::new(derive_stream(seed, STREAM_NOISE));
        for slot in measurements.iter_mut() {
            *slot += noise_level * noise_rng.next_gaussian();
        }
    }

    Ok(ProblemInstance {
        matrix,
        true_signal,
        measurements,
        sparsity: k,
        noise_level,
        regime,
        seed,
    })
}

/// Rescales (A, y) to (A/sqrt(m), y/sqrt(m)).
///
/// The least-squares objective over any support is scaled by 1/sqrt(m),
/// so minimizers are unchanged. Applying it twice divides by m, not by
/// sqrt(m); the operation is not idempotent.
pub fn normalize_pair(a: &DenseMatrix, y: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "normalize_pair: matrix has {} rows, vector has length {}",
            a.rows(),
            y.len()
        )));
    }
    let factor = 1.0 / (a.rows() as f64).sqrt();
    Ok((a.scale(factor), y.iter().map(|x| x * factor).collect()))
}

/// Serialized form of an instance. Arrays are optional: without them the
/// instance is re-derived from the seed, with them it is taken verbatim
/// (useful for cross-language verification).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub m: usize,
    pub n: usize,
    pub sparsity: usize,
    pub regime: Regime,
    pub noise_level: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_signal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurements: Option<Vec<f64>>,
}

impl InstanceDocument {
    pub fn from_instance(inst: &ProblemInstance, include_arrays: bool) -> Self {
        Self {
            m: inst.rows(),
            n: inst.cols(),
            sparsity: inst.sparsity,
            regime: inst.regime,
            noise_level: inst.noise_level,
            seed: inst.seed,
            matrix: include_arrays.then(|| inst.matrix.data().to_vec()),
            true_signal: include_arrays.then(|| inst.true_signal.clone()),
            measurements: include_arrays.then(|| inst.measurements.clone()),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        match (self.matrix, self.true_signal, self.measurements) {
            (Some(matrix), Some(signal), Some(measurements)) => {
                if signal.len() != self.n || measurements.len() != self.m {
                    return Err(Error::DimensionMismatch(
                        "instance arrays disagree with declared dimensions".into(),
                    ));
                }
                Ok(ProblemInstance {
                    matrix: DenseMatrix::from_vec(self.m, self.n, matrix)?,
                    true_signal: signal,
                    measurements,
                    sparsity: self.sparsity,
                    noise_level: self.noise_level,
                    regime: self.regime,
                    seed: self.seed,
                })
            }
            (None, None, None) => gaussian_instance(
                self.m,
                self.n,
                self.sparsity,
                self.regime,
                self.noise_level,
                self.seed,
            ),
            _ => Err(Error::Parse(
                "instance document must carry either all realized arrays or none".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, sub};

    #[test]
    fn noiseless_measurements_are_exact_product() {
        let inst = gaussian_instance(6, 12, 2, Regime::Normalized, 0.0, 11).unwrap();
        let prod = inst.matrix.matvec(&inst.true_signal).unwrap();
        assert_eq!(prod, inst.measurements);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = gaussian_instance(5, 10, 2, Regime::Unnormalized, 0.01, 77).unwrap();
        let b = gaussian_instance(5, 10, 2, Regime::Unnormalized, 0.01, 77).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.true_signal, b.true_signal);
        assert_eq!(a.measurements, b.measurements);
    }

    #[test]
    fn noise_level_does_not_touch_matrix_or_signal() {
        let quiet = gaussian_instance(5, 10, 2, Regime::Normalized, 0.0, 3).unwrap();
        let noisy = gaussian_instance(5, 10, 2, Regime::Normalized, 0.5, 3).unwrap();
        assert_eq!(quiet.matrix, noisy.matrix);
        assert_eq!(quiet.true_signal, noisy.true_signal);
        assert_ne!(quiet.measurements, noisy.measurements);
    }

    #[test]
    fn signal_has_exactly_k_nonzeros() {
        for seed in 0..50 {
            let inst = gaussian_instance(8, 20, 3, Regime::Normalized, 0.0, seed).unwrap();
            let nz = inst.true_signal.iter().filter(|&&x| x != 0.0).count();
            assert_eq!(nz, 3);
        }
    }

    #[test]
    fn normalized_entry_variance_matches_law() {
        // One 400x800 draw: sample variance within 10% of 1/400.
        let inst = gaussian_instance(400, 800, 1, Regime::Normalized, 0.0, 123).unwrap();
        let data = inst.matrix.data();
        let mean: f64 = data.iter().sum::<f64>() / data.len() as f64;
        let var: f64 =
            data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / data.len() as f64;
        let expected = 1.0 / 400.0;
        assert!((var - expected).abs() < 0.1 * expected, "variance {var} vs expected {expected}");
    }

    #[test]
    fn support_positions_are_uniform() {
        // Chi-square goodness of fit over all C(10,2)=45 supports,
        // 10_000 draws, significance 0.001 (critical value 78.7495 at
        // 44 degrees of freedom).
        let n = 10;
        let k = 2;
        let draws = 10_000;
        let mut counts = std::collections::HashMap::new();
        for seed in 0..draws {
            let inst =
                gaussian_instance(4, n, k, Regime::Normalized, 0.0, 1_000_000 + seed).unwrap();
            let support: Vec<usize> = inst
                .true_signal
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, _)| i)
                .collect();
            *counts.entry(support).or_insert(0usize) += 1;
        }
        let categories = 45.0;
        let expected = draws as f64 / categories;
        assert_eq!(counts.len(), 45, "some support never drawn");
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 78.7495, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn normalize_pair_scales_by_sqrt_m() {
        let a = DenseMatrix::from_vec(4, 2, vec![2.0; 8]).unwrap();
        let y = vec![4.0; 4];
        let (an, yn) = normalize_pair(&a, &y).unwrap();
        assert!(an.data().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(yn.iter().all(|&x| (x - 2.0).abs() < 1e-15));
    }

    #[test]
    fn normalize_pair_preserves_objective_ranking() {
        let inst = gaussian_instance(6, 12, 2, Regime::Unnormalized, 0.0, 5).unwrap();
        let (an, yn) = normalize_pair(&inst.matrix, &inst.measurements).unwrap();
        let scale = (6.0_f64).sqrt();
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let z: Vec<f64> = (0..12).map(|_| rng.next_gaussian()).collect();
            let before = norm2(&sub(&inst.measurements, &inst.matrix.matvec(&z).unwrap()));
            let after = norm2(&sub(&yn, &an.matvec(&z).unwrap()));
            assert!((after * scale - before).abs() <= 1e-12 * (1.0 + before));
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(gaussian_instance(5, 10, 0, Regime::Normalized, 0.0, 1).is_err());
        assert!(gaussian_instance(5, 10, 6, Regime::Normalized, 0.0, 1).is_err());
        assert!(gaussian_instance(10, 10, 2, Regime::Normalized, 0.0, 1).is_err());
        assert!(gaussian_instance(5, 10, 2, Regime::Normalized, -0.1, 1).is_err());
    }

    #[test]
    fn document_round_trip_with_and_without_arrays() {
        let inst = gaussian_instance(5, 10, 2, Regime::Normalized, 0.008, 9).unwrap();
        let with = InstanceDocument::from_instance(&inst, true);
        let text = serde_json::to_string(&with).unwrap();
        let parsed: InstanceDocument = serde_json::from_str(&text).unwrap();
        let back = parsed.into_instance().unwrap();
        assert_eq!(back.measurements, inst.measurements);

        let without = InstanceDocument::from_instance(&inst, false);
        let regenerated = without.into_instance().unwrap();
        assert_eq!(regenerated.measurements, inst.measurements);
    }
}
