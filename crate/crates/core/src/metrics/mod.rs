//! Evaluation quantities for multichannel enhancement.
//!
//! Level metrics (SI-SDR, noise reduction) are reported in dB and clamped to
//! ±[`DB_CLAMP`] so that perfect reconstructions stay finite.

mod spatial;

pub use spatial::{ds_beamform, srp_map, steering_vector, SrpMap, SteeringGrid};

use crate::cholesky::CholeskyField;
use crate::covariance::CovarianceField;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, FilterField};
use crate::linalg::CMatrix;
use crate::stft::MultichannelSpectrogram;

pub const DB_CLAMP: f64 = 200.0;

/// Matrices with a smaller Frobenius norm are left out of similarity and
/// Cholesky-loss averages.
pub const NORM_FLOOR: f64 = 1e-12;

/// Default weight of the Cholesky term in the combined loss.
pub const LAMBDA_CHOL: f64 = 10.0;

fn db(ratio_num: f64, ratio_den: f64) -> f64 {
    if ratio_den <= 0.0 {
        return DB_CLAMP;
    }
    if ratio_num <= 0.0 {
        return -DB_CLAMP;
    }
    (10.0 * (ratio_num / ratio_den).log10()).clamp(-DB_CLAMP, DB_CLAMP)
}

fn check_pair(y: &[Vec<f64>], s: &[Vec<f64>]) -> Result<()> {
    if y.len() != s.len() {
        return Err(Error::mismatch("channel count", s.len(), y.len()));
    }
    for (a, b) in y.iter().zip(s) {
        if a.len() != b.len() {
            return Err(Error::mismatch("signal length", b.len(), a.len()));
        }
    }
    Ok(())
}

/// One scaling factor for all channels: `α = Σ yᵀs / Σ sᵀs`.
pub fn shared_alpha(y: &[Vec<f64>], s: &[Vec<f64>]) -> Result<f64> {
    check_pair(y, s)?;
    let mut cross = 0.0;
    let mut energy = 0.0;
    for (yc, sc) in y.iter().zip(s) {
        for (a, b) in yc.iter().zip(sc) {
            cross += a * b;
            energy += b * b;
        }
    }
    if !(energy > 0.0) {
        return Err(Error::InvalidInput("SI-SDR reference has zero energy".into()));
    }
    Ok(cross / energy)
}

/// Multichannel SI-SDR in dB with a shared scaling factor.
pub fn si_sdr(y: &[Vec<f64>], s: &[Vec<f64>]) -> Result<f64> {
    let alpha = shared_alpha(y, s)?;
    let mut target = 0.0;
    let mut residual = 0.0;
    for (yc, sc) in y.iter().zip(s) {
        for (a, b) in yc.iter().zip(sc) {
            let t = alpha * b;
            target += t * t;
            residual += (a - t) * (a - t);
        }
    }
    Ok(db(target, residual))
}

/// Mean over bins of `‖L̂ − L‖_F / ‖L‖_F`, plus the number of skipped bins.
pub fn cholesky_loss_detail(estimate: &CholeskyField, reference: &CholeskyField) -> Result<(f64, usize)> {
    if estimate.channels() != reference.channels() {
        return Err(Error::mismatch(
            "channel count",
            reference.channels(),
            estimate.channels(),
        ));
    }
    if estimate.matrices().len() != reference.matrices().len() {
        return Err(Error::mismatch(
            "cholesky bins",
            reference.matrices().len(),
            estimate.matrices().len(),
        ));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (lh, l) in estimate.matrices().iter().zip(reference.matrices()) {
        let norm = l.frobenius_norm();
        if norm < NORM_FLOOR {
            skipped += 1;
            continue;
        }
        sum += (lh - l).frobenius_norm() / norm;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidInput("every reference Cholesky bin is zero".into()));
    }
    Ok((sum / used as f64, skipped))
}

/// Normalized Frobenius loss between Cholesky fields.
pub fn cholesky_loss(estimate: &CholeskyField, reference: &CholeskyField) -> Result<f64> {
    cholesky_loss_detail(estimate, reference).map(|(v, _)| v)
}

/// Training objective `−SI-SDR + λ · L_chol`.
pub fn combined_loss(si_sdr_db: f64, chol: f64, lambda: f64) -> f64 {
    -si_sdr_db + lambda * chol
}

/// `10 log₁₀(Σ‖n‖² / Σ‖W n‖²)` over all bins.
pub fn noise_reduction(w: &FilterField, noise: &MultichannelSpectrogram) -> Result<f64> {
    let filtered = apply_filter(w, noise)?;
    let input: f64 = noise.data().iter().map(|v| v.norm_sqr()).sum();
    if !(input > 0.0) {
        return Err(Error::InvalidInput("noise-only signal has zero energy".into()));
    }
    let output: f64 = filtered.data().iter().map(|v| v.norm_sqr()).sum();
    Ok(db(input, output))
}

/// Cosine similarity `Re tr(R₁ᴴ R₂) / (‖R₁‖_F ‖R₂‖_F)` of vectorized matrices.
pub fn cosine_sim(r1: &CMatrix, r2: &CMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::mismatch("matrix dimension", r1.dim(), r2.dim()));
    }
    let (n1, n2) = (r1.frobenius_norm(), r2.frobenius_norm());
    if n1 < NORM_FLOOR || n2 < NORM_FLOOR {
        return Err(Error::InvalidInput("cosine similarity of a zero matrix".into()));
    }
    // tr(R₁ᴴ R₂) = Σᵢⱼ conj(R₁ᵢⱼ) R₂ᵢⱼ
    let inner: f64 = r1
        .as_slice()
        .iter()
        .zip(r2.as_slice())
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    Ok(inner / (n1 * n2))
}

/// Mean cosine similarity over the bins where both matrices are nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSimilarity {
    pub mean: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

pub fn field_similarity_detail(a: &CovarianceField, b: &CovarianceField) -> Result<FieldSimilarity> {
    a.check_same_shape(b)?;
    let mut sum = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for (r1, r2) in a.matrices().iter().zip(b.matrices()) {
        match cosine_sim(r1, r2) {
            Ok(s) => {
                sum += s;
                evaluated += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    if evaluated == 0 {
        return Err(Error::InvalidInput("no bins left to compare".into()));
    }
    Ok(FieldSimilarity {
        mean: sum / evaluated as f64,
        evaluated,
        skipped,
    })
}

/// Average of [`cosine_sim`] over all comparable bins.
pub fn field_similarity(a: &CovarianceField, b: &CovarianceField) -> Result<f64> {
    field_similarity_detail(a, b).map(|s| s.mean)
}

/// The three spatial similarity figures for one system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityReport {
    /// Estimated vs. oracle noise covariance, when an estimate exists.
    pub cov_sim: Option<f64>,
    /// Output covariance vs. clean speech covariance.
    pub speech_sim: f64,
    /// Filtered noise covariance vs. input noise covariance.
    pub noise_sim: f64,
    pub evaluated_bin_count: usize,
    pub skipped_bin_count: usize,
}

/// Interaural level difference `10 log₁₀(Σ y_L² / Σ y_R²)`.
pub fn ild(left: &[f64], right: &[f64]) -> Result<f64> {
    let el: f64 = left.iter().map(|v| v * v).sum();
    let er: f64 = right.iter().map(|v| v * v).sum();
    if !(el > 0.0) || !(er > 0.0) {
        return Err(Error::InvalidInput("ILD of a zero-energy channel".into()));
    }
    Ok(10.0 * (el / er).log10())
}

/// `|ILD(estimate) − ILD(reference)|` for (left, right) pairs.
pub fn ild_error(estimate: (&[f64], &[f64]), reference: (&[f64], &[f64])) -> Result<f64> {
    Ok((ild(estimate.0, estimate.1)? - ild(reference.0, reference.1)?).abs())
}
