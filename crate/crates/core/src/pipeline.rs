//! End-to-end enhancement and evaluation on in-memory signals.
//!
//! Enhancement runs STFT → sliding mixture covariance → γ(f) normalization →
//! noise covariance from the chosen source → DP-MWF per bin → iSTFT. The
//! filter is applied to the unnormalized mixture; it is invariant to the
//! per-frequency scale, so normalization only affects conditioning.

use std::io::Write;

use serde::Serialize;

use crate::cholesky::{factorize, reconstruct, CholeskyField, FactorizeReport};
use crate::covariance::{
    averaging_frames, normalize_covariance, oracle_noise_covariance, scale_profile, sliding_covariance,
    CovarianceField, CovarianceKind, ScaleProfile,
};
use crate::error::{Error, Result};
use crate::filter::{apply_filter, build_filter_field, FilterField, FilterStats};
use crate::io::config::PipelineConfig;
use crate::metrics::{
    cholesky_loss, ds_beamform, field_similarity, field_similarity_detail, ild_error, noise_reduction, si_sdr,
    SimilarityReport, SteeringGrid,
};
use crate::scene::ArrayGeometry;
use crate::stft::{analyze, synthesize, MultichannelSpectrogram};

/// Where the noise covariance for the filter comes from.
#[derive(Debug, Clone, Copy)]
pub enum NoiseCovarianceSource<'a> {
    /// Noise-only signal aligned with the mixture; its sliding covariance is
    /// normalized by the mixture's γ(f).
    Oracle(&'a [Vec<f64>]),
    /// Cholesky field already in the scale-normalized domain.
    Estimate(&'a CholeskyField),
}

impl NoiseCovarianceSource<'_> {
    fn label(&self) -> &'static str {
        match self {
            Self::Oracle(_) => "oracle",
            Self::Estimate(_) => "interchange",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnhanceReport {
    pub noise_source: &'static str,
    pub channels: usize,
    pub frames: usize,
    pub bins: usize,
    pub averaging_frames: usize,
    pub gamma_floored_bins: usize,
    pub filter: FilterStats,
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub enhanced: Vec<Vec<f64>>,
    pub filter: FilterField,
    pub profile: ScaleProfile,
    /// Scale-normalized noise covariance the filter was built from.
    pub noise_covariance: CovarianceField,
    pub report: EnhanceReport,
}

pub(crate) fn check_aligned(what: &'static str, reference: &[Vec<f64>], other: &[Vec<f64>]) -> Result<()> {
    if other.len() != reference.len() {
        return Err(Error::mismatch(what, reference.len(), other.len()));
    }
    let n = reference.first().map_or(0, Vec::len);
    if let Some(bad) = other.iter().find(|c| c.len() != n) {
        return Err(Error::mismatch(what, n, bad.len()));
    }
    Ok(())
}

fn check_estimate(field: &CholeskyField, spec: &MultichannelSpectrogram) -> Result<()> {
    if field.channels() != spec.channels() {
        return Err(Error::mismatch("estimate channels", spec.channels(), field.channels()));
    }
    if field.bins() != spec.bins() {
        return Err(Error::mismatch("estimate frequency bins", spec.bins(), field.bins()));
    }
    if field.frames() != spec.frames() {
        return Err(Error::mismatch("estimate frames", spec.frames(), field.frames()));
    }
    Ok(())
}

/// Scale-normalized oracle noise covariance for a mixture/noise pair.
fn normalized_oracle(
    x: &MultichannelSpectrogram,
    noise: &[Vec<f64>],
    profile: &ScaleProfile,
    config: &PipelineConfig,
) -> Result<CovarianceField> {
    let n = analyze(noise, &config.stft)?;
    x.check_same_shape(&n)?;
    normalize_covariance(&oracle_noise_covariance(&n, config.filter.window_ms)?, profile)
}

/// Runs the DP-MWF on `mixture` (`M × N`).
pub fn enhance(mixture: &[Vec<f64>], source: NoiseCovarianceSource<'_>, config: &PipelineConfig) -> Result<Enhanced> {
    config.validate()?;
    let x = analyze(mixture, &config.stft)?;
    let rxx = sliding_covariance(&x, config.filter.window_ms)?;
    let profile = scale_profile(&rxx);
    let rxx_n = normalize_covariance(&rxx, &profile)?;
    let rnn_n = match source {
        NoiseCovarianceSource::Oracle(noise) => {
            check_aligned("noise signal", mixture, noise)?;
            normalized_oracle(&x, noise, &profile, config)?
        }
        NoiseCovarianceSource::Estimate(field) => {
            check_estimate(field, &x)?;
            reconstruct(field)
        }
    };
    let filter = build_filter_field(&rxx_n, &rnn_n, &config.filter)?;
    let y = apply_filter(&filter, &x)?;
    let enhanced = synthesize(&y)?;
    if enhanced.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("enhanced signal is not finite".into()));
    }
    let report = EnhanceReport {
        noise_source: source.label(),
        channels: x.channels(),
        frames: x.frames(),
        bins: x.bins(),
        averaging_frames: averaging_frames(config.filter.window_ms, &config.stft),
        gamma_floored_bins: profile.floored_bins(),
        filter: filter.stats().clone(),
    };
    Ok(Enhanced {
        enhanced,
        filter,
        profile,
        noise_covariance: rnn_n,
        report,
    })
}

/// Cholesky field of the scale-normalized oracle noise covariance, the form
/// an external estimator is expected to produce.
pub fn oracle_cholesky(
    mixture: &[Vec<f64>],
    noise: &[Vec<f64>],
    config: &PipelineConfig,
) -> Result<(CholeskyField, FactorizeReport)> {
    config.validate()?;
    check_aligned("noise signal", mixture, noise)?;
    let x = analyze(mixture, &config.stft)?;
    let profile = scale_profile(&sliding_covariance(&x, config.filter.window_ms)?);
    let rnn = normalized_oracle(&x, noise, &profile, config)?.tagged(CovarianceKind::Noise);
    factorize(&rnn, config.epsilon)
}

/// Signals and side information for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct EvaluationInputs<'a> {
    pub enhanced: &'a [Vec<f64>],
    pub clean: &'a [Vec<f64>],
    pub noise: &'a [Vec<f64>],
    /// Noise-covariance estimate the enhanced signal was produced with.
    /// Without one, the filter is re-derived from the oracle noise.
    pub estimate: Option<&'a CholeskyField>,
    pub geometry: &'a ArrayGeometry,
    /// Target direction for the delay-and-sum metric.
    pub target_azimuth_deg: Option<f64>,
}

/// One row of the metric table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub system: String,
    pub si_sdr_db: f64,
    pub nr_db: f64,
    pub cov_sim: Option<f64>,
    pub speech_sim: f64,
    pub noise_sim: f64,
    pub chol_loss: Option<f64>,
    pub ild_error_db: Option<f64>,
    pub ds_si_sdr_db: Option<f64>,
    pub similarity: SimilarityReport,
}

pub const CSV_HEADER: &str = "system,si_sdr_db,nr_db,cov_sim,speech_sim,noise_sim,chol_loss,ild_error_db,ds_si_sdr_db";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

impl MetricRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.system,
            self.si_sdr_db,
            self.nr_db,
            opt(self.cov_sim),
            self.speech_sim,
            self.noise_sim,
            opt(self.chol_loss),
            opt(self.ild_error_db),
            opt(self.ds_si_sdr_db)
        )
    }
}

pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

fn ds_si_sdr(
    y: &MultichannelSpectrogram,
    s: &MultichannelSpectrogram,
    grid: &SteeringGrid,
    azimuth: f64,
) -> Result<f64> {
    let ys = synthesize(&ds_beamform(y, azimuth, grid)?)?;
    let ss = synthesize(&ds_beamform(s, azimuth, grid)?)?;
    si_sdr(&ys, &ss)
}

/// Metric rows for the enhanced signal and the unprocessed mixture
/// (`clean + noise`).
pub fn evaluate(inputs: &EvaluationInputs<'_>, config: &PipelineConfig) -> Result<Vec<MetricRow>> {
    config.validate()?;
    let EvaluationInputs {
        enhanced, clean, noise, ..
    } = *inputs;
    check_aligned("clean signal", enhanced, clean)?;
    check_aligned("noise signal", enhanced, noise)?;
    let mixture: Vec<Vec<f64>> = clean
        .iter()
        .zip(noise)
        .map(|(s, n)| s.iter().zip(n).map(|(a, b)| a + b).collect())
        .collect();

    let oracle = enhance(&mixture, NoiseCovarianceSource::Oracle(noise), config)?;
    let (filter, cov_sim, chol_loss) = match inputs.estimate {
        Some(est) => {
            let run = enhance(&mixture, NoiseCovarianceSource::Estimate(est), config)?;
            let sim = field_similarity(&run.noise_covariance, &oracle.noise_covariance)?;
            let (reference, _) = factorize(&oracle.noise_covariance, est.diag_floor())?;
            (run.filter, Some(sim), Some(cholesky_loss(est, &reference)?))
        }
        None => (oracle.filter, None, None),
    };

    let window = config.filter.window_ms;
    let stft = &config.stft;
    let y_spec = analyze(enhanced, stft)?;
    let x_spec = analyze(&mixture, stft)?;
    let s_spec = analyze(clean, stft)?;
    let n_spec = analyze(noise, stft)?;
    let rss = sliding_covariance(&s_spec, window)?;
    let rnn = sliding_covariance(&n_spec, window)?;
    let filtered_noise = sliding_covariance(&apply_filter(&filter, &n_spec)?, window)?;

    let spatial = inputs.geometry.len() == enhanced.len();
    let grid = if spatial {
        Some(SteeringGrid::uniform(1.0, stft, inputs.geometry.clone())?)
    } else {
        None
    };
    let lateral = spatial.then(|| inputs.geometry.lateral_pair());

    let mut rows = Vec::with_capacity(2);
    for (system, y, spec, nr, noise_field, est) in [
        (
            "enhanced",
            enhanced,
            &y_spec,
            noise_reduction(&filter, &n_spec)?,
            &filtered_noise,
            true,
        ),
        ("unprocessed", &mixture[..], &x_spec, 0.0, &rnn, false),
    ] {
        let ryy = sliding_covariance(spec, window)?;
        let speech = field_similarity_detail(&ryy, &rss)?;
        let noise_sim = field_similarity(noise_field, &rnn)?;
        let ild = match lateral {
            Some((l, r)) => Some(ild_error((&y[l], &y[r]), (&clean[l], &clean[r]))?),
            None => None,
        };
        let ds = match (&grid, inputs.target_azimuth_deg) {
            (Some(g), Some(az)) => Some(ds_si_sdr(spec, &s_spec, g, az)?),
            _ => None,
        };
        let cov = if est { cov_sim } else { None };
        rows.push(MetricRow {
            system: system.to_string(),
            si_sdr_db: si_sdr(y, clean)?,
            nr_db: nr,
            cov_sim: cov,
            speech_sim: speech.mean,
            noise_sim,
            chol_loss: if est { chol_loss } else { None },
            ild_error_db: ild,
            ds_si_sdr_db: ds,
            similarity: SimilarityReport {
                cov_sim: cov,
                speech_sim: speech.mean,
                noise_sim,
                evaluated_bin_count: speech.evaluated,
                skipped_bin_count: speech.skipped,
            },
        });
    }
    Ok(rows)
}
