//! Spatial covariance fields: causal sliding-window estimates and the
//! per-frequency scale normalization applied before filtering.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::stft::{MultichannelSpectrogram, StftConfig};

/// Floor applied to γ(f) for bins with no energy at all.
pub const GAMMA_FLOOR: f64 = 1e-12;

/// What a covariance field describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    Mixture,
    Noise,
    Speech,
    Output,
    FilteredNoise,
}

/// T×F grid of M×M Hermitian PSD matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceField {
    frames: usize,
    bins: usize,
    channels: usize,
    kind: CovarianceKind,
    data: Vec<CMatrix>,
}

impl CovarianceField {
    /// Wraps frame-major matrices (`t`, then `f`).
    pub fn from_matrices(
        frames: usize,
        bins: usize,
        channels: usize,
        kind: CovarianceKind,
        data: Vec<CMatrix>,
    ) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::mismatch("covariance bins", frames * bins, data.len()));
        }
        if let Some(m) = data.iter().find(|m| m.dim() != channels) {
            return Err(Error::mismatch("covariance dimension", channels, m.dim()));
        }
        Ok(Self {
            frames,
            bins,
            channels,
            kind,
            data,
        })
    }

    pub fn zeros(frames: usize, bins: usize, channels: usize, kind: CovarianceKind) -> Self {
        Self {
            frames,
            bins,
            channels,
            kind,
            data: vec![CMatrix::zeros(channels); frames * bins],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn tagged(mut self, kind: CovarianceKind) -> Self {
        self.kind = kind;
        self
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> &CMatrix {
        &self.data[t * self.bins + f]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.data
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|m| m.scale_mut(s));
        out
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.channels != other.channels {
            return Err(Error::mismatch("channel count", self.channels, other.channels));
        }
        if self.bins != other.bins {
            return Err(Error::mismatch("frequency bins", self.bins, other.bins));
        }
        if self.frames != other.frames {
            return Err(Error::mismatch("frames", self.frames, other.frames));
        }
        Ok(())
    }

    /// Largest per-bin `‖R − Rᴴ‖_F / max(‖R‖_F, 1e-30)`.
    pub fn max_hermitian_defect(&self) -> f64 {
        self.data.iter().map(CMatrix::hermitian_defect).fold(0.0, f64::max)
    }
}

/// Per-frequency scale factors γ(f).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleProfile {
    gamma: Vec<f64>,
    floored: usize,
}

impl ScaleProfile {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(
                "scale profile entries must be positive and finite".into(),
            ));
        }
        Ok(Self { gamma, floored: 0 })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Number of bins whose γ was clamped to [`GAMMA_FLOOR`].
    pub fn floored_bins(&self) -> usize {
        self.floored
    }

    fn check(&self, bins: usize) -> Result<()> {
        if self.gamma.len() != bins {
            return Err(Error::mismatch("scale profile bins", bins, self.gamma.len()));
        }
        if self.gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidParameter("scale profile has γ <= 0".into()));
        }
        Ok(())
    }
}

/// Number of frames averaged for a window of `window_ms`:
/// `max(1, floor(window_ms · fs / (1000 · hop)))`.
pub fn averaging_frames(window_ms: f64, config: &StftConfig) -> usize {
    let k = (window_ms * config.sample_rate as f64 / (1000.0 * config.hop_size as f64)).floor();
    (k as usize).max(1)
}

/// Causal sliding-window sample covariance
/// `R(t,f) = (1/K_t) Σ_{k=t−K+1..t} x(k,f) x(k,f)ᴴ`, where the first frames
/// average over however many frames exist so far.
pub fn sliding_covariance(spec: &MultichannelSpectrogram, window_ms: f64) -> Result<CovarianceField> {
    if !(window_ms > 0.0) || !window_ms.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "averaging window must be positive, got {window_ms} ms"
        )));
    }
    let k = averaging_frames(window_ms, spec.config());
    let (frames, bins, channels) = (spec.frames(), spec.bins(), spec.channels());
    let data: Vec<CMatrix> = (0..frames * bins)
        .into_par_iter()
        .map(|idx| {
            let (t, f) = (idx / bins, idx % bins);
            let first = (t + 1).saturating_sub(k);
            let mut r = CMatrix::zeros(channels);
            for tau in first..=t {
                r.add_outer(spec.bin(tau, f), 1.0);
            }
            r.scale_mut(1.0 / (t + 1 - first) as f64);
            r
        })
        .collect();
    Ok(CovarianceField {
        frames,
        bins,
        channels,
        kind: CovarianceKind::Mixture,
        data,
    })
}

/// Noise covariance computed from the noise-only spectrogram with the same
/// causal averaging as the mixture.
pub fn oracle_noise_covariance(noise_spec: &MultichannelSpectrogram, window_ms: f64) -> Result<CovarianceField> {
    Ok(sliding_covariance(noise_spec, window_ms)?.tagged(CovarianceKind::Noise))
}

/// γ(f) = (1/T) Σ_t (1/M) tr R(t,f), floored at [`GAMMA_FLOOR`].
pub fn scale_profile(cov: &CovarianceField) -> ScaleProfile {
    let (frames, bins, channels) = (cov.frames, cov.bins, cov.channels);
    let mut floored = 0;
    let gamma = (0..bins)
        .map(|f| {
            let sum: f64 = (0..frames).map(|t| cov.get(t, f).trace().re).sum();
            let g = sum / (frames.max(1) * channels.max(1)) as f64;
            if g > GAMMA_FLOOR {
                g
            } else {
                floored += 1;
                GAMMA_FLOOR
            }
        })
        .collect();
    ScaleProfile { gamma, floored }
}

/// `x̃(t,f) = x(t,f) / √γ(f)`
pub fn normalize_spectrogram(
    spec: &MultichannelSpectrogram,
    profile: &ScaleProfile,
) -> Result<MultichannelSpectrogram> {
    profile.check(spec.bins())?;
    let mut out = spec.clone();
    for t in 0..spec.frames() {
        for (f, g) in profile.gamma.iter().enumerate() {
            let s = 1.0 / g.sqrt();
            out.bin_mut(t, f).iter_mut().for_each(|v| *v *= s);
        }
    }
    Ok(out)
}

/// `R̃(t,f) = R(t,f) / γ(f)`
pub fn normalize_covariance(cov: &CovarianceField, profile: &ScaleProfile) -> Result<CovarianceField> {
    profile.check(cov.bins)?;
    let mut out = cov.clone();
    for (idx, m) in out.data.iter_mut().enumerate() {
        m.scale_mut(1.0 / profile.gamma[idx % cov.bins]);
    }
    Ok(out)
}
