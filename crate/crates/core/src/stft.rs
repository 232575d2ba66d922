//! Multichannel short-time Fourier transform with square-root Hann windows.
//!
//! Framing: the signal is zero-padded with `frame_size - hop_size` samples in
//! front and enough at the end that every input sample is covered by the full
//! set of overlapping frames. For `N` input samples the frame count is
//!
//! ```text
//! T = floor((N - 1 + frame_size - hop_size) / hop_size) + 1
//! ```
//!
//! so analysis followed by synthesis reconstructs every sample, including the
//! first and last ones.
//!
//! Normalization: the forward DFT is unnormalized and the inverse carries the
//! `1/frame_size` factor. The squared window overlaps to a constant `C`
//! (`C = frame_size / (2 hop_size)`, which is 1 for 512/256), and synthesis
//! divides by it. With that convention
//!
//! ```text
//! Σ_t Σ_m (1/frame_size) Σ_k |X_m(t, k)|²  =  C · Σ_m Σ_n x_m[n]²
//! ```
//!
//! where the inner sum runs over the full two-sided spectrum; see
//! [`MultichannelSpectrogram::spectral_energy`].

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    #[default]
    SqrtHann,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StftConfig {
    pub frame_size: usize,
    pub hop_size: usize,
    pub sample_rate: u32,
    #[serde(default)]
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame_size: 512,
            hop_size: 256,
            sample_rate: 32_000,
            window: WindowKind::SqrtHann,
        }
    }
}

impl StftConfig {
    pub fn num_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.frame_size as f64
    }

    pub fn frame_count(&self, num_samples: usize) -> usize {
        (num_samples - 1 + self.frame_size - self.hop_size) / self.hop_size + 1
    }

    /// Analysis window; synthesis uses the same window.
    pub fn window(&self) -> Vec<f64> {
        let n = self.frame_size as f64;
        match self.window {
            // periodic sqrt-Hann: sqrt(0.5 - 0.5 cos(2πi/N)) = sin(πi/N)
            WindowKind::SqrtHann => (0..self.frame_size).map(|i| (PI * i as f64 / n).sin()).collect(),
        }
    }

    /// Overlap-add gain `C = Σ_k w²[n + k·hop]`. Errors if the sum is not
    /// constant over `n` to 1e-10.
    pub fn cola_gain(&self) -> Result<f64> {
        self.validate_shape()?;
        let w = self.window();
        let sums: Vec<f64> = (0..self.hop_size)
            .map(|n| w.iter().skip(n).step_by(self.hop_size).map(|v| v * v).sum())
            .collect();
        let gain = sums[0];
        if sums.iter().any(|s| (s - gain).abs() > 1e-10) {
            return Err(Error::InvalidParameter(format!(
                "window does not satisfy constant overlap-add at frame {} hop {}",
                self.frame_size, self.hop_size
            )));
        }
        Ok(gain)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.frame_size < 2 || !self.frame_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "frame_size must be even and >= 2, got {}",
                self.frame_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.frame_size {
            return Err(Error::InvalidParameter(format!(
                "hop_size must be in 1..=frame_size, got {}",
                self.hop_size
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidParameter("sample_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.cola_gain().map(|_| ())
    }
}

/// T×F grid of M-dimensional complex vectors, stored frame-major with the
/// channel vector of each bin contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSpectrogram {
    config: StftConfig,
    frames: usize,
    bins: usize,
    channels: usize,
    num_samples: usize,
    data: Vec<C64>,
}

impl MultichannelSpectrogram {
    pub fn zeros(config: StftConfig, frames: usize, channels: usize, num_samples: usize) -> Self {
        let bins = config.num_bins();
        Self {
            config,
            frames,
            bins,
            channels,
            num_samples,
            data: vec![ZERO; frames * bins * channels],
        }
    }

    /// Builds a spectrogram from raw frame-major data (`t`, then `f`, then channel).
    pub fn from_data(
        config: StftConfig,
        frames: usize,
        channels: usize,
        num_samples: usize,
        data: Vec<C64>,
    ) -> Result<Self> {
        let bins = config.num_bins();
        if data.len() != frames * bins * channels {
            return Err(Error::mismatch(
                "spectrogram data length",
                frames * bins * channels,
                data.len(),
            ));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("spectrogram"));
        }
        Ok(Self {
            config,
            frames,
            bins,
            channels,
            num_samples,
            data,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
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

    /// Length of the time-domain signal this spectrogram was computed from.
    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    fn offset(&self, t: usize, f: usize) -> usize {
        (t * self.bins + f) * self.channels
    }

    /// Channel vector `x(t, f)`.
    #[inline]
    pub fn bin(&self, t: usize, f: usize) -> &[C64] {
        let o = self.offset(t, f);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn bin_mut(&mut self, t: usize, f: usize) -> &mut [C64] {
        let o = self.offset(t, f);
        let m = self.channels;
        &mut self.data[o..o + m]
    }

    pub fn get(&self, t: usize, f: usize, m: usize) -> C64 {
        self.data[self.offset(t, f) + m]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Checks that `other` has identical frame/bin/channel layout.
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

    /// Two-sided spectral energy `Σ_t Σ_m (1/N) Σ_k |X|²`, reconstructed from the
    /// one-sided storage. Equals `cola_gain() · ‖x‖²` for the analyzed signal.
    pub fn spectral_energy(&self) -> f64 {
        let nyq = self.bins - 1;
        let mut acc = 0.0;
        for t in 0..self.frames {
            for f in 0..self.bins {
                let weight = if f == 0 || f == nyq { 1.0 } else { 2.0 };
                acc += weight * self.bin(t, f).iter().map(|v| v.norm_sqr()).sum::<f64>();
            }
        }
        acc / self.config.frame_size as f64
    }

    /// Selects a subset of channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        if let Some(&bad) = channels.iter().find(|&&c| c >= self.channels) {
            return Err(Error::InvalidInput(format!("channel {bad} out of range")));
        }
        let mut out = Self::zeros(self.config, self.frames, channels.len(), self.num_samples);
        for t in 0..self.frames {
            for f in 0..self.bins {
                let src = self.bin(t, f).to_vec();
                for (dst, &c) in out.bin_mut(t, f).iter_mut().zip(channels) {
                    *dst = src[c];
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Add for &MultichannelSpectrogram {
    type Output = MultichannelSpectrogram;

    fn add(self, rhs: &MultichannelSpectrogram) -> MultichannelSpectrogram {
        assert!(self.check_same_shape(rhs).is_ok(), "spectrogram shapes differ");
        let mut out = self.clone();
        out.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a += b);
        out
    }
}

fn validate_signal(signal: &[Vec<f64>]) -> Result<usize> {
    let first = signal
        .first()
        .ok_or_else(|| Error::InvalidInput("signal has no channels".into()))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty signal".into()));
    }
    for ch in signal {
        if ch.len() != n {
            return Err(Error::mismatch("channel length", n, ch.len()));
        }
        if ch.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
    }
    Ok(n)
}

/// Forward STFT of an M-channel signal (`signal[m][n]`).
pub fn analyze(signal: &[Vec<f64>], config: &StftConfig) -> Result<MultichannelSpectrogram> {
    config.validate()?;
    let n = validate_signal(signal)?;
    if n < config.frame_size {
        return Err(Error::InvalidInput(format!(
            "signal of {n} samples is shorter than one frame ({})",
            config.frame_size
        )));
    }
    let channels = signal.len();
    let frames = config.frame_count(n);
    let bins = config.num_bins();
    let frame_size = config.frame_size;
    let lead = frame_size - config.hop_size;
    let window = config.window();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(frame_size);

    let mut out = MultichannelSpectrogram::zeros(*config, frames, channels, n);
    let mut buf = vec![ZERO; frame_size];
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    for (m, ch) in signal.iter().enumerate() {
        for t in 0..frames {
            let start = (t * config.hop_size) as isize - lead as isize;
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let sample = if idx >= 0 && (idx as usize) < n {
                    ch[idx as usize]
                } else {
                    0.0
                };
                *b = C64::new(sample * window[i], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (f, v) in buf.iter().take(bins).enumerate() {
                out.bin_mut(t, f)[m] = *v;
            }
        }
    }
    Ok(out)
}

/// Inverse STFT by weighted overlap-add. Returns `spec.channels()` signals of
/// `spec.num_samples()` samples.
pub fn synthesize(spec: &MultichannelSpectrogram) -> Result<Vec<Vec<f64>>> {
    let config = spec.config;
    let gain = config.cola_gain()?;
    if spec.bins != config.num_bins() {
        return Err(Error::mismatch("frequency bins", config.num_bins(), spec.bins));
    }
    let n = spec.num_samples;
    if n == 0 || spec.frames != config.frame_count(n) {
        return Err(Error::mismatch(
            "frames",
            if n == 0 { 0 } else { config.frame_count(n) },
            spec.frames,
        ));
    }
    let frame_size = config.frame_size;
    let hop = config.hop_size;
    let lead = frame_size - hop;
    let window = config.window();
    let ifft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(frame_size);
    let padded_len = (spec.frames - 1) * hop + frame_size;
    let norm = 1.0 / (frame_size as f64 * gain);

    let mut buf = vec![ZERO; frame_size];
    let mut scratch = vec![ZERO; ifft.get_inplace_scratch_len()];
    let mut out = Vec::with_capacity(spec.channels);
    for m in 0..spec.channels {
        let mut acc = vec![0.0; padded_len];
        for t in 0..spec.frames {
            for k in 0..spec.bins {
                let v = spec.get(t, k, m);
                if k == 0 || k == spec.bins - 1 {
                    buf[k] = C64::new(v.re, 0.0);
                } else {
                    buf[k] = v;
                    buf[frame_size - k] = v.conj();
                }
            }
            ifft.process_with_scratch(&mut buf, &mut scratch);
            let start = t * hop;
            for (i, v) in buf.iter().enumerate() {
                acc[start + i] += v.re * window[i] * norm;
            }
        }
        out.push(acc[lead..lead + n].to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(channels: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..channels)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn default_config_has_257_bins() {
        let cfg = StftConfig::default();
        let spec = analyze(&noise(6, 4000, 1), &cfg).unwrap();
        assert_eq!(spec.bins(), 257);
        assert_eq!(spec.channels(), 6);
        assert_eq!(spec.frames(), (4000 - 1 + 256) / 256 + 1);
    }

    #[test]
    fn cola_gain_matches_overlap_ratio() {
        assert!((StftConfig::default().cola_gain().unwrap() - 1.0).abs() < 1e-12);
        let quarter = StftConfig {
            hop_size: 128,
            ..Default::default()
        };
        assert!((quarter.cola_gain().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let odd = StftConfig {
            frame_size: 511,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let long_hop = StftConfig {
            hop_size: 600,
            ..Default::default()
        };
        assert!(long_hop.validate().is_err());
        let non_cola = StftConfig {
            hop_size: 200,
            ..Default::default()
        };
        assert!(non_cola.validate().is_err());
    }

    #[test]
    fn zero_signal_gives_zero_spectrogram_and_back() {
        let cfg = StftConfig::default();
        let spec = analyze(&vec![vec![0.0; 2048]; 2], &cfg).unwrap();
        assert!(spec.data().iter().all(|v| *v == ZERO));
        let back = synthesize(&spec).unwrap();
        assert!(back.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        let cfg = StftConfig::default();
        assert!(analyze(&[], &cfg).is_err());
        assert!(analyze(&[vec![]], &cfg).is_err());
        let mut x = noise(1, 1024, 3);
        x[0][10] = f64::NAN;
        assert!(matches!(analyze(&x, &cfg), Err(Error::NonFinite(_))));
        assert!(analyze(&noise(1, 100, 3), &cfg).is_err());
    }

    #[test]
    fn synthesize_rejects_inconsistent_frames() {
        let cfg = StftConfig::default();
        let spec = MultichannelSpectrogram::zeros(cfg, 3, 1, 10_000);
        assert!(matches!(synthesize(&spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn round_trip_covers_edges() {
        let cfg = StftConfig::default();
        let x = noise(2, 3001, 7);
        let y = synthesize(&analyze(&x, &cfg).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(a.len(), b.len());
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bin_center_sinusoid_is_concentrated() {
        // Brute-force DFT of a windowed frame is the oracle for the FFT path.
        let cfg = StftConfig::default();
        let k0 = 40usize;
        let n = 4096;
        let omega = 2.0 * PI * k0 as f64 / cfg.frame_size as f64;
        let x = vec![(0..n).map(|i| (omega * i as f64).cos()).collect::<Vec<_>>()];
        let spec = analyze(&x, &cfg).unwrap();
        let window = cfg.window();
        let t = 5;
        let start = t * cfg.hop_size - (cfg.frame_size - cfg.hop_size);
        for k in [k0 - 1, k0, k0 + 1, 100] {
            let brute: C64 = (0..cfg.frame_size)
                .map(|i| {
                    let ang = -2.0 * PI * (k * i) as f64 / cfg.frame_size as f64;
                    C64::from_polar(x[0][start + i] * window[i], ang)
                })
                .sum();
            assert!((brute - spec.get(t, k, 0)).norm() < 1e-9);
        }
        let total: f64 = (0..spec.bins()).map(|k| spec.get(t, k, 0).norm_sqr()).sum();
        let lobe: f64 = (k0 - 1..=k0 + 1).map(|k| spec.get(t, k, 0).norm_sqr()).sum();
        let peak = (0..spec.bins())
            .max_by(|&a, &b| spec.get(t, a, 0).norm().total_cmp(&spec.get(t, b, 0).norm()))
            .unwrap();
        assert_eq!(peak, k0);
        assert!(lobe / total > 0.99, "main-lobe fraction {}", lobe / total);
    }

    #[test]
    fn spectral_energy_matches_time_energy() {
        for hop in [256, 128] {
            let cfg = StftConfig {
                hop_size: hop,
                ..Default::default()
            };
            let x = noise(3, 5000, 11);
            let spec = analyze(&x, &cfg).unwrap();
            let time: f64 = x.iter().flatten().map(|v| v * v).sum();
            let rel = (spec.spectral_energy() - cfg.cola_gain().unwrap() * time).abs() / time;
            assert!(rel < 1e-6, "hop {hop}: {rel}");
        }
    }

    #[test]
    fn select_channels_reorders() {
        let cfg = StftConfig::default();
        let spec = analyze(&noise(3, 1024, 2), &cfg).unwrap();
        let sel = spec.select_channels(&[2, 0]).unwrap();
        assert_eq!(sel.get(1, 3, 0), spec.get(1, 3, 2));
        assert_eq!(sel.get(1, 3, 1), spec.get(1, 3, 0));
        assert!(spec.select_channels(&[5]).is_err());
    }
}
