//! Far-field steering: delay-and-sum beamforming and steered response power.
//!
//! Azimuth θ is measured in the array plane from the +x axis towards +y and
//! points from the array to the source. A plane wave from θ reaches a
//! microphone at `r` earlier than the centroid by `r·u(θ)/c`, i.e. with
//! relative delay `τ(θ) = −r·u(θ)/c`. The steering vector is
//! `d(θ,f) = exp(−j2πf τ(θ))`, the phase pattern such a wave produces.

use std::f64::consts::PI;
use std::io::Write;

use crate::covariance::sliding_covariance;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::scene::{ArrayGeometry, SPEED_OF_SOUND};
use crate::stft::{MultichannelSpectrogram, StftConfig};

/// Azimuth × frequency grid for steering.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringGrid {
    pub azimuths_deg: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub sound_speed: f64,
    pub array: ArrayGeometry,
}

impl SteeringGrid {
    /// Azimuths `0, step, 2·step, … < 360` over the bin frequencies of `config`.
    pub fn uniform(step_deg: f64, config: &StftConfig, array: ArrayGeometry) -> Result<Self> {
        if !(step_deg > 0.0) || step_deg > 360.0 {
            return Err(Error::InvalidParameter(format!("azimuth step {step_deg} out of range")));
        }
        let count = (360.0 / step_deg - 1e-9).ceil() as usize;
        let grid = Self {
            azimuths_deg: (0..count).map(|i| i as f64 * step_deg).collect(),
            frequencies: (0..config.num_bins()).map(|k| config.bin_frequency(k)).collect(),
            sound_speed: SPEED_OF_SOUND,
            array,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.azimuths_deg.is_empty() {
            return Err(Error::InvalidParameter("steering grid has no azimuths".into()));
        }
        if self.azimuths_deg.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("azimuths must be strictly increasing".into()));
        }
        if self.azimuths_deg.iter().any(|a| !(0.0..360.0).contains(a)) {
            return Err(Error::InvalidParameter("azimuths must lie in [0, 360)".into()));
        }
        if !(self.sound_speed > 0.0) {
            return Err(Error::InvalidParameter("sound speed must be positive".into()));
        }
        Ok(())
    }

    fn check_spec(&self, spec: &MultichannelSpectrogram) -> Result<()> {
        if spec.channels() != self.array.len() {
            return Err(Error::mismatch("channel count", self.array.len(), spec.channels()));
        }
        if spec.bins() != self.frequencies.len() {
            return Err(Error::mismatch("frequency bins", self.frequencies.len(), spec.bins()));
        }
        Ok(())
    }
}

/// Unnormalized steering vector `d_m = exp(−j2πf τ_m(θ))`.
pub fn steering_vector(array: &ArrayGeometry, azimuth_deg: f64, freq: f64, sound_speed: f64) -> Vec<C64> {
    let th = azimuth_deg.to_radians();
    let u = [th.cos(), th.sin(), 0.0];
    array
        .mic_positions
        .iter()
        .map(|r| {
            let tau = -(r[0] * u[0] + r[1] * u[1] + r[2] * u[2]) / sound_speed;
            C64::from_polar(1.0, -2.0 * PI * freq * tau)
        })
        .collect()
}

/// Delay-and-sum beamformer `y = (1/M) Σ_m d_m* x_m`, steered at `azimuth_deg`.
/// Returns a single-channel spectrogram.
pub fn ds_beamform(
    spec: &MultichannelSpectrogram,
    azimuth_deg: f64,
    grid: &SteeringGrid,
) -> Result<MultichannelSpectrogram> {
    grid.validate()?;
    grid.check_spec(spec)?;
    if !azimuth_deg.is_finite() {
        return Err(Error::NonFinite("steering azimuth"));
    }
    let m = spec.channels() as f64;
    let steer: Vec<Vec<C64>> = grid
        .frequencies
        .iter()
        .map(|&f| steering_vector(&grid.array, azimuth_deg, f, grid.sound_speed))
        .collect();
    let mut out = MultichannelSpectrogram::zeros(*spec.config(), spec.frames(), 1, spec.num_samples());
    for t in 0..spec.frames() {
        for (f, d) in steer.iter().enumerate() {
            let y: C64 = d.iter().zip(spec.bin(t, f)).map(|(dm, xm)| dm.conj() * xm).sum();
            out.bin_mut(t, f)[0] = y / m;
        }
    }
    Ok(out)
}

/// Steered response power over azimuth and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SrpMap {
    pub azimuths_deg: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Row-major `azimuths × frequencies`.
    pub power: Vec<f64>,
}

impl SrpMap {
    pub fn get(&self, azimuth_index: usize, bin: usize) -> f64 {
        self.power[azimuth_index * self.frequencies.len() + bin]
    }

    /// Azimuth (degrees) maximizing the power summed over bins whose
    /// frequency lies in `[lo_hz, hi_hz]`.
    pub fn peak_azimuth(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let bins: Vec<usize> = (0..self.frequencies.len())
            .filter(|&k| (lo_hz..=hi_hz).contains(&self.frequencies[k]))
            .collect();
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..self.azimuths_deg.len() {
            let p: f64 = bins.iter().map(|&k| self.get(a, k)).sum();
            if p > best.1 {
                best = (a, p);
            }
        }
        self.azimuths_deg[best.0]
    }

    /// Azimuth maximizing the power at a single bin.
    pub fn peak_azimuth_at(&self, bin: usize) -> f64 {
        self.peak_azimuth(self.frequencies[bin], self.frequencies[bin])
    }

    /// CSV with a header row of frequencies (Hz); one row per azimuth,
    /// leading with the azimuth in degrees.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("azimuth_deg");
        for f in &self.frequencies {
            s.push_str(&format!(",{f}"));
        }
        s.push('\n');
        for (a, az) in self.azimuths_deg.iter().enumerate() {
            s.push_str(&format!("{az}"));
            for k in 0..self.frequencies.len() {
                s.push_str(&format!(",{:e}", self.get(a, k)));
            }
            s.push('\n');
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Binary 8-bit PGM (P5), azimuth down the rows and frequency across.
    /// Power is mapped linearly in dB from `max − range_db` (black) to `max`
    /// (white).
    pub fn write_pgm<W: Write>(&self, mut out: W, range_db: f64) -> Result<()> {
        if !(range_db > 0.0) {
            return Err(Error::InvalidParameter("PGM dynamic range must be positive".into()));
        }
        let to_db = |p: f64| 10.0 * p.max(1e-300).log10();
        let max = self.power.iter().cloned().fold(0.0, f64::max);
        let top = to_db(max);
        let mut buf = format!("P5\n{} {}\n255\n", self.frequencies.len(), self.azimuths_deg.len()).into_bytes();
        buf.extend(self.power.iter().map(|&p| {
            if max <= 0.0 {
                return 0u8;
            }
            let level = ((to_db(p) - top + range_db) / range_db).clamp(0.0, 1.0);
            (level * 255.0).round() as u8
        }));
        out.write_all(&buf)?;
        Ok(())
    }
}

/// `P(θ,f) = (1/T) Σ_t d̂ᴴ R(t,f) d̂` with unit-norm `d̂` and `R` the causal
/// sliding covariance over `window_ms`.
pub fn srp_map(spec: &MultichannelSpectrogram, grid: &SteeringGrid, window_ms: f64) -> Result<SrpMap> {
    grid.validate()?;
    grid.check_spec(spec)?;
    let cov = sliding_covariance(spec, window_ms)?;
    let m = spec.channels();
    let frames = spec.frames();
    let norm = 1.0 / (m as f64).sqrt();
    let mean: Vec<CMatrix> = (0..spec.bins())
        .map(|f| {
            let mut acc = CMatrix::zeros(m);
            for t in 0..frames {
                acc = acc.add_scaled(cov.get(t, f), 1.0);
            }
            acc.scale(1.0 / frames as f64)
        })
        .collect();
    let bins = spec.bins();
    let mut power = Vec::with_capacity(grid.azimuths_deg.len() * bins);
    for &az in &grid.azimuths_deg {
        for (f, r) in grid.frequencies.iter().zip(&mean) {
            let d: Vec<C64> = steering_vector(&grid.array, az, *f, grid.sound_speed)
                .into_iter()
                .map(|v| v * norm)
                .collect();
            power.push(r.quadratic_form(&d).re);
        }
    }
    Ok(SrpMap {
        azimuths_deg: grid.azimuths_deg.clone(),
        frequencies: grid.frequencies.clone(),
        power,
    })
}
