//! Shoebox image-source room impulse responses.
//!
//! Walls share one frequency-independent absorption coefficient derived from
//! the target RT60 with Sabine's formula, `α = 0.1611 V / (S · RT60)`, giving
//! the pressure reflection coefficient `β = √(1 − α)`. Every image source of
//! reflection order `k ≤ max_order` contributes `β^k / (4π d)` at delay
//! `d · fs / c`, placed with an 81-tap Hann-windowed sinc.

use std::f64::consts::PI;

use super::geometry::{distance, Point};
use crate::error::{Error, Result};

pub const SINC_TAPS: usize = 81;
const HALF_TAPS: i64 = (SINC_TAPS as i64 - 1) / 2;

/// Per-microphone impulse responses from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomImpulseResponse {
    /// `taps[m]` is the response at microphone `m`.
    pub taps: Vec<Vec<f64>>,
    /// Direct-path delay in (fractional) samples, per microphone.
    pub direct_path_delay: Vec<f64>,
}

impl RoomImpulseResponse {
    pub fn len(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uniform wall absorption for a target RT60 (Sabine).
pub fn sabine_absorption(room: &Point, rt60: f64) -> Result<f64> {
    if !(rt60 > 0.0) || !rt60.is_finite() {
        return Err(Error::InvalidParameter(format!("RT60 must be positive, got {rt60}")));
    }
    let [lx, ly, lz] = *room;
    let volume = lx * ly * lz;
    let surface = 2.0 * (lx * ly + lx * lz + ly * lz);
    let alpha = 0.1611 * volume / (surface * rt60);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "RT60 {rt60} s is unreachable in a {lx}x{ly}x{lz} m room: Sabine absorption {alpha:.3} \
             falls outside (0, 1)"
        )));
    }
    Ok(alpha)
}

/// Pressure reflection coefficient `√(1 − α)`.
pub fn reflection_coefficient(room: &Point, rt60: f64) -> Result<f64> {
    Ok((1.0 - sabine_absorption(room, rt60)?).sqrt())
}

/// Image positions and reflection orders up to `max_order`.
pub fn image_sources(room: &Point, source: &Point, max_order: u32) -> Vec<(Point, u32)> {
    let n = max_order as i64;
    // per axis: (coordinate, reflections) for every (n, q) within the order budget
    let axis = |len: f64, s: f64| -> Vec<(f64, u32)> {
        let mut out = Vec::new();
        for k in -n..=n {
            for q in 0..=1i64 {
                let refl = ((k - q).abs() + k.abs()) as u32;
                if refl <= max_order {
                    out.push(((1 - 2 * q) as f64 * s + 2.0 * k as f64 * len, refl));
                }
            }
        }
        out
    };
    let xs = axis(room[0], source[0]);
    let ys = axis(room[1], source[1]);
    let zs = axis(room[2], source[2]);
    let mut images = Vec::new();
    for &(x, rx) in &xs {
        for &(y, ry) in &ys {
            if rx + ry > max_order {
                continue;
            }
            for &(z, rz) in &zs {
                let order = rx + ry + rz;
                if order <= max_order {
                    images.push(([x, y, z], order));
                }
            }
        }
    }
    images
}

fn hann_sinc(x: f64) -> f64 {
    let window = 0.5 * (1.0 + (2.0 * PI * x / SINC_TAPS as f64).cos());
    let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    window * sinc
}

/// Adds `amplitude` at fractional position `delay` using the windowed sinc.
pub(crate) fn add_fractional_tap(buf: &mut [f64], delay: f64, amplitude: f64) {
    let center = delay.round() as i64;
    for n in (center - HALF_TAPS)..=(center + HALF_TAPS) {
        if n < 0 || n as usize >= buf.len() {
            continue;
        }
        buf[n as usize] += amplitude * hann_sinc(n as f64 - delay);
    }
}

/// Image-source RIRs from `source` to each of `mics` (absolute positions).
pub fn image_source_rir(
    room: &Point,
    source: &Point,
    mics: &[Point],
    beta: f64,
    max_order: u32,
    sample_rate: u32,
    sound_speed: f64,
) -> Result<RoomImpulseResponse> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "reflection coefficient {beta} outside [0,1]"
        )));
    }
    if room.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("room dimensions must be positive".into()));
    }
    let inside = |p: &Point| (0..3).all(|i| p[i] >= 0.0 && p[i] <= room[i]);
    if !inside(source) || !mics.iter().all(inside) {
        return Err(Error::InvalidInput(
            "source and microphones must lie inside the room".into(),
        ));
    }
    let fs = sample_rate as f64;
    let images = image_sources(room, source, max_order);
    let max_delay = images
        .iter()
        .flat_map(|(p, _)| mics.iter().map(move |m| distance(p, m)))
        .fold(0.0, f64::max)
        * fs
        / sound_speed;
    let len = max_delay.ceil() as usize + HALF_TAPS as usize + 2;

    let mut taps = vec![vec![0.0; len]; mics.len()];
    let direct_path_delay = mics.iter().map(|m| distance(source, m) * fs / sound_speed).collect();
    // fixed iteration order keeps output bit-reproducible
    for (buf, mic) in taps.iter_mut().zip(mics) {
        for (img, order) in &images {
            let d = distance(img, mic).max(1e-3);
            let amplitude = beta.powi(*order as i32) / (4.0 * PI * d);
            add_fractional_tap(buf, d * fs / sound_speed, amplitude);
        }
    }
    Ok(RoomImpulseResponse {
        taps,
        direct_path_delay,
    })
}

/// T60 from the Schroeder backward integral, fitted between −5 and −25 dB
/// and extrapolated to 60 dB. `None` when the decay never reaches −25 dB.
pub fn schroeder_t60(rir: &[f64], sample_rate: u32) -> Option<f64> {
    let total: f64 = rir.iter().map(|v| v * v).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut edc = vec![0.0; rir.len()];
    let mut acc = 0.0;
    for i in (0..rir.len()).rev() {
        acc += rir[i] * rir[i];
        edc[i] = 10.0 * (acc / total).log10();
    }
    let pts: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .filter(|(_, &db)| (-25.0..=-5.0).contains(&db))
        .map(|(i, &db)| (i as f64 / sample_rate as f64, db))
        .collect();
    if pts.len() < 2 || edc.last().copied().unwrap_or(0.0) > -25.0 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -60.0 / slope)
}
