//! Desk-scale shoebox scenes: random room/array/source placement, image-source
//! RIRs, convolution and SNR-controlled mixing.

mod geometry;
pub mod rir;
pub mod signals;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub(crate) use geometry::distance;
pub use geometry::{azimuth_deg, ArrayGeometry, Point, SPEED_OF_SOUND};
pub use rir::{image_source_rir, reflection_coefficient, sabine_absorption, schroeder_t60, RoomImpulseResponse};

pub const DEFAULT_MAX_ORDER: u32 = 6;
pub const DEFAULT_SAMPLE_RATE: u32 = 32_000;
const MAX_ATTEMPTS: usize = 10_000;

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

/// One room with an array, a speech source and interfering noise sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room_dims: Point,
    pub rt60: f64,
    pub array_center: Point,
    pub speech_source: Point,
    pub noise_sources: Vec<Point>,
    pub snr_db: f64,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
}

/// Sampling ranges for [`sample_scene_with`]. Intervals are half-open
/// `[lo, hi)` except where `lo == hi`, which pins the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRanges {
    pub room_xy: (f64, f64),
    pub room_height: (f64, f64),
    pub rt60: (f64, f64),
    pub array_height: (f64, f64),
    pub source_height: (f64, f64),
    pub min_source_distance: f64,
    pub wall_margin: f64,
    pub noise_sources: (usize, usize),
    pub snr_db: (f64, f64),
    pub duration_s: f64,
    pub sample_rate: u32,
}

impl Default for SceneRanges {
    fn default() -> Self {
        Self {
            room_xy: (4.0, 8.0),
            room_height: (2.5, 3.5),
            rt60: (0.25, 0.75),
            array_height: (1.2, 1.8),
            source_height: (1.0, 2.0),
            min_source_distance: 0.8,
            wall_margin: 0.1,
            noise_sources: (1, 3),
            snr_db: (-5.0, 5.0),
            duration_s: 2.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl SceneRanges {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("room_xy", self.room_xy),
            ("room_height", self.room_height),
            ("rt60", self.rt60),
            ("array_height", self.array_height),
            ("source_height", self.source_height),
            ("snr_db", self.snr_db),
        ];
        for (name, (lo, hi)) in pairs {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!("{name} range [{lo}, {hi}] is invalid")));
            }
        }
        let (nlo, nhi) = self.noise_sources;
        if nlo == 0 || nlo > nhi {
            return Err(Error::InvalidParameter(
                "noise source count range must be 1 ≤ lo ≤ hi".into(),
            ));
        }
        if !(self.duration_s > 0.0) || self.sample_rate == 0 {
            return Err(Error::InvalidParameter(
                "duration and sample rate must be positive".into(),
            ));
        }
        if !(self.rt60.0 > 0.0) || self.wall_margin < 0.0 || self.min_source_distance < 0.0 {
            return Err(Error::InvalidParameter(
                "RT60, wall margin and distances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Random scene with the default ranges.
pub fn sample_scene(seed: u64) -> Result<SceneSpec> {
    sample_scene_with(seed, &SceneRanges::default())
}

/// Random scene by rejection sampling; gives up after 10⁴ attempts.
pub fn sample_scene_with(seed: u64, ranges: &SceneRanges) -> Result<SceneSpec> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = ranges.wall_margin;
    let array_radius = ArrayGeometry::default().radius();

    for _ in 0..MAX_ATTEMPTS {
        let room = [
            uniform(&mut rng, ranges.room_xy),
            uniform(&mut rng, ranges.room_xy),
            uniform(&mut rng, ranges.room_height),
        ];
        let rt60 = uniform(&mut rng, ranges.rt60);
        if sabine_absorption(&room, rt60).is_err() {
            continue;
        }
        let planar = |rng: &mut ChaCha8Rng, pad: f64, height: (f64, f64)| -> Option<Point> {
            let (lo_x, hi_x) = (pad, room[0] - pad);
            let (lo_y, hi_y) = (pad, room[1] - pad);
            if lo_x >= hi_x || lo_y >= hi_y {
                return None;
            }
            let z = uniform(rng, height);
            (z >= margin && z <= room[2] - margin)
                .then(|| [rng.random_range(lo_x..hi_x), rng.random_range(lo_y..hi_y), z])
        };

        let Some(array_center) = planar(&mut rng, margin + array_radius, ranges.array_height) else {
            continue;
        };
        let count = rng.random_range(ranges.noise_sources.0..=ranges.noise_sources.1);
        let mut sources = Vec::with_capacity(count + 1);
        for _ in 0..=count {
            match planar(&mut rng, margin, ranges.source_height) {
                Some(p) if distance(&p, &array_center) >= ranges.min_source_distance => sources.push(p),
                _ => break,
            }
        }
        let snr_db = uniform(&mut rng, ranges.snr_db);
        if sources.len() != count + 1 {
            continue;
        }
        let speech_source = sources.remove(0);
        return Ok(SceneSpec {
            room_dims: room,
            rt60,
            array_center,
            speech_source,
            noise_sources: sources,
            snr_db,
            seed,
            duration_s: ranges.duration_s,
            sample_rate: ranges.sample_rate,
        });
    }
    Err(Error::InvalidParameter(format!(
        "scene sampling found no valid placement in {MAX_ATTEMPTS} attempts"
    )))
}

impl SceneSpec {
    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate as f64).round() as usize
    }

    /// Checks room, margins and that every microphone is inside.
    pub fn validate(&self, geometry: &ArrayGeometry) -> Result<()> {
        geometry.validate()?;
        if self.room_dims.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(
                "room dimensions must be positive and finite".into(),
            ));
        }
        if !(self.duration_s > 0.0) || self.sample_rate == 0 || self.num_samples() == 0 {
            return Err(Error::InvalidParameter(
                "scene duration and sample rate must be positive".into(),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::NonFinite("snr_db"));
        }
        if self.noise_sources.is_empty() {
            return Err(Error::InvalidInput("scene needs at least one noise source".into()));
        }
        sabine_absorption(&self.room_dims, self.rt60)?;
        let inside = |p: &Point| (0..3).all(|i| p[i] >= 0.0 && p[i] <= self.room_dims[i]);
        let mics = geometry.placed_at(&self.array_center);
        if !inside(&self.speech_source) || !self.noise_sources.iter().all(inside) || !mics.iter().all(inside) {
            return Err(Error::InvalidInput("sources and array must lie inside the room".into()));
        }
        Ok(())
    }

    fn source(&self, index: usize) -> Result<Point> {
        match index {
            0 => Ok(self.speech_source),
            i => self
                .noise_sources
                .get(i - 1)
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("source index {i} out of range"))),
        }
    }
}

/// RIR for source `source_index` (0 = speech, 1.. = noise sources).
pub fn simulate_rir(
    spec: &SceneSpec,
    source_index: usize,
    geometry: &ArrayGeometry,
    max_order: u32,
) -> Result<RoomImpulseResponse> {
    let beta = reflection_coefficient(&spec.room_dims, spec.rt60)?;
    let source = spec.source(source_index)?;
    image_source_rir(
        &spec.room_dims,
        &source,
        &geometry.placed_at(&spec.array_center),
        beta,
        max_order,
        spec.sample_rate,
        SPEED_OF_SOUND,
    )
}

/// Linear convolution truncated to `out_len` samples.
pub fn fft_convolve(x: &[f64], h: &[f64], out_len: usize) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; out_len];
    }
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |s: &[f64]| {
        let mut v: Vec<Complex64> = s.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    inv.process(&mut a);
    let full = x.len() + h.len() - 1;
    (0..out_len)
        .map(|i| if i < full { a[i].re / n as f64 } else { 0.0 })
        .collect()
}

/// Multichannel scene signals, each `M × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub mixture: Vec<Vec<f64>>,
    pub clean: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
    /// Gain applied to the summed reverberant noise.
    pub noise_gain: f64,
}

fn tile(signal: &[f64], len: usize) -> Vec<f64> {
    signal.iter().copied().cycle().take(len).collect()
}

fn energy(x: &[Vec<f64>]) -> f64 {
    x.iter().flatten().map(|v| v * v).sum()
}

fn check_source(name: &str, s: &[f64]) -> Result<()> {
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("source signal"));
    }
    if !s.iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidInput(format!("{name} has zero energy")));
    }
    Ok(())
}

fn reverberate(
    spec: &SceneSpec,
    index: usize,
    signal: &[f64],
    geometry: &ArrayGeometry,
    max_order: u32,
) -> Result<Vec<Vec<f64>>> {
    let n = spec.num_samples();
    let rir = simulate_rir(spec, index, geometry, max_order)?;
    let dry = tile(signal, n);
    Ok(rir.taps.iter().map(|h| fft_convolve(&dry, h, n)).collect())
}

/// Convolves sources with their RIRs and mixes at `spec.snr_db`. Shorter
/// signals are repeated to the scene length; `noises[i]` plays from
/// `spec.noise_sources[i]`.
pub fn render_scene(
    spec: &SceneSpec,
    speech: &[f64],
    noises: &[Vec<f64>],
    geometry: &ArrayGeometry,
    max_order: u32,
) -> Result<RenderedScene> {
    if noises.is_empty() {
        return Err(Error::InvalidInput("at least one noise signal is required".into()));
    }
    if noises.len() != spec.noise_sources.len() {
        return Err(Error::mismatch("noise signals", spec.noise_sources.len(), noises.len()));
    }
    spec.validate(geometry)?;
    check_source("speech signal", speech)?;
    for n in noises {
        check_source("noise signal", n)?;
    }

    let clean = reverberate(spec, 0, speech, geometry, max_order)?;
    let mut noise = vec![vec![0.0; spec.num_samples()]; geometry.len()];
    for (i, sig) in noises.iter().enumerate() {
        let part = reverberate(spec, i + 1, sig, geometry, max_order)?;
        for (acc, p) in noise.iter_mut().zip(&part) {
            acc.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
    }
    let (es, en) = (energy(&clean), energy(&noise));
    if !(es > 0.0) || !(en > 0.0) {
        return Err(Error::Numerical("reverberant source energy vanished".into()));
    }
    let noise_gain = (es / (en * 10f64.powf(spec.snr_db / 10.0))).sqrt();
    noise.iter_mut().flatten().for_each(|v| *v *= noise_gain);
    let mixture = clean
        .iter()
        .zip(&noise)
        .map(|(s, n)| s.iter().zip(n).map(|(a, b)| a + b).collect())
        .collect();
    Ok(RenderedScene {
        mixture,
        clean,
        noise,
        noise_gain,
    })
}

/// Synthetic speech and noise material for `spec`, seeded from `spec.seed`.
pub fn synthetic_sources(spec: &SceneSpec) -> (Vec<f64>, Vec<Vec<f64>>) {
    let speech = signals::speech_like(
        spec.seed.wrapping_mul(2).wrapping_add(1),
        spec.duration_s,
        spec.sample_rate,
    );
    let noises = (0..spec.noise_sources.len() as u64)
        .map(|i| {
            signals::colored_noise(
                spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i + 1)),
                spec.duration_s,
                spec.sample_rate,
            )
        })
        .collect();
    (speech, noises)
}

/// On-disk scene description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub scene: SceneSpec,
    #[serde(default)]
    pub array: ArrayGeometry,
    #[serde(default = "default_max_order")]
    pub max_order: u32,
}

fn default_max_order() -> u32 {
    DEFAULT_MAX_ORDER
}

impl SceneFile {
    pub fn new(scene: SceneSpec) -> Self {
        Self {
            scene,
            array: ArrayGeometry::default(),
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.scene.validate(&file.array)?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
