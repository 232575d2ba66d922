//! Deterministic stand-in source material.
//!
//! `speech_like` strings together voiced "syllables": a gliding fundamental
//! with harmonics shaped by two random formants, a smooth onset/offset and
//! short pauses between syllables. `colored_noise` is Gaussian noise through
//! a one-pole low-pass with a random pole.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn sample_count(duration_s: f64, sample_rate: u32) -> usize {
    (duration_s * sample_rate as f64).round().max(0.0) as usize
}

/// Voiced, speech-like signal with unit peak amplitude.
pub fn speech_like(seed: u64, duration_s: f64, sample_rate: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let n = sample_count(duration_s, sample_rate);
    let mut out = vec![0.0; n];
    let nyquist_cap = (0.45 * fs).min(5000.0);

    let mut pos = (rng.random_range(0.0..0.05) * fs) as usize;
    while pos < n {
        let len = (rng.random_range(0.12..0.30) * fs) as usize;
        let f0_start: f64 = rng.random_range(100.0..220.0);
        let f0_end = f0_start * rng.random_range(0.8..1.2);
        let formants = [rng.random_range(300.0..900.0), rng.random_range(900.0..2500.0)];
        let level = rng.random_range(0.4..1.0);

        let harmonics = (nyquist_cap / f0_start.max(f0_end)).floor() as usize;
        let weights: Vec<f64> = (1..=harmonics)
            .map(|h| {
                let f = h as f64 * f0_start;
                formants
                    .iter()
                    .map(|fc| 1.0 / (1.0 + ((f - fc) / 150.0).powi(2)))
                    .sum::<f64>()
                    / h as f64
            })
            .collect();
        let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();

        let mut phase = 0.0;
        for i in 0..len.min(n - pos) {
            let frac = i as f64 / len as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += 2.0 * PI * f0 / fs;
            let env = (PI * frac).sin().powi(2);
            let v: f64 = weights
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(h, (w, p))| w * ((h + 1) as f64 * phase + p).sin())
                .sum();
            out[pos + i] += level * env * v;
        }
        pos += len + (rng.random_range(0.04..0.20) * fs) as usize;
    }
    normalize_peak(&mut out);
    out
}

/// Low-pass coloured Gaussian noise with unit RMS.
pub fn colored_noise(seed: u64, duration_s: f64, sample_rate: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sample_count(duration_s, sample_rate);
    let pole: f64 = rng.random_range(0.0..0.9);
    let mut state = 0.0;
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = StandardNormal.sample(&mut rng);
            state = pole * state + w;
            state
        })
        .collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

fn normalize_peak(x: &mut [f64]) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(speech_like(3, 0.5, 16_000), speech_like(3, 0.5, 16_000));
        assert_ne!(speech_like(3, 0.5, 16_000), speech_like(4, 0.5, 16_000));
        assert_eq!(colored_noise(9, 0.5, 16_000), colored_noise(9, 0.5, 16_000));
    }

    #[test]
    fn lengths_and_levels() {
        let s = speech_like(1, 1.0, 32_000);
        assert_eq!(s.len(), 32_000);
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
        // pauses leave silent stretches
        assert!(s.iter().filter(|v| v.abs() < 1e-9).count() > 1000);

        let n = colored_noise(1, 1.0, 32_000);
        let rms = (n.iter().map(|v| v * v).sum::<f64>() / n.len() as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }
}
