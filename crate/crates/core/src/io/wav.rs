//! Multichannel WAV in (f32, 16/24-bit PCM) and out (f32).

use std::io::{Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::write_atomic;
use crate::error::{Error, Result};

/// Channel-major audio plus its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

impl Audio {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn num_samples(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

pub fn read_wav(path: &Path) -> Result<Audio> {
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    let m = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1i64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::InvalidInput(format!(
                "{}: unsupported WAV sample format {fmt:?} {bits}-bit (use 32-bit float or 16/24-bit PCM)",
                path.display()
            )))
        }
    };
    if m == 0 || !interleaved.len().is_multiple_of(m) {
        return Err(Error::InvalidInput(format!(
            "{}: malformed channel layout",
            path.display()
        )));
    }
    let mut channels = vec![Vec::with_capacity(interleaved.len() / m); m];
    for frame in interleaved.chunks_exact(m) {
        for (ch, v) in channels.iter_mut().zip(frame) {
            ch.push(*v);
        }
    }
    Ok(Audio {
        channels,
        sample_rate: spec.sample_rate,
    })
}

/// Encodes channel-major samples as 32-bit float WAV.
pub fn write_wav_to<W: Write + Seek>(out: W, channels: &[Vec<f64>], sample_rate: u32) -> Result<()> {
    let m = channels.len();
    if m == 0 || m > u16::MAX as usize {
        return Err(Error::InvalidInput(format!("cannot write {m} channels")));
    }
    let n = channels[0].len();
    if let Some(bad) = channels.iter().find(|c| c.len() != n) {
        return Err(Error::mismatch("channel length", n, bad.len()));
    }
    if channels.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("audio samples"));
    }
    let spec = WavSpec {
        channels: m as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::new(out, spec)?;
    for i in 0..n {
        for ch in channels {
            writer.write_sample(ch[i] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

pub fn write_wav(path: &Path, channels: &[Vec<f64>], sample_rate: u32) -> Result<()> {
    write_atomic(path, |w| write_wav_to(w, channels, sample_rate))
}
