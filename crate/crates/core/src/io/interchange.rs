//! Binary interchange format for Cholesky fields.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                         |
//! |-------:|-----:|-------------------------------|
//! | 0      | 8    | magic `DPMWFCHL`              |
//! | 8      | 4    | version (u32, = 1)            |
//! | 12     | 4    | M, channels (u32)             |
//! | 16     | 4    | F, frequency bins (u32)       |
//! | 20     | 4    | T, frames (u32)               |
//! | 24     | 4    | frame_size (u32)              |
//! | 28     | 4    | hop_size (u32)                |
//! | 32     | 4    | sample_rate (u32)             |
//! | 36     | 8    | ε, diagonal floor (f64)       |
//! | 44     | ...  | payload                       |
//!
//! The payload visits bins with `t` ascending, then `f` ascending. Each bin
//! stores the lower triangle row by row: diagonal entries as one `f32`,
//! strictly-lower entries as an `(re, im)` pair of `f32`. A bin therefore
//! takes `4M + 4M(M−1)` bytes.
//!
//! Fields are in the scale-normalized domain: `L Lᴴ` is the noise covariance
//! divided by the per-frequency mixture scale γ(f).

use std::io::{Read, Write};

use thiserror::Error;

use crate::cholesky::CholeskyField;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::stft::StftConfig;

pub const MAGIC: &[u8; 8] = b"DPMWFCHL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected \"DPMWFCHL\"")]
    BadMagic([u8; 8]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated at byte offset {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("empty field: M·F·T must be positive (M={m}, F={f}, T={t})")]
    Empty { m: u32, f: u32, t: u32 },
    #[error("negative diagonal {value} at byte offset {offset}")]
    NegativeDiagonal { offset: usize, value: f32 },
    #[error("diagonal {value} below floor {floor} at byte offset {offset}")]
    BelowFloor { offset: usize, value: f32, floor: f64 },
    #[error("non-finite value at byte offset {0}")]
    NonFinite(usize),
    #[error("inconsistent header: {0}")]
    Header(String),
    #[error("trailing data after payload ({0} bytes)")]
    Trailing(usize),
}

/// Header of an interchange file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyFileHeader {
    pub channels: u32,
    pub bins: u32,
    pub frames: u32,
    pub frame_size: u32,
    pub hop_size: u32,
    pub sample_rate: u32,
    pub epsilon: f64,
}

impl CholeskyFileHeader {
    pub fn new(field: &CholeskyField, config: &StftConfig) -> Self {
        Self {
            channels: field.channels() as u32,
            bins: field.bins() as u32,
            frames: field.frames() as u32,
            frame_size: config.frame_size as u32,
            hop_size: config.hop_size as u32,
            sample_rate: config.sample_rate,
            epsilon: field.diag_floor(),
        }
    }

    pub fn stft_config(&self) -> StftConfig {
        StftConfig {
            frame_size: self.frame_size as usize,
            hop_size: self.hop_size as usize,
            sample_rate: self.sample_rate,
            ..Default::default()
        }
    }

    pub fn bytes_per_bin(&self) -> usize {
        bytes_per_bin(self.channels as usize)
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..8].copy_from_slice(MAGIC);
        let words = [
            VERSION,
            self.channels,
            self.bins,
            self.frames,
            self.frame_size,
            self.hop_size,
            self.sample_rate,
        ];
        for (i, w) in words.iter().enumerate() {
            out[8 + 4 * i..12 + 4 * i].copy_from_slice(&w.to_le_bytes());
        }
        out[36..44].copy_from_slice(&self.epsilon.to_le_bytes());
        out
    }

    fn check(&self) -> std::result::Result<(), FormatError> {
        if self.channels == 0 || self.bins == 0 || self.frames == 0 {
            return Err(FormatError::Empty {
                m: self.channels,
                f: self.bins,
                t: self.frames,
            });
        }
        if self.frame_size / 2 + 1 != self.bins {
            return Err(FormatError::Header(format!(
                "F = {} does not match frame_size {}",
                self.bins, self.frame_size
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(FormatError::Header(format!("ε = {} is not positive", self.epsilon)));
        }
        Ok(())
    }
}

/// Payload bytes per time-frequency bin: `4M + 4M(M−1)`.
pub fn bytes_per_bin(channels: usize) -> usize {
    4 * channels + 4 * channels * channels.saturating_sub(1)
}

/// Serializes a field.
pub fn write_cholesky_field<W: Write>(mut out: W, field: &CholeskyField, config: &StftConfig) -> Result<()> {
    let header = CholeskyFileHeader::new(field, config);
    header.check()?;
    let m = field.channels();
    let mut buf = Vec::with_capacity(HEADER_LEN + field.matrices().len() * bytes_per_bin(m));
    buf.extend_from_slice(&header.to_bytes());
    for l in field.matrices() {
        for i in 0..m {
            for j in 0..i {
                let v = l[(i, j)];
                buf.extend_from_slice(&(v.re as f32).to_le_bytes());
                buf.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            buf.extend_from_slice(&(l[(i, i)].re as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn to_bytes(field: &CholeskyField, config: &StftConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_cholesky_field(&mut buf, field, config)?;
    Ok(buf)
}

/// Reads a field written by [`write_cholesky_field`].
pub fn read_cholesky_field<R: Read>(mut input: R) -> Result<(CholeskyFileHeader, CholeskyField)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> std::result::Result<[u8; N], FormatError> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(FormatError::Truncated {
                offset: self.bytes.len(),
                needed: end - self.bytes.len(),
            });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> std::result::Result<f32, FormatError> {
        let offset = self.pos;
        let v = f32::from_le_bytes(self.take()?);
        if !v.is_finite() {
            return Err(FormatError::NonFinite(offset));
        }
        Ok(v)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<(CholeskyFileHeader, CholeskyField)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 8] = match cur.take() {
        Ok(m) => m,
        Err(_) => {
            let mut partial = [0u8; 8];
            partial[..bytes.len()].copy_from_slice(bytes);
            if partial[..bytes.len()] != MAGIC[..bytes.len()] {
                return Err(FormatError::BadMagic(partial).into());
            }
            return Err(FormatError::Truncated {
                offset: bytes.len(),
                needed: HEADER_LEN - bytes.len(),
            }
            .into());
        }
    };
    if &magic != MAGIC {
        return Err(FormatError::BadMagic(magic).into());
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let header = CholeskyFileHeader {
        channels: cur.u32()?,
        bins: cur.u32()?,
        frames: cur.u32()?,
        frame_size: cur.u32()?,
        hop_size: cur.u32()?,
        sample_rate: cur.u32()?,
        epsilon: f64::from_le_bytes(cur.take()?),
    };
    header.check()?;

    let m = header.channels as usize;
    let count = header.bins as usize * header.frames as usize;
    let expected = HEADER_LEN + count * bytes_per_bin(m);
    if bytes.len() < expected {
        // report the offset of the first incomplete bin
        let complete = (bytes.len() - HEADER_LEN) / bytes_per_bin(m);
        return Err(FormatError::Truncated {
            offset: HEADER_LEN + complete * bytes_per_bin(m),
            needed: expected - bytes.len(),
        }
        .into());
    }
    if bytes.len() > expected {
        return Err(FormatError::Trailing(bytes.len() - expected).into());
    }

    let floor32 = header.epsilon as f32;
    let mut data = Vec::with_capacity(count);
    let mut diag = vec![(0usize, 0f32); m];
    for _ in 0..count {
        let mut l = CMatrix::zeros(m);
        for (i, d) in diag.iter_mut().enumerate() {
            for j in 0..i {
                let re = cur.f32()?;
                let im = cur.f32()?;
                l[(i, j)] = C64::new(re as f64, im as f64);
            }
            let offset = cur.pos;
            let v = cur.f32()?;
            if v < 0.0 {
                return Err(FormatError::NegativeDiagonal { offset, value: v }.into());
            }
            *d = (offset, v);
        }
        // an all-zero bin is a silent bin; anything else must respect the floor
        let silent = diag.iter().all(|&(_, v)| v == 0.0) && l.is_zero();
        if !silent {
            for (i, &(offset, v)) in diag.iter().enumerate() {
                if v < floor32 {
                    return Err(FormatError::BelowFloor {
                        offset,
                        value: v,
                        floor: header.epsilon,
                    }
                    .into());
                }
                // f32(ε) may sit just below ε; widen back onto the floor
                l[(i, i)] = C64::new((v as f64).max(header.epsilon), 0.0);
            }
        }
        data.push(l);
    }
    let field = CholeskyField::from_matrices(header.frames as usize, header.bins as usize, m, header.epsilon, data)
        .map_err(|e| match e {
            Error::InvalidInput(msg) => Error::Format(FormatError::Header(msg)),
            other => other,
        })?;
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cholesky::cholesky_assemble;

    fn small_field() -> (CholeskyField, StftConfig) {
        let cfg = StftConfig {
            frame_size: 4,
            hop_size: 2,
            ..Default::default()
        };
        let (t, f, m) = (2, 3, 3);
        let diag: Vec<f64> = (0..t * f * m).map(|i| i as f64 * 0.1 - 1.0).collect();
        let lower: Vec<C64> = (0..t * f * 3)
            .map(|i| C64::new(i as f64 * 0.25, -(i as f64) * 0.125))
            .collect();
        (cholesky_assemble(t, f, m, &diag, &lower, 1e-5).unwrap(), cfg)
    }

    #[test]
    fn six_channels_take_144_bytes_per_bin() {
        assert_eq!(bytes_per_bin(6), 144);
        assert_eq!(bytes_per_bin(1), 4);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (field, cfg) = small_field();
        let bytes = to_bytes(&field, &cfg).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 6 * bytes_per_bin(3));
        let (header, back) = from_bytes(&bytes).unwrap();
        assert_eq!(header.stft_config(), cfg);
        assert_eq!(to_bytes(&back, &cfg).unwrap(), bytes);
        for (a, b) in field.matrices().iter().zip(back.matrices()) {
            assert!((a - b).frobenius_norm() < 1e-5);
        }
    }

    #[test]
    fn corrupted_magic_rejected() {
        let (field, cfg) = small_field();
        let mut bytes = to_bytes(&field, &cfg).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError::BadMagic(_)))
        ));
        assert!(matches!(
            from_bytes(b"nope"),
            Err(Error::Format(FormatError::BadMagic(_)))
        ));
    }

    #[test]
    fn truncation_names_offset() {
        let (field, cfg) = small_field();
        let bytes = to_bytes(&field, &cfg).unwrap();
        let cut = HEADER_LEN + bytes_per_bin(3) + 7;
        match from_bytes(&bytes[..cut]) {
            Err(Error::Format(FormatError::Truncated { offset, .. })) => {
                assert_eq!(offset, HEADER_LEN + bytes_per_bin(3))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            from_bytes(&bytes[..20]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
    }

    #[test]
    fn bad_version_and_negative_diagonal() {
        let (field, cfg) = small_field();
        let mut bytes = to_bytes(&field, &cfg).unwrap();
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(
            from_bytes(&v2),
            Err(Error::Format(FormatError::UnsupportedVersion(2)))
        ));
        // first diagonal entry of the first bin
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError::NegativeDiagonal { offset: 44, .. }))
        ));
    }

    #[test]
    fn below_floor_rejected_and_extra_bytes() {
        let (field, cfg) = small_field();
        let mut bytes = to_bytes(&field, &cfg).unwrap();
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&(1e-7f32).to_le_bytes());
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError::BelowFloor { .. }))
        ));
        let mut long = to_bytes(&field, &cfg).unwrap();
        long.push(0);
        assert!(matches!(
            from_bytes(&long),
            Err(Error::Format(FormatError::Trailing(1)))
        ));
    }

    #[test]
    fn empty_field_rejected() {
        let cfg = StftConfig::default();
        let empty = CholeskyField::from_matrices(0, 257, 2, 1e-5, vec![]).unwrap();
        assert!(matches!(
            to_bytes(&empty, &cfg),
            Err(Error::Format(FormatError::Empty { .. }))
        ));
    }
}
