//! Lower-triangular Cholesky parameterization of noise covariances.
//!
//! An estimator emits an unconstrained real value per diagonal entry and an
//! unconstrained complex value per strictly-lower entry. The diagonal passes
//! through `softplus(u) + ε`, which makes `L Lᴴ` Hermitian positive definite
//! for any raw input.

use crate::covariance::{CovarianceField, CovarianceKind};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};

pub const DEFAULT_DIAG_FLOOR: f64 = 1e-5;

/// Relative diagonal loading used when factorizing semidefinite matrices.
pub const FACTORIZE_LOADING: f64 = 1e-10;

/// Number of strictly-lower entries of an M×M matrix.
pub fn lower_count(channels: usize) -> usize {
    channels * channels.saturating_sub(1) / 2
}

/// `ln(1 + eᵘ)` without overflow for large `u`.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// T×F grid of lower-triangular factors with real diagonals `≥ ε`.
///
/// An all-zero matrix is also accepted for a bin; it is what [`factorize`]
/// returns for a silent (all-zero) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyField {
    frames: usize,
    bins: usize,
    channels: usize,
    diag_floor: f64,
    data: Vec<CMatrix>,
}

impl CholeskyField {
    pub fn from_matrices(
        frames: usize,
        bins: usize,
        channels: usize,
        diag_floor: f64,
        data: Vec<CMatrix>,
    ) -> Result<Self> {
        if !(diag_floor > 0.0) || !diag_floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diagonal floor must be positive, got {diag_floor}"
            )));
        }
        if data.len() != frames * bins {
            return Err(Error::mismatch("cholesky bins", frames * bins, data.len()));
        }
        for (idx, l) in data.iter().enumerate() {
            if l.dim() != channels {
                return Err(Error::mismatch("cholesky dimension", channels, l.dim()));
            }
            check_factor(l, diag_floor)
                .map_err(|msg| Error::InvalidInput(format!("bin {idx} (t={}, f={}): {msg}", idx / bins, idx % bins)))?;
        }
        Ok(Self {
            frames,
            bins,
            channels,
            diag_floor,
            data,
        })
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

    pub fn diag_floor(&self) -> f64 {
        self.diag_floor
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> &CMatrix {
        &self.data[t * self.bins + f]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.data
    }
}

fn check_factor(l: &CMatrix, floor: f64) -> std::result::Result<(), String> {
    if !l.is_finite() {
        return Err("non-finite entry".into());
    }
    let n = l.dim();
    for i in 0..n {
        for j in (i + 1)..n {
            if l[(i, j)] != ZERO {
                return Err(format!("entry ({i},{j}) above the diagonal is nonzero"));
            }
        }
    }
    if l.is_zero() {
        return Ok(());
    }
    for i in 0..n {
        let d = l[(i, i)];
        if d.im != 0.0 {
            return Err(format!("diagonal entry {i} is not real"));
        }
        if d.re < floor {
            return Err(format!("diagonal entry {i} = {} below floor {floor}", d.re));
        }
    }
    Ok(())
}

/// Builds a field from raw estimator outputs. `raw_diag` holds `T·F·M` reals
/// and `raw_lower` holds `T·F·M(M−1)/2` complex values, both frame-major with
/// the lower triangle in row-major order.
pub fn cholesky_assemble(
    frames: usize,
    bins: usize,
    channels: usize,
    raw_diag: &[f64],
    raw_lower: &[C64],
    eps: f64,
) -> Result<CholeskyField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    let lc = lower_count(channels);
    if raw_diag.len() != frames * bins * channels {
        return Err(Error::mismatch(
            "raw diagonal length",
            frames * bins * channels,
            raw_diag.len(),
        ));
    }
    if raw_lower.len() != frames * bins * lc {
        return Err(Error::mismatch("raw lower length", frames * bins * lc, raw_lower.len()));
    }
    if raw_diag.iter().any(|v| v.is_nan() || *v == f64::INFINITY)
        || raw_lower.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::NonFinite("raw cholesky values"));
    }
    let data = (0..frames * bins)
        .map(|b| {
            let diag = &raw_diag[b * channels..(b + 1) * channels];
            let mut lower = raw_lower[b * lc..(b + 1) * lc].iter();
            let mut l = CMatrix::zeros(channels);
            for i in 0..channels {
                for j in 0..i {
                    l[(i, j)] = *lower.next().expect("length checked");
                }
                l[(i, i)] = C64::new(softplus(diag[i]) + eps, 0.0);
            }
            l
        })
        .collect();
    CholeskyField::from_matrices(frames, bins, channels, eps, data)
}

/// `R = L Lᴴ` for every bin, exactly Hermitian.
pub fn reconstruct(chol: &CholeskyField) -> CovarianceField {
    let data = chol.data.iter().map(gram).collect();
    CovarianceField::from_matrices(chol.frames, chol.bins, chol.channels, CovarianceKind::Noise, data)
        .expect("shape preserved")
}

fn gram(l: &CMatrix) -> CMatrix {
    let n = l.dim();
    let mut r = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s: C64 = (0..=j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            if i == j {
                r[(i, i)] = C64::new(s.re, 0.0);
            } else {
                r[(i, j)] = s;
                r[(j, i)] = s.conj();
            }
        }
    }
    r
}

/// Counters from [`factorize`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactorizeReport {
    /// Bins that needed diagonal loading.
    pub loaded: usize,
    /// Bins that stayed indefinite after loading (flat index `t·F + f`).
    pub indefinite: Vec<usize>,
    /// Zero matrices mapped to the zero factor.
    pub zero: usize,
}

/// Cholesky factor of every bin. Semidefinite matrices get diagonal loading
/// `1e-10 · tr(R)/M`; diagonals are floored at `eps`. Bins that remain
/// indefinite are replaced by `eps·I` and listed in the report.
pub fn factorize(cov: &CovarianceField, eps: f64) -> Result<(CholeskyField, FactorizeReport)> {
    let mut report = FactorizeReport::default();
    let m = cov.channels();
    let mut data = Vec::with_capacity(cov.matrices().len());
    for (idx, r) in cov.matrices().iter().enumerate() {
        if r.is_zero() {
            report.zero += 1;
            data.push(CMatrix::zeros(m));
            continue;
        }
        let l = match r.cholesky() {
            Some(l) => Some(l),
            None => {
                report.loaded += 1;
                let load = FACTORIZE_LOADING * r.trace().re.max(0.0) / m as f64;
                r.add_scaled(&CMatrix::identity(m), load).cholesky()
            }
        };
        let mut l = match l {
            Some(l) => l,
            None => {
                report.indefinite.push(idx);
                CMatrix::scaled_identity(m, eps)
            }
        };
        for i in 0..m {
            if l[(i, i)].re < eps {
                l[(i, i)] = C64::new(eps, 0.0);
            }
        }
        data.push(l);
    }
    let field = CholeskyField::from_matrices(cov.frames(), cov.bins(), m, eps, data)?;
    Ok((field, report))
}
