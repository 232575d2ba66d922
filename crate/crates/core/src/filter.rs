//! MIMO Wiener filters and the direction-preserving mixture.
//!
//! For covariances `Rxx` (mixture) and `Rnn` (noise) the filters are
//!
//! ```text
//! W_MWF  = I − Rnn Rxx⁻¹
//! W_μν   = (Rxx − Rnn)(Rxx + (μ+ν−1) Rnn)⁻¹ = I − (μ+ν) Rnn (Rxx + (μ+ν−1) Rnn)⁻¹
//! a′     = a + (1−a) ν tr(W_μν Rnn) / (μ tr(Rnn) + ν tr(W_μν Rnn))
//! W_DP   = (1−a′) W_μν + a′ I
//! ```
//!
//! All inverses go through a Cholesky solve of the Hermitian denominator.
//! When the factor's condition estimate exceeds [`CONDITION_LIMIT`] (or the
//! factorization fails) the denominator is loaded with
//! `LOADING · tr(D)/M · I` and solved again; if that still fails the bin's
//! Wiener component is set to zero and counted as singular.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceField;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::stft::MultichannelSpectrogram;

pub const CONDITION_LIMIT: f64 = 1e12;
pub const LOADING: f64 = 1e-10;
const MIXING_DENOM_GUARD: f64 = 1e-30;

/// DP-MWF knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Lower bound on the identity mixing, in `[0, 1]`.
    pub a: f64,
    /// Noise-reduction / speech-distortion trade-off, `≥ 0`.
    pub mu: f64,
    /// Strength of the direction-preserving term, `≥ 0`.
    pub nu: f64,
    /// Causal covariance averaging window in milliseconds.
    pub window_ms: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            a: 0.0,
            mu: 1.0,
            nu: 8.0,
            window_ms: 100.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::InvalidParameter(format!("a must be in [0,1], got {}", self.a)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be >= 0, got {}", self.nu)));
        }
        if self.mu + self.nu < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "mu + nu = {} < 1 can make Rxx + (mu+nu-1)Rnn indefinite",
                self.mu + self.nu
            )));
        }
        if !(self.window_ms > 0.0) || !self.window_ms.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window_ms must be positive, got {}",
                self.window_ms
            )));
        }
        Ok(())
    }
}

/// One filter evaluation plus what happened on the way.
#[derive(Debug, Clone)]
struct Evaluated {
    w: CMatrix,
    loaded: bool,
    singular: bool,
}

/// `D⁻¹ B` for Hermitian `D`, with the conditional loading policy.
/// Returns `(solution, loaded)`; `None` when `D` stays singular.
fn solve_hermitian(d: &CMatrix, b: &CMatrix) -> (Option<CMatrix>, bool) {
    if let Some(l) = d.cholesky() {
        if condition_estimate(&l) <= CONDITION_LIMIT {
            return (Some(l.cholesky_solve(b)), false);
        }
    }
    let m = d.dim();
    let load = LOADING * d.trace().re / m as f64;
    if !(load > 0.0) {
        return (None, true);
    }
    let loaded = d.add_scaled(&CMatrix::identity(m), load);
    (loaded.cholesky().map(|l| l.cholesky_solve(b)), true)
}

/// `(max Lᵢᵢ / min Lᵢᵢ)²`, a cheap lower bound on the 2-norm condition number.
fn condition_estimate(l: &CMatrix) -> f64 {
    let (lo, hi) = (0..l.dim())
        .map(|i| l[(i, i)].re)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    (hi / lo).powi(2)
}

/// `I − scale · Rnn D⁻¹`, computed as `I − scale · (D⁻¹ Rnn)ᴴ`.
fn identity_minus(d: &CMatrix, rnn: &CMatrix, scale: f64) -> Evaluated {
    let m = d.dim();
    if d.is_zero() {
        return Evaluated {
            w: CMatrix::zeros(m),
            loaded: false,
            singular: false,
        };
    }
    match solve_hermitian(d, rnn) {
        (Some(y), loaded) => {
            let mut w = CMatrix::identity(m);
            for i in 0..m {
                for j in 0..m {
                    w[(i, j)] -= y[(j, i)].conj() * scale;
                }
            }
            Evaluated {
                w,
                loaded,
                singular: false,
            }
        }
        (None, loaded) => Evaluated {
            w: CMatrix::zeros(m),
            loaded,
            singular: true,
        },
    }
}

/// Multichannel Wiener filter `I − Rnn Rxx⁻¹`. An all-zero `Rxx` yields the
/// zero filter.
pub fn mwf(rxx: &CMatrix, rnn: &CMatrix) -> CMatrix {
    identity_minus(rxx, rnn, 1.0).w
}

fn w_mu_nu_eval(rxx: &CMatrix, rnn: &CMatrix, mu: f64, nu: f64) -> Evaluated {
    let d = rxx.add_scaled(rnn, mu + nu - 1.0);
    identity_minus(&d, rnn, mu + nu)
}

/// Parametric Wiener component `(Rxx − Rnn)(Rxx + (μ+ν−1)Rnn)⁻¹`.
pub fn w_mu_nu(rxx: &CMatrix, rnn: &CMatrix, mu: f64, nu: f64) -> CMatrix {
    w_mu_nu_eval(rxx, rnn, mu, nu).w
}

/// Mixing factor with a flag telling whether anything had to be clamped
/// (negative `Re tr(W Rnn)` or a raw value outside `[a, 1]`).
fn mixing_factor_eval(w: &CMatrix, rnn: &CMatrix, a: f64, mu: f64, nu: f64) -> (f64, bool) {
    let m = w.dim();
    let tau_n = rnn.trace().re;
    let mut raw_tau_w = 0.0;
    for i in 0..m {
        for k in 0..m {
            raw_tau_w += (w[(i, k)] * rnn[(k, i)]).re;
        }
    }
    let mut clamped = raw_tau_w < 0.0;
    let tau_w = raw_tau_w.max(0.0);
    let denom = mu * tau_n + nu * tau_w;
    if !(denom > MIXING_DENOM_GUARD) {
        return (a, clamped);
    }
    let raw = a + (1.0 - a) * nu * tau_w / denom;
    if !(a..=1.0).contains(&raw) {
        clamped = true;
    }
    (raw.clamp(a, 1.0), clamped)
}

/// Signal-dependent identity mixing `a′ ∈ [a, 1]`.
pub fn mixing_factor(w: &CMatrix, rnn: &CMatrix, a: f64, mu: f64, nu: f64) -> f64 {
    mixing_factor_eval(w, rnn, a, mu, nu).0
}

struct DpEvaluated {
    w: CMatrix,
    mixing: f64,
    loaded: bool,
    singular: bool,
    clamped: bool,
}

fn dp_mwf_eval(rxx: &CMatrix, rnn: &CMatrix, p: &FilterParams) -> DpEvaluated {
    let wmn = w_mu_nu_eval(rxx, rnn, p.mu, p.nu);
    let (mixing, clamped) = mixing_factor_eval(&wmn.w, rnn, p.a, p.mu, p.nu);
    let mut w = wmn.w.scale(1.0 - mixing);
    for i in 0..w.dim() {
        w[(i, i)] += C64::new(mixing, 0.0);
    }
    DpEvaluated {
        w,
        mixing,
        loaded: wmn.loaded,
        singular: wmn.singular,
        clamped,
    }
}

/// Direction-preserving MIMO Wiener filter `(1−a′) W_μν + a′ I`.
pub fn dp_mwf(rxx: &CMatrix, rnn: &CMatrix, params: &FilterParams) -> CMatrix {
    dp_mwf_eval(rxx, rnn, params).w
}

/// Aggregate counters from building a filter field.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterStats {
    pub bins: usize,
    /// Bins whose denominator needed diagonal loading.
    pub regularized: usize,
    /// Bins whose denominator stayed singular (Wiener part set to zero).
    pub singular: usize,
    /// Bins where the mixing factor had to be clamped.
    pub mixing_clamped: usize,
    pub mixing_min: f64,
    pub mixing_max: f64,
    pub mixing_mean: f64,
}

/// T×F grid of M×M filters.
#[derive(Debug, Clone)]
pub struct FilterField {
    frames: usize,
    bins: usize,
    channels: usize,
    data: Vec<CMatrix>,
    stats: FilterStats,
}

impl FilterField {
    pub fn from_matrices(frames: usize, bins: usize, channels: usize, data: Vec<CMatrix>) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::mismatch("filter bins", frames * bins, data.len()));
        }
        if let Some(m) = data.iter().find(|m| m.dim() != channels) {
            return Err(Error::mismatch("filter dimension", channels, m.dim()));
        }
        if data.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("filter field"));
        }
        Ok(Self {
            frames,
            bins,
            channels,
            stats: FilterStats {
                bins: data.len(),
                ..Default::default()
            },
            data,
        })
    }

    /// The same matrix at every bin.
    pub fn constant(frames: usize, bins: usize, w: CMatrix) -> Self {
        let channels = w.dim();
        Self::from_matrices(frames, bins, channels, vec![w; frames * bins]).expect("consistent")
    }

    pub fn identity(frames: usize, bins: usize, channels: usize) -> Self {
        Self::constant(frames, bins, CMatrix::identity(channels))
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

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> &CMatrix {
        &self.data[t * self.bins + f]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.data
    }

    pub fn stats(&self) -> &FilterStats {
        &self.stats
    }
}

/// Evaluates [`dp_mwf`] at every bin.
pub fn build_filter_field(rxx: &CovarianceField, rnn: &CovarianceField, params: &FilterParams) -> Result<FilterField> {
    params.validate()?;
    rxx.check_same_shape(rnn)?;
    let evaluated: Vec<DpEvaluated> = rxx
        .matrices()
        .par_iter()
        .zip(rnn.matrices().par_iter())
        .map(|(x, n)| dp_mwf_eval(x, n, params))
        .collect();

    let count = evaluated.len();
    let mut stats = FilterStats {
        bins: count,
        mixing_min: f64::INFINITY,
        mixing_max: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut sum = 0.0;
    for e in &evaluated {
        stats.regularized += e.loaded as usize;
        stats.singular += e.singular as usize;
        stats.mixing_clamped += e.clamped as usize;
        stats.mixing_min = stats.mixing_min.min(e.mixing);
        stats.mixing_max = stats.mixing_max.max(e.mixing);
        sum += e.mixing;
    }
    stats.mixing_mean = if count > 0 { sum / count as f64 } else { 0.0 };
    if count == 0 {
        stats.mixing_min = 0.0;
        stats.mixing_max = 0.0;
    }
    let data: Vec<CMatrix> = evaluated.into_iter().map(|e| e.w).collect();
    if data.iter().any(|m| !m.is_finite()) {
        return Err(Error::Numerical("filter field contains non-finite entries".into()));
    }
    Ok(FilterField {
        frames: rxx.frames(),
        bins: rxx.bins(),
        channels: rxx.channels(),
        data,
        stats,
    })
}

/// `y(t,f) = W(t,f) x(t,f)`
pub fn apply_filter(w: &FilterField, spec: &MultichannelSpectrogram) -> Result<MultichannelSpectrogram> {
    if w.channels != spec.channels() {
        return Err(Error::mismatch("channel count", w.channels, spec.channels()));
    }
    if w.bins != spec.bins() {
        return Err(Error::mismatch("frequency bins", w.bins, spec.bins()));
    }
    if w.frames != spec.frames() {
        return Err(Error::mismatch("frames", w.frames, spec.frames()));
    }
    let mut out = spec.clone();
    for t in 0..w.frames {
        for f in 0..w.bins {
            w.get(t, f).mul_vec_into(spec.bin(t, f), out.bin_mut(t, f));
        }
    }
    Ok(out)
}
