//! Direction-preserving multichannel Wiener filtering for small microphone
//! arrays.
//!
//! The pipeline runs an STFT ([`stft`]), estimates causal sliding spatial
//! covariances with a per-frequency scale normalization ([`covariance`]) and
//! applies a per-bin M×M filter ([`filter`]) that blends the speech-distortion
//! weighted Wiener filter with the identity, so that the residual noise keeps
//! its spatial character. Noise statistics come either from a noise-only
//! recording or from a Cholesky field written by an external estimator
//! ([`cholesky`], [`io::interchange`]).
//!
//! [`scene`] renders reproducible shoebox-room scenes, [`metrics`] scores the
//! output and [`pipeline`] ties the pieces together:
//!
//! ```no_run
//! use dpmwf::io::config::PipelineConfig;
//! use dpmwf::pipeline::{enhance, NoiseCovarianceSource};
//! use dpmwf::scene::{render_scene, sample_scene, synthetic_sources, ArrayGeometry, DEFAULT_MAX_ORDER};
//!
//! let spec = sample_scene(1)?;
//! let (speech, noises) = synthetic_sources(&spec);
//! let scene = render_scene(&spec, &speech, &noises, &ArrayGeometry::default(), DEFAULT_MAX_ORDER)?;
//! let out = enhance(&scene.mixture, NoiseCovarianceSource::Oracle(&scene.noise), &PipelineConfig::default())?;
//! assert_eq!(out.enhanced.len(), 6);
//! # Ok::<(), dpmwf::error::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cholesky;
pub mod commands;
pub mod covariance;
pub mod error;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod scene;
pub mod stft;
