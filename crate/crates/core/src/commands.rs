//! File-to-file front ends for the command-line tool.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cholesky::CholeskyField;
use crate::error::{Error, Result};
use crate::io::config::PipelineConfig;
use crate::io::interchange::{read_cholesky_field, write_cholesky_field};
use crate::io::wav::{read_wav, write_wav, Audio};
use crate::io::write_atomic;
use crate::metrics::{srp_map, SrpMap, SteeringGrid};
use crate::pipeline::{
    enhance, evaluate, oracle_cholesky, write_metrics_csv, EnhanceReport, EvaluationInputs, MetricRow,
    NoiseCovarianceSource,
};
use crate::scene::{azimuth_deg, render_scene, synthetic_sources, ArrayGeometry, SceneFile};
use crate::stft::{analyze, StftConfig};

fn read_at_rate(path: &Path, sample_rate: u32) -> Result<Audio> {
    let audio = read_wav(path)?;
    if audio.sample_rate != sample_rate {
        return Err(Error::InvalidInput(format!(
            "{}: sample rate {} Hz, expected {} Hz (resample beforehand)",
            path.display(),
            audio.sample_rate,
            sample_rate
        )));
    }
    Ok(audio)
}

/// Loads an interchange file and checks its STFT settings against `config`.
pub fn load_estimate(path: &Path, config: &StftConfig) -> Result<CholeskyField> {
    let file = File::open(path)?;
    let (header, field) = read_cholesky_field(std::io::BufReader::new(file))?;
    let theirs = header.stft_config();
    if (theirs.frame_size, theirs.hop_size, theirs.sample_rate)
        != (config.frame_size, config.hop_size, config.sample_rate)
    {
        return Err(Error::InvalidInput(format!(
            "{}: written for {}/{} at {} Hz, pipeline uses {}/{} at {} Hz",
            path.display(),
            theirs.frame_size,
            theirs.hop_size,
            theirs.sample_rate,
            config.frame_size,
            config.hop_size,
            config.sample_rate
        )));
    }
    Ok(field)
}

pub fn save_estimate(path: &Path, field: &CholeskyField, config: &StftConfig) -> Result<()> {
    write_atomic(path, |w| write_cholesky_field(w, field, config))
}

/// Noise information handed to [`run_enhance`].
#[derive(Debug, Clone)]
pub enum NoiseInput {
    OracleWav(PathBuf),
    Interchange(PathBuf),
}

/// Enhances a mixture WAV into `output`; optionally writes the run report
/// as TOML.
pub fn run_enhance(
    mixture: &Path,
    noise: &NoiseInput,
    config: &PipelineConfig,
    output: &Path,
    report: Option<&Path>,
) -> Result<EnhanceReport> {
    config.validate()?;
    let rate = config.stft.sample_rate;
    let x = read_at_rate(mixture, rate)?;
    let out = match noise {
        NoiseInput::OracleWav(path) => {
            let n = read_at_rate(path, rate)?;
            enhance(&x.channels, NoiseCovarianceSource::Oracle(&n.channels), config)?
        }
        NoiseInput::Interchange(path) => {
            let field = load_estimate(path, &config.stft)?;
            enhance(&x.channels, NoiseCovarianceSource::Estimate(&field), config)?
        }
    };
    write_wav(output, &out.enhanced, rate)?;
    if let Some(path) = report {
        let text = toml::to_string(&out.report).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    Ok(out.report)
}

/// Paths and options for [`run_evaluate`].
#[derive(Debug, Clone, Default)]
pub struct EvaluateArgs {
    pub enhanced: PathBuf,
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub estimate: Option<PathBuf>,
    /// Scene file supplying array geometry and target direction.
    pub scene: Option<PathBuf>,
    pub target_azimuth_deg: Option<f64>,
    /// CSV destination; `None` returns the rows only.
    pub output: Option<PathBuf>,
}

pub fn run_evaluate(args: &EvaluateArgs, config: &PipelineConfig) -> Result<Vec<MetricRow>> {
    config.validate()?;
    let rate = config.stft.sample_rate;
    let enhanced = read_at_rate(&args.enhanced, rate)?;
    let clean = read_at_rate(&args.clean, rate)?;
    let noise = read_at_rate(&args.noise, rate)?;
    let estimate = args
        .estimate
        .as_deref()
        .map(|p| load_estimate(p, &config.stft))
        .transpose()?;
    let scene = args.scene.as_deref().map(SceneFile::load).transpose()?;
    let geometry = scene.as_ref().map_or_else(ArrayGeometry::default, |s| s.array.clone());
    let target = args.target_azimuth_deg.or_else(|| {
        scene
            .as_ref()
            .map(|s| azimuth_deg(&s.scene.array_center, &s.scene.speech_source))
    });
    let rows = evaluate(
        &EvaluationInputs {
            enhanced: &enhanced.channels,
            clean: &clean.channels,
            noise: &noise.channels,
            estimate: estimate.as_ref(),
            geometry: &geometry,
            target_azimuth_deg: target,
        },
        config,
    )?;
    if let Some(path) = &args.output {
        write_atomic(path, |w| write_metrics_csv(w, &rows))?;
    }
    Ok(rows)
}

/// Scene source and rendering options for [`run_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scene: SceneFile,
    /// Mono speech WAV; synthetic material when absent.
    pub speech: Option<PathBuf>,
    /// Mono noise WAVs, assigned to noise sources in turn.
    pub noises: Vec<PathBuf>,
    pub out_dir: PathBuf,
    /// Also write the scale-normalized oracle noise Cholesky field.
    pub cholesky: Option<PipelineConfig>,
}

/// Files produced by [`run_simulate`].
#[derive(Debug, Clone)]
pub struct SimulatedFiles {
    pub mixture: PathBuf,
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub scene: PathBuf,
    pub cholesky: Option<PathBuf>,
}

fn read_mono(path: &Path, sample_rate: u32) -> Result<Vec<f64>> {
    let audio = read_at_rate(path, sample_rate)?;
    match <[Vec<f64>; 1]>::try_from(audio.channels) {
        Ok([ch]) => Ok(ch),
        Err(chs) => Err(Error::InvalidInput(format!(
            "{}: source files must be mono, found {} channels",
            path.display(),
            chs.len()
        ))),
    }
}

/// Renders a scene to `mixture.wav`, `clean.wav`, `noise.wav` and
/// `scene.toml` in `out_dir`. When fewer noise files than noise sources are
/// given, files are reused with a circular shift of `k/uses` of their length
/// on the k-th reuse.
pub fn run_simulate(args: &SimulateArgs) -> Result<SimulatedFiles> {
    let spec = &args.scene.scene;
    let rate = spec.sample_rate;
    spec.validate(&args.scene.array)?;
    let (synthetic_speech, synthetic_noise) = synthetic_sources(spec);
    let speech = match &args.speech {
        Some(p) => read_mono(p, rate)?,
        None => synthetic_speech,
    };
    let noises = if args.noises.is_empty() {
        synthetic_noise
    } else {
        let files: Vec<Vec<f64>> = args.noises.iter().map(|p| read_mono(p, rate)).collect::<Result<_>>()?;
        let count = spec.noise_sources.len();
        let uses = count.div_ceil(files.len());
        (0..count)
            .map(|i| {
                let src = &files[i % files.len()];
                let shift = (i / files.len()) * src.len() / uses;
                let mut v = src.clone();
                v.rotate_left(shift);
                v
            })
            .collect()
    };
    let rendered = render_scene(spec, &speech, &noises, &args.scene.array, args.scene.max_order)?;

    fs::create_dir_all(&args.out_dir)?;
    let files = SimulatedFiles {
        mixture: args.out_dir.join("mixture.wav"),
        clean: args.out_dir.join("clean.wav"),
        noise: args.out_dir.join("noise.wav"),
        scene: args.out_dir.join("scene.toml"),
        cholesky: args.cholesky.map(|_| args.out_dir.join("noise.chol")),
    };
    write_wav(&files.mixture, &rendered.mixture, rate)?;
    write_wav(&files.clean, &rendered.clean, rate)?;
    write_wav(&files.noise, &rendered.noise, rate)?;
    let text = args.scene.to_toml()?;
    write_atomic(&files.scene, |w| Ok(w.write_all(text.as_bytes())?))?;
    if let (Some(config), Some(path)) = (&args.cholesky, &files.cholesky) {
        if config.stft.sample_rate != rate {
            return Err(Error::InvalidParameter(format!(
                "scene renders at {rate} Hz but the pipeline expects {} Hz",
                config.stft.sample_rate
            )));
        }
        let (field, _) = oracle_cholesky(&rendered.mixture, &rendered.noise, config)?;
        save_estimate(path, &field, &config.stft)?;
    }
    Ok(files)
}

/// Options for [`run_srp_map`].
#[derive(Debug, Clone)]
pub struct SrpArgs {
    pub input: PathBuf,
    pub csv: PathBuf,
    pub pgm: Option<PathBuf>,
    pub azimuth_step_deg: f64,
    pub range_db: f64,
    pub geometry: ArrayGeometry,
}

pub fn run_srp_map(args: &SrpArgs, config: &PipelineConfig) -> Result<SrpMap> {
    config.validate()?;
    let audio = read_at_rate(&args.input, config.stft.sample_rate)?;
    let spec = analyze(&audio.channels, &config.stft)?;
    let grid = SteeringGrid::uniform(args.azimuth_step_deg, &config.stft, args.geometry.clone())?;
    let map = srp_map(&spec, &grid, config.filter.window_ms)?;
    write_atomic(&args.csv, |w| map.write_csv(w))?;
    if let Some(path) = &args.pgm {
        write_atomic(path, |w| map.write_pgm(w, args.range_db))?;
    }
    Ok(map)
}
