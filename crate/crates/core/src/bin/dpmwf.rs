use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpmwf::commands::{
    run_enhance, run_evaluate, run_simulate, run_srp_map, EvaluateArgs, NoiseInput, SimulateArgs, SrpArgs,
};
use dpmwf::error::{Error, Result};
use dpmwf::io::config::{resolve, ConfigOverrides, NoiseSourceKind, PipelineConfig};
use dpmwf::pipeline::write_metrics_csv;
use dpmwf::scene::{sample_scene, ArrayGeometry, SceneFile};

/// Direction-preserving multichannel Wiener filtering.
#[derive(Parser)]
#[command(name = "dpmwf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a shoebox scene to mixture/clean/noise WAVs.
    Simulate(SimulateCmd),
    /// Enhance a multichannel mixture.
    Enhance(EnhanceCmd),
    /// Write the metric table for an enhanced signal.
    Evaluate(EvaluateCmd),
    /// Steered response power map of a multichannel recording.
    SrpMap(SrpCmd),
}

/// Pipeline settings; a `--config` file overrides these flags.
#[derive(Args, Default)]
struct PipelineFlags {
    /// Flat TOML pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Covariance averaging window (ms).
    #[arg(long)]
    window_ms: Option<f64>,
    #[arg(long)]
    frame_size: Option<usize>,
    #[arg(long)]
    hop_size: Option<usize>,
    #[arg(long)]
    sample_rate: Option<u32>,
    #[arg(long)]
    lambda_chol: Option<f64>,
    /// oracle | interchange
    #[arg(long)]
    noise_source: Option<NoiseSourceKind>,
    /// Cholesky diagonal floor.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl PipelineFlags {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            a: self.a,
            mu: self.mu,
            nu: self.nu,
            window_ms: self.window_ms,
            frame_size: self.frame_size,
            hop_size: self.hop_size,
            sample_rate: self.sample_rate,
            lambda_chol: self.lambda_chol,
            noise_source: self.noise_source,
            epsilon: self.epsilon,
        }
    }

    fn file(&self) -> Result<Option<ConfigOverrides>> {
        self.config.as_deref().map(ConfigOverrides::load).transpose()
    }

    fn resolve(&self) -> Result<PipelineConfig> {
        resolve(&self.overrides(), self.file()?.as_ref())
    }

    /// Noise source named by the config file or flags, if any.
    fn explicit_noise_source(&self) -> Result<Option<NoiseSourceKind>> {
        Ok(self.file()?.and_then(|f| f.noise_source).or(self.noise_source))
    }
}

#[derive(Args)]
struct SimulateCmd {
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
    /// Scene file; a random scene is drawn from `--seed` otherwise.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    max_order: Option<u32>,
    /// Mono speech WAV (synthetic speech otherwise).
    #[arg(long)]
    speech: Option<PathBuf>,
    /// Mono noise WAV; repeatable.
    #[arg(long = "noise")]
    noises: Vec<PathBuf>,
    /// Also write the oracle noise Cholesky field as noise.chol.
    #[arg(long)]
    write_cholesky: bool,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct EnhanceCmd {
    /// Multichannel mixture WAV.
    mixture: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Noise-only WAV for the oracle covariance.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Interchange file with a scale-normalized noise Cholesky field.
    #[arg(long)]
    cholesky: Option<PathBuf>,
    /// Write the run report (TOML).
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    enhanced: PathBuf,
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    /// Interchange file the enhanced signal was produced with.
    #[arg(long)]
    cholesky: Option<PathBuf>,
    /// Scene file for array geometry and target direction.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Target azimuth in degrees (overrides the scene file).
    #[arg(long, allow_negative_numbers = true)]
    target_azimuth: Option<f64>,
    /// CSV output (stdout otherwise).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct SrpCmd {
    /// Multichannel WAV.
    input: PathBuf,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Azimuth grid step (degrees).
    #[arg(long, default_value_t = 5.0)]
    step: f64,
    /// Dynamic range of the PGM image (dB below the map maximum).
    #[arg(long, default_value_t = 40.0)]
    range_db: f64,
    /// Scene file supplying the array geometry.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

fn simulate(cmd: SimulateCmd) -> Result<()> {
    let mut file = match &cmd.scene {
        Some(path) => SceneFile::load(path)?,
        None => SceneFile::new(sample_scene(cmd.seed)?),
    };
    if let Some(d) = cmd.duration {
        file.scene.duration_s = d;
    }
    if let Some(snr) = cmd.snr_db {
        file.scene.snr_db = snr;
    }
    if let Some(order) = cmd.max_order {
        file.max_order = order;
    }
    let cholesky = if cmd.write_cholesky {
        Some(cmd.pipeline.resolve()?)
    } else {
        None
    };
    let out = run_simulate(&SimulateArgs {
        scene: file,
        speech: cmd.speech,
        noises: cmd.noises,
        out_dir: cmd.out_dir,
        cholesky,
    })?;
    eprintln!("wrote {}", out.mixture.parent().unwrap_or(&out.mixture).display());
    Ok(())
}

fn enhance(cmd: EnhanceCmd) -> Result<()> {
    let config = cmd.pipeline.resolve()?;
    let kind = match cmd.pipeline.explicit_noise_source()? {
        Some(kind) => kind,
        None if cmd.cholesky.is_some() => NoiseSourceKind::Interchange,
        None => NoiseSourceKind::Oracle,
    };
    let noise = match (kind, cmd.noise, cmd.cholesky) {
        (NoiseSourceKind::Oracle, Some(p), _) => NoiseInput::OracleWav(p),
        (NoiseSourceKind::Interchange, _, Some(p)) => NoiseInput::Interchange(p),
        (NoiseSourceKind::Oracle, None, _) => {
            return Err(Error::Config("oracle noise source needs --noise <wav>".into()))
        }
        (NoiseSourceKind::Interchange, _, None) => {
            return Err(Error::Config("interchange noise source needs --cholesky <file>".into()))
        }
    };
    let report = run_enhance(&cmd.mixture, &noise, &config, &cmd.output, cmd.report.as_deref())?;
    let f = &report.filter;
    eprintln!(
        "{} bins, a' in [{:.4}, {:.4}] (mean {:.4}), {} regularized, {} singular",
        f.bins, f.mixing_min, f.mixing_max, f.mixing_mean, f.regularized, f.singular
    );
    Ok(())
}

fn evaluate(cmd: EvaluateCmd) -> Result<()> {
    let config = cmd.pipeline.resolve()?;
    let rows = run_evaluate(
        &EvaluateArgs {
            enhanced: cmd.enhanced,
            clean: cmd.clean,
            noise: cmd.noise,
            estimate: cmd.cholesky,
            scene: cmd.scene,
            target_azimuth_deg: cmd.target_azimuth,
            output: cmd.output.clone(),
        },
        &config,
    )?;
    if cmd.output.is_none() {
        write_metrics_csv(std::io::stdout().lock(), &rows)?;
    }
    Ok(())
}

fn srp(cmd: SrpCmd) -> Result<()> {
    let config = cmd.pipeline.resolve()?;
    let geometry = match &cmd.scene {
        Some(path) => SceneFile::load(path)?.array,
        None => ArrayGeometry::default(),
    };
    run_srp_map(
        &SrpArgs {
            input: cmd.input,
            csv: cmd.csv,
            pgm: cmd.pgm,
            azimuth_step_deg: cmd.step,
            range_db: cmd.range_db,
            geometry,
        },
        &config,
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Enhance(c) => enhance(c),
        Command::Evaluate(c) => evaluate(c),
        Command::SrpMap(c) => srp(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
