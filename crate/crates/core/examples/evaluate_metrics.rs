// Full metric table for an oracle run and for an estimate-driven run,
// where the "estimate" is the oracle field nudged by 10 % per bin.

use std::error::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dpmwf::cholesky::CholeskyField;
use dpmwf::io::config::PipelineConfig;
use dpmwf::linalg::{CMatrix, C64};
use dpmwf::pipeline::{enhance, evaluate, oracle_cholesky, write_metrics_csv, EvaluationInputs, NoiseCovarianceSource};
use dpmwf::scene::{azimuth_deg, render_scene, sample_scene_with, synthetic_sources, ArrayGeometry, SceneRanges};

fn nudge(field: &CholeskyField, ratio: f64, seed: u64) -> Result<CholeskyField, Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
    let eps = field.diag_floor();
    let data = field
        .matrices()
        .iter()
        .map(|l| {
            let m = l.dim();
            let e = CMatrix::from_fn(m, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Greater => C64::new(g(), g()),
                std::cmp::Ordering::Equal => C64::new(g(), 0.0),
                std::cmp::Ordering::Less => C64::new(0.0, 0.0),
            });
            let mut out = l.add_scaled(&e, ratio * l.frobenius_norm() / e.frobenius_norm().max(1e-300));
            for i in 0..m {
                out[(i, i)] = C64::new(out[(i, i)].re.max(eps), 0.0);
            }
            out
        })
        .collect();
    Ok(CholeskyField::from_matrices(
        field.frames(),
        field.bins(),
        field.channels(),
        eps,
        data,
    )?)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ranges = SceneRanges {
        duration_s: 1.0,
        ..SceneRanges::default()
    };
    let spec = sample_scene_with(8, &ranges)?;
    let geometry = ArrayGeometry::default();
    let (speech, noises) = synthetic_sources(&spec);
    let scene = render_scene(&spec, &speech, &noises, &geometry, 4)?;
    let config = PipelineConfig::default();
    let target = azimuth_deg(&spec.array_center, &spec.speech_source);

    let (oracle, _) = oracle_cholesky(&scene.mixture, &scene.noise, &config)?;
    let estimate = nudge(&oracle, 0.1, 1)?;

    for (label, source) in [
        ("oracle", NoiseCovarianceSource::Oracle(&scene.noise)),
        ("estimate", NoiseCovarianceSource::Estimate(&estimate)),
    ] {
        let out = enhance(&scene.mixture, source, &config)?;
        let rows = evaluate(
            &EvaluationInputs {
                enhanced: &out.enhanced,
                clean: &scene.clean,
                noise: &scene.noise,
                estimate: matches!(source, NoiseCovarianceSource::Estimate(_)).then_some(&estimate),
                geometry: &geometry,
                target_azimuth_deg: Some(target),
            },
            &config,
        )?;
        println!("# {label}");
        write_metrics_csv(std::io::stdout().lock(), &rows)?;
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
