// Oracle noise covariance -> Cholesky field -> interchange bytes and back,
// then the similarity and loss an external estimator would be scored with.

use std::error::Error;

use dpmwf::cholesky::reconstruct;
use dpmwf::io::config::PipelineConfig;
use dpmwf::io::interchange::{bytes_per_bin, from_bytes, to_bytes, HEADER_LEN};
use dpmwf::metrics::{cholesky_loss, field_similarity};
use dpmwf::pipeline::oracle_cholesky;
use dpmwf::scene::{render_scene, sample_scene_with, synthetic_sources, ArrayGeometry, SceneRanges};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ranges = SceneRanges {
        duration_s: 0.5,
        ..SceneRanges::default()
    };
    let spec = sample_scene_with(11, &ranges)?;
    let (speech, noises) = synthetic_sources(&spec);
    let scene = render_scene(&spec, &speech, &noises, &ArrayGeometry::default(), 3)?;

    let config = PipelineConfig::default();
    let (field, report) = oracle_cholesky(&scene.mixture, &scene.noise, &config)?;
    println!(
        "{} x {} bins, M = {}, {} loaded, {} indefinite",
        field.frames(),
        field.bins(),
        field.channels(),
        report.loaded,
        report.indefinite.len()
    );

    let bytes = to_bytes(&field, &config.stft)?;
    println!(
        "{} bytes = {HEADER_LEN} header + {} bins x {} bytes",
        bytes.len(),
        field.frames() * field.bins(),
        bytes_per_bin(field.channels())
    );

    let (header, back) = from_bytes(&bytes)?;
    let sim = field_similarity(&reconstruct(&back), &reconstruct(&field))?;
    let loss = cholesky_loss(&back, &field)?;
    println!("header {:?}", header.stft_config());
    println!("CovSim {sim:.12}, L_Chol {loss:.3e} (32-bit payload)");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
