// SRP map of an anechoic source, before and after enhancement, and the
// peak azimuth in the 500-2000 Hz band.

use std::error::Error;

use dpmwf::io::config::PipelineConfig;
use dpmwf::metrics::{srp_map, SteeringGrid};
use dpmwf::pipeline::{enhance, NoiseCovarianceSource};
use dpmwf::scene::{azimuth_deg, render_scene, synthetic_sources, ArrayGeometry, SceneSpec};
use dpmwf::stft::analyze;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SceneSpec {
        room_dims: [7.0, 6.0, 3.0],
        rt60: 0.3,
        array_center: [3.5, 3.0, 1.4],
        speech_source: [5.2, 4.3, 1.6],
        noise_sources: vec![[1.5, 1.2, 1.2]],
        snr_db: 5.0,
        seed: 4,
        duration_s: 1.0,
        sample_rate: 32_000,
    };
    let geometry = ArrayGeometry::default();
    let (speech, noises) = synthetic_sources(&spec);
    let scene = render_scene(&spec, &speech, &noises, &geometry, 0)?;
    let config = PipelineConfig::default();
    let grid = SteeringGrid::uniform(1.0, &config.stft, geometry.clone())?;

    let out = enhance(&scene.mixture, NoiseCovarianceSource::Oracle(&scene.noise), &config)?;
    println!(
        "target {:6.1} deg",
        azimuth_deg(&spec.array_center, &spec.speech_source)
    );
    println!(
        "noise  {:6.1} deg",
        azimuth_deg(&spec.array_center, &spec.noise_sources[0])
    );
    for (label, x) in [
        ("clean", &scene.clean),
        ("mixture", &scene.mixture),
        ("enhanced", &out.enhanced),
    ] {
        let map = srp_map(&analyze(x, &config.stft)?, &grid, config.filter.window_ms)?;
        println!("{label:>8}: peak {:6.1} deg", map.peak_azimuth(500.0, 2000.0));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
