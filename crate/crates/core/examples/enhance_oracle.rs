// Oracle-noise DP-MWF on a simulated scene, swept over ν.

use std::error::Error;

use dpmwf::io::config::PipelineConfig;
use dpmwf::metrics::si_sdr;
use dpmwf::pipeline::{enhance, NoiseCovarianceSource};
use dpmwf::scene::{render_scene, sample_scene_with, synthetic_sources, ArrayGeometry, SceneRanges};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ranges = SceneRanges {
        duration_s: 1.0,
        snr_db: (0.0, 0.0),
        ..SceneRanges::default()
    };
    let spec = sample_scene_with(3, &ranges)?;
    let (speech, noises) = synthetic_sources(&spec);
    let scene = render_scene(&spec, &speech, &noises, &ArrayGeometry::default(), 4)?;

    println!("unprocessed SI-SDR {:6.2} dB", si_sdr(&scene.mixture, &scene.clean)?);
    for nu in [0.0, 2.0, 8.0, 32.0] {
        let mut config = PipelineConfig::default();
        config.filter.nu = nu;
        let out = enhance(&scene.mixture, NoiseCovarianceSource::Oracle(&scene.noise), &config)?;
        let s = &out.report.filter;
        println!(
            "nu = {nu:>4}: SI-SDR {:6.2} dB, mean a' {:.3}, clamped {}/{}",
            si_sdr(&out.enhanced, &scene.clean)?,
            s.mixing_mean,
            s.mixing_clamped,
            s.bins
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
