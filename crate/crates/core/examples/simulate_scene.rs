use std::error::Error;

use dpmwf::scene::{
    azimuth_deg, render_scene, sample_scene, schroeder_t60, simulate_rir, synthetic_sources, ArrayGeometry, SceneFile,
};

/// Draws a random room, prints its layout and measured decay, and renders
/// the six-channel mixture.
pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = sample_scene(2024)?;
    spec.duration_s = 0.5;
    let geometry = ArrayGeometry::default();
    let file = SceneFile::new(spec.clone());
    print!("{}", file.to_toml()?);

    let az = azimuth_deg(&spec.array_center, &spec.speech_source);
    println!(
        "target azimuth {az:.1} deg, {} noise source(s)",
        spec.noise_sources.len()
    );

    let rir = simulate_rir(&spec, 0, &geometry, 12)?;
    match schroeder_t60(&rir.taps[0], spec.sample_rate) {
        Some(t) => println!("T60 target {:.3} s, Schroeder fit {t:.3} s (order 12)", spec.rt60),
        None => println!("decay too short to fit"),
    }

    let (speech, noises) = synthetic_sources(&spec);
    let scene = render_scene(&spec, &speech, &noises, &geometry, 4)?;
    let power = |x: &[Vec<f64>]| x.iter().flatten().map(|v| v * v).sum::<f64>();
    let snr = 10.0 * (power(&scene.clean) / power(&scene.noise)).log10();
    println!(
        "rendered {} x {} samples, SNR {snr:.2} dB (target {:.2})",
        scene.mixture.len(),
        scene.mixture[0].len(),
        spec.snr_db
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
