// Analysis/synthesis round trip with the default 512/256 sqrt-Hann STFT.

use std::error::Error;

use dpmwf::scene::signals::speech_like;
use dpmwf::stft::{analyze, synthesize, StftConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = StftConfig::default();
    let mono = speech_like(7, 1.0, cfg.sample_rate);
    let x = vec![mono.clone(), mono.iter().map(|v| -0.5 * v).collect()];

    let spec = analyze(&x, &cfg)?;
    println!(
        "{} frames x {} bins x {} channels, COLA gain {}",
        spec.frames(),
        spec.bins(),
        spec.channels(),
        cfg.cola_gain()?
    );

    let y = synthesize(&spec)?;
    let err: f64 = x
        .iter()
        .flatten()
        .zip(y.iter().flatten())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let energy: f64 = x.iter().flatten().map(|v| v * v).sum();
    let db = 10.0 * (err / energy).max(1e-300).log10();
    println!("reconstruction error {db:.1} dB");
    if db > -80.0 {
        return Err(format!("round trip too lossy: {db:.1} dB").into());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
