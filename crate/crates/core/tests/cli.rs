use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dpmwf::io::wav::{read_wav, write_wav};
use dpmwf::pipeline::CSV_HEADER;
use tempfile::TempDir;

fn dpmwf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpmwf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn simulate(dir: &Path, name: &str, seed: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--out-dir", name, "--seed", seed, "--max-order", "2"];
    if !extra.contains(&"--duration") {
        args.extend(["--duration", "0.5"]);
    }
    args.extend_from_slice(extra);
    ok(dpmwf(&args, dir));
}

fn energy(x: &[Vec<f64>]) -> f64 {
    x.iter().flatten().map(|v| v * v).sum()
}

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "a", "17", &["--write-cholesky"]);
    simulate(tmp.path(), "b", "17", &["--write-cholesky"]);
    for f in ["mixture.wav", "clean.wav", "noise.wav", "scene.toml", "noise.chol"] {
        let (a, b) = (
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
        );
        assert!(a == b, "{f} differs");
    }
    simulate(tmp.path(), "c", "18", &[]);
    assert_ne!(
        fs::read(tmp.path().join("a/mixture.wav")).unwrap(),
        fs::read(tmp.path().join("c/mixture.wav")).unwrap()
    );
}

#[test]
fn simulate_honors_snr_and_rejects_missing_sources() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "s", "3", &["--snr-db", "-5"]);
    let clean = read_wav(&tmp.path().join("s/clean.wav")).unwrap();
    let noise = read_wav(&tmp.path().join("s/noise.wav")).unwrap();
    // f32 samples on disk
    let snr = 10.0 * (energy(&clean.channels) / energy(&noise.channels)).log10();
    assert!((snr + 5.0).abs() < 1e-4, "{snr}");
    assert_eq!(clean.num_channels(), 6);

    let out = dpmwf(&["simulate", "--out-dir", "x", "--speech", "missing.wav"], tmp.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn silent_noise_leaves_the_mixture_unchanged() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "s", "5", &[]);
    let mix = read_wav(&tmp.path().join("s/mixture.wav")).unwrap();
    let silence = vec![vec![0.0; mix.num_samples()]; mix.num_channels()];
    write_wav(&tmp.path().join("silence.wav"), &silence, mix.sample_rate).unwrap();
    ok(dpmwf(
        &["enhance", "s/mixture.wav", "--noise", "silence.wav", "-o", "out.wav"],
        tmp.path(),
    ));
    let out = read_wav(&tmp.path().join("out.wav")).unwrap();
    let diff = mix
        .channels
        .iter()
        .flatten()
        .zip(out.channels.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn evaluate_writes_the_metric_table() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "s", "9", &["--write-cholesky"]);
    ok(dpmwf(
        &[
            "enhance",
            "s/mixture.wav",
            "--cholesky",
            "s/noise.chol",
            "-o",
            "enh.wav",
            "--report",
            "report.toml",
        ],
        tmp.path(),
    ));
    let report = fs::read_to_string(tmp.path().join("report.toml")).unwrap();
    assert!(report.contains("noise_source = \"interchange\""), "{report}");

    let out = ok(dpmwf(
        &[
            "evaluate",
            "--enhanced",
            "enh.wav",
            "--clean",
            "s/clean.wav",
            "--noise",
            "s/noise.wav",
            "--cholesky",
            "s/noise.chol",
            "--scene",
            "s/scene.toml",
        ],
        tmp.path(),
    ));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let columns = CSV_HEADER.split(',').count();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row.len(), columns);
        for cell in &row[1..] {
            assert!(*cell == "n/a" || cell.parse::<f64>().is_ok(), "{cell}");
        }
    }
    assert_eq!((rows[0][0], rows[1][0]), ("enhanced", "unprocessed"));
    let cov_sim: f64 = rows[0][3].parse().unwrap();
    assert!((cov_sim - 1.0).abs() < 1e-9, "{cov_sim}");
    let (enh, unp): (f64, f64) = (rows[0][1].parse().unwrap(), rows[1][1].parse().unwrap());
    assert!(enh > unp);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "s", "2", &[]);
    let dir = tmp.path();

    assert_eq!(code(&dpmwf(&["frobnicate"], dir)), 2);
    assert_eq!(code(&dpmwf(&["enhance", "s/mixture.wav", "-o", "o.wav"], dir)), 2);
    assert_eq!(
        code(&dpmwf(
            &[
                "enhance",
                "s/mixture.wav",
                "--noise",
                "s/noise.wav",
                "-o",
                "o.wav",
                "--mu",
                "0.2",
                "--nu",
                "0.3"
            ],
            dir
        )),
        2
    );
    fs::write(dir.join("bad.toml"), "nu = \"eight\"\n").unwrap();
    assert_eq!(
        code(&dpmwf(
            &[
                "enhance",
                "s/mixture.wav",
                "--noise",
                "s/noise.wav",
                "-o",
                "o.wav",
                "--config",
                "bad.toml"
            ],
            dir
        )),
        2
    );

    fs::write(
        dir.join("junk.chol"),
        b"not an interchange file at all, clearly not one",
    )
    .unwrap();
    assert_eq!(
        code(&dpmwf(
            &["enhance", "s/mixture.wav", "--cholesky", "junk.chol", "-o", "o.wav"],
            dir
        )),
        3
    );
    fs::write(dir.join("junk.wav"), b"RIFF").unwrap();
    assert_eq!(code(&dpmwf(&["srp-map", "junk.wav", "--csv", "m.csv"], dir)), 3);
    assert_eq!(
        code(&dpmwf(
            &[
                "srp-map",
                "s/mixture.wav",
                "--csv",
                "m.csv",
                "--sample-rate",
                "16000",
                "--frame-size",
                "256",
                "--hop-size",
                "128"
            ],
            dir
        )),
        3
    );
    assert!(!dir.join("o.wav").exists());
}

#[test]
fn interchange_shape_must_match_the_mixture() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate(dir, "long", "4", &["--write-cholesky"]);
    simulate(dir, "short", "4", &["--duration", "0.25"]);
    let out = dpmwf(
        &[
            "enhance",
            "short/mixture.wav",
            "--cholesky",
            "long/noise.chol",
            "-o",
            "o.wav",
        ],
        dir,
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));

    let mix = read_wav(&dir.join("long/mixture.wav")).unwrap();
    write_wav(&dir.join("four.wav"), &mix.channels[..4], mix.sample_rate).unwrap();
    let out = dpmwf(
        &["enhance", "four.wav", "--cholesky", "long/noise.chol", "-o", "o.wav"],
        dir,
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));
}

#[test]
fn srp_map_of_silence_is_zero() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_wav(&dir.join("zero.wav"), &vec![vec![0.0; 8000]; 6], 32_000).unwrap();
    ok(dpmwf(
        &[
            "srp-map", "zero.wav", "--csv", "map.csv", "--pgm", "map.pgm", "--step", "10",
        ],
        dir,
    ));
    let csv = fs::read_to_string(dir.join("map.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .flat_map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    assert!(!values.is_empty());
    assert!(values.iter().all(|v| *v == 0.0));
    assert!(fs::read(dir.join("map.pgm")).unwrap().starts_with(b"P5"));
}
