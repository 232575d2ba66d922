// Walks the filter family on one frequency bin: the plain Wiener filter,
// the trade-off filter for a few (μ, ν) and the direction-preserving blend
// with its identity share a′.

use std::error::Error;

use dpmwf::filter::{dp_mwf, mixing_factor, mwf, w_mu_nu, FilterParams};
use dpmwf::linalg::{CMatrix, C64};

fn point_source(steer: &[C64], power: f64) -> CMatrix {
    let mut r = CMatrix::zeros(steer.len());
    r.add_outer(steer, power);
    r
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // two mics, target broadside, diffuse-ish noise
    let steer = [C64::new(1.0, 0.0), C64::from_polar(1.0, 0.4)];
    let rss = point_source(&steer, 2.0);
    let rnn = CMatrix::from_fn(2, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.3, 0.0) });
    let rxx = &rss + &rnn;

    let w = mwf(&rxx, &rnn);
    println!("MWF          W[0,0] = {:.4}", w[(0, 0)]);

    println!("{:>5} {:>5} {:>8} {:>10}", "mu", "nu", "a'", "|W_DP-I|");
    for (mu, nu) in [(1.0, 0.0), (1.0, 2.0), (1.0, 8.0), (0.5, 8.0), (3.0, 8.0)] {
        let params = FilterParams {
            mu,
            nu,
            ..FilterParams::default()
        };
        let a = mixing_factor(&w_mu_nu(&rxx, &rnn, mu, nu), &rnn, params.a, mu, nu);
        let dp = dp_mwf(&rxx, &rnn, &params);
        let dist = (&dp - &CMatrix::identity(2)).frobenius_norm();
        println!("{mu:>5.1} {nu:>5.1} {a:>8.4} {dist:>10.4}");
        if !(0.0..=1.0).contains(&a) {
            return Err(format!("mixing factor {a} left [0, 1]").into());
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
