//! One worker's reputation under PW-Mean and the symmetric W-Mean, with a
//! single bad interaction in the middle.
//!
//! `cargo run --example reputation_update`

use anonrep::reputation::{pw_mean_update, rat, w_mean, Rational, ReputationParams};

fn main() -> anonrep::Result<()> {
    let params = ReputationParams::new(rat(1, 5), rat(3, 5))?;
    let threshold = rat(1, 2);
    let weight = rat(4, 5);
    let gamma = rat(2, 5);
    let trust: Vec<Rational> = [9, 9, 8, 9, 1, 9, 9, 8, 9, 9].iter().map(|t| rat(*t, 10)).collect();

    let (mut pw, mut wm) = (rat(1, 2), rat(1, 2));
    println!("{:>4} {:>6} {:>10} {:>10}", "step", "T", "pw-mean", "w-mean");
    for (i, t) in trust.iter().enumerate() {
        pw = pw_mean_update(&pw, t, &weight, &threshold, &params)?;
        wm = w_mean(&wm, t, &weight, &gamma)?;
        let f = |x: &Rational| *x.numer() as f64 / *x.denom() as f64;
        println!("{:>4} {:>6.2} {:>10.6} {:>10.6}", i + 1, f(t), f(&pw), f(&wm));
    }
    Ok(())
}
