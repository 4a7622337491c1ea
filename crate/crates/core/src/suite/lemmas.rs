//! Analytical properties of the piecewise-weighted update.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Check;
use crate::reputation::{pw_mean_update, step_coefficient, Rational, ReputationParams};

fn micro(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.random_range(0..=1_000_000), 1_000_000)
}

/// Random single updates on the micro grid, checked in exact arithmetic:
/// `R'` stays in [0,1] and between `R` and `T`.
pub fn boundedness(params: &ReputationParams<Rational>, n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let (r, t, w, th) = (micro(&mut rng), micro(&mut rng), micro(&mut rng), micro(&mut rng));
        match pw_mean_update(&r, &t, &w, &th, params) {
            Ok(next) => {
                let lo = r.min(t);
                let hi = r.max(t);
                if next < Rational::zero() || next > Rational::one() || next < lo || next > hi {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Check::new(failures == 0, format!("{n} updates, {failures} out of bounds"))
}

/// `|ΔR| = γW|T − R| ≤ γW`, exactly.
pub fn step_bound(params: &ReputationParams<Rational>, n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let (r, t, w, th) = (micro(&mut rng), micro(&mut rng), micro(&mut rng), micro(&mut rng));
        let gw = step_coefficient(&r, &t, &th, params) * w;
        let next = pw_mean_update(&r, &t, &w, &th, params).expect("domain respected");
        let delta = (next - r).abs();
        if delta > gw || delta != gw * (t - r).abs() {
            failures += 1;
        }
    }
    Check::new(failures == 0, format!("{n} updates, {failures} exceed gamma*W"))
}

fn big(x: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// Repeated updates toward a constant `T̄` on one branch contract by
/// `(1 − γW)` per step; checked exactly for every `n ≤ max_n`.
pub fn contraction(params: &ReputationParams<Rational>, max_n: usize, seed: u64) -> Check {
    let bp = ReputationParams {
        psi: big(&params.psi),
        xi: big(&params.xi),
        adaptive: false,
        psi_0: big(&params.psi_0),
        xi_0: big(&params.xi_0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let cases = 20;
    for case in 0..cases {
        let r0 = big(&micro(&mut rng));
        let t = BigRational::new(BigInt::from(rng.random_range(0..1_000_000)), BigInt::from(1_000_000));
        let w = big(&micro(&mut rng));
        // threshold 0 keeps every step on the reward branch, threshold 1 on the penalty branch
        let (theta, gamma) = if case % 2 == 0 { (BigRational::zero(), bp.psi.clone()) } else { (BigRational::one(), bp.xi.clone()) };
        let factor = BigRational::one() - gamma * w.clone();
        let mut r = r0.clone();
        let mut bound = (r0 - t.clone()).abs();
        for _ in 0..max_n {
            r = pw_mean_update(&r, &t, &w, &theta, &bp).expect("domain respected");
            bound *= factor.clone();
            if (r.clone() - t.clone()).abs() > bound {
                failures += 1;
            }
        }
    }
    Check::new(failures == 0, format!("{cases} trajectories x {max_n} steps, {failures} above the contraction bound"))
}

/// Same distance `|T − R|` on either side of the threshold: the penalty step
/// over the reward step equals `ξ/ψ` and exceeds 1.
pub fn asymmetry(params: &ReputationParams<Rational>, n: usize, seed: u64, tol: f64) -> Check {
    let f = |x: &Rational| *x.numer() as f64 / *x.denom() as f64;
    let fp = ReputationParams { psi: f(&params.psi), xi: f(&params.xi), adaptive: false, psi_0: f(&params.psi_0), xi_0: f(&params.xi_0) };
    let expected = fp.xi / fp.psi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut penalty_larger = true;
    for _ in 0..n {
        let r: f64 = rng.random_range(0.2..0.8);
        let d: f64 = rng.random_range(0.05..0.2);
        let w: f64 = rng.random_range(0.5..1.0);
        // threshold at R: T = R + d takes the reward branch, T = R − d the penalty branch
        let up = pw_mean_update(&r, &(r + d), &w, &r, &fp).map(|x| x - r);
        let down = pw_mean_update(&r, &(r - d), &w, &r, &fp).map(|x| r - x);
        let (Ok(up), Ok(down)) = (up, down) else {
            return Check::new(false, "update outside its domain".into());
        };
        worst = worst.max((down / up - expected).abs());
        penalty_larger &= down > up;
    }
    let ok = worst <= tol && penalty_larger;
    Check::new(ok, format!("ratio error {worst:.2e}, penalty larger than reward: {penalty_larger}"))
}

/// Trust drawn i.i.d. around `μ` on the reward branch: the mean final
/// reputation over many runs approaches `μ`.
pub fn mean_convergence(params: &ReputationParams<f64>, runs: usize, steps: usize, seed: u64, tol: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = 0.7;
    let mut total = 0.0;
    for _ in 0..runs {
        let mut r: f64 = rng.random();
        for _ in 0..steps {
            let t: f64 = rng.random_range(0.5..0.9);
            let w: f64 = rng.random_range(0.25..1.0);
            r = pw_mean_update(&r, &t, &w, &0.4, params).expect("valid inputs");
        }
        total += r;
    }
    let mean = total / runs as f64;
    Check::new((mean - mu).abs() <= tol, format!("mean {mean:.4} vs {mu} over {runs} runs x {steps} steps"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reputation::rat;

    fn p() -> ReputationParams<Rational> {
        ReputationParams::new(rat(1, 5), rat(3, 5)).unwrap()
    }

    #[test]
    fn lemmas_hold_on_small_samples() {
        assert!(boundedness(&p(), 500, 1).passed);
        assert!(step_bound(&p(), 500, 2).passed);
        assert!(contraction(&p(), 30, 3).passed);
        assert!(asymmetry(&p(), 200, 4, 1e-12).passed);
        assert!(mean_convergence(&ReputationParams::new(0.2, 0.6).unwrap(), 100, 200, 5, 0.01).passed);
    }

    #[test]
    fn swapped_rates_break_asymmetry() {
        let mut swapped = p();
        std::mem::swap(&mut swapped.psi, &mut swapped.xi);
        assert!(!asymmetry(&swapped, 50, 4, 1e-12).passed);
    }
}
