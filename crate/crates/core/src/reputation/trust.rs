use serde::{Deserialize, Serialize};

use super::{ReputationError, Scalar};

fn check_unit<S: Scalar>(name: &str, x: &S) -> Result<(), ReputationError> {
    if *x < S::zero() || *x > S::one() {
        return Err(ReputationError::Domain(format!("{name} outside [0,1]: {x:?}")));
    }
    Ok(())
}

fn check_sum<S: Scalar>(weights: &[&S]) -> Result<(), ReputationError> {
    let sum = weights.iter().fold(S::zero(), |acc, w| acc + (*w).clone());
    if (sum - S::one()).abs().to_f64() > 1e-9 {
        return Err(ReputationError::Config("trust weights must sum to 1".into()));
    }
    for w in weights {
        check_unit("weight", *w)?;
    }
    Ok(())
}

/// `T = Σ α_j P_j` over `(α_j, P_j)` pairs.
pub fn weighted_trust<S: Scalar>(components: &[(S, S)]) -> Result<S, ReputationError> {
    check_sum(&components.iter().map(|(a, _)| a).collect::<Vec<_>>())?;
    components.iter().try_fold(S::zero(), |acc, (a, p)| {
        check_unit("component", p)?;
        Ok(acc + a.clone() * p.clone())
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingQuality<S> {
    /// Requester opinion.
    pub o: S,
    pub q_c: S,
    pub q_f: S,
    pub q_comp: S,
    /// Outlier gate: 0 for a flagged submission.
    pub q_o: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingWeights<S> {
    pub alpha_1: S,
    pub alpha_c: S,
    pub alpha_f: S,
    pub alpha_comp: S,
}

/// `T = α_1·O + [α_c Q_c + α_f Q_f + α_comp Q_comp]·Q_o`.
pub fn trust_sensing<S: Scalar>(q: &SensingQuality<S>, w: &SensingWeights<S>) -> Result<S, ReputationError> {
    check_sum(&[&w.alpha_1, &w.alpha_c, &w.alpha_f, &w.alpha_comp])?;
    for (name, v) in [("O", &q.o), ("Q_c", &q.q_c), ("Q_f", &q.q_f), ("Q_comp", &q.q_comp), ("Q_o", &q.q_o)] {
        check_unit(name, v)?;
    }
    let quality = w.alpha_c.clone() * q.q_c.clone() + w.alpha_f.clone() * q.q_f.clone() + w.alpha_comp.clone() * q.q_comp.clone();
    Ok(w.alpha_1.clone() * q.o.clone() + quality * q.q_o.clone())
}

/// `Q_c = 1 − |a_i − ā| / max(|a_i|, |ā|)`, clamped to [0,1]; 1 when both are zero.
pub fn q_consistency<S: Scalar>(a_i: &S, a_bar: &S) -> S {
    let denom = S::max_of(a_i.abs(), a_bar.abs());
    if denom.is_zero() {
        return S::one();
    }
    let q = S::one() - (a_i.clone() - a_bar.clone()).abs() / denom;
    S::max_of(q, S::zero())
}

/// `Q_f = exp(−λ·age)`.
pub fn q_freshness(lambda: f64, age: f64) -> f64 {
    (-lambda * age.max(0.0)).exp()
}

pub fn q_completeness<S: Scalar>(valid_fields: u64, total_fields: u64) -> Result<S, ReputationError> {
    if total_fields == 0 || valid_fields > total_fields {
        return Err(ReputationError::Domain(format!("completeness {valid_fields}/{total_fields}")));
    }
    Ok(S::from_ratio(valid_fields as i64, total_fields as i64))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// 0 when `values[i]` lies more than three median absolute deviations from the median, else 1.
pub fn mad_outlier_flag(values: &[f64], i: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    if (values[i] - med).abs() > 3.0 * mad {
        0.0
    } else {
        1.0
    }
}

/// `T = α_1·O + α_2·SF`.
pub fn trust_fl<S: Scalar>(o: &S, sf: &S, alpha_1: &S, alpha_2: &S) -> Result<S, ReputationError> {
    weighted_trust(&[(alpha_1.clone(), o.clone()), (alpha_2.clone(), sf.clone())])
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlFilterResult {
    /// `retained[round][worker]`.
    pub retained: Vec<Vec<bool>>,
    /// Selection frequency per worker.
    pub sf: Vec<f64>,
}

/// Per round, min-max normalize the similarities and retain workers whose
/// normalized score exceeds the round mean of normalized scores. A round with
/// no spread retains everyone.
pub fn fl_filter_and_frequency(similarity: &[Vec<f64>]) -> Result<FlFilterResult, ReputationError> {
    let workers = similarity.first().map_or(0, Vec::len);
    if similarity.is_empty() || workers < 2 || similarity.iter().any(|r| r.len() != workers) {
        return Err(ReputationError::Domain("need ≥ 1 round of ≥ 2 workers with equal widths".into()));
    }
    let mut retained = Vec::with_capacity(similarity.len());
    for round in similarity {
        let min = round.iter().copied().fold(f64::INFINITY, f64::min);
        let max = round.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == min {
            retained.push(vec![true; workers]);
            continue;
        }
        let csi: Vec<f64> = round.iter().map(|c| (c - min) / (max - min)).collect();
        let tau = csi.iter().sum::<f64>() / workers as f64;
        retained.push(csi.iter().map(|c| *c > tau).collect());
    }
    let rounds = similarity.len() as f64;
    let sf = (0..workers).map(|w| retained.iter().filter(|r| r[w]).count() as f64 / rounds).collect();
    Ok(FlFilterResult { retained, sf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reputation::{rat, Rational};

    fn weights() -> SensingWeights<Rational> {
        SensingWeights { alpha_1: rat(4, 10), alpha_c: rat(2, 10), alpha_f: rat(2, 10), alpha_comp: rat(2, 10) }
    }

    #[test]
    fn perfect_data() {
        let q = SensingQuality { o: rat(1, 1), q_c: rat(1, 1), q_f: rat(1, 1), q_comp: rat(1, 1), q_o: rat(1, 1) };
        assert_eq!(trust_sensing(&q, &weights()).unwrap(), rat(1, 1));
    }

    #[test]
    fn outlier_gate() {
        let q = SensingQuality { o: rat(7, 10), q_c: rat(1, 1), q_f: rat(1, 1), q_comp: rat(1, 1), q_o: rat(0, 1) };
        assert_eq!(trust_sensing(&q, &weights()).unwrap(), rat(4, 10) * rat(7, 10));
    }

    #[test]
    fn consistency_example() {
        assert_eq!(q_consistency(&rat(8, 1), &rat(10, 1)), rat(8, 10));
        assert_eq!(q_consistency(&rat(0, 1), &rat(0, 1)), rat(1, 1));
    }

    #[test]
    fn freshness_and_completeness() {
        assert_eq!(q_freshness(0.5, 0.0), 1.0);
        assert!((q_freshness(0.5, 2.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(q_completeness::<Rational>(3, 4).unwrap(), rat(3, 4));
        assert!(q_completeness::<Rational>(5, 4).is_err());
    }

    #[test]
    fn mad_flags_far_value() {
        let v = [10.0, 10.5, 9.5, 10.2, 9.8, 40.0];
        assert_eq!(mad_outlier_flag(&v, 5), 0.0);
        assert_eq!(mad_outlier_flag(&v, 0), 1.0);
    }

    #[test]
    fn fl_trust() {
        assert_eq!(trust_fl(&rat(1, 1), &rat(1, 1), &rat(1, 2), &rat(1, 2)).unwrap(), rat(1, 1));
        assert_eq!(trust_fl(&rat(8, 10), &rat(6, 10), &rat(1, 2), &rat(1, 2)).unwrap(), rat(7, 10));
        assert_eq!(trust_fl(&rat(3, 10), &rat(9, 10), &rat(1, 1), &rat(0, 1)).unwrap(), rat(3, 10));
        assert!(trust_fl(&rat(1, 1), &rat(1, 1), &rat(1, 2), &rat(1, 3)).is_err());
    }

    #[test]
    fn fl_filter_cases() {
        let same = vec![vec![0.5, 0.5, 0.5]];
        assert_eq!(fl_filter_and_frequency(&same).unwrap().retained, vec![vec![true; 3]]);

        let rounds = vec![vec![-1.0, 0.9, 0.9]; 4];
        let out = fl_filter_and_frequency(&rounds).unwrap();
        assert_eq!(out.sf, vec![0.0, 1.0, 1.0]);

        let mut m = vec![vec![0.1, 0.9]; 5];
        for r in m.iter_mut().take(3) {
            *r = vec![0.9, 0.1];
        }
        assert_eq!(fl_filter_and_frequency(&m).unwrap().sf[0], 0.6);
        assert!(fl_filter_and_frequency(&[vec![0.3]]).is_err());
    }
}
