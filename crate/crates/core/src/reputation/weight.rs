use serde::{Deserialize, Serialize};

use super::{ReputationError, Scalar};

/// Coefficients of the interaction weight `W_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionWeightParams<S> {
    pub kappa: S,
    pub omega_0: S,
    pub omega_d: S,
    pub omega_a: S,
    pub omega_st: S,
    /// Stake/context factor in [0,1].
    pub c_st: S,
    pub d_max: S,
    pub a_max: S,
}

impl<S: Scalar> InteractionWeightParams<S> {
    pub fn validate(&self) -> Result<(), ReputationError> {
        let unit = |x: &S| *x >= S::zero() && *x <= S::one();
        for (name, v) in [
            ("kappa", &self.kappa),
            ("omega_0", &self.omega_0),
            ("omega_d", &self.omega_d),
            ("omega_a", &self.omega_a),
            ("omega_st", &self.omega_st),
            ("c_st", &self.c_st),
        ] {
            if !unit(v) {
                return Err(ReputationError::Config(format!("{name} outside [0,1]: {v:?}")));
            }
        }
        if self.d_max <= S::zero() || self.a_max <= S::zero() {
            return Err(ReputationError::Config("d_max and a_max must be positive".into()));
        }
        let sum = self.omega_0.clone() + self.omega_d.clone() + self.omega_a.clone() + self.omega_st.clone();
        if (sum - S::one()).abs().to_f64() > 1e-9 {
            return Err(ReputationError::Config("omega weights must sum to 1".into()));
        }
        Ok(())
    }
}

/// `W_f = κ·[ω_0 + ω_d·min(d/d_max,1) + ω_a·min(a/a_max,1) + ω_st·C_st]`.
pub fn interaction_weight<S: Scalar>(p: &InteractionWeightParams<S>, d: &S, a: &S) -> Result<S, ReputationError> {
    p.validate()?;
    if *d < S::zero() || *a < S::zero() {
        return Err(ReputationError::Domain("duration and amount must be non-negative".into()));
    }
    let f_d = S::min_of(d.clone() / p.d_max.clone(), S::one());
    let f_a = S::min_of(a.clone() / p.a_max.clone(), S::one());
    let inner = p.omega_0.clone() + p.omega_d.clone() * f_d + p.omega_a.clone() * f_a + p.omega_st.clone() * p.c_st.clone();
    Ok(p.kappa.clone() * inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reputation::{rat, Rational};

    fn params(w: [Rational; 4]) -> InteractionWeightParams<Rational> {
        InteractionWeightParams {
            kappa: rat(1, 1),
            omega_0: w[0],
            omega_d: w[1],
            omega_a: w[2],
            omega_st: w[3],
            c_st: rat(0, 1),
            d_max: rat(10, 1),
            a_max: rat(100, 1),
        }
    }

    #[test]
    fn constant_weight() {
        let p = params([rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]);
        assert_eq!(interaction_weight(&p, &rat(3, 1), &rat(77, 1)).unwrap(), rat(1, 1));
    }

    #[test]
    fn saturation() {
        let mut p = params([rat(1, 4); 4]);
        p.c_st = rat(1, 1);
        assert_eq!(interaction_weight(&p, &rat(50, 1), &rat(500, 1)).unwrap(), rat(1, 1));
    }

    #[test]
    fn quarter_weights() {
        let p = params([rat(1, 4); 4]);
        // 0.25 + 0.25·0.5 + 0.25·0.25 + 0
        assert_eq!(interaction_weight(&p, &rat(5, 1), &rat(25, 1)).unwrap(), rat(4375, 10_000));
    }

    #[test]
    fn rejects_bad_sum() {
        let p = params([rat(1, 2); 4]);
        assert!(matches!(interaction_weight(&p, &rat(1, 1), &rat(1, 1)), Err(ReputationError::Config(_))));
    }
}
