use serde::{Deserialize, Serialize};

use super::{ReputationError, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy<S> {
    Fixed(S),
    /// Mean of all trust values observed so far; `cold_start` before the first one.
    RunningMean { cold_start: S },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdState<S> {
    pub policy: ThresholdPolicy<S>,
    sum: S,
    count: u64,
}

impl<S: Scalar> ThresholdState<S> {
    pub fn new(policy: ThresholdPolicy<S>) -> Self {
        ThresholdState { policy, sum: S::zero(), count: 0 }
    }

    pub fn current(&self) -> S {
        match &self.policy {
            ThresholdPolicy::Fixed(x) => x.clone(),
            ThresholdPolicy::RunningMean { cold_start } if self.count == 0 => cold_start.clone(),
            ThresholdPolicy::RunningMean { .. } => self.sum.clone() / S::from_int(self.count as i64),
        }
    }

    pub fn observe(&mut self, t: &S) {
        self.sum = self.sum.clone() + t.clone();
        self.count += 1;
    }
}

/// Coefficients of the piecewise-weighted mean. With `adaptive` set, the
/// effective rates become `ψ_0·R` and `ξ_0·(1 − R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReputationParams<S> {
    pub psi: S,
    pub xi: S,
    pub adaptive: bool,
    pub psi_0: S,
    pub xi_0: S,
}

impl<S: Scalar> ReputationParams<S> {
    pub fn new(psi: S, xi: S) -> Result<Self, ReputationError> {
        let p = ReputationParams { psi: psi.clone(), xi: xi.clone(), adaptive: false, psi_0: psi, xi_0: xi };
        p.validate()?;
        Ok(p)
    }

    pub fn adaptive(psi_0: S, xi_0: S) -> Result<Self, ReputationError> {
        let p = ReputationParams { psi: psi_0.clone(), xi: xi_0.clone(), adaptive: true, psi_0, xi_0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ReputationError> {
        let open_unit = |x: &S| *x > S::zero() && *x < S::one();
        for (name, v) in [("psi", &self.psi), ("xi", &self.xi), ("psi_0", &self.psi_0), ("xi_0", &self.xi_0)] {
            if !open_unit(v) {
                return Err(ReputationError::Config(format!("{name} outside (0,1): {v:?}")));
            }
        }
        if self.xi <= self.psi {
            return Err(ReputationError::Config(format!("penalty rate xi {:?} must exceed psi {:?}", self.xi, self.psi)));
        }
        Ok(())
    }
}

/// Effective coefficient `γ` for the branch selected by `(R, T, T_θ)`.
pub fn step_coefficient<S: Scalar>(r: &S, t: &S, t_theta: &S, p: &ReputationParams<S>) -> S {
    let upper = t >= t_theta;
    match (upper, p.adaptive) {
        (true, false) => p.psi.clone(),
        (false, false) => p.xi.clone(),
        (true, true) => p.psi_0.clone() * r.clone(),
        (false, true) => p.xi_0.clone() * (S::one() - r.clone()),
    }
}

/// `R' = (1 − γW)R + γW·T` with `γ = ψ` when `T ≥ T_θ`, else `γ = ξ`.
pub fn pw_mean_update<S: Scalar>(
    r: &S,
    t: &S,
    w: &S,
    t_theta: &S,
    p: &ReputationParams<S>,
) -> Result<S, ReputationError> {
    let unit = |x: &S| *x >= S::zero() && *x <= S::one();
    if !unit(r) || !unit(t) || !unit(t_theta) {
        return Err(ReputationError::Domain(format!("R={r:?}, T={t:?}, T_theta={t_theta:?} must lie in [0,1]")));
    }
    if *w < S::zero() {
        return Err(ReputationError::Domain(format!("negative interaction weight {w:?}")));
    }
    let gw = step_coefficient(r, t, t_theta, p) * w.clone();
    if gw < S::zero() || gw >= S::one() {
        return Err(ReputationError::Domain(format!("step weight {gw:?} outside [0,1)")));
    }
    Ok((S::one() - gw.clone()) * r.clone() + gw * t.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reputation::{rat, Rational};

    fn p() -> ReputationParams<Rational> {
        ReputationParams::new(rat(1, 5), rat(3, 5)).unwrap()
    }

    #[test]
    fn fixed_point_when_trust_equals_reputation() {
        for r in [rat(0, 1), rat(3, 10), rat(1, 1)] {
            assert_eq!(pw_mean_update(&r, &r, &rat(1, 2), &rat(3, 5), &p()).unwrap(), r);
        }
    }

    #[test]
    fn upper_branch() {
        let out = pw_mean_update(&rat(1, 2), &rat(1, 1), &rat(1, 2), &rat(3, 5), &p()).unwrap();
        assert_eq!(out, rat(55, 100));
    }

    #[test]
    fn lower_branch() {
        let out = pw_mean_update(&rat(1, 2), &rat(0, 1), &rat(1, 2), &rat(3, 5), &p()).unwrap();
        assert_eq!(out, rat(35, 100));
    }

    #[test]
    fn adaptive_rates() {
        let p = ReputationParams::adaptive(rat(2, 5), rat(4, 5)).unwrap();
        // upper: ψ = 0.4·0.5 = 0.2, lower: ξ = 0.8·0.5 = 0.4
        assert_eq!(step_coefficient(&rat(1, 2), &rat(1, 1), &rat(1, 2), &p), rat(1, 5));
        assert_eq!(step_coefficient(&rat(1, 2), &rat(0, 1), &rat(1, 2), &p), rat(2, 5));
        let low = step_coefficient(&rat(1, 10), &rat(0, 1), &rat(1, 2), &p);
        let high = step_coefficient(&rat(9, 10), &rat(0, 1), &rat(1, 2), &p);
        assert!(low > high);
    }

    #[test]
    fn validation() {
        assert!(ReputationParams::new(rat(3, 5), rat(1, 5)).is_err());
        assert!(ReputationParams::new(rat(0, 1), rat(1, 5)).is_err());
        assert!(pw_mean_update(&rat(2, 1), &rat(0, 1), &rat(1, 2), &rat(1, 2), &p()).is_err());
        assert!(pw_mean_update(&rat(1, 2), &rat(0, 1), &rat(2, 1), &rat(1, 2), &p()).is_err());
    }

    #[test]
    fn running_mean_threshold() {
        let mut s = ThresholdState::new(ThresholdPolicy::RunningMean { cold_start: rat(1, 2) });
        assert_eq!(s.current(), rat(1, 2));
        s.observe(&rat(1, 1));
        s.observe(&rat(1, 5));
        assert_eq!(s.current(), rat(3, 5));
        let f = ThresholdState::new(ThresholdPolicy::Fixed(rat(3, 5)));
        assert_eq!(f.current(), rat(3, 5));
    }
}
