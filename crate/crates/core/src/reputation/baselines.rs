use serde::{Deserialize, Serialize};

use super::{from_micro, pw_mean_update, to_micro, Rational, ReputationError, ReputationParams, Scalar};

/// Symmetric single-branch mean: `R' = (1 − γW)R + γW·T`.
pub fn w_mean<S: Scalar>(r: &S, t: &S, w: &S, gamma: &S) -> Result<S, ReputationError> {
    let gw = gamma.clone() * w.clone();
    if gw < S::zero() || gw >= S::one() {
        return Err(ReputationError::Domain(format!("step weight {gw:?} outside [0,1)")));
    }
    Ok((S::one() - gw.clone()) * r.clone() + gw * t.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GompertzParams {
    fn default() -> Self {
        GompertzParams { a: 1.0, b: 5.0, c: 0.5 }
    }
}

/// `a·exp(−b·exp(−c·x))`.
pub fn gompertz(x: f64, p: &GompertzParams) -> f64 {
    p.a * (-p.b * (-p.c * x).exp()).exp()
}

/// Cumulative sum clipped to [0,1].
pub fn running_sum<S: Scalar>(values: &[S]) -> S {
    let s = values.iter().fold(S::zero(), |acc, v| acc + v.clone());
    S::min_of(S::max_of(s, S::zero()), S::one())
}

pub fn running_mean<S: Scalar>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    let s = values.iter().fold(S::zero(), |acc, v| acc + v.clone());
    Some(s / S::from_int(values.len() as i64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineModel {
    PwMean,
    WMean,
    Gompertz,
    Sum,
    Mean,
}

impl BaselineModel {
    pub const ALL: [BaselineModel; 5] =
        [BaselineModel::PwMean, BaselineModel::WMean, BaselineModel::Gompertz, BaselineModel::Sum, BaselineModel::Mean];

    pub fn name(self) -> &'static str {
        match self {
            BaselineModel::PwMean => "pw-mean",
            BaselineModel::WMean => "w-mean",
            BaselineModel::Gompertz => "gompertz",
            BaselineModel::Sum => "sum",
            BaselineModel::Mean => "mean",
        }
    }
}

/// One reputation series under a given model, stored in millionths after every step.
#[derive(Clone, Debug)]
pub struct ModelState {
    pub model: BaselineModel,
    pub r_micro: u64,
    positives: u64,
    history: Vec<Rational>,
}

impl ModelState {
    pub fn new(model: BaselineModel, initial_micro: u64) -> Self {
        let r_micro = match model {
            BaselineModel::Gompertz => (gompertz(0.0, &GompertzParams::default()) * 1e6).round() as u64,
            BaselineModel::Sum => 0,
            _ => initial_micro,
        };
        ModelState { model, r_micro, positives: 0, history: Vec::new() }
    }

    pub fn value(&self) -> Rational {
        from_micro(self.r_micro)
    }

    pub fn step(
        &mut self,
        t: &Rational,
        w: &Rational,
        t_theta: &Rational,
        params: &ReputationParams<Rational>,
    ) -> Result<Rational, ReputationError> {
        let r = self.value();
        let next = match self.model {
            BaselineModel::PwMean => pw_mean_update(&r, t, w, t_theta, params)?,
            BaselineModel::WMean => {
                let gamma = (params.psi + params.xi) / Rational::from_integer(2);
                w_mean(&r, t, w, &gamma)?
            }
            BaselineModel::Gompertz => {
                if t >= t_theta {
                    self.positives += 1;
                }
                let g = gompertz(self.positives as f64, &GompertzParams::default());
                Rational::new((g * 1e6).round() as i128, 1_000_000)
            }
            BaselineModel::Sum => {
                self.history.push(*t);
                running_sum(&self.history)
            }
            BaselineModel::Mean => {
                self.history.push(*t);
                running_mean(&self.history).expect("non-empty")
            }
        };
        self.r_micro = to_micro(&next)?;
        Ok(self.value())
    }
}
