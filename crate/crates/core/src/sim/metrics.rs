use serde::{Deserialize, Serialize};

use super::SimError;

/// Window-sweep metrics for one (W, attack) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub rau: f64,
    pub utility: f64,
    pub drawdown: f64,
    pub ttr: f64,
    pub pr_hire: f64,
    pub rsi: f64,
    pub var_life: f64,
    pub auc_link: f64,
    pub k_anon: f64,
    /// Rotation cost per interaction, normalised so that W = 1 costs 1.
    pub cost: f64,
    /// Rotation gas per interaction (mintRT + spendRT on L1, divided by W).
    pub cost_gas: f64,
}

pub fn compute_rau(utility: f64, drawdown: f64, auc: f64, cost: f64, lambda: [f64; 3]) -> f64 {
    utility - lambda[0] * drawdown - lambda[1] * auc - lambda[2] * cost
}

pub fn on_chain_cost(w: u64) -> f64 {
    1.0 / w as f64
}

fn non_empty(r: &[f64]) -> Result<(), SimError> {
    if r.is_empty() {
        return Err(SimError::EmptyTrajectory);
    }
    Ok(())
}

/// `max_t (R_0 − R_t)` over one lifetime, never negative.
pub fn drawdown(r: &[f64]) -> Result<f64, SimError> {
    non_empty(r)?;
    Ok(r.iter().map(|x| r[0] - x).fold(0.0, f64::max))
}

/// 1-based index of the first recovery to `0.95·R_0` after a dip below it.
/// 0 if the lifetime never dips; the lifetime length if it never recovers.
pub fn ttr(r: &[f64]) -> Result<f64, SimError> {
    non_empty(r)?;
    let target = 0.95 * r[0];
    let Some(dip) = r.iter().position(|x| *x < target) else {
        return Ok(0.0);
    };
    Ok(r[dip..].iter().position(|x| *x >= target).map_or(r.len(), |i| dip + i + 1) as f64)
}

/// 1 if every presented reputation clears the hiring threshold.
pub fn hireable(r: &[f64], r_hire: f64) -> Result<bool, SimError> {
    non_empty(r)?;
    Ok(r.iter().all(|x| *x >= r_hire))
}

/// `1 − mean |ΔR|` over consecutive steps; 1 for a single point.
pub fn rsi(r: &[f64]) -> Result<f64, SimError> {
    non_empty(r)?;
    if r.len() == 1 {
        return Ok(1.0);
    }
    let total: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(1.0 - total / (r.len() - 1) as f64)
}

/// Population variance of per-lifetime mean reputations.
pub fn var_life(lifetimes: &[&[f64]]) -> Result<f64, SimError> {
    if lifetimes.is_empty() {
        return Err(SimError::EmptyTrajectory);
    }
    let mut means = Vec::with_capacity(lifetimes.len());
    for l in lifetimes {
        non_empty(l)?;
        means.push(l.iter().sum::<f64>() / l.len() as f64);
    }
    let mu = means.iter().sum::<f64>() / means.len() as f64;
    Ok(means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / means.len() as f64)
}

/// Mann–Whitney AUC: probability that a positive outscores a negative, ties counted half.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64, SimError> {
    if positive.is_empty() || negative.is_empty() {
        return Err(SimError::UndefinedAuc);
    }
    let mut all: Vec<(f64, bool)> =
        positive.iter().map(|s| (*s, true)).chain(negative.iter().map(|s| (*s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid_rank = (i + j + 1) as f64 / 2.0;
        rank_sum += all[i..j].iter().filter(|x| x.1).count() as f64 * mid_rank;
        i = j;
    }
    let (n1, n0) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

/// Public metadata of one worker transaction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TxMeta {
    pub time: f64,
    pub reward: f64,
    pub context: f64,
    /// Index of the pseudonym that signed it, unique within a replica.
    pub pseudonym: u64,
}

/// A candidate pair with its ground truth: same underlying worker or not.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPair {
    pub a: TxMeta,
    pub b: TxMeta,
    pub same: bool,
}

fn pair_features(p: &LinkPair) -> [f64; 4] {
    [
        (p.a.time - p.b.time).abs(),
        (p.a.reward - p.b.reward).abs(),
        (p.a.context - p.b.context).abs(),
        f64::from(u8::from(p.a.pseudonym != p.b.pseudonym)),
    ]
}

/// Linkage classifier AUC. Each pair scores minus the sum of its feature
/// differences, each divided by that feature's standard deviation over all pairs.
/// Constant features contribute nothing.
pub fn linkage_auc(pairs: &[LinkPair]) -> Result<f64, SimError> {
    let feats: Vec<[f64; 4]> = pairs.iter().map(pair_features).collect();
    let n = feats.len().max(1) as f64;
    let mut scale = [0.0; 4];
    for (k, s) in scale.iter_mut().enumerate() {
        let mean = feats.iter().map(|f| f[k]).sum::<f64>() / n;
        let sd = (feats.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / n).sqrt();
        *s = if sd > 0.0 { 1.0 / sd } else { 0.0 };
    }
    let score = |f: &[f64; 4]| -f.iter().zip(scale).map(|(x, s)| x * s).sum::<f64>();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (p, f) in pairs.iter().zip(&feats) {
        if p.same { pos.push(score(f)) } else { neg.push(score(f)) }
    }
    auc(&pos, &neg)
}
