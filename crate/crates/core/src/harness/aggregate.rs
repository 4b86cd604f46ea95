use super::run::RunRecord;
use crate::error::{Error, Result};

/// Pointwise mean and standard error of cumulative regret across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub policy: String,
    pub seeds: usize,
    /// `mean[t-1]` is the mean of `R_t`.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Curve {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }

    pub fn mean_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.mean[t - 1]
        }
    }
}

/// Mean and `sample-std/√n` of a sample; the error is 0 for `n = 1`.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates records that share a policy.
pub fn aggregate(records: &[RunRecord]) -> Result<Curve> {
    let first = records.first().ok_or(Error::Empty("no records to aggregate"))?;
    let horizon = first.horizon();
    if let Some(bad) = records.iter().find(|r| r.horizon() != horizon) {
        return Err(Error::InvalidParameter(format!(
            "mismatched horizons: {} vs {}",
            horizon,
            bad.horizon()
        )));
    }
    if let Some(bad) = records.iter().find(|r| r.policy != first.policy) {
        return Err(Error::InvalidParameter(format!(
            "cannot pool policies `{}` and `{}`",
            first.policy, bad.policy
        )));
    }
    let (mut mean, mut stderr) = (Vec::with_capacity(horizon), Vec::with_capacity(horizon));
    let mut column = vec![0.0; records.len()];
    for t in 0..horizon {
        for (c, r) in column.iter_mut().zip(records) {
            *c = r.rounds[t].cum_regret;
        }
        let (m, s) = mean_stderr(&column);
        mean.push(m);
        stderr.push(s);
    }
    Ok(Curve {
        policy: first.policy.clone(),
        seeds: records.len(),
        mean,
        stderr,
    })
}

/// One curve per policy, in order of first appearance.
pub fn aggregate_by_policy(records: &[RunRecord]) -> Result<Vec<Curve>> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    order
        .into_iter()
        .map(|p| {
            let group: Vec<RunRecord> = records.iter().filter(|r| r.policy == p).cloned().collect();
            aggregate(&group)
        })
        .collect()
}
