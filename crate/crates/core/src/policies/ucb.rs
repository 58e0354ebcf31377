use crate::error::{Error, Result};
use crate::policies::{argmax_first, Policy};

/// UCB1 with index `mean_i + scale·√(2 ln t / n_i)`; features are ignored.
#[derive(Debug, Clone)]
pub struct UcbState {
    counts: Vec<u64>,
    sums: Vec<f64>,
    exploration_scale: f64,
}

impl UcbState {
    pub fn new(n_arms: usize, exploration_scale: f64) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::InvalidDimensions("no arms".into()));
        }
        if !(exploration_scale > 0.0) || !exploration_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exploration_scale = {exploration_scale}"
            )));
        }
        Ok(Self {
            counts: vec![0; n_arms],
            sums: vec![0.0; n_arms],
            exploration_scale,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn exploration_scale(&self) -> f64 {
        self.exploration_scale
    }

    pub fn total_plays(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl Policy for UcbState {
    fn name(&self) -> &str {
        "ucb"
    }

    fn select_arm(&mut self, round: usize) -> Result<usize> {
        if let Some(arm) = self.counts.iter().position(|&c| c == 0) {
            return Ok(arm);
        }
        let log_t = (round.max(1) as f64).ln();
        let index: Vec<f64> = self
            .counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| {
                let n = n as f64;
                s / n + self.exploration_scale * (2.0 * log_t / n).sqrt()
            })
            .collect();
        Ok(argmax_first(&index))
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        let n_arms = self.counts.len();
        if arm >= n_arms {
            return Err(Error::ArmOutOfRange { arm, n_arms });
        }
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }
}
