//! Bandit policies behind a common select/observe contract.

mod oful;
mod rlb;
mod ucb;

pub use oful::{oful_radius, ConfidenceEllipsoid, EllipsoidConfig, OfulState};
pub use rlb::{RlbConfig, RlbPhase, RlbState};
pub use ucb::UcbState;

use crate::error::{Error, Result};
use crate::misspec::Hypothesis;

pub(crate) use oful::argmax_first;

/// A learner driven one round at a time by the experiment runner.
///
/// Rounds are numbered from 1. Each `select_arm` is followed by exactly one
/// `observe` for the same arm.
pub trait Policy {
    fn name(&self) -> &str;

    fn select_arm(&mut self, round: usize) -> Result<usize>;

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;

    /// Outcome of an internal linearity test, for policies that run one.
    fn verdict(&self) -> Option<Hypothesis> {
        None
    }
}

/// Always plays the same arm.
#[derive(Debug, Clone)]
pub struct FixedArm {
    arm: usize,
}

impl FixedArm {
    pub fn new(arm: usize, n_arms: usize) -> Result<Self> {
        if arm >= n_arms {
            return Err(Error::ArmOutOfRange { arm, n_arms });
        }
        Ok(Self { arm })
    }
}

impl Policy for FixedArm {
    fn name(&self) -> &str {
        "fixed"
    }

    fn select_arm(&mut self, _round: usize) -> Result<usize> {
        Ok(self.arm)
    }

    fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn select_arm(&mut self, round: usize) -> Result<usize> {
        (**self).select_arm(round)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        (**self).observe(arm, reward)
    }

    fn verdict(&self) -> Option<Hypothesis> {
        (**self).verdict()
    }
}
