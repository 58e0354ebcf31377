use crate::error::{Error, Result};
use crate::linalg::{select_independent_arms, Matrix, DEFAULT_INDEPENDENCE_TOL};
use crate::misspec::{boost_factor, linearity_test, Hypothesis, TestVerdict};
use crate::policies::{EllipsoidConfig, OfulState, Policy, UcbState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlbConfig {
    /// Samples per probe arm.
    pub k: usize,
    /// Confidence of the sampling interval.
    pub delta_s: f64,
    pub ellipsoid: EllipsoidConfig,
    pub ucb_scale: f64,
}

impl Default for RlbConfig {
    fn default() -> Self {
        Self {
            k: 50,
            delta_s: 0.001,
            ellipsoid: EllipsoidConfig::default(),
            ucb_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlbPhase {
    SamplingFirstD,
    SamplingD1,
    Decided,
}

#[derive(Debug, Clone)]
enum Subpolicy {
    Oful(Box<OfulState>),
    Ucb(UcbState),
}

impl Subpolicy {
    fn as_policy(&mut self) -> &mut dyn Policy {
        match self {
            Subpolicy::Oful(p) => p.as_mut(),
            Subpolicy::Ucb(p) => p,
        }
    }
}

/// Sample `d+1` probe arms `k` times each, test whether the held-out arm's
/// mean agrees with the linear prediction from the other `d`, then commit to
/// a fresh OFUL (linear) or a fresh UCB (misspecified).
#[derive(Debug, Clone)]
pub struct RlbState {
    config: RlbConfig,
    features: Matrix,
    probe_arms: Vec<usize>,
    collected: Vec<Vec<f64>>,
    plays: usize,
    verdict: Option<TestVerdict>,
    subpolicy: Option<Subpolicy>,
    sub_round: usize,
}

impl RlbState {
    pub fn new(features: Matrix, config: RlbConfig) -> Result<Self> {
        config.ellipsoid.validate()?;
        boost_factor(config.k)?;
        if !(config.delta_s > 0.0 && config.delta_s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_s = {} not in (0, 1)",
                config.delta_s
            )));
        }
        let (d, n) = (features.rows(), features.cols());
        if n < d + 1 {
            return Err(Error::TooFewArms {
                need: d + 1,
                have: n,
            });
        }
        let mut probe_arms = select_independent_arms(&features, DEFAULT_INDEPENDENCE_TOL)?;
        let extra = (0..n)
            .find(|i| !probe_arms.contains(i))
            .expect("n > d leaves a spare arm");
        probe_arms.push(extra);
        Ok(Self {
            config,
            collected: vec![Vec::with_capacity(config.k); d + 1],
            features,
            probe_arms,
            plays: 0,
            verdict: None,
            subpolicy: None,
            sub_round: 1,
        })
    }

    pub fn config(&self) -> &RlbConfig {
        &self.config
    }

    pub fn probe_arms(&self) -> &[usize] {
        &self.probe_arms
    }

    pub fn collected(&self) -> &[Vec<f64>] {
        &self.collected
    }

    /// `τ = (d+1)·k`.
    pub fn tau(&self) -> usize {
        self.probe_arms.len() * self.config.k
    }

    pub fn phase(&self) -> RlbPhase {
        let d = self.features.rows();
        if self.verdict.is_some() {
            RlbPhase::Decided
        } else if self.plays < d * self.config.k {
            RlbPhase::SamplingFirstD
        } else {
            RlbPhase::SamplingD1
        }
    }

    pub fn test_verdict(&self) -> Option<&TestVerdict> {
        self.verdict.as_ref()
    }

    /// Probe slot played at sampling step `p` (0-based).
    fn probe_slot(&self, p: usize) -> usize {
        let d = self.features.rows();
        if p < d * self.config.k {
            p % d
        } else {
            d
        }
    }

    /// Runs the linearity test on the collected samples.
    pub fn decide(&mut self) -> Result<&TestVerdict> {
        let d = self.features.rows();
        let k = self.config.k;
        if self.collected.iter().any(|c| c.len() != k) {
            return Err(Error::DecisionBeforeSamplingComplete);
        }
        let mut rows = Vec::with_capacity(d * k * d);
        let mut ys = Vec::with_capacity(d * k);
        // Rows are laid out in play order so the fit matches an online fit.
        for p in 0..d * k {
            let slot = p % d;
            rows.extend(self.features.column(self.probe_arms[slot]));
            ys.push(self.collected[slot][p / d]);
        }
        let design = Matrix::new(d * k, d, rows)?;
        let ellipsoid = crate::policies::ConfidenceEllipsoid::from_samples(
            &design,
            &ys,
            self.config.ellipsoid,
        )?;
        let held_out = self.features.column(self.probe_arms[d]);
        let verdict = linearity_test(
            &ellipsoid,
            &held_out,
            &self.collected[d],
            self.config.delta_s,
        )?;
        self.subpolicy = Some(match verdict.decision {
            Hypothesis::H0 => Subpolicy::Oful(Box::new(OfulState::new(
                self.features.clone(),
                self.config.ellipsoid,
            )?)),
            Hypothesis::H1 => {
                Subpolicy::Ucb(UcbState::new(self.features.cols(), self.config.ucb_scale)?)
            }
        });
        self.sub_round = 1;
        Ok(self.verdict.insert(verdict))
    }
}

impl Policy for RlbState {
    fn name(&self) -> &str {
        "rlb"
    }

    fn select_arm(&mut self, _round: usize) -> Result<usize> {
        match self.subpolicy.as_mut() {
            Some(sub) => sub.as_policy().select_arm(self.sub_round),
            None => Ok(self.probe_arms[self.probe_slot(self.plays)]),
        }
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if let Some(sub) = self.subpolicy.as_mut() {
            sub.as_policy().observe(arm, reward)?;
            self.sub_round += 1;
            return Ok(());
        }
        let slot = self.probe_slot(self.plays);
        if arm != self.probe_arms[slot] {
            return Err(Error::InvalidParameter(format!(
                "observed arm {arm} while probe arm {} was due",
                self.probe_arms[slot]
            )));
        }
        self.collected[slot].push(reward);
        self.plays += 1;
        if self.plays == self.tau() {
            self.decide()?;
        }
        Ok(())
    }

    fn verdict(&self) -> Option<Hypothesis> {
        self.verdict.map(|v| v.decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{gen_linear, LinearSpec};
    use crate::rng::RngStream;

    fn drive(rlb: &mut RlbState, means: &[f64], noise: f64, rng: &mut RngStream) {
        for t in 1..=rlb.tau() {
            let arm = rlb.select_arm(t).unwrap();
            let y = means[arm] + noise * rng.standard_normal();
            rlb.observe(arm, y).unwrap();
        }
    }

    #[test]
    fn probe_schedule_and_decision_round() {
        let inst = gen_linear(&LinearSpec::new(12, 3), &mut RngStream::new(2)).unwrap();
        let cfg = RlbConfig {
            k: 5,
            ..Default::default()
        };
        let mut rlb = RlbState::new(inst.features().clone(), cfg).unwrap();
        assert_eq!(rlb.tau(), 20);
        let mut rng = RngStream::new(3);
        let mut seen = [0usize; 12];
        for t in 1..=20 {
            assert!(rlb.verdict().is_none());
            let arm = rlb.select_arm(t).unwrap();
            if t <= 15 {
                assert_eq!(arm, rlb.probe_arms()[(t - 1) % 3]);
                assert_eq!(rlb.phase(), RlbPhase::SamplingFirstD);
            } else {
                assert_eq!(arm, rlb.probe_arms()[3]);
                assert_eq!(rlb.phase(), RlbPhase::SamplingD1);
            }
            seen[arm] += 1;
            rlb.observe(arm, inst.means()[arm] + 0.1 * rng.standard_normal())
                .unwrap();
        }
        assert_eq!(rlb.phase(), RlbPhase::Decided);
        for &a in rlb.probe_arms() {
            assert_eq!(seen[a], 5);
        }
    }

    #[test]
    fn premature_decision_is_an_error() {
        let inst = gen_linear(&LinearSpec::new(5, 2), &mut RngStream::new(1)).unwrap();
        let mut rlb = RlbState::new(inst.features().clone(), RlbConfig::default()).unwrap();
        assert!(matches!(
            rlb.decide(),
            Err(Error::DecisionBeforeSamplingComplete)
        ));
    }

    #[test]
    fn near_noiseless_linear_instance_is_accepted() {
        for seed in 0..5 {
            let inst = gen_linear(&LinearSpec::new(30, 4), &mut RngStream::new(seed)).unwrap();
            let cfg = RlbConfig {
                k: 10,
                ellipsoid: EllipsoidConfig {
                    noise_std: 1e-6,
                    ..Default::default()
                },
                ..Default::default()
            };
            let mut rlb = RlbState::new(inst.features().clone(), cfg).unwrap();
            drive(
                &mut rlb,
                inst.means(),
                1e-6,
                &mut RngStream::new(seed + 100),
            );
            assert_eq!(rlb.verdict(), Some(Hypothesis::H0));
        }
    }

    #[test]
    fn grossly_nonlinear_held_out_arm_is_rejected() {
        let inst = gen_linear(&LinearSpec::new(8, 2), &mut RngStream::new(4)).unwrap();
        let cfg = RlbConfig {
            k: 20,
            ..Default::default()
        };
        let mut rlb = RlbState::new(inst.features().clone(), cfg).unwrap();
        let mut means = inst.means().to_vec();
        means[rlb.probe_arms()[2]] += 5.0;
        drive(&mut rlb, &means, 0.1, &mut RngStream::new(9));
        assert_eq!(rlb.verdict(), Some(Hypothesis::H1));
    }

    #[test]
    fn rejects_small_k_and_few_arms() {
        let inst = gen_linear(&LinearSpec::new(5, 2), &mut RngStream::new(1)).unwrap();
        let cfg = RlbConfig {
            k: 2,
            ..Default::default()
        };
        assert!(matches!(
            RlbState::new(inst.features().clone(), cfg),
            Err(Error::KTooSmall(2))
        ));
        assert!(matches!(
            RlbState::new(Matrix::identity(2), RlbConfig::default()),
            Err(Error::TooFewArms { need: 3, have: 2 })
        ));
    }
}
