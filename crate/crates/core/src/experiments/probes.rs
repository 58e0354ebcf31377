use rayon::prelude::*;

use crate::environments::{gen_sparse_perturbed, BanditInstance};
use crate::error::{Error, Result};
use crate::experiments::{run_episode, thread_pool, RegretTrace};
use crate::linalg::Matrix;
use crate::misspec::project_ellipsoid;
use crate::policies::{EllipsoidConfig, OfulState, Policy};
use crate::rng::RngStream;

pub type PolicyFactory<'a> = dyn Fn(&BanditInstance) -> Result<Box<dyn Policy + Send>> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialConfig {
    pub horizon: usize,
    /// Arm count is `1 + ⌈c√T⌉`.
    pub c: f64,
    /// The rare arm's mean becomes `μ* + delta_boost`.
    pub delta_boost: f64,
    pub runs: usize,
    pub dim: usize,
    pub noise_std: f64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            c: 1.0,
            delta_boost: 0.5,
            runs: 3,
            dim: 5,
            noise_std: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdversarialReport {
    pub linear_instance: BanditInstance,
    pub perturbed_instance: BanditInstance,
    pub rare_arm: usize,
    /// Average plays per arm on the linear instance.
    pub mean_plays: Vec<f64>,
    pub linear_curve: Vec<f64>,
    pub perturbed_curve: Vec<f64>,
    /// `T/4`, `T/2`, `T`.
    pub checkpoints: [usize; 3],
    /// `R(t)/t` on the linear instance at each checkpoint.
    pub linear_per_round: [f64; 3],
    /// `R(t)/√t` on the linear instance at each checkpoint.
    pub linear_per_sqrt_round: [f64; 3],
    /// `R(t)/t` on the perturbed instance at each checkpoint.
    pub perturbed_per_round: [f64; 3],
}

/// Linear instance with one arm of mean 1 at a random position and the rest
/// in `[0.05, 0.1]`. Arm `i` has features `(μ_i, z_i)` with `z_i` uniform on
/// `[0,1]^{d−1}` and `θ* = e₁`, so the means are exactly linear.
pub fn adversarial_instance(
    n_arms: usize,
    dim: usize,
    noise_std: f64,
    rng: &mut RngStream,
) -> Result<BanditInstance> {
    if dim == 0 || n_arms <= dim {
        return Err(Error::InvalidDimensions(format!(
            "need N > d >= 1, got N = {n_arms}, d = {dim}"
        )));
    }
    let best = rng.index(n_arms);
    let means: Vec<f64> = (0..n_arms)
        .map(|i| {
            if i == best {
                1.0
            } else {
                rng.uniform_range(0.05, 0.1)
            }
        })
        .collect();
    let mut data = means.clone();
    data.extend((0..(dim - 1) * n_arms).map(|_| rng.uniform()));
    let mut theta = vec![0.0; dim];
    theta[0] = 1.0;
    BanditInstance::linear(Matrix::new(dim, n_arms, data)?, theta, noise_std)
}

fn mean_curve(traces: &[RegretTrace]) -> Vec<f64> {
    let n = traces.len() as f64;
    let len = traces.first().map_or(0, |t| t.cumulative.len());
    (0..len)
        .map(|t| traces.iter().map(|tr| tr.cumulative[t]).sum::<f64>() / n)
        .collect()
}

fn run_many(
    factory: &PolicyFactory<'_>,
    instance: &BanditInstance,
    horizon: usize,
    seed: u64,
    first_stream: u64,
    runs: usize,
) -> Result<Vec<RegretTrace>> {
    thread_pool()?.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let mut policy = factory(instance)?;
                let mut rng = RngStream::derive(seed, first_stream + r as u64);
                run_episode(instance, policy.as_mut(), horizon, &mut rng)
            })
            .collect()
    })
}

/// Builds a linear instance, finds the suboptimal arm the policy plays least,
/// boosts it above the optimum and measures regret on both instances.
pub fn adversarial_probe(
    factory: &PolicyFactory<'_>,
    config: &AdversarialConfig,
    seed: u64,
) -> Result<AdversarialReport> {
    let t = config.horizon;
    if t < 100 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be >= 100, got {t}"
        )));
    }
    if config.runs == 0 || !(config.c > 0.0) || !(config.delta_boost > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "runs = {}, c = {}, delta_boost = {}",
            config.runs, config.c, config.delta_boost
        )));
    }
    let n_arms = 1 + (config.c * (t as f64).sqrt()).ceil() as usize;
    let linear = adversarial_instance(
        n_arms,
        config.dim,
        config.noise_std,
        &mut RngStream::derive(seed, 0),
    )?;
    let runs = config.runs;
    let linear_traces = run_many(factory, &linear, t, seed, 1, runs)?;
    let mut mean_plays = vec![0.0; n_arms];
    for tr in &linear_traces {
        for &a in &tr.actions {
            mean_plays[a] += 1.0 / runs as f64;
        }
    }
    let best = linear.best_arm();
    let rare_arm = (0..n_arms)
        .filter(|&i| i != best)
        .min_by(|&a, &b| mean_plays[a].total_cmp(&mean_plays[b]))
        .expect("at least two arms");
    let perturbed =
        gen_sparse_perturbed(&linear, rare_arm, linear.best_mean() + config.delta_boost)?;
    let perturbed_traces = run_many(factory, &perturbed, t, seed, 1 + runs as u64, runs)?;

    let linear_curve = mean_curve(&linear_traces);
    let perturbed_curve = mean_curve(&perturbed_traces);
    let checkpoints = [t / 4, t / 2, t];
    let at =
        |curve: &[f64], f: &dyn Fn(f64) -> f64| checkpoints.map(|c| curve[c - 1] / f(c as f64));
    Ok(AdversarialReport {
        linear_per_round: at(&linear_curve, &|x| x),
        linear_per_sqrt_round: at(&linear_curve, &f64::sqrt),
        perturbed_per_round: at(&perturbed_curve, &|x| x),
        linear_instance: linear,
        perturbed_instance: perturbed,
        rare_arm,
        mean_plays,
        linear_curve,
        perturbed_curve,
        checkpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StuckConfig {
    /// Rounds during which `forced_arm` is played regardless of the index.
    pub warm_start_pulls: usize,
    pub forced_arm: usize,
    pub horizon: usize,
    pub runs: usize,
    pub ellipsoid: EllipsoidConfig,
}

impl Default for StuckConfig {
    fn default() -> Self {
        Self {
            warm_start_pulls: 20,
            forced_arm: 0,
            horizon: 10_000,
            runs: 3,
            ellipsoid: EllipsoidConfig::default(),
        }
    }
}

/// Confidence interval for `θ₁` after a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPoint {
    pub round: usize,
    pub theta_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StuckReport {
    /// Mean over runs of the fraction of post-warm-start rounds spent on a
    /// suboptimal arm.
    pub suboptimal_fraction: f64,
    pub per_run_fractions: Vec<f64>,
    /// Interval trajectory of the first run.
    pub trajectory: Vec<IntervalPoint>,
}

/// Forces `forced_arm` for the warm start, then lets OFUL choose.
pub fn stuck_oful_probe(
    instance: &BanditInstance,
    config: &StuckConfig,
    seed: u64,
) -> Result<StuckReport> {
    if config.horizon <= config.warm_start_pulls || config.runs == 0 {
        return Err(Error::InvalidParameter(format!(
            "horizon {} must exceed warm start {} and runs must be positive",
            config.horizon, config.warm_start_pulls
        )));
    }
    if config.forced_arm >= instance.n_arms() {
        return Err(Error::ArmOutOfRange {
            arm: config.forced_arm,
            n_arms: instance.n_arms(),
        });
    }
    let best_mean = instance.best_mean();
    let mut e1 = vec![0.0; instance.dim()];
    e1[0] = 1.0;
    let mut fractions = Vec::with_capacity(config.runs);
    let mut trajectory = Vec::new();
    for run in 0..config.runs {
        let mut rng = RngStream::derive(seed, run as u64);
        let mut oful = OfulState::new(instance.features().clone(), config.ellipsoid)?;
        let mut suboptimal = 0usize;
        for t in 1..=config.horizon {
            let arm = if t <= config.warm_start_pulls {
                config.forced_arm
            } else {
                oful.select_arm(t)?
            };
            let reward = instance.sample_reward(arm, &mut rng)?;
            oful.observe(arm, reward)?;
            if t > config.warm_start_pulls && instance.means()[arm] < best_mean {
                suboptimal += 1;
            }
            if run == 0 {
                let iv = project_ellipsoid(oful.ellipsoid(), &e1)?;
                trajectory.push(IntervalPoint {
                    round: t,
                    theta_hat: iv.center,
                    lower: iv.lower(),
                    upper: iv.upper(),
                });
            }
        }
        fractions.push(suboptimal as f64 / (config.horizon - config.warm_start_pulls) as f64);
    }
    Ok(StuckReport {
        suboptimal_fraction: fractions.iter().sum::<f64>() / fractions.len() as f64,
        per_run_fractions: fractions,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::two_arm_counterexample;
    use crate::policies::{FixedArm, UcbState};

    #[test]
    fn adversarial_instance_is_linear_with_one_best_arm() {
        let inst = adversarial_instance(30, 4, 0.1, &mut RngStream::new(3)).unwrap();
        assert!(inst.separation().unwrap() < 1e-12);
        let best = inst.best_arm();
        assert_eq!(inst.means()[best], 1.0);
        for (i, &m) in inst.means().iter().enumerate() {
            if i != best {
                assert!((0.05..=0.1).contains(&m));
            }
        }
    }

    #[test]
    fn linear_oracle_suffers_exactly_the_boost() {
        let factory = |inst: &BanditInstance| -> Result<Box<dyn Policy + Send>> {
            // Plays the best arm of the unperturbed instance: the arm with
            // the largest first feature.
            let first = inst.features().row(0);
            let arm = crate::policies::argmax_first(first);
            Ok(Box::new(FixedArm::new(arm, inst.n_arms())?))
        };
        let cfg = AdversarialConfig {
            horizon: 400,
            runs: 2,
            ..Default::default()
        };
        let rep = adversarial_probe(&factory, &cfg, 1).unwrap();
        assert_eq!(rep.linear_curve[399], 0.0);
        assert!((rep.perturbed_curve[399] - 0.5 * 400.0).abs() < 1e-9);
        let total_sub: f64 = (0..rep.mean_plays.len())
            .filter(|&i| i != rep.linear_instance.best_arm())
            .map(|i| rep.mean_plays[i])
            .sum();
        let n = rep.mean_plays.len() as f64;
        assert!(rep.mean_plays[rep.rare_arm] <= 3.0 * total_sub / (n - 1.0));
    }

    #[test]
    fn ucb_recovers_from_the_perturbation() {
        let factory = |inst: &BanditInstance| -> Result<Box<dyn Policy + Send>> {
            Ok(Box::new(UcbState::new(inst.n_arms(), 0.1)?))
        };
        let cfg = AdversarialConfig {
            horizon: 4000,
            runs: 3,
            ..Default::default()
        };
        let rep = adversarial_probe(&factory, &cfg, 5).unwrap();
        assert!(rep.perturbed_per_round[2] < rep.perturbed_per_round[1]);
    }

    #[test]
    fn noiseless_point_b_locks_in() {
        let inst = two_arm_counterexample(-0.2, 0.1, -0.75, -1.0)
            .unwrap()
            .with_noise_std(0.0);
        let cfg = StuckConfig {
            horizon: 2000,
            runs: 1,
            ellipsoid: EllipsoidConfig {
                noise_std: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let rep = stuck_oful_probe(&inst, &cfg, 0).unwrap();
        assert_eq!(rep.suboptimal_fraction, 1.0);
        assert_eq!(rep.trajectory.len(), 2000);
        let last = rep.trajectory.last().unwrap();
        assert!(last.lower <= last.theta_hat && last.theta_hat <= last.upper);
    }

    #[test]
    fn benign_linear_pair_escapes() {
        let inst =
            BanditInstance::linear(Matrix::new(1, 2, vec![1.0, 2.0]).unwrap(), vec![0.3], 0.1)
                .unwrap();
        let cfg = StuckConfig {
            warm_start_pulls: 0,
            horizon: 3000,
            runs: 2,
            ..Default::default()
        };
        let rep = stuck_oful_probe(&inst, &cfg, 2).unwrap();
        assert!(
            rep.suboptimal_fraction < 0.05,
            "{}",
            rep.suboptimal_fraction
        );
    }

    #[test]
    fn stuck_probe_validates_inputs() {
        let inst = two_arm_counterexample(-0.2, 0.1, -0.75, -1.0).unwrap();
        let cfg = StuckConfig {
            horizon: 10,
            warm_start_pulls: 10,
            ..Default::default()
        };
        assert!(stuck_oful_probe(&inst, &cfg, 0).is_err());
    }
}
