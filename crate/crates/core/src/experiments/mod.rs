//! Episode runner, replicated experiments and their statistics.

mod bounds;
mod export;
mod probes;

pub use bounds::{theory_bounds, BoundParams, TheoryBounds};
pub use export::{export_results, read_csv, summary_csv, summary_svg, ExportFormat};
pub use probes::{
    adversarial_instance, adversarial_probe, stuck_oful_probe, AdversarialConfig,
    AdversarialReport, IntervalPoint, StuckConfig, StuckReport,
};

use std::path::PathBuf;

use rayon::prelude::*;

use crate::environments::{
    gen_feature_noise, gen_linear, gen_nonsparse, BanditInstance, LinearSpec,
};
use crate::error::{Error, Result};
use crate::misspec::Hypothesis;
use crate::policies::{EllipsoidConfig, OfulState, Policy, RlbConfig, RlbState, UcbState};
use crate::rng::RngStream;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "BANDIT_MISSPEC_THREADS";

/// Replications are simulated in parallel batches of this size and folded
/// into the running statistics in replication order.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// `scale = None` uses `max(R, clip width / 2)`.
    Ucb {
        scale: Option<f64>,
    },
    Oful(EllipsoidConfig),
    Rlb(RlbConfig),
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Ucb { .. } => "ucb",
            PolicySpec::Oful(_) => "oful",
            PolicySpec::Rlb(_) => "rlb",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::Ucb { scale: Some(s) } if !(*s > 0.0) => Err(Error::InvalidParameter(
                format!("ucb exploration scale must be positive, got {s}"),
            )),
            PolicySpec::Ucb { .. } => Ok(()),
            PolicySpec::Oful(cfg) => cfg.validate(),
            PolicySpec::Rlb(cfg) => {
                cfg.ellipsoid.validate()?;
                crate::misspec::boost_factor(cfg.k)?;
                if !(cfg.delta_s > 0.0 && cfg.delta_s < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "delta_s = {} not in (0, 1)",
                        cfg.delta_s
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, instance: &BanditInstance) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            PolicySpec::Ucb { scale } => Box::new(UcbState::new(
                instance.n_arms(),
                scale.unwrap_or_else(|| default_ucb_scale(instance)),
            )?),
            PolicySpec::Oful(cfg) => Box::new(OfulState::new(instance.features().clone(), *cfg)?),
            PolicySpec::Rlb(cfg) => Box::new(RlbState::new(instance.features().clone(), *cfg)?),
        })
    }
}

/// `max(R, (hi − lo)/2)`, floored so the index stays well defined when the
/// instance is noiseless and unclipped.
pub fn default_ucb_scale(instance: &BanditInstance) -> f64 {
    let half_width = instance
        .reward_clip()
        .map_or(0.0, |(lo, hi)| (hi - lo) / 2.0);
    instance.noise_std().max(half_width).max(1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Linear(LinearSpec),
    /// Linear instance plus `|ε_i| ~ U[l, 2l]` with random signs.
    NonSparse {
        spec: LinearSpec,
        l: f64,
    },
    FeatureNoise {
        spec: LinearSpec,
        zeta_std: f64,
    },
    File(PathBuf),
    Fixed(BanditInstance),
}

impl InstanceSource {
    /// Instance for one replication. Random sources draw a fresh instance
    /// from `rng`; fixed sources ignore it.
    pub fn instantiate(&self, rng: &mut RngStream) -> Result<BanditInstance> {
        match self {
            InstanceSource::Linear(spec) => gen_linear(spec, rng),
            InstanceSource::NonSparse { spec, l } => {
                gen_nonsparse(&gen_linear(spec, rng)?, *l, rng)
            }
            InstanceSource::FeatureNoise { spec, zeta_std } => {
                gen_feature_noise(&gen_linear(spec, rng)?, *zeta_std, rng)
            }
            InstanceSource::File(path) => BanditInstance::load(path),
            InstanceSource::Fixed(inst) => Ok(inst.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: InstanceSource,
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub replications: usize,
    pub master_seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidParameter("no policies configured".into()));
        }
        self.policies.iter().try_for_each(PolicySpec::validate)
    }
}

/// Instance stream for replication `r`.
pub fn instance_stream(master_seed: u64, replication: usize) -> RngStream {
    RngStream::derive(master_seed, 2 * replication as u64)
}

/// Reward-noise stream for replication `r`, shared by every policy.
pub fn reward_stream(master_seed: u64, replication: usize) -> RngStream {
    RngStream::derive(master_seed, 2 * replication as u64 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// `cumulative[t]` is the pseudo-regret after `t + 1` rounds.
    pub cumulative: Vec<f64>,
    pub actions: Vec<usize>,
    pub verdict: Option<Hypothesis>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Plays `horizon` rounds and scores each pull by its true mean gap.
pub fn run_episode(
    instance: &BanditInstance,
    policy: &mut dyn Policy,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<RegretTrace> {
    let best = instance.best_mean();
    let means = instance.means();
    let mut cumulative = Vec::with_capacity(horizon);
    let mut actions = Vec::with_capacity(horizon);
    let mut regret = 0.0;
    for t in 1..=horizon {
        let arm = policy.select_arm(t)?;
        let reward = instance.sample_reward(arm, rng)?;
        policy.observe(arm, reward)?;
        regret += best - means[arm];
        cumulative.push(regret);
        actions.push(arm);
    }
    Ok(RegretTrace {
        cumulative,
        actions,
        verdict: policy.verdict(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerdictCounts {
    pub h0: usize,
    pub h1: usize,
    pub undecided: usize,
}

impl VerdictCounts {
    fn record(&mut self, v: Option<Hypothesis>) {
        match v {
            Some(Hypothesis::H0) => self.h0 += 1,
            Some(Hypothesis::H1) => self.h1 += 1,
            None => self.undecided += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.h0 + self.h1 + self.undecided
    }

    pub fn frequency(&self, h: Hypothesis) -> f64 {
        let n = match h {
            Hypothesis::H0 => self.h0,
            Hypothesis::H1 => self.h1,
        };
        n as f64 / self.total().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    pub mean: Vec<f64>,
    /// Sample standard deviation across replications (0 for one replication).
    pub std: Vec<f64>,
    pub verdicts: VerdictCounts,
    /// Final regret of every replication, in replication order.
    pub final_regrets: Vec<f64>,
}

impl PolicySummary {
    /// Linear-interpolated quantile of the final regrets.
    pub fn final_quantile(&self, q: f64) -> f64 {
        quantile(&self.final_regrets, q)
    }

    pub fn mean_final(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub horizon: usize,
    pub replications: usize,
    pub policies: Vec<PolicySummary>,
}

impl Summary {
    pub fn policy(&self, label: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.label == label)
    }
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Welford accumulator for one policy's per-round statistics.
struct TraceStats {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    verdicts: VerdictCounts,
    finals: Vec<f64>,
}

impl TraceStats {
    fn new(horizon: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; horizon],
            m2: vec![0.0; horizon],
            verdicts: VerdictCounts::default(),
            finals: Vec::new(),
        }
    }

    fn push(&mut self, trace: &RegretTrace) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self
            .mean
            .iter_mut()
            .zip(&mut self.m2)
            .zip(&trace.cumulative)
        {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
        self.verdicts.record(trace.verdict);
        self.finals.push(trace.final_regret());
    }

    fn finish(self, label: String) -> PolicySummary {
        let denom = self.n.saturating_sub(1).max(1) as f64;
        let std = if self.n > 1 {
            self.m2
                .iter()
                .map(|s| (s.max(0.0) / denom).sqrt())
                .collect()
        } else {
            vec![0.0; self.mean.len()]
        };
        PolicySummary {
            label,
            mean: self.mean,
            std,
            verdicts: self.verdicts,
            final_regrets: self.finals,
        }
    }
}

/// Worker pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Runs every policy on `replications` instances.
///
/// Replication `r` draws its instance from stream `(seed, 2r)` and every
/// policy sees rewards from a fresh copy of stream `(seed, 2r + 1)`, so the
/// policies face the same noise sequence. Results do not depend on the
/// number of worker threads.
pub fn run_replicated(config: &RunConfig) -> Result<Summary> {
    config.validate()?;
    let pool = thread_pool()?;
    let mut stats: Vec<TraceStats> = config
        .policies
        .iter()
        .map(|_| TraceStats::new(config.horizon))
        .collect();
    let mut start = 0;
    while start < config.replications {
        let end = (start + BATCH).min(config.replications);
        let batch: Vec<Result<Vec<RegretTrace>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|r| run_one_replication(config, r))
                .collect()
        });
        for traces in batch {
            for (s, trace) in stats.iter_mut().zip(traces?) {
                s.push(&trace);
            }
        }
        start = end;
    }
    Ok(Summary {
        horizon: config.horizon,
        replications: config.replications,
        policies: stats
            .into_iter()
            .zip(&config.policies)
            .map(|(s, p)| s.finish(p.label().to_string()))
            .collect(),
    })
}

fn run_one_replication(config: &RunConfig, r: usize) -> Result<Vec<RegretTrace>> {
    let instance = config
        .source
        .instantiate(&mut instance_stream(config.master_seed, r))?;
    config
        .policies
        .iter()
        .map(|spec| {
            let mut policy = spec.build(&instance)?;
            let mut rng = reward_stream(config.master_seed, r);
            run_episode(&instance, policy.as_mut(), config.horizon, &mut rng)
        })
        .collect()
}
