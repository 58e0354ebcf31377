//! Command-line front end. `main.rs` only forwards to [`run`].

mod config;

pub use config::{
    CliConfig, ConfigError, ExperimentSection, InstanceKind, InstanceSection, OutputSection,
    PolicyKind, PolicySection,
};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::environments::{
    estimate_deviation_property, two_arm_counterexample, BanditInstance, DeviationQuery,
};
use crate::error::Error;
use crate::experiments::{
    adversarial_probe, default_ucb_scale, export_results, run_episode, run_replicated,
    theory_bounds, AdversarialConfig, BoundParams, ExportFormat, StuckConfig, Summary,
};
use crate::ingest::{parse_letor, run_pipeline, IngestConfig};
use crate::io_util::write_atomic;
use crate::misspec::Hypothesis;
use crate::policies::{EllipsoidConfig, OfulState, Policy, RlbConfig, RlbState, UcbState};
use crate::rng::RngStream;

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, bad config or unreadable input. Exit status 1.
    Usage(String),
    /// The computation itself failed. Exit status 2.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "bandit-misspec",
    version,
    about = "Linear bandits under reward misspecification"
)]
pub struct Cli {
    /// Master seed; overrides a config file's experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the printed report.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Directory that relative output paths are written under.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replicated regret experiment described by a config file.
    Simulate(SimulateArgs),
    /// Lower-bound probes: boosted rare arm or two-arm trap.
    Adversarial(AdversarialArgs),
    /// Estimate the (l, beta) deviation property of an instance file.
    CheckDeviation(CheckDeviationArgs),
    /// Build a bandit instance from a learning-to-rank file.
    Ingest(IngestArgs),
    /// Evaluate the closed-form regret bounds.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    /// Override the configured horizon.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// Override the configured replication count.
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeMode {
    Sparse,
    Twoarm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbePolicy {
    Oful,
    Ucb,
}

#[derive(Debug, Args)]
pub struct AdversarialArgs {
    #[arg(long, value_enum, default_value_t = ProbeMode::Sparse)]
    pub mode: ProbeMode,
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    /// Arm count is 1 + ceil(c sqrt(T)) in sparse mode.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Amount the rare arm is lifted above the optimum in sparse mode.
    #[arg(long, default_value_t = 0.5)]
    pub boost: f64,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, value_enum, default_value_t = ProbePolicy::Oful)]
    pub policy: ProbePolicy,
    /// Feature dimension in sparse mode.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
    pub mu1: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub mu2: f64,
    #[arg(long, default_value_t = -0.75, allow_hyphen_values = true)]
    pub eps1: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub eps2: f64,
    /// Forced pulls of arm 1 before OFUL takes over in two-arm mode.
    #[arg(long, default_value_t = 20)]
    pub warm: usize,
    /// Optional per-round CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckDeviationArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub subsets: usize,
    /// Quantile level used for l_hat.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Visit every (d+1)-subset in every ordering when there are at most 1e6.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value_t = 5)]
    pub cols: usize,
    #[arg(long = "K", default_value_t = 20)]
    pub clusters: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Instance file to write.
    #[arg(long, default_value = "instance.txt")]
    pub out: PathBuf,
    /// Also run the robust policy's sampling phase with this k and print its verdict.
    #[arg(long)]
    pub rlb_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long = "N", default_value_t = 1000)]
    pub n_arms: usize,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    /// Bound S on the parameter norm.
    #[arg(long = "S", default_value_t = 1.0)]
    pub theta_norm_bound: f64,
    /// Bound L on the feature norms.
    #[arg(long = "L", default_value_t = 1.0)]
    pub feature_norm_bound: f64,
    /// Noise scale R.
    #[arg(long = "R", default_value_t = 0.1)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0.001)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.001)]
    pub delta_tilde: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 2.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    /// Sampling-interval radius; defaults to sqrt(ln(1/delta_s) / 2k).
    #[arg(long)]
    pub r_s: Option<f64>,
    /// Used only for the default r_s.
    #[arg(long, default_value_t = 0.001)]
    pub delta_s: f64,
    /// Ellipsoid-interval radius.
    #[arg(long, default_value_t = 0.1)]
    pub r_p: f64,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            if !cli.quiet {
                print!("{report}");
            }
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

/// Runs a parsed command and returns its report text.
pub fn execute(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Adversarial(a) => adversarial(cli, a),
        Command::CheckDeviation(a) => check_deviation(cli, a),
        Command::Ingest(a) => ingest(cli, a),
        Command::Bounds(a) => bounds(a),
    }
}

fn output_path(cli: &Cli, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        cli.out_dir.join(p)
    }
}

fn ensure_out_dir(cli: &Cli) -> Result<(), Failure> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", cli.out_dir.display())))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<String, Failure> {
    let (cfg, text) = CliConfig::load(&a.config).map_err(usage)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut run = cfg.to_run_config(&text, base).map_err(usage)?;
    if let Some(t) = a.horizon {
        run.horizon = t;
    }
    if let Some(r) = a.replications {
        run.replications = r;
    }
    if let Some(s) = cli.seed {
        run.master_seed = s;
    }
    run.validate().map_err(usage)?;
    if let crate::experiments::InstanceSource::File(p) = &run.source {
        BanditInstance::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    }

    let summary = run_replicated(&run).map_err(runtime)?;
    let mut report = digest(&summary);
    let outputs = [
        (cfg.output.csv.as_ref(), ExportFormat::Csv),
        (cfg.output.svg.as_ref(), ExportFormat::Svg),
    ];
    if outputs.iter().any(|(p, _)| p.is_some()) {
        ensure_out_dir(cli)?;
    }
    for (path, format) in outputs {
        if let Some(p) = path {
            let p = output_path(cli, p);
            export_results(&summary, &p, format).map_err(runtime)?;
            let _ = writeln!(report, "wrote {}", p.display());
        }
    }
    Ok(report)
}

fn digest(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "T = {}, replications = {}",
        summary.horizon, summary.replications
    );
    let _ = writeln!(
        s,
        "{:<6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>7} {:>7} {:>7}",
        "policy", "mean R(T)", "std R(T)", "q05", "median", "q95", "H0", "H1", "none"
    );
    for p in &summary.policies {
        let last = p.std.last().copied().unwrap_or(0.0);
        let _ = writeln!(
            s,
            "{:<6} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>7} {:>7} {:>7}",
            p.label,
            p.mean_final(),
            last,
            p.final_quantile(0.05),
            p.final_quantile(0.5),
            p.final_quantile(0.95),
            p.verdicts.h0,
            p.verdicts.h1,
            p.verdicts.undecided
        );
    }
    s
}

fn adversarial(cli: &Cli, a: &AdversarialArgs) -> Result<String, Failure> {
    let seed = cli.seed.unwrap_or(0);
    if a.horizon == 0 || a.runs == 0 {
        return Err(Failure::Usage("--T and --runs must be positive".into()));
    }
    let mut s = String::new();
    let mut rows: Vec<String> = Vec::new();
    match a.mode {
        ProbeMode::Sparse => {
            if a.horizon < 100 {
                return Err(Failure::Usage(format!(
                    "--T must be at least 100, got {}",
                    a.horizon
                )));
            }
            if !(a.c > 0.0) || !(a.boost > 0.0) || a.dim < 2 || !(a.noise >= 0.0) {
                return Err(Failure::Usage(
                    "--c and --boost must be positive, --dim at least 2, --noise non-negative"
                        .into(),
                ));
            }
            let cfg = AdversarialConfig {
                horizon: a.horizon,
                c: a.c,
                delta_boost: a.boost,
                runs: a.runs,
                dim: a.dim,
                noise_std: a.noise,
            };
            let policy = a.policy;
            let ellipsoid = EllipsoidConfig {
                noise_std: a.noise,
                ..EllipsoidConfig::default()
            };
            let factory = move |inst: &BanditInstance| -> crate::Result<Box<dyn Policy + Send>> {
                Ok(match policy {
                    ProbePolicy::Oful => {
                        Box::new(OfulState::new(inst.features().clone(), ellipsoid)?)
                    }
                    ProbePolicy::Ucb => {
                        Box::new(UcbState::new(inst.n_arms(), default_ucb_scale(inst))?)
                    }
                })
            };
            let rep = adversarial_probe(&factory, &cfg, seed).map_err(runtime)?;
            let _ = writeln!(
                s,
                "arms = {}, rare arm = {} (mean plays {:.2})",
                rep.linear_instance.n_arms(),
                rep.rare_arm,
                rep.mean_plays[rep.rare_arm]
            );
            let _ = writeln!(
                s,
                "{:>8} {:>14} {:>16} {:>16}",
                "t", "linear R/t", "linear R/sqrt t", "perturbed R/t"
            );
            for i in 0..3 {
                let _ = writeln!(
                    s,
                    "{:>8} {:>14.6} {:>16.6} {:>16.6}",
                    rep.checkpoints[i],
                    rep.linear_per_round[i],
                    rep.linear_per_sqrt_round[i],
                    rep.perturbed_per_round[i]
                );
            }
            rows.push("round,linear_regret,perturbed_regret".into());
            for (t, (l, p)) in rep
                .linear_curve
                .iter()
                .zip(&rep.perturbed_curve)
                .enumerate()
            {
                rows.push(format!("{},{l},{p}", t + 1));
            }
        }
        ProbeMode::Twoarm => {
            if a.policy != ProbePolicy::Oful {
                return Err(Failure::Usage(
                    "--mode twoarm only supports --policy oful".into(),
                ));
            }
            let instance = two_arm_counterexample(a.mu1, a.mu2, a.eps1, a.eps2)
                .map_err(usage)?
                .with_noise_std(a.noise);
            let cfg = StuckConfig {
                warm_start_pulls: a.warm,
                horizon: a.horizon,
                runs: a.runs,
                ellipsoid: EllipsoidConfig {
                    noise_std: a.noise,
                    ..EllipsoidConfig::default()
                },
                ..StuckConfig::default()
            };
            if cfg.horizon <= cfg.warm_start_pulls {
                return Err(Failure::Usage(format!(
                    "--T {} must exceed --warm {}",
                    cfg.horizon, cfg.warm_start_pulls
                )));
            }
            let rep =
                crate::experiments::stuck_oful_probe(&instance, &cfg, seed).map_err(runtime)?;
            let _ = writeln!(
                s,
                "means = ({}, {}), best arm = {}",
                instance.means()[0],
                instance.means()[1],
                instance.best_arm() + 1
            );
            let _ = writeln!(
                s,
                "suboptimal-play fraction = {:.6}",
                rep.suboptimal_fraction
            );
            let per_run: Vec<String> = rep
                .per_run_fractions
                .iter()
                .map(|f| format!("{f:.6}"))
                .collect();
            let _ = writeln!(s, "per run: {}", per_run.join(" "));
            if let Some(last) = rep.trajectory.last() {
                let _ = writeln!(
                    s,
                    "theta interval at t = {}: [{:.6}, {:.6}] around {:.6}",
                    last.round, last.lower, last.upper, last.theta_hat
                );
            }
            rows.push("round,theta_hat,lower,upper".into());
            for p in &rep.trajectory {
                rows.push(format!(
                    "{},{},{},{}",
                    p.round, p.theta_hat, p.lower, p.upper
                ));
            }
        }
    }
    if let Some(csv) = &a.csv {
        ensure_out_dir(cli)?;
        let path = output_path(cli, csv);
        let mut body = rows.join("\n");
        body.push('\n');
        write_atomic(&path, body.as_bytes()).map_err(runtime)?;
        let _ = writeln!(s, "wrote {}", path.display());
    }
    Ok(s)
}

fn check_deviation(cli: &Cli, a: &CheckDeviationArgs) -> Result<String, Failure> {
    let instance = BanditInstance::load(&a.instance)
        .map_err(|e| usage(format!("{}: {e}", a.instance.display())))?;
    let query = DeviationQuery {
        num_subsets: a.subsets,
        beta_target: a.beta,
        exhaustive: a.exhaustive,
    };
    let mut rng = RngStream::new(cli.seed.unwrap_or(0));
    let est = estimate_deviation_property(&instance, &query, &mut rng).map_err(|e| match e {
        Error::InvalidParameter(_) | Error::TooFewArms { .. } => usage(e),
        e => runtime(e),
    })?;
    let mut s = String::new();
    let _ = writeln!(s, "arms = {}, dim = {}", instance.n_arms(), instance.dim());
    let _ = writeln!(s, "l_hat = {:.6}", est.l_hat);
    let _ = writeln!(s, "beta_hat = {:.6}", est.beta_hat);
    let _ = writeln!(s, "subsets sampled = {}", est.subsets_sampled);
    let _ = writeln!(
        s,
        "subsets skipped (singular) = {}",
        est.subsets_skipped_singular
    );
    Ok(s)
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<String, Failure> {
    let seed = cli.seed.unwrap_or(0);
    let parsed = parse_letor(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let config = IngestConfig {
        rows: a.rows,
        cols: a.cols,
        k: a.clusters,
        max_iters: a.max_iters,
        tol: a.tol,
        noise_std: a.noise,
    };
    let out = run_pipeline(&parsed.records, &config, seed).map_err(runtime)?;
    ensure_out_dir(cli)?;
    let path = output_path(cli, &a.out);
    out.instance.save(&path).map_err(runtime)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "records = {} (rejected {}), columns = {:?}",
        parsed.records.len(),
        parsed.rejects.len(),
        out.sample.columns
    );
    let _ = writeln!(
        s,
        "clusters = {}, iterations = {}",
        out.model.k(),
        out.model.iterations
    );
    match &out.diagnostic {
        Some(d) => {
            let _ = writeln!(s, "mean_abs_residual = {:.6}", d.mean_abs_residual);
            let _ = writeln!(s, "max_abs_residual = {:.6}", d.max_abs_residual);
            let _ = writeln!(s, "mean_reward = {:.6}", d.mean_reward);
            if d.used_ridge_fallback {
                let _ = writeln!(s, "note: least-squares fit used the ridge fallback");
            }
        }
        None => {
            let _ = writeln!(
                s,
                "linearity diagnostic skipped: {} arms do not exceed {} columns",
                out.instance.n_arms(),
                out.instance.dim()
            );
        }
    }
    if let Some(k) = a.rlb_k {
        let verdict = rlb_verdict(&out.instance, k, a.noise, seed).map_err(runtime)?;
        let _ = writeln!(s, "rlb verdict (k = {k}) = {verdict}");
    }
    let _ = writeln!(s, "wrote {}", path.display());
    Ok(s)
}

/// Plays the robust policy through its sampling phase and returns the test
/// decision. Rewards come from stream 3 of `seed`.
pub fn rlb_verdict(
    instance: &BanditInstance,
    k: usize,
    noise_std: f64,
    seed: u64,
) -> crate::Result<Hypothesis> {
    let cfg = RlbConfig {
        k,
        ellipsoid: EllipsoidConfig {
            noise_std,
            ..EllipsoidConfig::default()
        },
        ucb_scale: noise_std.max(1e-12),
        ..RlbConfig::default()
    };
    let mut rlb = RlbState::new(instance.features().clone(), cfg)?;
    let tau = rlb.tau();
    let trace = run_episode(instance, &mut rlb, tau, &mut RngStream::derive(seed, 3))?;
    trace.verdict.ok_or(Error::DecisionBeforeSamplingComplete)
}

fn bounds(a: &BoundsArgs) -> Result<String, Failure> {
    if a.k < 1 || !(a.delta_s > 0.0 && a.delta_s < 1.0) {
        return Err(Failure::Usage(
            "--k must be positive and --delta-s in (0, 1)".into(),
        ));
    }
    let p = BoundParams {
        horizon: a.horizon,
        dim: a.dim,
        n_arms: a.n_arms,
        k: a.k,
        lambda: a.lambda,
        theta_norm_bound: a.theta_norm_bound,
        feature_norm_bound: a.feature_norm_bound,
        noise_std: a.noise_std,
        delta: a.delta,
        delta_tilde: a.delta_tilde,
        rho: a.rho,
        l1: a.l1,
        beta: a.beta,
        c1: a.c1,
        c2: a.c2,
        r_s: a
            .r_s
            .unwrap_or_else(|| ((1.0 / a.delta_s).ln() / (2.0 * a.k as f64)).sqrt()),
        r_p: a.r_p,
    };
    // Every failure here comes from the parameters themselves.
    let b = theory_bounds(&p).map_err(usage)?;
    let mut s = String::new();
    let _ = writeln!(s, "oful_small_dev_bound = {}", b.oful_small_dev_bound);
    let _ = writeln!(s, "rlb_h0_bound = {}", b.rlb_h0_bound);
    let _ = writeln!(s, "rlb_h1_bound = {}", b.rlb_h1_bound);
    let _ = writeln!(s, "delta1 = {}", b.delta1);
    let _ = writeln!(s, "delta2 = {}", b.delta2);
    if a.noise_std == 0.0 {
        let _ = writeln!(
            s,
            "note: R = 0, so delta1 and delta2 are their noiseless limits"
        );
    }
    Ok(s)
}
