//! Bandit instances: construction, reward sampling, the plain-text instance
//! format, and the Monte-Carlo estimate of the `(l, β)` deviation property.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::linalg::{binomial, dot, least_squares, Combinations, Matrix};
use crate::rng::RngStream;

/// Smallest singular value a `d × d` feature block needs before its subset
/// counts in the deviation estimate.
const SUBSET_SINGULAR_TOL: f64 = 1e-8;

/// Exhaustive enumeration limit on (subset, target) pairs.
const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Ground truth for one bandit problem.
///
/// `features` is `d × N` with one column per arm. The learner sees
/// `features`; pseudo-regret is computed from `means`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    features: Matrix,
    means: Vec<f64>,
    noise_std: f64,
    deviation: Vec<f64>,
    theta_star: Option<Vec<f64>>,
    reward_clip: Option<(f64, f64)>,
}

impl BanditInstance {
    /// Instance with explicit means and deviation vector and no known `θ*`.
    pub fn from_parts(
        features: Matrix,
        means: Vec<f64>,
        deviation: Vec<f64>,
        noise_std: f64,
    ) -> Result<Self> {
        let n = features.cols();
        if means.len() != n || deviation.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} means and {} deviations for {n} arms",
                means.len(),
                deviation.len()
            )));
        }
        if means.iter().chain(&deviation).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("means"));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidParameter(format!("noise_std = {noise_std}")));
        }
        if n == 0 {
            return Err(Error::InvalidDimensions("instance has no arms".into()));
        }
        Ok(Self {
            features,
            means,
            noise_std,
            deviation,
            theta_star: None,
            reward_clip: None,
        })
    }

    /// `μ = 𝒳ᵀθ* + ε`.
    pub fn from_model(
        features: Matrix,
        theta_star: Vec<f64>,
        deviation: Vec<f64>,
        noise_std: f64,
    ) -> Result<Self> {
        let linear = features.tr_mul_vec(&theta_star)?;
        if deviation.len() != linear.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} deviations for {} arms",
                deviation.len(),
                linear.len()
            )));
        }
        let means = linear.iter().zip(&deviation).map(|(a, e)| a + e).collect();
        let mut inst = Self::from_parts(features, means, deviation, noise_std)?;
        inst.theta_star = Some(theta_star);
        Ok(inst)
    }

    /// Perfectly linear instance `μ = 𝒳ᵀθ*`.
    pub fn linear(features: Matrix, theta_star: Vec<f64>, noise_std: f64) -> Result<Self> {
        let n = features.cols();
        Self::from_model(features, theta_star, vec![0.0; n], noise_std)
    }

    pub fn with_noise_std(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_reward_clip(mut self, lo: f64, hi: f64) -> Self {
        self.reward_clip = Some((lo.min(hi), lo.max(hi)));
        self
    }

    pub fn n_arms(&self) -> usize {
        self.features.cols()
    }

    pub fn dim(&self) -> usize {
        self.features.rows()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature(&self, arm: usize) -> Vec<f64> {
        self.features.column(arm)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn deviation(&self) -> &[f64] {
        &self.deviation
    }

    pub fn theta_star(&self) -> Option<&[f64]> {
        self.theta_star.as_deref()
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn reward_clip(&self) -> Option<(f64, f64)> {
        self.reward_clip
    }

    pub fn best_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index arm attaining the best mean.
    pub fn best_arm(&self) -> usize {
        let best = self.best_mean();
        self.means.iter().position(|&m| m == best).unwrap_or(0)
    }

    pub fn max_gap(&self) -> f64 {
        let worst = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        self.best_mean() - worst
    }

    /// `min_θ ‖𝒳ᵀθ − μ‖₂`.
    pub fn separation(&self) -> Result<f64> {
        let fit = least_squares(&self.features.transpose(), &self.means)?;
        Ok(fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt())
    }

    /// One reward draw `μ_arm + η`, `η ~ N(0, R²)`, clamped when a clip is set.
    ///
    /// Exactly one normal variate is consumed per call, also when `R = 0`,
    /// so streams stay aligned across instances.
    pub fn sample_reward(&self, arm: usize, rng: &mut RngStream) -> Result<f64> {
        let mean = *self.means.get(arm).ok_or(Error::ArmOutOfRange {
            arm,
            n_arms: self.n_arms(),
        })?;
        let reward = mean + self.noise_std * rng.standard_normal();
        Ok(match self.reward_clip {
            Some((lo, hi)) => reward.clamp(lo, hi),
            None => reward,
        })
    }

    /// Plain-text form: `N d R`, then `d` feature rows of `N` values, one row
    /// of means and one row of deviations.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_arms(), self.dim(), self.noise_std);
        let join = |vals: &[f64]| {
            vals.iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for i in 0..self.dim() {
            let _ = writeln!(out, "{}", join(self.features.row(i)));
        }
        let _ = writeln!(out, "{}", join(&self.means));
        let _ = writeln!(out, "{}", join(&self.deviation));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: hline + 1,
            msg: "header must be `N d R`".into(),
        };
        if head.len() != 3 {
            return Err(bad_header());
        }
        let n: usize = head[0].parse().map_err(|_| bad_header())?;
        let d: usize = head[1].parse().map_err(|_| bad_header())?;
        let r: f64 = head[2].parse().map_err(|_| bad_header())?;

        let mut read_row = |what: &str| -> Result<Vec<f64>> {
            let (idx, line) = lines.next().ok_or(Error::Parse {
                line: hline + 1,
                msg: format!("missing {what} row"),
            })?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != n {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {n} values in {what} row, found {}", vals.len()),
                });
            }
            Ok(vals)
        };
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..d {
            data.extend(read_row("feature")?);
        }
        let means = read_row("means")?;
        let deviation = read_row("deviation")?;
        Self::from_parts(Matrix::new(d, n, data)?, means, deviation, r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Parameters of the random linear generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSpec {
    pub n_arms: usize,
    pub dim: usize,
    /// `S`, bound on `‖θ*‖₂`.
    pub theta_norm_bound: f64,
    /// `L`, bound on `‖x_i‖₂`.
    pub feature_norm_bound: f64,
    pub noise_std: f64,
}

impl LinearSpec {
    pub fn new(n_arms: usize, dim: usize) -> Self {
        Self {
            n_arms,
            dim,
            theta_norm_bound: 1.0,
            feature_norm_bound: 1.0,
            noise_std: 0.1,
        }
    }
}

/// Random perfectly linear instance with means in `[0, 1]`.
///
/// Features are uniform on `[0,1]^d` scaled by `L/√d`. The direction of `θ*`
/// is a Gaussian direction folded into the positive orthant and its length is
/// `S·u`, `u ~ U(0,1)`; `θ*` is shrunk if needed so `max μ ≤ 1`.
pub fn gen_linear(spec: &LinearSpec, rng: &mut RngStream) -> Result<BanditInstance> {
    let LinearSpec {
        n_arms: n,
        dim: d,
        theta_norm_bound: s,
        feature_norm_bound: l,
        noise_std,
    } = *spec;
    if d == 0 || n <= d {
        return Err(Error::InvalidDimensions(format!(
            "need N > d >= 1, got N = {n}, d = {d}"
        )));
    }
    if !(s > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("S = {s}, L = {l}")));
    }
    let scale = l / (d as f64).sqrt();
    let data = (0..d * n).map(|_| rng.uniform() * scale).collect();
    let features = Matrix::new(d, n, data)?;

    let mut dir: Vec<f64> = (0..d).map(|_| rng.standard_normal().abs()).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = s * rng.uniform();
    if norm > 0.0 {
        dir.iter_mut().for_each(|v| *v *= radius / norm);
    }
    let mut theta = dir;
    let top = features
        .tr_mul_vec(&theta)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if top > 1.0 {
        theta.iter_mut().for_each(|v| *v /= top);
    }
    BanditInstance::linear(features, theta, noise_std)
}

/// Copy of `base` with a single arm's mean replaced.
pub fn gen_sparse_perturbed(
    base: &BanditInstance,
    arm: usize,
    new_mean: f64,
) -> Result<BanditInstance> {
    if arm >= base.n_arms() {
        return Err(Error::ArmOutOfRange {
            arm,
            n_arms: base.n_arms(),
        });
    }
    if base.deviation.iter().any(|&e| e != 0.0) {
        return Err(Error::InvalidParameter(
            "sparse perturbation needs a perfectly linear base".into(),
        ));
    }
    if !new_mean.is_finite() {
        return Err(Error::NonFinite("new_mean"));
    }
    let mut out = base.clone();
    out.deviation[arm] = new_mean - base.means[arm];
    out.means[arm] = new_mean;
    Ok(out)
}

/// `μ = 𝒳ᵀθ* + ε` with `|ε_i| ~ U[l, 2l]` and independent random signs.
pub fn gen_nonsparse(base: &BanditInstance, l: f64, rng: &mut RngStream) -> Result<BanditInstance> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "deviation level must be positive, got {l}"
        )));
    }
    let theta = base
        .theta_star
        .clone()
        .ok_or_else(|| Error::InvalidParameter("base instance has no theta_star".into()))?;
    let eps = (0..base.n_arms())
        .map(|_| {
            let magnitude = rng.uniform_range(l, 2.0 * l);
            if rng.coin() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    let mut out = BanditInstance::from_model(base.features.clone(), theta, eps, base.noise_std)?;
    out.reward_clip = base.reward_clip;
    Ok(out)
}

/// Measured features `x_i = x̄_i + ζ_i`, `ζ_i ~ N(0, ζ²I)`, while the means
/// stay `𝒳̄ᵀθ*`. The recorded deviation is the residual of the least-squares
/// fit of the means on the measured features.
pub fn gen_feature_noise(
    base: &BanditInstance,
    zeta_std: f64,
    rng: &mut RngStream,
) -> Result<BanditInstance> {
    if !(zeta_std >= 0.0) || !zeta_std.is_finite() {
        return Err(Error::InvalidParameter(format!("zeta_std = {zeta_std}")));
    }
    let theta = base
        .theta_star
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("base instance has no theta_star".into()))?;
    if zeta_std == 0.0 {
        return Ok(base.clone());
    }
    let true_means = base.features.tr_mul_vec(theta)?;
    let noisy: Vec<f64> = base
        .features
        .as_slice()
        .iter()
        .map(|v| v + zeta_std * rng.standard_normal())
        .collect();
    let measured = Matrix::new(base.dim(), base.n_arms(), noisy)?;
    let fit = least_squares(&measured.transpose(), &true_means)?;
    let mut out = BanditInstance::from_parts(measured, true_means, fit.residuals, base.noise_std)?;
    out.reward_clip = base.reward_clip;
    Ok(out)
}

/// Two arms in one dimension with features `(1, 2)`: `μ₁ = θ + ε₁`,
/// `μ₂ = 2θ + ε₂`. Arm index 1 (the second arm) is optimal.
pub fn two_arm_counterexample(mu1: f64, mu2: f64, eps1: f64, eps2: f64) -> Result<BanditInstance> {
    if !(mu2 > mu1) {
        return Err(Error::InvalidOrdering(format!(
            "need mu2 > mu1, got mu1 = {mu1}, mu2 = {mu2}"
        )));
    }
    if (mu2 - 2.0 * mu1).abs() <= 1e-12 * mu2.abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "mu2 = 2 mu1 puts the mean vector on the linear subspace".into(),
        ));
    }
    if eps1 == 0.0 || eps2 == 0.0 {
        return Err(Error::InvalidParameter(
            "both deviations must be bounded away from zero".into(),
        ));
    }
    let theta = mu1 - eps1;
    let theta_alt = (mu2 - eps2) / 2.0;
    if (theta - theta_alt).abs() > 1e-12 {
        return Err(Error::InconsistentParameters(format!(
            "mu1 - eps1 = {theta} but (mu2 - eps2)/2 = {theta_alt}"
        )));
    }
    let features = Matrix::new(1, 2, vec![1.0, 2.0])?;
    let mut inst = BanditInstance::from_parts(features, vec![mu1, mu2], vec![eps1, eps2], 0.1)?;
    inst.theta_star = Some(vec![theta]);
    Ok(inst)
}

/// Result of probing the `(l, β)` deviation property.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationEstimate {
    /// `|x_{d+1}ᵀ [X_{1..d}]⁻¹ μ_{1..d} − μ_{d+1}|` for every usable subset.
    pub residuals: Vec<f64>,
    pub l_hat: f64,
    pub beta_hat: f64,
    pub subsets_sampled: usize,
    pub subsets_skipped_singular: usize,
}

impl DeviationEstimate {
    /// Fraction of usable subsets whose residual is below `l`.
    pub fn fraction_below(&self, l: f64) -> f64 {
        let below = self.residuals.iter().filter(|&&r| r < l).count();
        below as f64 / self.residuals.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationQuery {
    pub num_subsets: usize,
    /// Quantile level in `[0, 1)` used for `l_hat`.
    pub beta_target: f64,
    pub exhaustive: bool,
}

/// Probes Definition-style non-sparseness: regress the mean of a `(d+1)`-th
/// arm from `d` others and record the error.
///
/// In exhaustive mode every `(d+1)`-subset is visited with every member
/// taking the target role, provided there are at most `10⁶` such pairs;
/// otherwise `num_subsets` ordered subsets are drawn uniformly.
pub fn estimate_deviation_property(
    instance: &BanditInstance,
    query: &DeviationQuery,
    rng: &mut RngStream,
) -> Result<DeviationEstimate> {
    let n = instance.n_arms();
    let d = instance.dim();
    if n < d + 1 {
        return Err(Error::TooFewArms {
            need: d + 1,
            have: n,
        });
    }
    if !(0.0..1.0).contains(&query.beta_target) {
        return Err(Error::InvalidParameter(format!(
            "beta_target = {} not in [0, 1)",
            query.beta_target
        )));
    }
    let pairs = binomial(n, d + 1).saturating_mul((d + 1) as u128);
    let mut residuals = Vec::new();
    let mut sampled = 0usize;
    let mut skipped = 0usize;
    let mut visit = |basis: &[usize], target: usize| {
        sampled += 1;
        match subset_residual(instance, basis, target) {
            Some(r) => residuals.push(r),
            None => skipped += 1,
        }
    };
    if query.exhaustive && pairs <= EXHAUSTIVE_LIMIT {
        let mut basis = Vec::with_capacity(d);
        for subset in Combinations::new(n, d + 1) {
            for t in 0..=d {
                basis.clear();
                basis.extend(
                    subset
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != t)
                        .map(|(_, &a)| a),
                );
                visit(&basis, subset[t]);
            }
        }
    } else {
        if query.num_subsets == 0 {
            return Err(Error::InvalidParameter(
                "num_subsets must be positive".into(),
            ));
        }
        for _ in 0..query.num_subsets {
            let idx = rng.distinct_indices(n, d + 1);
            visit(&idx[..d], idx[d]);
        }
    }
    if residuals.is_empty() {
        return Err(Error::AllSubsetsSingular(skipped));
    }
    let mut sorted = residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let pos = ((query.beta_target * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    let l_hat = sorted[pos];
    let below = sorted.iter().filter(|&&r| r < l_hat).count();
    Ok(DeviationEstimate {
        beta_hat: below as f64 / sorted.len() as f64,
        residuals,
        l_hat,
        subsets_sampled: sampled,
        subsets_skipped_singular: skipped,
    })
}

/// Residual of predicting `target`'s mean from the arms in `basis`, or `None`
/// when the basis block is numerically singular.
fn subset_residual(instance: &BanditInstance, basis: &[usize], target: usize) -> Option<f64> {
    let d = basis.len();
    // Rows are the basis features, so `block · w = μ_basis`.
    let block = instance
        .features
        .select_columns(basis)
        .transpose()
        .to_nalgebra();
    let svd = block.svd(true, true);
    let smallest = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(smallest > SUBSET_SINGULAR_TOL) {
        return None;
    }
    let rhs = nalgebra::DVector::from_iterator(d, basis.iter().map(|&a| instance.means[a]));
    let w = svd.solve(&rhs, 0.0).ok()?;
    let x = instance.feature(target);
    Some((dot(&x, w.as_slice()) - instance.means[target]).abs())
}
