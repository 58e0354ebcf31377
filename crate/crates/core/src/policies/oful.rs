use crate::error::{Error, Result};
use crate::linalg::{dot, log_det_ratio, ridge_solve, Matrix, SpdFactor};
use crate::policies::Policy;

/// Exact per-arm scores are recomputed after this many incremental updates.
const REFRESH_INTERVAL: usize = 128;

/// Scalars that fix the confidence set `‖θ − θ̂‖_V̄ ≤ D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidConfig {
    pub lambda: f64,
    pub delta_bar: f64,
    /// `S`, bound on `‖θ*‖₂`.
    pub theta_norm_bound: f64,
    /// `R`, sub-Gaussian scale of the reward noise.
    pub noise_std: f64,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        Self {
            lambda: 0.001,
            delta_bar: 0.001,
            theta_norm_bound: 1.0,
            noise_std: 0.1,
        }
    }
}

impl EllipsoidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {}", self.lambda)));
        }
        if !(self.delta_bar > 0.0 && self.delta_bar < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_bar = {} not in (0, 1)",
                self.delta_bar
            )));
        }
        if !(self.theta_norm_bound >= 0.0) || !(self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "S = {}, R = {}",
                self.theta_norm_bound, self.noise_std
            )));
        }
        Ok(())
    }
}

/// `D = √λ·S + R·√(2(ln(det V̄^{1/2} det(λI)^{-1/2}) + ln(1/δ̄)))`.
pub fn oful_radius(gram: &SpdFactor, config: &EllipsoidConfig) -> f64 {
    let ldr = log_det_ratio(gram, config.lambda, gram.dim());
    let log_term = 2.0 * (ldr + (1.0 / config.delta_bar).ln());
    config.lambda.sqrt() * config.theta_norm_bound + config.noise_std * log_term.max(0.0).sqrt()
}

/// Ridge estimate of `θ*` with its high-probability confidence ellipsoid.
#[derive(Debug, Clone)]
pub struct ConfidenceEllipsoid {
    config: EllipsoidConfig,
    factor: SpdFactor,
    b: Vec<f64>,
    theta_hat: Vec<f64>,
    radius: f64,
    n_obs: usize,
}

impl ConfidenceEllipsoid {
    /// Prior ellipsoid `V̄ = λI`, `θ̂ = 0`.
    pub fn new(dim: usize, config: EllipsoidConfig) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::InvalidDimensions(
                "dimension must be positive".into(),
            ));
        }
        let factor = SpdFactor::new(Matrix::scaled_identity(dim, config.lambda))?;
        let radius = oful_radius(&factor, &config);
        Ok(Self {
            config,
            factor,
            b: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            radius,
            n_obs: 0,
        })
    }

    /// Ellipsoid fitted in one shot to the rows of `x` (`n × d`) and `y`.
    pub fn from_samples(x: &Matrix, y: &[f64], config: EllipsoidConfig) -> Result<Self> {
        config.validate()?;
        let (theta_hat, gram) = ridge_solve(x, y, config.lambda)?;
        let factor = SpdFactor::new(gram)?;
        let radius = oful_radius(&factor, &config);
        Ok(Self {
            config,
            factor,
            b: x.tr_mul_vec(y)?,
            theta_hat,
            radius,
            n_obs: x.rows(),
        })
    }

    /// `V̄ += xxᵀ`, `b += yx`, then re-solve and recompute the radius.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "feature of length {} for dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        let mut gram = self.factor.source().clone();
        gram.add_outer(x, 1.0);
        self.factor = SpdFactor::new(gram)?;
        crate::linalg::axpy(y, x, &mut self.b);
        self.theta_hat = self.factor.solve(&self.b)?;
        self.radius = oful_radius(&self.factor, &self.config);
        self.n_obs += 1;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn config(&self) -> &EllipsoidConfig {
        &self.config
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn gram(&self) -> &Matrix {
        self.factor.source()
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// `max_{θ ∈ C} xᵀθ = xᵀθ̂ + D‖x‖_{V̄⁻¹}`.
    pub fn optimistic_index(&self, x: &[f64]) -> Result<f64> {
        let width = self.factor.inv_quad(x)?.max(0.0).sqrt();
        Ok(dot(x, &self.theta_hat) + self.radius * width)
    }

    /// `‖θ − θ̂‖_V̄`.
    pub fn distance(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "theta of length {} for dimension {}",
                theta.len(),
                self.dim()
            )));
        }
        let diff: Vec<f64> = theta
            .iter()
            .zip(&self.theta_hat)
            .map(|(a, b)| a - b)
            .collect();
        let v = self.gram().mul_vec(&diff)?;
        Ok(dot(&diff, &v).max(0.0).sqrt())
    }

    pub fn contains(&self, theta: &[f64]) -> Result<bool> {
        Ok(self.distance(theta)? <= self.radius)
    }
}

/// OFUL over a fixed finite arm set.
///
/// The ellipsoid is refactored on every observation. Per-arm predicted means
/// `x_iᵀθ̂` and widths `‖x_i‖²_{V̄⁻¹}` are carried forward with the
/// Sherman–Morrison identity, which costs one `N × d` pass per round, and are
/// recomputed exactly every few hundred rounds.
#[derive(Debug, Clone)]
pub struct OfulState {
    ellipsoid: ConfidenceEllipsoid,
    features: Matrix,
    predicted: Vec<f64>,
    widths_sq: Vec<f64>,
    since_refresh: usize,
}

impl OfulState {
    /// `features` is `d × N`, one column per arm.
    pub fn new(features: Matrix, config: EllipsoidConfig) -> Result<Self> {
        if features.cols() == 0 {
            return Err(Error::InvalidDimensions("no arms".into()));
        }
        let ellipsoid = ConfidenceEllipsoid::new(features.rows(), config)?;
        let mut state = Self {
            ellipsoid,
            features,
            predicted: Vec::new(),
            widths_sq: Vec::new(),
            since_refresh: 0,
        };
        state.refresh()?;
        Ok(state)
    }

    fn refresh(&mut self) -> Result<()> {
        self.predicted = self.features.tr_mul_vec(self.ellipsoid.theta_hat())?;
        self.widths_sq = self.ellipsoid.factor().inv_quad_columns(&self.features)?;
        self.since_refresh = 0;
        Ok(())
    }

    pub fn ellipsoid(&self) -> &ConfidenceEllipsoid {
        &self.ellipsoid
    }

    pub fn n_arms(&self) -> usize {
        self.features.cols()
    }

    /// Optimistic index of every arm.
    pub fn indices(&self) -> Vec<f64> {
        let d = self.ellipsoid.radius();
        self.predicted
            .iter()
            .zip(&self.widths_sq)
            .map(|(m, q)| m + d * q.max(0.0).sqrt())
            .collect()
    }
}

impl Policy for OfulState {
    fn name(&self) -> &str {
        "oful"
    }

    fn select_arm(&mut self, _round: usize) -> Result<usize> {
        Ok(argmax_first(&self.indices()))
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.n_arms() {
            return Err(Error::ArmOutOfRange {
                arm,
                n_arms: self.n_arms(),
            });
        }
        let x = self.features.column(arm);
        let u = self.ellipsoid.factor().solve(&x)?;
        let s = dot(&x, &u);
        let residual = reward - dot(&x, self.ellipsoid.theta_hat());
        self.ellipsoid.update(&x, reward)?;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            return self.refresh();
        }
        // V̄_new⁻¹ = V̄⁻¹ − uuᵀ/(1+s) and θ̂_new = θ̂ + u·residual/(1+s).
        let w = self.features.tr_mul_vec(&u)?;
        let denom = 1.0 + s;
        let step = residual / denom;
        for ((m, q), wi) in self.predicted.iter_mut().zip(&mut self.widths_sq).zip(&w) {
            *m += wi * step;
            *q -= wi * wi / denom;
        }
        Ok(())
    }
}

/// Index of the first maximum; NaN entries never win.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn prior_radius_has_no_log_det_term() {
        let cfg = EllipsoidConfig {
            lambda: 0.5,
            delta_bar: 0.01,
            theta_norm_bound: 2.0,
            noise_std: 0.3,
        };
        let e = ConfidenceEllipsoid::new(4, cfg).unwrap();
        let expected = 0.5f64.sqrt() * 2.0 + 0.3 * (2.0 * (100.0f64).ln()).sqrt();
        assert!((e.radius() - expected).abs() < 1e-12);
    }

    #[test]
    fn noiseless_radius_is_sqrt_lambda_s() {
        let cfg = EllipsoidConfig {
            lambda: 1.0,
            delta_bar: 0.1,
            theta_norm_bound: 2.0,
            noise_std: 0.0,
        };
        let mut e = ConfidenceEllipsoid::new(3, cfg).unwrap();
        e.update(&[1.0, 2.0, 0.0], 0.3).unwrap();
        assert_eq!(e.radius(), 2.0);
    }

    #[test]
    fn radius_matches_determinant_oracle() {
        let cfg = EllipsoidConfig {
            lambda: 0.001,
            delta_bar: 0.001,
            theta_norm_bound: 1.0,
            noise_std: 0.1,
        };
        let d = 3;
        let mut e = ConfidenceEllipsoid::new(d, cfg).unwrap();
        let mut counts = [0usize; 3];
        for t in 0..50 {
            let i = t % d;
            counts[i] += 1;
            e.update(&unit(d, i), 0.2).unwrap();
        }
        // V̄ is diagonal with entries λ + n_i.
        let det: f64 = counts.iter().map(|&n| cfg.lambda + n as f64).product();
        let ratio = det.sqrt() / cfg.lambda.powf(d as f64 / 2.0);
        let expected = cfg.lambda.sqrt() + 0.1 * (2.0 * (ratio / cfg.delta_bar).ln()).sqrt();
        assert!((e.radius() - expected).abs() < 1e-9);
    }

    #[test]
    fn single_update_on_first_axis() {
        let cfg = EllipsoidConfig {
            lambda: 1.0,
            ..Default::default()
        };
        let mut e = ConfidenceEllipsoid::new(3, cfg).unwrap();
        e.update(&unit(3, 0), 1.0).unwrap();
        assert!((e.theta_hat()[0] - 0.5).abs() < 1e-15);
        assert_eq!(&e.theta_hat()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn zero_feature_update_is_null() {
        let mut e = ConfidenceEllipsoid::new(2, EllipsoidConfig::default()).unwrap();
        e.update(&[1.0, 0.5], 0.7).unwrap();
        let before = (e.theta_hat().to_vec(), e.gram().clone());
        e.update(&[0.0, 0.0], 3.0).unwrap();
        assert_eq!(e.theta_hat(), &before.0[..]);
        assert_eq!(e.gram(), &before.1);
    }

    #[test]
    fn repeated_update_matches_batch_ridge() {
        let cfg = EllipsoidConfig::default();
        let x = [0.3, -0.8];
        let mut e = ConfidenceEllipsoid::new(2, cfg).unwrap();
        e.update(&x, 0.4).unwrap();
        e.update(&x, 0.4).unwrap();
        let design = Matrix::from_rows(&[x.to_vec(), x.to_vec()]).unwrap();
        let (theta, _) = ridge_solve(&design, &[0.4, 0.4], cfg.lambda).unwrap();
        for (a, b) in e.theta_hat().iter().zip(&theta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn largest_norm_wins_at_prior() {
        let features = Matrix::new(2, 3, vec![0.1, 0.9, 0.3, 0.2, 0.5, 0.3]).unwrap();
        let mut oful = OfulState::new(features, EllipsoidConfig::default()).unwrap();
        assert_eq!(oful.select_arm(1).unwrap(), 1);
    }

    #[test]
    fn zero_radius_is_greedy() {
        let cfg = EllipsoidConfig {
            lambda: 1e-9,
            delta_bar: 0.5,
            theta_norm_bound: 0.0,
            noise_std: 0.0,
        };
        let features = Matrix::new(1, 3, vec![1.0, 2.0, -3.0]).unwrap();
        let mut oful = OfulState::new(features, cfg).unwrap();
        oful.observe(0, -1.0).unwrap();
        assert_eq!(oful.ellipsoid().radius(), 0.0);
        // θ̂ < 0, so the most negative feature is the greedy choice.
        assert_eq!(oful.select_arm(2).unwrap(), 2);
    }

    #[test]
    fn cached_indices_track_exact_indices() {
        let mut rng = crate::rng::RngStream::new(5);
        let (d, n) = (4, 30);
        let data = (0..d * n).map(|_| rng.uniform()).collect();
        let features = Matrix::new(d, n, data).unwrap();
        let mut oful = OfulState::new(features.clone(), EllipsoidConfig::default()).unwrap();
        for t in 1..=300 {
            let arm = oful.select_arm(t).unwrap();
            oful.observe(arm, rng.uniform()).unwrap();
            let exact: Vec<f64> = (0..n)
                .map(|i| {
                    oful.ellipsoid()
                        .optimistic_index(&features.column(i))
                        .unwrap()
                })
                .collect();
            for (a, b) in oful.indices().iter().zip(&exact) {
                assert!(
                    (a - b).abs() <= 1e-8 * b.abs().max(1.0),
                    "round {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn argmax_ties_go_to_lowest_index() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_first(&[f64::NAN, 0.0]), 1);
    }
}
