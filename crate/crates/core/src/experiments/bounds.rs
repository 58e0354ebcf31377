use crate::error::{Error, Result};
use crate::misspec::{delta1, delta2};

/// Inputs to the closed-form regret bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub horizon: usize,
    pub dim: usize,
    pub n_arms: usize,
    pub k: usize,
    pub lambda: f64,
    /// `S`, bound on `‖θ*‖₂`.
    pub theta_norm_bound: f64,
    /// `L`, bound on `‖x_i‖₂`.
    pub feature_norm_bound: f64,
    pub noise_std: f64,
    /// Confidence of the OFUL term inside the robust bound.
    pub delta: f64,
    /// Confidence of the stand-alone small-deviation OFUL bound.
    pub delta_tilde: f64,
    /// Distortion constant `ρ′ ≥ 1`.
    pub rho: f64,
    pub l1: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub r_s: f64,
    pub r_p: f64,
}

impl BoundParams {
    /// Synthetic-experiment defaults with radii evaluated at `k = 50`,
    /// `δ_s = 0.001`.
    pub fn synthetic_defaults(horizon: usize) -> Self {
        let k = 50;
        Self {
            horizon,
            dim: 20,
            n_arms: 1000,
            k,
            lambda: 0.001,
            theta_norm_bound: 1.0,
            feature_norm_bound: 1.0,
            noise_std: 0.1,
            delta: 0.001,
            delta_tilde: 0.001,
            rho: 1.0,
            l1: 2.0,
            beta: 0.0,
            c1: 1.0,
            c2: 1.0,
            r_s: ((1000.0f64).ln() / (2.0 * k as f64)).sqrt(),
            r_p: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("T", self.horizon as f64),
            ("d", self.dim as f64),
            ("N", self.n_arms as f64),
            ("lambda", self.lambda),
            ("L", self.feature_norm_bound),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let nonneg = [
            ("S", self.theta_norm_bound),
            ("R", self.noise_std),
            ("c1", self.c1),
            ("c2", self.c2),
            ("r_s", self.r_s),
            ("r_p", self.r_p),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [("delta", self.delta), ("delta_tilde", self.delta_tilde)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} not in (0, 1)"
                )));
            }
        }
        if !(self.rho >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho' = {} must be >= 1",
                self.rho
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta = {} not in [0, 1]",
                self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    pub oful_small_dev_bound: f64,
    pub rlb_h0_bound: f64,
    pub rlb_h1_bound: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// `√(t d log(1 + tL²/(λd))) · (√λ S + R√(2 log(1/δ) + d log(1 + tL²/(λd))))`.
fn oful_core(t: f64, p: &BoundParams, delta: f64) -> f64 {
    let d = p.dim as f64;
    let log_term = (1.0 + t * p.feature_norm_bound.powi(2) / (p.lambda * d)).ln();
    (t * d * log_term).sqrt()
        * (p.lambda.sqrt() * p.theta_norm_bound
            + p.noise_std * (2.0 * (1.0 / delta).ln() + d * log_term).sqrt())
}

/// Evaluates the small-deviation OFUL bound and both robust-policy bounds.
///
/// `T − log T` uses `⌈ln T⌉` rounds, clamped at zero.
pub fn theory_bounds(p: &BoundParams) -> Result<TheoryBounds> {
    p.validate()?;
    let t = p.horizon as f64;
    let t_eff = (t - t.ln().ceil()).max(0.0);
    let d1 = delta1(p.k, p.r_s, p.r_p, p.noise_std)?;
    let d2 = delta2(p.k, p.r_s, p.r_p, p.l1, p.noise_std)?;
    let sampling = p.c1 * ((p.dim + 1) * p.k) as f64;
    let moss = 49.0 * (p.n_arms as f64 * t_eff).sqrt();
    let miss = (d2 + p.beta).min(1.0);
    Ok(TheoryBounds {
        oful_small_dev_bound: 8.0 * p.rho * oful_core(t, p, p.delta_tilde),
        rlb_h0_bound: sampling + 4.0 * (1.0 - d1) * oful_core(t_eff, p, p.delta) + d1 * moss,
        rlb_h1_bound: sampling + (1.0 - miss) * moss + p.c2 * miss * t_eff,
        delta1: d1,
        delta2: d2,
    })
}
