//! The linearity test: compare the ellipsoid's prediction for a held-out arm
//! with that arm's empirical mean, plus the closed-form error probabilities.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::policies::ConfidenceEllipsoid;

/// Closed interval `[center − radius, center + radius]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(Error::NonFinite("interval"));
        }
        if radius < 0.0 {
            return Err(Error::InvalidParameter(format!("negative radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn lower(&self) -> f64 {
        self.center - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.center + self.radius
    }

    /// Touching endpoints count as an intersection.
    pub fn intersects(&self, other: &Interval) -> bool {
        (self.center - other.center).abs() <= self.radius + other.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    /// Rewards are linear in the features.
    H0,
    /// Rewards deviate from the linear model.
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVerdict {
    pub decision: Hypothesis,
    /// Boosted ellipsoid interval.
    pub ellipsoid_interval: Interval,
    /// Boosted sampling interval.
    pub sample_interval: Interval,
    pub raw_r_p: f64,
    pub raw_r_s: f64,
}

/// Range of `xᵀθ` over the ellipsoid: `xᵀθ̂ ± D‖x‖_{V̄⁻¹}`.
pub fn project_ellipsoid(ellipsoid: &ConfidenceEllipsoid, x: &[f64]) -> Result<Interval> {
    let width = ellipsoid.factor().inv_quad(x)?.max(0.0).sqrt();
    Interval::new(dot(x, ellipsoid.theta_hat()), ellipsoid.radius() * width)
}

/// Hoeffding interval around the sample mean: radius `√(ln(1/δ_s)/(2k))`.
pub fn sample_interval(rewards: &[f64], delta_s: f64) -> Result<Interval> {
    if rewards.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(delta_s > 0.0 && delta_s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta_s = {delta_s} not in (0, 1)"
        )));
    }
    let k = rewards.len() as f64;
    // Offsetting by the first sample keeps a constant sample's mean exact.
    let anchor = rewards[0];
    let mean = anchor + rewards.iter().map(|r| r - anchor).sum::<f64>() / k;
    Interval::new(mean, ((1.0 / delta_s).ln() / (2.0 * k)).sqrt())
}

/// `√(ln k)`, defined for `k > e`.
pub fn boost_factor(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::KTooSmall(k));
    }
    Ok((k as f64).ln().sqrt())
}

pub fn boost(iv: Interval, k: usize) -> Result<Interval> {
    Ok(Interval {
        center: iv.center,
        radius: iv.radius * boost_factor(k)?,
    })
}

pub fn overlap_decide(ellipsoid_iv: &Interval, sample_iv: &Interval) -> Hypothesis {
    if ellipsoid_iv.intersects(sample_iv) {
        Hypothesis::H0
    } else {
        Hypothesis::H1
    }
}

/// Full test for one held-out arm: project, build the sampling interval,
/// boost both by `√(ln k)` and decide on overlap.
pub fn linearity_test(
    ellipsoid: &ConfidenceEllipsoid,
    held_out_feature: &[f64],
    held_out_rewards: &[f64],
    delta_s: f64,
) -> Result<TestVerdict> {
    let k = held_out_rewards.len();
    let raw_e = project_ellipsoid(ellipsoid, held_out_feature)?;
    let raw_s = sample_interval(held_out_rewards, delta_s)?;
    let e = boost(raw_e, k)?;
    let s = boost(raw_s, k)?;
    Ok(TestVerdict {
        decision: overlap_decide(&e, &s),
        ellipsoid_interval: e,
        sample_interval: s,
        raw_r_p: raw_e.radius,
        raw_r_s: raw_s.radius,
    })
}

/// `exp(−k a²/(2R²))`, taking the `R → 0` limit when `R = 0`.
fn gaussian_tail(k: usize, a: f64, noise_std: f64) -> f64 {
    if noise_std == 0.0 {
        return if a == 0.0 { 1.0 } else { 0.0 };
    }
    (-(k as f64) * a * a / (2.0 * noise_std * noise_std)).exp()
}

/// False-alarm probability
/// `δ₁ = exp(−k(r_s√ln k + r_p(√ln k − 1))²/(2R²))`.
pub fn delta1(k: usize, r_s: f64, r_p: f64, noise_std: f64) -> Result<f64> {
    let g = boost_factor(k)?;
    Ok(gaussian_tail(k, r_s * g + r_p * (g - 1.0), noise_std))
}

/// Miss probability `δ₂ = exp(−k(l₁ − √ln k(r_p + r_s))²/(2R²))`, valid
/// only when `l₁ > √ln k(r_p + r_s)`.
pub fn delta2(k: usize, r_s: f64, r_p: f64, l1: f64, noise_std: f64) -> Result<f64> {
    let boundary = boost_factor(k)? * (r_p + r_s);
    if !(l1 > boundary) {
        return Err(Error::SeparationTooSmall { l1, boundary });
    }
    Ok(gaussian_tail(k, l1 - boundary, noise_std))
}

/// Smallest `k ≥ 3` with `k / ln k > b / l₁²`.
pub fn min_sample_size(l1: f64, b: f64, k_max: usize) -> Result<usize> {
    if !(l1 > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("l1 = {l1}, b = {b}")));
    }
    let target = b / (l1 * l1);
    (3..=k_max)
        .find(|&k| k as f64 / (k as f64).ln() > target)
        .ok_or(Error::NoFeasibleK { target, k_max })
}
