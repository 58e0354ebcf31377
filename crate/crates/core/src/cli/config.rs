use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::environments::LinearSpec;
use crate::experiments::{InstanceSource, PolicySpec, RunConfig};
use crate::policies::{EllipsoidConfig, RlbConfig};

/// A config problem, located at a 1-based line when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Linear,
    Nonsparse,
    FeatureNoise,
    File,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub kind: InstanceKind,
    pub n_arms: Option<usize>,
    pub dim: Option<usize>,
    pub theta_norm_bound: Option<f64>,
    pub feature_norm_bound: Option<f64>,
    pub noise_std: Option<f64>,
    /// Deviation floor for `nonsparse`.
    pub l: Option<f64>,
    /// Feature-noise standard deviation for `feature_noise`.
    pub zeta_std: Option<f64>,
    /// Instance file for `file`, resolved against the config's directory.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ucb,
    Oful,
    Rlb,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
    pub lambda: Option<f64>,
    pub delta_bar: Option<f64>,
    pub theta_norm_bound: Option<f64>,
    pub noise_std: Option<f64>,
    pub k: Option<usize>,
    pub delta_s: Option<f64>,
    /// UCB exploration scale; for `rlb` the scale of its UCB branch.
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(alias = "T")]
    pub horizon: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths land under `--out-dir`.
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub instance: Spanned<InstanceSection>,
    #[serde(rename = "policy")]
    pub policies: Vec<Spanned<PolicySection>>,
    pub experiment: Spanned<ExperimentSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn line_at(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn located<T>(text: &str, item: &Spanned<T>, msg: String) -> ConfigError {
    ConfigError {
        line: Some(line_at(text, item.span().start)),
        msg,
    }
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_at(text, s.start)),
            msg: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        Ok((Self::parse(&text)?, text))
    }

    /// Resolves the sections into a run description. `text` is the source
    /// the config was parsed from and `base` the directory that relative
    /// instance paths are taken from.
    pub fn to_run_config(&self, text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        let inst = self.instance.get_ref();
        let noise = inst.noise_std.unwrap_or(0.1);
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| {
                located(
                    text,
                    &self.instance,
                    format!("instance.{key} is required for this kind"),
                )
            })
        };
        let forbid = |present: bool, key: &str| {
            if present {
                Err(located(
                    text,
                    &self.instance,
                    format!("instance.{key} does not apply to kind {:?}", inst.kind),
                ))
            } else {
                Ok(())
            }
        };
        let spec = || -> Result<LinearSpec, ConfigError> {
            let mut spec = LinearSpec::new(need(inst.n_arms, "n_arms")?, need(inst.dim, "dim")?);
            spec.noise_std = noise;
            if let Some(s) = inst.theta_norm_bound {
                spec.theta_norm_bound = s;
            }
            if let Some(l) = inst.feature_norm_bound {
                spec.feature_norm_bound = l;
            }
            Ok(spec)
        };
        let source = match inst.kind {
            InstanceKind::Linear => {
                forbid(inst.l.is_some(), "l")?;
                forbid(inst.zeta_std.is_some(), "zeta_std")?;
                forbid(inst.path.is_some(), "path")?;
                InstanceSource::Linear(spec()?)
            }
            InstanceKind::Nonsparse => {
                forbid(inst.zeta_std.is_some(), "zeta_std")?;
                forbid(inst.path.is_some(), "path")?;
                let l = inst.l.ok_or_else(|| {
                    located(
                        text,
                        &self.instance,
                        "instance.l is required for kind nonsparse".into(),
                    )
                })?;
                InstanceSource::NonSparse { spec: spec()?, l }
            }
            InstanceKind::FeatureNoise => {
                forbid(inst.l.is_some(), "l")?;
                forbid(inst.path.is_some(), "path")?;
                let zeta_std = inst.zeta_std.ok_or_else(|| {
                    located(
                        text,
                        &self.instance,
                        "instance.zeta_std is required for kind feature_noise".into(),
                    )
                })?;
                InstanceSource::FeatureNoise {
                    spec: spec()?,
                    zeta_std,
                }
            }
            InstanceKind::File => {
                for (present, key) in [
                    (inst.n_arms.is_some(), "n_arms"),
                    (inst.dim.is_some(), "dim"),
                    (inst.theta_norm_bound.is_some(), "theta_norm_bound"),
                    (inst.feature_norm_bound.is_some(), "feature_norm_bound"),
                    (inst.l.is_some(), "l"),
                    (inst.zeta_std.is_some(), "zeta_std"),
                ] {
                    forbid(present, key)?;
                }
                let path = inst.path.as_ref().ok_or_else(|| {
                    located(
                        text,
                        &self.instance,
                        "instance.path is required for kind file".into(),
                    )
                })?;
                InstanceSource::File(base.join(path))
            }
        };

        if self.policies.is_empty() {
            return Err(ConfigError {
                line: None,
                msg: "at least one [[policy]] section is required".into(),
            });
        }
        let mut policies = Vec::with_capacity(self.policies.len());
        for item in &self.policies {
            let spec = policy_spec(item.get_ref(), noise, inst.theta_norm_bound)
                .map_err(|msg| located(text, item, msg))?;
            spec.validate()
                .map_err(|e| located(text, item, e.to_string()))?;
            policies.push(spec);
        }

        let exp = self.experiment.get_ref();
        let run = RunConfig {
            source,
            policies,
            horizon: exp.horizon,
            replications: exp.replications,
            master_seed: exp.seed,
        };
        run.validate()
            .map_err(|e| located(text, &self.experiment, e.to_string()))?;
        Ok(run)
    }
}

/// Policy noise and norm bounds default to the instance's when omitted.
fn policy_spec(
    p: &PolicySection,
    instance_noise: f64,
    instance_norm: Option<f64>,
) -> Result<PolicySpec, String> {
    let ellipsoid = || {
        let d = EllipsoidConfig::default();
        EllipsoidConfig {
            lambda: p.lambda.unwrap_or(d.lambda),
            delta_bar: p.delta_bar.unwrap_or(d.delta_bar),
            theta_norm_bound: p
                .theta_norm_bound
                .or(instance_norm)
                .unwrap_or(d.theta_norm_bound),
            noise_std: p.noise_std.unwrap_or(instance_noise),
        }
    };
    let reject = |present: bool, key: &str| {
        if present {
            Err(format!("policy.{key} does not apply to kind {:?}", p.kind))
        } else {
            Ok(())
        }
    };
    match p.kind {
        PolicyKind::Ucb => {
            reject(p.lambda.is_some(), "lambda")?;
            reject(p.delta_bar.is_some(), "delta_bar")?;
            reject(p.theta_norm_bound.is_some(), "theta_norm_bound")?;
            reject(p.noise_std.is_some(), "noise_std")?;
            reject(p.k.is_some(), "k")?;
            reject(p.delta_s.is_some(), "delta_s")?;
            Ok(PolicySpec::Ucb { scale: p.scale })
        }
        PolicyKind::Oful => {
            reject(p.k.is_some(), "k")?;
            reject(p.delta_s.is_some(), "delta_s")?;
            reject(p.scale.is_some(), "scale")?;
            Ok(PolicySpec::Oful(ellipsoid()))
        }
        PolicyKind::Rlb => {
            let d = RlbConfig::default();
            Ok(PolicySpec::Rlb(RlbConfig {
                k: p.k.unwrap_or(d.k),
                delta_s: p.delta_s.unwrap_or(d.delta_s),
                ellipsoid: ellipsoid(),
                ucb_scale: p.scale.unwrap_or(instance_noise.max(1e-12)),
            }))
        }
    }
}
