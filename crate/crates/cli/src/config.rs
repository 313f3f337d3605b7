//! The JSON run configuration: blocks `model`, `prior`, `mcmc` and `io`.
//!
//! Any key can be overridden from the environment with
//! `TEMPART_<BLOCK>__<KEY>[__<KEY>...]`, e.g. `TEMPART_MCMC__ITERATIONS=2000`.
//! Override values are parsed as JSON and fall back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tempart_core::gibbs::{FixedParams, McmcSettings, PriorHyper};
use tempart_core::{ModelConfig, PartitionLoss, Toggles};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "TEMPART_";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub prior: PriorBlock,
    pub mcmc: McmcSettings,
    pub io: IoBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub toggles: Toggles,
    /// Fit all eight temporal variants instead of `toggles` alone.
    pub all_variants: bool,
    pub fixed: FixedParams,
    /// Loss for partition point estimates in reports.
    pub loss: PartitionLoss,
    /// Single greedy relabelling pass after the draw search.
    pub refine: bool,
    pub prior_simulation: PriorSimBlock,
    pub synth: SynthBlock,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            toggles: Toggles::default(),
            all_variants: false,
            fixed: FixedParams::default(),
            loss: PartitionLoss::ViLb,
            refine: true,
            prior_simulation: PriorSimBlock::default(),
            synth: SynthBlock::default(),
        }
    }
}

/// Lagged-ARI surface of the temporal CRP prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSimBlock {
    pub m: usize,
    pub n_times: usize,
    pub mass: f64,
    pub n_draws: usize,
    pub alpha_grid: Vec<f64>,
}

impl Default for PriorSimBlock {
    fn default() -> Self {
        PriorSimBlock {
            m: 20,
            n_times: 10,
            mass: 0.5,
            n_draws: 10_000,
            alpha_grid: vec![0.0, 0.25, 0.5, 0.75, 0.9],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    /// Independent atoms per time point.
    Sim1,
    /// AR(1) atoms carried across retained clusters.
    Sim2,
}

/// Synthetic panel generator. Unset sizes take the mode's defaults
/// (`sim1`: m = 50, T = 5, τ = 5; `sim2`: m = 25, T = 10, τ = 10).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthBlock {
    pub mode: SynthMode,
    pub m: Option<usize>,
    pub n_times: Option<usize>,
    pub alpha: f64,
    pub phi1: f64,
    pub mass: f64,
    pub sigma: f64,
    pub tau: Option<f64>,
    pub theta: f64,
    pub replicates: usize,
}

impl Default for SynthBlock {
    fn default() -> Self {
        SynthBlock {
            mode: SynthMode::Sim1,
            m: None,
            n_times: None,
            alpha: 0.5,
            phi1: 0.5,
            mass: 1.0,
            sigma: 1.0,
            tau: None,
            theta: 0.0,
            replicates: 1,
        }
    }
}

/// Prior hyperparameters; `a_sigma` left unset becomes half the pooled
/// standard deviation of the responses being fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorBlock {
    pub mass: f64,
    pub nu0: f64,
    pub a_sigma: Option<f64>,
    pub a_tau: f64,
    pub a_lambda: f64,
    pub s2: f64,
    pub laplace_a: f64,
    pub laplace_b: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
}

impl Default for PriorBlock {
    fn default() -> Self {
        let h = PriorHyper::default();
        PriorBlock {
            mass: h.mass,
            nu0: h.nu0,
            a_sigma: None,
            a_tau: h.a_tau,
            a_lambda: h.a_lambda,
            s2: h.s2,
            laplace_a: h.laplace_a,
            laplace_b: h.laplace_b,
            a_alpha: h.a_alpha,
            b_alpha: h.b_alpha,
        }
    }
}

impl PriorBlock {
    pub fn resolve(&self, pooled_sd: f64) -> PriorHyper {
        PriorHyper {
            mass: self.mass,
            nu0: self.nu0,
            a_sigma: self.a_sigma.unwrap_or(0.5 * pooled_sd),
            a_tau: self.a_tau,
            a_lambda: self.a_lambda,
            s2: self.s2,
            laplace_a: self.laplace_a,
            laplace_b: self.laplace_b,
            a_alpha: self.a_alpha,
            b_alpha: self.b_alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoBlock {
    /// Wide panel CSV read by `fit` and `report`.
    pub data: Option<PathBuf>,
    /// Chain directories written by `fit`, read by `report`.
    pub chains: Vec<PathBuf>,
    pub out: PathBuf,
}

impl Default for IoBlock {
    fn default() -> Self {
        IoBlock {
            data: None,
            chains: Vec::new(),
            out: PathBuf::from("tempart-out"),
        }
    }
}

impl RunConfig {
    /// Parse a configuration document, then apply environment overrides.
    pub fn from_json_with_env<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut value: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        };
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        overrides.sort();
        for (key, raw) in overrides {
            apply_override(&mut value, &key[ENV_PREFIX.len()..], &raw)?;
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_env(text, std::iter::empty())
    }

    /// Read `path` (or start from defaults) and apply the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            None => String::new(),
        };
        Self::from_json_with_env(&text, std::env::vars())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Model configuration for one variant, given the data's pooled sd.
    pub fn model_config(&self, toggles: Toggles, pooled_sd: f64) -> ModelConfig {
        ModelConfig {
            toggles,
            prior: self.prior.resolve(pooled_sd),
            mcmc: self.mcmc.clone(),
            fixed: self.model.fixed.clone(),
        }
    }

    pub fn variants(&self) -> Vec<Toggles> {
        if self.model.all_variants {
            Toggles::all_variants(self.model.toggles.spatial)
        } else {
            vec![self.model.toggles]
        }
    }
}

fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("malformed override {ENV_PREFIX}{key}")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (depth, part) in path.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "override {ENV_PREFIX}{key}: `{}` is not an object",
                path[..depth].join(".")
            ))
        })?;
        if depth + 1 == path.len() {
            obj.insert(part.clone(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let text = r#"{
            "model": {"toggles": {"partition_dependence": true}, "all_variants": true,
                      "synth": {"mode": "sim2", "phi1": 0.9}},
            "prior": {"a_sigma": 5.0, "a_tau": 10.0},
            "mcmc": {"iterations": 200, "burn_in": 100, "thin": 2, "seed": 9},
            "io": {"data": "panel.csv", "out": "runs"}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.model.synth.mode, SynthMode::Sim2);
        assert_eq!(c.prior.a_sigma, Some(5.0));
        let again = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
        assert_eq!(RunConfig::from_json(&again.to_json()).unwrap().to_json(), c.to_json());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"mcmc": {"iters": 5}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"extra": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"model": {"synth": {"mode": "sim3"}}}"#).is_err());
    }

    #[test]
    fn environment_overrides() {
        let env = vec![
            ("TEMPART_MCMC__ITERATIONS".to_string(), "321".to_string()),
            ("TEMPART_IO__OUT".to_string(), "elsewhere".to_string()),
            ("TEMPART_MODEL__TOGGLES__ATOM_AR".to_string(), "true".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ];
        let c = RunConfig::from_json_with_env("{}", env).unwrap();
        assert_eq!(c.mcmc.iterations, 321);
        assert_eq!(c.io.out, PathBuf::from("elsewhere"));
        assert!(c.model.toggles.atom_ar);
        let bad = vec![("TEMPART_MCMC__NOPE".to_string(), "1".to_string())];
        assert!(matches!(
            RunConfig::from_json_with_env("{}", bad),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn half_pooled_sd_for_sigma_bound() {
        let c = RunConfig::default();
        assert_eq!(c.prior.resolve(3.0).a_sigma, 1.5);
        let mut c = c;
        c.prior.a_sigma = Some(5.0);
        assert_eq!(c.prior.resolve(3.0).a_sigma, 5.0);
    }
}
