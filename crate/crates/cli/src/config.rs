//! Run configuration: a strict JSON document merged with command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spectral_fic::detrend::TrendKind;
use spectral_fic::fic::CandidateSpec;
use spectral_fic::focus::FocusSpec;
use spectral_fic::simulate::Comparator;
use spectral_fic::spectral::ArmaFamily;

/// Natural parameters of a simulation truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    pub sigma: f64,
}

impl TruthSpec {
    pub fn family(&self) -> ArmaFamily {
        ArmaFamily::new(self.ar.len(), self.ma.len())
    }

    pub fn theta(&self) -> Vec<f64> {
        self.family().theta(&self.ar, &self.ma, self.sigma)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default)]
    pub candidates: Vec<CandidateSpec>,
    #[serde(default)]
    pub foci: Vec<serde_json::Value>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detrend: Option<TrendKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub comparators: Vec<Comparator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses every focus entry, naming the available constructors on failure.
    pub fn focus_specs(&self) -> Result<Vec<FocusSpec>> {
        self.foci
            .iter()
            .map(|v| {
                let name = v
                    .get("name")
                    .and_then(|n| n.as_str())
                    .unwrap_or("<missing>");
                if !FocusSpec::CONSTRUCTORS.contains(&name) {
                    bail!(
                        "unknown focus '{name}'; available constructors: {}",
                        FocusSpec::CONSTRUCTORS.join(", ")
                    );
                }
                serde_json::from_value::<FocusSpec>(v.clone())
                    .with_context(|| format!("invalid parameters for focus '{name}'"))
            })
            .collect()
    }

    pub fn require_input(&self) -> Result<&str> {
        self.input
            .as_deref()
            .context("config needs an \"input\" CSV path")
    }

    pub fn require_truth(&self) -> Result<&TruthSpec> {
        self.truth
            .as_ref()
            .context("config needs a \"truth\" model")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"inputs":"x.csv"}"#).is_err());
    }

    #[test]
    fn unknown_focus_lists_constructors() {
        let c: RunConfig =
            serde_json::from_str(r#"{"foci":[{"name":"quantile","p":0.5}]}"#).unwrap();
        let msg = format!("{:#}", c.focus_specs().unwrap_err());
        assert!(msg.contains("lag_cov") && msg.contains("threshold_prob"));
    }

    #[test]
    fn full_config_parses() {
        let c: RunConfig = serde_json::from_str(
            r#"{"input":"y.csv","candidates":[{"kind":"ar","order":1},{"kind":"np"}],
                "foci":[{"name":"lag_corr","k":1}],"detrend":{"kind":"mean_only"},
                "truth":{"ar":[0.5],"sigma":1.0},"B":10,"seed":3}"#,
        )
        .unwrap();
        assert_eq!(c.replications, Some(10));
        assert_eq!(c.truth.unwrap().theta(), vec![0.5, 1.0]);
    }
}
