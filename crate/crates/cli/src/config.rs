//! Versioned JSON run configurations.
//!
//! A config file is one JSON object. Two keys are shared by every command:
//! `schema_version` (must equal [`SCHEMA_VERSION`] when present) and `seed`.
//! All remaining keys belong to the command and unknown keys are rejected.
//! Missing keys take the defaults below, which reproduce the settings of the
//! reference experiments.

use std::fs;
use std::path::Path;

use logcount::bootstrap::{BootstrapConfig, CoverageCell};
use logcount::innovations::InnovationSpec;
use logcount::process::{ExogenousSpec, ModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// A parsed config together with its optional seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<C> {
    pub config: C,
    pub seed: Option<u64>,
}

/// Parses a config document; `None` yields the defaults.
pub fn parse<C: DeserializeOwned + Default>(text: Option<&str>) -> Result<Loaded<C>> {
    let Some(text) = text else {
        return Ok(Loaded { config: C::default(), seed: None });
    };
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| HarnessError::Config("config must be a JSON object".into()))?;
    if let Some(v) = obj.remove("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION) {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
            )));
        }
    }
    let seed = match obj.remove("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| HarnessError::Config(format!("seed must be a non-negative integer, got {v}")))?,
        ),
    };
    let config = serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(Loaded { config, seed })
}

pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<Loaded<C>> {
    match path {
        None => parse(None),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", p.display())))?;
            parse(Some(&text))
        }
    }
}

fn reference_model() -> ModelParams<f64> {
    ModelParams::trend(0.1, 0.1, 2.0, InnovationSpec::exponential(1.0))
}

fn table_families() -> Vec<InnovationSpec<f64>> {
    vec![InnovationSpec::half_normal_unit_mean(), InnovationSpec::exponential(1.0)]
}

/// Model parameters shared across a list of innovation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelGrid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default = "one")]
    pub sigma0: f64,
    #[serde(default)]
    pub exogenous: ExogenousSpec<f64>,
    pub innovations: Vec<InnovationSpec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl Default for ModelGrid {
    fn default() -> Self {
        ModelGrid {
            a: 0.1,
            b: 0.1,
            c: 2.0,
            sigma0: 1.0,
            exogenous: ExogenousSpec::DeterministicTrend,
            innovations: table_families(),
        }
    }
}

impl ModelGrid {
    pub fn models(&self) -> Vec<ModelParams<f64>> {
        self.innovations
            .iter()
            .map(|&innovation| ModelParams {
                a: self.a,
                b: self.b,
                c: self.c,
                sigma0: self.sigma0,
                innovation,
                exogenous: self.exogenous,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelParams<f64>,
    pub n: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { model: reference_model(), n: 500 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Column holding the counts when the file has a header; `x` if unset.
    pub column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CiConfig {
    pub column: Option<String>,
    pub bootstrap: BootstrapConfig<f64>,
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            column: None,
            bootstrap: BootstrapConfig { l_n: 20.0, nn_window: 65, replications: 1000, alpha: 0.1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxplotConfig {
    pub model: ModelGrid,
    pub n: Vec<usize>,
    pub replicates: usize,
    pub theta_bar_loops: usize,
}

impl Default for BoxplotConfig {
    fn default() -> Self {
        BoxplotConfig { model: ModelGrid::default(), n: vec![200, 500], replicates: 1000, theta_bar_loops: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub model: ModelParams<f64>,
    pub k: usize,
    pub horizon: usize,
    pub replicates: usize,
    pub n: Vec<usize>,
    /// Smallest `β̂` used in the slope fit; `10 / replicates` if unset.
    pub slope_floor: Option<f64>,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig {
            model: reference_model(),
            k: 20,
            horizon: 50,
            replicates: 10_000,
            n: (1..=15).collect(),
            slope_floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub model: ModelGrid,
    pub n: usize,
    pub cells: Vec<CoverageCell<f64>>,
    pub alphas: Vec<f64>,
    pub mc_loops: usize,
    #[serde(rename = "B")]
    pub replications: usize,
    pub theta_bar_loops: usize,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        let cells = [(20.0, 55), (20.0, 65), (25.0, 60), (25.0, 70), (30.0, 65), (30.0, 75)]
            .iter()
            .map(|&(l_n, nn_window)| CoverageCell { l_n, nn_window })
            .collect();
        CoverageConfig {
            model: ModelGrid::default(),
            n: 500,
            cells,
            alphas: vec![0.1, 0.05],
            mc_loops: 1000,
            replications: 1000,
            theta_bar_loops: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvCheckConfig {
    pub innovations: Vec<InnovationSpec<f64>>,
    /// Scales; every ordered pair is checked.
    pub sigmas: Vec<f64>,
}

impl Default for TvCheckConfig {
    fn default() -> Self {
        TvCheckConfig {
            innovations: table_families(),
            sigmas: (0..20).map(|i| 0.1 * 1000f64.powf(i as f64 / 19.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub innovations: Vec<InnovationSpec<f64>>,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            innovations: vec![
                InnovationSpec::exponential(1.0),
                InnovationSpec::half_normal_unit_mean(),
                InnovationSpec::chi_square(3.0),
                InnovationSpec::half_cauchy(0.0, 1.0),
            ],
        }
    }
}
