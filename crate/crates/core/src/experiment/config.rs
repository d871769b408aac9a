use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::alphamax::AlphaMaxConfig;
use crate::datagen::{CsvSchema, Family, SplitConfig, SyntheticSpec};
use crate::error::{PuError, Result};
use crate::estimate::Method;
use crate::msgmm::MsGmmConfig;
use crate::transform::TransformConfig;

/// Synthetic source: like [`SyntheticSpec`] without the seed, which is
/// supplied per repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub family: Family,
    pub delta_mu: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_n_unlabeled")]
    pub n_unlabeled: usize,
    #[serde(default = "default_n_labeled")]
    pub n_labeled: usize,
    #[serde(default = "one")]
    pub dims: usize,
}

fn default_n_unlabeled() -> usize {
    10_000
}
fn default_n_labeled() -> usize {
    1000
}
fn one() -> usize {
    1
}

impl SyntheticSource {
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            family: self.family,
            delta_mu: self.delta_mu,
            alpha: self.alpha,
            beta: self.beta,
            n_unlabeled: self.n_unlabeled,
            n_labeled: self.n_labeled,
            seed,
            dims: self.dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    pub schema: CsvSchema,
    pub split: SplitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(SyntheticSource),
    Csv(CsvSource),
}

impl DataSource {
    /// Short label for summary tables.
    pub fn family_label(&self) -> String {
        match self {
            DataSource::Synthetic(s) => s.family.name().to_string(),
            DataSource::Csv(c) => format!(
                "csv:{}",
                c.path.file_stem().and_then(|s| s.to_str()).unwrap_or("data")
            ),
        }
    }
}

fn default_repeats() -> usize {
    50
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// Accepts `"all"`, a single method name, or a list of names.
fn deserialize_methods<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Method>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(String),
        Many(Vec<String>),
    }
    let names = match Raw::deserialize(d)? {
        Raw::One(s) if s == "all" => return Ok(all_methods()),
        Raw::One(s) => vec![s],
        Raw::Many(v) => v,
    };
    let mut methods = Vec::new();
    for name in names {
        if name == "all" {
            return Ok(all_methods());
        }
        let m: Method = name.parse().map_err(serde::de::Error::custom)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    Ok(methods)
}

/// One benchmark cell: a data source, the estimators to run on it and how
/// many seeded repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "all_methods", deserialize_with = "deserialize_methods")]
    pub methods: Vec<Method>,
    /// Run the estimators on out-of-bag classifier scores.
    #[serde(default)]
    pub transform: bool,
    /// Number of principal components to project onto; 0 disables.
    #[serde(default)]
    pub pca: usize,
    /// Directory receiving `report.json` and `summary.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads for repeats; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    /// Record per-repeat wall time (makes reports non-reproducible).
    #[serde(default)]
    pub timings: bool,
    pub data: DataSource,
    #[serde(default)]
    pub msgmm: MsGmmConfig,
    #[serde(default)]
    pub alphamax: AlphaMaxConfig,
    #[serde(default)]
    pub network: TransformConfig,
}

impl ExperimentConfig {
    pub fn synthetic(source: SyntheticSource) -> Self {
        Self {
            name: None,
            repeats: default_repeats(),
            base_seed: 0,
            methods: all_methods(),
            transform: false,
            pca: 0,
            output: None,
            workers: 0,
            timings: false,
            data: DataSource::Synthetic(source),
            msgmm: MsGmmConfig::default(),
            alphamax: AlphaMaxConfig::default(),
            network: TransformConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(PuError::Config("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(PuError::Config("no estimation method selected".into()));
        }
        if self.transform && self.pca > 0 {
            return Err(PuError::Config("transform and pca are mutually exclusive".into()));
        }
        if self.msgmm.restarts == 0 || self.msgmm.max_iter == 0 {
            return Err(PuError::Config("msgmm restarts and max_iter must be positive".into()));
        }
        self.alphamax.r_grid()?;
        if self.transform {
            self.network.validate()?;
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.spec(0).validate().map_err(|e| PuError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| PuError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML config; relative CSV paths resolve against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PuError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let DataSource::Csv(csv) = &mut config.data {
            if csv.path.is_relative() {
                if let Some(dir) = path.parent() {
                    csv.path = dir.join(&csv.path);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PuError::Config(e.to_string()))
    }
}
