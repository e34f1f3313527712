//! Run configuration: JSON-compatible structured text with rationals as
//! strings. No interactive mode; consumers are scripts and CI.

use serde::Deserialize;

use mvopr::{Error, Tolerances};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub max_degree: usize,
    #[serde(default)]
    pub scalar: Option<String>,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub darboux: Option<DarbouxConfig>,
    /// Transform degrees `k`; defaults to `[0]`.
    #[serde(default)]
    pub degrees: Option<Vec<usize>>,
    #[serde(default)]
    pub nodes: Option<NodesConfig>,
    #[serde(default)]
    pub tolerances: Option<TolerancesConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type")]
pub enum MeasureSpec {
    #[serde(rename = "box")]
    Box {
        bounds: Vec<[String; 2]>,
        #[serde(default)]
        weight: Option<String>,
    },
    #[serde(rename = "discrete")]
    Discrete {
        points: Vec<Vec<String>>,
        weights: Vec<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct DarbouxConfig {
    pub factors: Vec<FactorConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FactorConfig {
    pub poly: String,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source")]
pub enum NodesConfig {
    #[serde(rename = "auto")]
    Auto {
        #[serde(default)]
        budget: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        /// Restrict derivative orders (e.g. `[0]` forces plain nodes).
        #[serde(default)]
        orders: Option<Vec<usize>>,
    },
    #[serde(rename = "file")]
    File { path: String },
}

#[derive(Debug, Clone, Deserialize)]
pub struct TolerancesConfig {
    #[serde(default)]
    pub singular: Option<f64>,
    #[serde(default)]
    pub poised: Option<f64>,
    #[serde(default)]
    pub residual: Option<f64>,
    #[serde(default)]
    pub on_variety: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub transformed: Option<String>,
    #[serde(default)]
    pub report: Option<String>,
    #[serde(default)]
    pub nodes: Option<String>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {path}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config {path}: {e}")))
    }

    pub fn scalar_mode(&self, flag: Option<&str>) -> Result<ScalarMode, Error> {
        let name = flag
            .map(str::to_string)
            .or_else(|| self.scalar.clone())
            .unwrap_or_else(|| "rational".into());
        match name.as_str() {
            "rational" => Ok(ScalarMode::Rational),
            "float" => Ok(ScalarMode::Float),
            other => Err(Error::Invalid(format!(
                "unknown scalar mode {other:?} (rational|float)"
            ))),
        }
    }

    /// Tolerances: config values, then `MVOPR_TOL_*` environment overrides.
    pub fn tolerances(&self) -> Result<Tolerances, Error> {
        let mut tols = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.singular {
                tols.singular = v;
            }
            if let Some(v) = t.poised {
                tols.poised = v;
            }
            if let Some(v) = t.residual {
                tols.residual = v;
            }
            if let Some(v) = t.on_variety {
                tols.on_variety = v;
            }
        }
        for (var, slot) in [
            ("MVOPR_TOL_SINGULAR", &mut tols.singular),
            ("MVOPR_TOL_POISED", &mut tols.poised),
            ("MVOPR_TOL_RESIDUAL", &mut tols.residual),
            ("MVOPR_TOL_ON_VARIETY", &mut tols.on_variety),
        ] {
            if let Ok(text) = std::env::var(var) {
                *slot = text
                    .parse()
                    .map_err(|_| Error::Invalid(format!("{var} is not a float: {text:?}")))?;
            }
        }
        Ok(tols)
    }

    pub fn requested_degrees(&self) -> Vec<usize> {
        self.degrees.clone().unwrap_or_else(|| vec![0])
    }

    pub fn output_path(
        &self,
        pick: impl Fn(&OutputConfig) -> Option<&String>,
        default: &str,
    ) -> String {
        self.output
            .as_ref()
            .and_then(|o| pick(o).cloned())
            .unwrap_or_else(|| default.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMode {
    Rational,
    Float,
}
