//! Experiment configuration: one JSON document, schema-validated before any
//! computation, mapped onto the core model types.

use serde::{Deserialize, Serialize};

use defport_core::bsde::{BasisSpec, InfoMode, SolveOptions};
use defport_core::model::{Bounds, CoeffField, HiddenRegimeSpec, ModelSpec};
use defport_core::pricing::ClaimSpec;

/// Error carrying the field path that failed validation.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSection>,
    pub numerics: NumericsSection,
    pub utility: UtilitySection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_assets: usize,
    pub n_defaults: usize,
    pub horizon: f64,
    #[serde(default)]
    pub s0: Option<Vec<f64>>,
    pub mu: CoeffSection,
    pub sigma: CoeffSection,
    pub beta: CoeffSection,
    pub lambda: CoeffSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_max: Option<f64>,
}

/// Named coefficient families, mirroring the core enum.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSection {
    Constant { values: Vec<f64> },
    Regime { per_regime: Vec<Vec<f64>> },
    PriceTanh { base: Vec<f64>, slope: Vec<f64>, ref_price: f64 },
}

impl CoeffSection {
    fn to_core(&self) -> CoeffField {
        match self {
            CoeffSection::Constant { values } => CoeffField::Constant { values: values.clone() },
            CoeffSection::Regime { per_regime } => {
                CoeffField::RegimeSwitching { per_regime: per_regime.clone() }
            }
            CoeffSection::PriceTanh { base, slope, ref_price } => CoeffField::PriceTanh {
                base: base.clone(),
                slope: slope.clone(),
                ref_price: *ref_price,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub n_regimes: usize,
    pub q_matrix: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_basis_degree")]
    pub basis_degree: usize,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_basis_degree() -> usize {
    2
}

fn default_ridge() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    pub kind: UtilityKindSection,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimSection>,
    /// "full" or "partial"; defaults to partial when a multi-regime model is
    /// configured, full otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<InfoSection>,
}

fn default_gamma() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKindSection {
    Log,
    Power,
    Exp,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InfoSection {
    Full,
    Partial,
}

/// Fixed claim catalog, selected by id.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimSection {
    Zero,
    Constant { value: f64 },
    DefaultableBond {
        #[serde(default)]
        default_index: usize,
    },
    Put {
        strike: f64,
        #[serde(default)]
        asset: usize,
    },
}

impl ClaimSection {
    pub fn to_core(&self) -> ClaimSpec {
        match self {
            ClaimSection::Zero => ClaimSpec::Zero,
            ClaimSection::Constant { value } => ClaimSpec::Constant { value: *value },
            ClaimSection::DefaultableBond { default_index } => {
                ClaimSpec::DefaultableBond { default_index: *default_index }
            }
            ClaimSection::Put { strike, asset } => {
                ClaimSpec::Put { asset: *asset, strike: *strike }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub k_list: Vec<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection { k_list: vec![0.5, 1.0, 2.0, 4.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    /// Constant proportional strategy for the wealth column of the path
    /// export; zero exposure when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wealth_pi: Option<Vec<f64>>,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { dir: default_out_dir(), wealth_pi: None }
    }
}

impl ExperimentConfig {
    /// Semantic validation beyond the serde schema; every error names the
    /// offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.numerics.paths == 0 {
            return Err(ConfigError::new("numerics.paths", "must be >= 1"));
        }
        if self.numerics.steps < 2 {
            return Err(ConfigError::new("numerics.steps", "must be >= 2"));
        }
        if self.numerics.basis_degree > 2 {
            return Err(ConfigError::new("numerics.basis_degree", "supported degrees are 0, 1, 2"));
        }
        if !(self.numerics.ridge >= 0.0) {
            return Err(ConfigError::new("numerics.ridge", "must be >= 0"));
        }
        match self.utility.kind {
            UtilityKindSection::Power => {
                if !(self.utility.gamma > 0.0 && self.utility.gamma < 1.0) {
                    return Err(ConfigError::new(
                        "utility.gamma",
                        format!("power utility requires gamma in (0,1), got {}", self.utility.gamma),
                    ));
                }
            }
            UtilityKindSection::Exp => {
                if !(self.utility.gamma > 0.0) {
                    return Err(ConfigError::new(
                        "utility.gamma",
                        format!("exponential utility requires gamma > 0, got {}", self.utility.gamma),
                    ));
                }
            }
            UtilityKindSection::Log => {}
        }
        if self.bounds.k_list.is_empty() {
            return Err(ConfigError::new("bounds.k_list", "must not be empty"));
        }
        for w in self.bounds.k_list.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ConfigError::new("bounds.k_list", "must be strictly increasing"));
            }
        }
        if self.bounds.k_list.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(ConfigError::new("bounds.k_list", "entries must be finite and >= 0"));
        }
        if self.info_mode() == InfoMode::Partial && self.n_regimes() <= 1 {
            return Err(ConfigError::new(
                "utility.info",
                "partial information requires a regime section with n_regimes > 1",
            ));
        }
        if let Some(pi) = &self.outputs.wealth_pi {
            if pi.len() != self.model.n_assets {
                return Err(ConfigError::new(
                    "outputs.wealth_pi",
                    format!("expected {} entries", self.model.n_assets),
                ));
            }
        }
        // Core-side model validation covers coefficient shapes and bounds.
        self.model_spec()
            .validate()
            .map_err(|e| match e {
                defport_core::EngineError::InvalidModel { field, message } => {
                    ConfigError::new(field, message)
                }
                other => ConfigError::new("model", other.to_string()),
            })
    }

    pub fn n_regimes(&self) -> usize {
        self.regime.as_ref().map_or(1, |r| r.n_regimes)
    }

    pub fn info_mode(&self) -> InfoMode {
        match self.utility.info {
            Some(InfoSection::Full) => InfoMode::Full,
            Some(InfoSection::Partial) => InfoMode::Partial,
            None => {
                if self.n_regimes() > 1 {
                    InfoMode::Partial
                } else {
                    InfoMode::Full
                }
            }
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            n_assets: m.n_assets,
            n_defaults: m.n_defaults,
            horizon: m.horizon,
            s0: m.s0.clone().unwrap_or_else(|| vec![1.0; m.n_assets]),
            mu: m.mu.to_core(),
            sigma: m.sigma.to_core(),
            beta: m.beta.to_core(),
            lambda: m.lambda.to_core(),
            regime: self.regime.as_ref().map(|r| HiddenRegimeSpec {
                n_regimes: r.n_regimes,
                q_matrix: r.q_matrix.iter().flatten().copied().collect(),
                initial_dist: r.initial_dist.clone(),
            }),
            bounds: Bounds {
                sigma2_min: m.sigma2_min.unwrap_or(1e-8),
                sigma2_max: m.sigma2_max.unwrap_or(1e6),
            },
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            basis: BasisSpec { degree: self.numerics.basis_degree },
            ridge_rel: self.numerics.ridge,
            info: self.info_mode(),
        }
    }
}
