use calderon_core::dbar::DbarConfig;
use calderon_core::faddeev::FaddeevConfig;
use calderon_core::forward::ForwardConfig;
use calderon_core::phantom::{GridRecipe, PhantomRecipe};
use calderon_core::stability::{Family, LabConfig};
use schemars::{schema_for, JsonSchema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming the forward-solve cache directory.
pub const CACHE_ENV: &str = "DBAR_CACHE_DIR";

/// Parameters shared by every subcommand. Each section mirrors the config
/// of the module that consumes it; missing sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub faddeev: FaddeevConfig,
    #[serde(default)]
    pub dbar: DbarConfig,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: GridRecipe,
    #[serde(default = "default_zgrid")]
    pub zgrid: GridRecipe,
    /// Exponents of the λ-grid norms in stability records.
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// z points whose μ(z, ·) slices enter stability records.
    #[serde(default = "default_probes")]
    pub mu_probes: Vec<[f64; 2]>,
    /// Radius of a disk containing every phantom support.
    #[serde(default = "default_support")]
    pub support_bound: f64,
}

fn default_lambda_grid() -> GridRecipe {
    LabConfig::default().lambda_grid
}
fn default_zgrid() -> GridRecipe {
    LabConfig::default().zgrid
}
fn default_p_values() -> Vec<f64> {
    LabConfig::default().p_values
}
fn default_probes() -> Vec<[f64; 2]> {
    LabConfig::default().mu_probes
}
fn default_support() -> f64 {
    LabConfig::default().support_bound
}

impl Default for RunConfig {
    fn default() -> Self {
        let lab = LabConfig::default();
        Self {
            forward: lab.forward,
            faddeev: lab.faddeev,
            dbar: lab.dbar,
            lambda_grid: lab.lambda_grid,
            zgrid: lab.zgrid,
            p_values: lab.p_values,
            mu_probes: lab.mu_probes,
            support_bound: lab.support_bound,
        }
    }
}

impl RunConfig {
    pub fn lab(&self) -> LabConfig {
        LabConfig {
            forward: self.forward,
            faddeev: self.faddeev,
            dbar: self.dbar,
            lambda_grid: self.lambda_grid,
            zgrid: self.zgrid,
            p_values: self.p_values.clone(),
            mu_probes: self.mu_probes.clone(),
            support_bound: self.support_bound,
            cache_dir: cache_dir(),
        }
    }

    pub fn validate(&self) -> calderon_core::Result<()> {
        self.lab().validate()
    }
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()).map(PathBuf::from)
}

/// Schemas of the JSON inputs, by name.
pub fn schema(name: &str) -> Option<String> {
    let s = match name {
        "run-config" => schema_for!(RunConfig),
        "phantom" => schema_for!(PhantomRecipe),
        "family" => schema_for!(Family),
        _ => return None,
    };
    Some(serde_json::to_string_pretty(&s).expect("schema serializes") + "\n")
}

pub const SCHEMA_NAMES: [&str; 3] = ["run-config", "phantom", "family"];

/// Input-file failures; reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Strict parse: unknown keys and wrong types are rejected before any
/// computation starts.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}
