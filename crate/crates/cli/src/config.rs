//! Run configuration: a single JSON document with strict key checking.
//! Unknown keys and out-of-range values are rejected with the offending key
//! named, and the process exits with the usage code.

use rwlab_core::potential::ModeSpec;
use serde::Deserialize;
use std::fmt;

/// Configuration error; always names the key it is complaining about.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mass: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub modes: Option<ModesConfig>,
    #[serde(default = "default_courant")]
    pub courant: f64,
    #[serde(default)]
    pub t_final: f64,
    #[serde(default)]
    pub initial_data: Option<Vec<ModeInitialData>>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub semilinear: Option<SemilinearConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub verification: Option<VerificationConfig>,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
}

fn default_courant() -> f64 {
    0.9
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

/// Either an explicit list of harmonic channels or an l_max sweep over m = 0.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModesConfig {
    List(Vec<ModeId>),
    Sweep { l_max: u32 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeId {
    pub l: u32,
    #[serde(default)]
    pub m: i32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeInitialData {
    pub l: u32,
    #[serde(default)]
    pub m: i32,
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ProfileConfig {
    #[serde(rename = "gaussian")]
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum SourceConfig {
    #[serde(rename = "gaussian-pulse")]
    GaussianPulse {
        amplitude: f64,
        center_x: f64,
        width_x: f64,
        center_t: f64,
        width_t: f64,
    },
    #[serde(rename = "table")]
    Table {
        t: Vec<f64>,
        x: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemilinearConfig {
    pub p: f64,
    pub kappa: f64,
    /// Blow-up ceiling as a multiple of the initial max |psi|.
    #[serde(default = "default_ceiling_factor")]
    pub ceiling_factor: f64,
}

fn default_ceiling_factor() -> f64 {
    1e6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_energy_every")]
    pub energy_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            energy_every: default_energy_every(),
            snapshot_every: 0,
        }
    }
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_energy_every() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    /// Angular frequencies to verify; defaults to sqrt(l(l+1)) for l = 0..=20.
    #[serde(default)]
    pub lambda_list: Option<Vec<f64>>,
    #[serde(default)]
    pub c_grid: Option<CGridConfig>,
    #[serde(default)]
    pub b_grid: Option<BGridConfig>,
    /// Replace the physical family with a synthetic fixture.
    #[serde(default)]
    pub fixture: Option<FixtureKind>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CGridConfig {
    pub min: f64,
    pub max: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BGridConfig {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum FixtureKind {
    #[serde(rename = "y-squared")]
    YSquared,
    #[serde(rename = "negative-constant")]
    NegativeConstant,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Exactly three node counts with dx halving between consecutive entries.
    pub resolutions: Vec<usize>,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(err(format!("mass: must be positive, got {}", self.mass)));
        }
        if !(self.grid.x_min < self.grid.x_max) {
            return Err(err(format!(
                "grid.x_min/x_max: need x_min < x_max, got [{}, {}]",
                self.grid.x_min, self.grid.x_max
            )));
        }
        if self.grid.n < 3 {
            return Err(err(format!("grid.n: need at least 3 nodes, got {}", self.grid.n)));
        }
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return Err(err(format!(
                "courant: must lie in (0, 1], got {}",
                self.courant
            )));
        }
        if !(self.t_final >= 0.0) {
            return Err(err(format!("t_final: must be nonnegative, got {}", self.t_final)));
        }
        if let Some(modes) = &self.modes {
            for id in modes.resolve()? {
                ModeSpec::new(id.l, id.m)
                    .map_err(|e| err(format!("modes: {e}")))?;
            }
        }
        if let Some(entries) = &self.initial_data {
            for e in entries {
                ModeSpec::new(e.l, e.m).map_err(|x| err(format!("initial_data: {x}")))?;
                let ProfileConfig::Gaussian { width, .. } = &e.profile;
                if !(*width > 0.0) {
                    return Err(err(format!(
                        "initial_data.profile.width: must be positive, got {width}"
                    )));
                }
            }
        }
        if let Some(s) = &self.semilinear {
            if !(s.p > 2.0) {
                return Err(err(format!("semilinear.p: must exceed 2, got {}", s.p)));
            }
            if !(s.ceiling_factor > 1.0) {
                return Err(err(format!(
                    "semilinear.ceiling_factor: must exceed 1, got {}",
                    s.ceiling_factor
                )));
            }
        }
        if let Some(SourceConfig::Table { t, x, values }) = &self.source {
            if t.len() < 2 || x.len() < 2 {
                return Err(err("source.t/source.x: tables need at least 2 samples each"));
            }
            if values.len() != t.len() || values.iter().any(|row| row.len() != x.len()) {
                return Err(err("source.values: shape must be t.len() rows by x.len() columns"));
            }
        }
        if let Some(v) = &self.verification {
            if let Some(list) = &v.lambda_list {
                if list.is_empty() {
                    return Err(err("verification.lambda_list: must not be empty"));
                }
                if let Some(bad) = list.iter().find(|&&l| !(l >= 0.0)) {
                    return Err(err(format!(
                        "verification.lambda_list: entries must be nonnegative, got {bad}"
                    )));
                }
            }
            if let Some(c) = &v.c_grid {
                if !(c.min > 0.0 && c.min < c.max && c.factor > 1.0) {
                    return Err(err(
                        "verification.c_grid: need 0 < min < max and factor > 1",
                    ));
                }
            }
            if let Some(b) = &v.b_grid {
                if b.b1.is_empty() || b.b2.is_empty() {
                    return Err(err("verification.b_grid: b1 and b2 must not be empty"));
                }
            }
        }
        if let Some(c) = &self.convergence {
            if c.resolutions.len() != 3 {
                return Err(err(format!(
                    "convergence.resolutions: need exactly three node counts, got {}",
                    c.resolutions.len()
                )));
            }
            for w in c.resolutions.windows(2) {
                if w[1] != 2 * (w[0] - 1) + 1 {
                    return Err(err(format!(
                        "convergence.resolutions: {} does not halve the spacing of {} (want {})",
                        w[1],
                        w[0],
                        2 * (w[0] - 1) + 1
                    )));
                }
            }
        }
        if self.outputs.dir.is_empty() {
            return Err(err("outputs.dir: must not be empty"));
        }
        Ok(())
    }

    /// Modes to evolve, ordered by (l, m); errors when none are configured.
    pub fn mode_list(&self) -> Result<Vec<ModeSpec>, ConfigError> {
        let ids = self
            .modes
            .as_ref()
            .ok_or_else(|| err("modes: required for evolution commands"))?
            .resolve()?;
        if ids.is_empty() {
            return Err(err("modes: list must not be empty"));
        }
        let mut specs: Vec<ModeSpec> = ids
            .iter()
            .map(|id| ModeSpec::new(id.l, id.m).map_err(|e| err(format!("modes: {e}"))))
            .collect::<Result<_, _>>()?;
        specs.sort_by_key(|s| (s.l, s.m));
        specs.dedup_by_key(|s| (s.l, s.m));
        Ok(specs)
    }

    /// Default verification family: sqrt(l(l+1)) for l = 0..=20.
    pub fn lambda_family(&self) -> Vec<f64> {
        self.verification
            .as_ref()
            .and_then(|v| v.lambda_list.clone())
            .unwrap_or_else(|| {
                (0..=20u32)
                    .map(|l| (l as f64 * (l as f64 + 1.0)).sqrt())
                    .collect()
            })
    }
}

impl ModesConfig {
    pub fn resolve(&self) -> Result<Vec<ModeId>, ConfigError> {
        match self {
            ModesConfig::List(ids) => Ok(ids.clone()),
            ModesConfig::Sweep { l_max } => {
                Ok((0..=*l_max).map(|l| ModeId { l, m: 0 }).collect())
            }
        }
    }
}
