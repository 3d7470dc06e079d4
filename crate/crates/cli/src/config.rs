//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys:
//!
//! ```toml
//! name = "p1_buffer"          # run name, also the default output directory
//! problem = "p1"              # p1 | p2 | p3 | p4
//! p2_kappa = [0.1, 1, 0.1, 1] # optional, p2 only
//! output = "some/dir"         # optional, relative to the output root
//!
//! [ansatz]                    # kind, hidden, activation, window_1d, window_2d, rbf_radius, ...
//! [train]                     # iterations, learning_rate, seed, init, weights, physics, collocation, adam
//! [reference]                 # p4 only: nx, ny, layout
//! [verify]                    # dense
//! [sweep]                     # optional default sweep: axis, values
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use ifpinn::ansatz::{AnsatzConfig, AnsatzKind};
use ifpinn::problems::{problem_spec, MeshLayout, ProblemId, ProblemSpec};
use ifpinn::training::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable naming the root directory for run outputs.
pub const OUTPUT_ROOT_VAR: &str = "IFPINN_OUT";
const DEFAULT_OUTPUT_ROOT: &str = "ifpinn-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2_kappa: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// Grid of the numerical reference for the 2D problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub nx: usize,
    pub ny: usize,
    pub layout: MeshLayout,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            nx: 256,
            ny: 128,
            layout: MeshLayout::InterfaceFitted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Samples per boundary edge and along the interface.
    pub dense: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { dense: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    WindowK,
    Beta,
    InitScheme,
    Seed,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "window_k" => Ok(SweepAxis::WindowK),
            "beta" => Ok(SweepAxis::Beta),
            "init_scheme" => Ok(SweepAxis::InitScheme),
            "seed" => Ok(SweepAxis::Seed),
            _ => Err(format!("unknown sweep axis `{s}` (expected window_k, beta, init_scheme, seed)")),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::WindowK => "window_k",
            SweepAxis::Beta => "beta",
            SweepAxis::InitScheme => "init_scheme",
            SweepAxis::Seed => "seed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or a shipped preset when `source` names one and
    /// no such file exists.
    pub fn load(source: &str) -> Result<Self, CliError> {
        let path = Path::new(source);
        let text = if path.exists() {
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{source}: {e}")))?
        } else if let Some(t) = crate::presets::get(source) {
            t.to_string()
        } else {
            return Err(CliError::Config(format!(
                "{source}: no such file or preset (see `ifpinn presets`)"
            )));
        };
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{source}: {m}")),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn spec(&self) -> ProblemSpec {
        problem_spec(self.problem, self.p2_kappa)
    }

    /// Checks cross-field consistency by building the ansatz.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.p2_kappa.is_some() && self.problem != ProblemId::P2 {
            return Err(CliError::Config("p2_kappa: only applies to problem p2".into()));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("name: `{}` is not a plain file name", self.name)));
        }
        self.spec()
            .validate()
            .map_err(|e| CliError::Config(format!("problem: {e}")))?;
        self.ansatz
            .build(&self.spec())
            .map_err(|e| CliError::Config(format!("ansatz: {e}")))?;
        self.train
            .validate()
            .map_err(|e| CliError::Config(format!("train: {e}")))?;
        if self.problem == ProblemId::P4 && (self.reference.nx < 64 || self.reference.ny < 32) {
            return Err(CliError::Config("reference: grid must be at least 64 x 32".into()));
        }
        if self.train.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("train.seed: {} exceeds 2^63 - 1", self.train.seed)));
        }
        if self.verify.dense == 0 {
            return Err(CliError::Config("verify.dense: must be at least 1".into()));
        }
        Ok(())
    }

    /// Output directory: `output` (or `name`) under the output root.
    pub fn output_dir(&self) -> PathBuf {
        output_root().join(self.output.as_deref().unwrap_or(&self.name))
    }

    /// Copy with one sweep value applied, checked against the ansatz kind.
    pub fn with_axis_value(&self, axis: SweepAxis, value: &str) -> Result<Self, CliError> {
        let mut c = self.clone();
        let bad = |m: String| Err(CliError::Config(format!("sweep {axis} = {value}: {m}")));
        let needs_1d_window = matches!(axis, SweepAxis::WindowK | SweepAxis::Beta);
        if needs_1d_window && (c.ansatz.kind != AnsatzKind::Window || c.problem == ProblemId::P4) {
            return bad(format!(
                "axis applies to 1D window runs, not a {} ansatz on {}",
                c.ansatz.kind, c.problem
            ));
        }
        match axis {
            SweepAxis::Beta => match value.parse::<f64>() {
                Ok(b) => c.ansatz.window_1d.beta = b,
                Err(_) => return bad("expected a number".into()),
            },
            SweepAxis::WindowK => {
                // `k` sets (k_d, k_n) of boundary and interface windows; `k/ki`
                // also sets the interior order
                let mut parts = value.split('/');
                let parse = |s: Option<&str>| s.map(|s| s.trim().parse::<usize>());
                match (parse(parts.next()), parse(parts.next()), parts.next()) {
                    (Some(Ok(k)), None, None) => {
                        c.ansatz.window_1d.boundary_orders = [k, k];
                        c.ansatz.window_1d.interface_orders = [k, k];
                    }
                    (Some(Ok(k)), Some(Ok(ki)), None) => {
                        c.ansatz.window_1d.boundary_orders = [k, k];
                        c.ansatz.window_1d.interface_orders = [k, k];
                        c.ansatz.window_1d.interior_order = ki;
                    }
                    _ => return bad("expected `k` or `k/k_interior`".into()),
                }
            }
            SweepAxis::InitScheme => match parse_init(value) {
                Ok(s) => c.train.init = s,
                Err(m) => return bad(m),
            },
            SweepAxis::Seed => match value.parse::<u64>() {
                Ok(s) => c.train.seed = s,
                Err(_) => return bad("expected a non-negative integer".into()),
            },
        }
        c.validate()
            .map_err(|e| CliError::Config(format!("sweep {axis} = {value}: {e}")))?;
        Ok(c)
    }
}

/// `glorot`, `glorot_scaled[:scale]` or `normal:sigma`.
pub fn parse_init(s: &str) -> Result<ifpinn::nn::InitScheme, String> {
    use ifpinn::nn::{InitScheme, DEFAULT_GLOROT_SCALE};
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |a: &str| a.parse::<f64>().map_err(|_| format!("bad number `{a}` in init scheme"));
    match (name, arg) {
        ("glorot", None) => Ok(InitScheme::Glorot),
        ("glorot_scaled", None) => Ok(InitScheme::GlorotScaled {
            scale: DEFAULT_GLOROT_SCALE,
        }),
        ("glorot_scaled", Some(a)) => Ok(InitScheme::GlorotScaled { scale: num(a)? }),
        ("normal", Some(a)) => Ok(InitScheme::Normal { sigma: num(a)? }),
        _ => Err(format!(
            "unknown init scheme `{s}` (expected glorot, glorot_scaled[:scale], normal:sigma)"
        )),
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Expands sweep values; a `window_k` sweep pairs every edge order with
/// every interior order.
pub fn expand_values(axis: SweepAxis, values: &[String]) -> Vec<String> {
    match axis {
        SweepAxis::WindowK if values.iter().all(|v| !v.contains('/')) => values
            .iter()
            .flat_map(|k| values.iter().map(move |ki| format!("{k}/{ki}")))
            .collect(),
        _ => values.to_vec(),
    }
}
