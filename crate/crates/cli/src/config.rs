//! Run configuration: one JSON file per case, defaults filled per case,
//! unknown keys rejected with the JSON pointer of the offending key.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use trajopt_lcvx::{PdgParams, ToyParams};
use trajopt_ocp::Scheme;
use trajopt_scp::{GustoConfig, PenaltyKind, ScvxConfig};
use trajopt_vehicles::{merge_json, FreeFlyerParams, QuadrotorParams};

/// Golden-search bracket for the descent final time (s).
pub const PDG_BRACKET: (f64, f64) = (40.0, 120.0);
/// Node count of the SCP cases unless `grid.N` is given.
pub const DEFAULT_NODES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    LcvxToy,
    LcvxPdg,
    Quadrotor,
    Freeflyer,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::LcvxToy => "lcvx-toy",
            Case::LcvxPdg => "lcvx-pdg",
            Case::Quadrotor => "quadrotor",
            Case::Freeflyer => "freeflyer",
        }
    }

    pub fn is_lcvx(self) -> bool {
        matches!(self, Case::LcvxToy | Case::LcvxPdg)
    }
}

impl std::str::FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(Value::String(s.into()))
            .map_err(|_| format!("unknown case {s:?}, expected lcvx-toy, lcvx-pdg, quadrotor or freeflyer"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Lcvx,
    Scvx,
    Gusto,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Case,
    /// `lcvx` for the LCvx cases, `scvx` (default) or `gusto` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmChoice>,
    /// Problem parameter overrides, merged onto the case defaults.
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub grid: GridConfig,
    /// SCvx settings merged onto the per-case defaults.
    #[serde(default = "empty_object")]
    pub scvx: Value,
    /// GuSTO settings merged onto the per-case defaults.
    #[serde(default = "empty_object")]
    pub gusto: Value,
    /// Recorded in the report. No stage of a run is randomized.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(case: Case) -> Self {
        Self {
            case,
            algorithm: None,
            params: empty_object(),
            grid: GridConfig::default(),
            scvx: empty_object(),
            gusto: empty_object(),
            seed: 0,
            output_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("at \"{pointer}\": {message}")]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Incompatible(String),
}

impl ConfigError {
    /// JSON pointer of a schema violation.
    pub fn pointer(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

/// Deserializes `value`, reporting failures at `prefix` + the JSON pointer of
/// the offending element.
pub fn from_value_at<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = prefix.to_string();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{}", escape(key))),
                Segment::Enum { variant } => pointer.push_str(&format!("/{}", escape(variant))),
                Segment::Unknown => {}
            }
        }
        let message = e.inner().to_string();
        // an unknown key is reported at its parent object; point at the key
        if let Some(key) = message.strip_prefix("unknown field `").and_then(|m| m.split('`').next()) {
            if !pointer.ends_with(&format!("/{}", escape(key))) {
                pointer.push_str(&format!("/{}", escape(key)));
            }
        }
        ConfigError::Schema { pointer, message }
    })
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|source| ConfigError::Json { path: origin.to_path_buf(), source })?;
    let cfg: RunConfig = from_value_at(value, "")?;
    cfg.resolve()?;
    Ok(cfg)
}

/// Reads, type-checks and resolves a run configuration.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, path)
}

/// Problem instance with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Toy(ToyParams),
    Pdg { params: PdgParams, bracket: (f64, f64) },
    Quadrotor { params: QuadrotorParams, nodes: usize },
    Freeflyer { params: FreeFlyerParams, nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    Lcvx,
    Scvx(ScvxConfig),
    Gusto(GustoConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub problem: Problem,
    pub solver: SolverChoice,
    pub scheme: Scheme,
}

/// SCvx settings each vehicle case starts from.
pub fn default_scvx(case: Case) -> ScvxConfig {
    match case {
        Case::Freeflyer => ScvxConfig { lambda: 10.0, eta_init: 1.0, ..Default::default() },
        _ => ScvxConfig { lambda: 100.0, eta_init: 0.5, beta_sh: 4.0, ..Default::default() },
    }
}

/// GuSTO settings each vehicle case starts from.
pub fn default_gusto(case: Case) -> GustoConfig {
    let lambda0 = if case == Case::Freeflyer { 100.0 } else { 1e3 };
    GustoConfig { lambda0, lambda_max: 1e10, penalty: PenaltyKind::Hinge, ..Default::default() }
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, patch: &Value, prefix: &str) -> Result<T, ConfigError> {
    if !patch.is_object() {
        return Err(ConfigError::Schema { pointer: prefix.into(), message: "expected an object".into() });
    }
    let mut v = serde_json::to_value(base).expect("defaults serialize");
    merge_json(&mut v, patch);
    from_value_at(v, prefix)
}

fn fixture(text: &str) -> Value {
    serde_json::from_str(text).expect("bundled fixture parses")
}

impl RunConfig {
    pub fn algorithm(&self) -> AlgorithmChoice {
        self.algorithm.unwrap_or(if self.case.is_lcvx() { AlgorithmChoice::Lcvx } else { AlgorithmChoice::Scvx })
    }

    /// Fills defaults and checks that case, algorithm and grid fit together.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let algo = self.algorithm();
        let incompatible = |m: String| Err(ConfigError::Incompatible(m));
        let default_scheme = match self.case {
            Case::LcvxPdg => Scheme::Zoh,
            _ => Scheme::Foh,
        };
        let scheme = self.grid.scheme.unwrap_or(default_scheme);
        if self.case.is_lcvx() {
            if algo != AlgorithmChoice::Lcvx {
                return incompatible(format!("case {} is solved by lcvx, not {algo:?}", self.case.name()));
            }
            if scheme != default_scheme {
                return incompatible(format!("case {} is discretized with {default_scheme:?} only", self.case.name()));
            }
        } else if algo == AlgorithmChoice::Lcvx {
            return incompatible(format!("case {} needs scvx or gusto", self.case.name()));
        }
        if self.grid.n.is_some_and(|n| n < 2) {
            return Err(ConfigError::Schema { pointer: "/grid/N".into(), message: "need at least 2 nodes".into() });
        }

        let problem = match self.case {
            Case::LcvxToy => {
                let mut p: ToyParams = overlay(&ToyParams::default(), &self.params, "/params")?;
                if let Some(n) = self.grid.n {
                    p.n = n;
                }
                p.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                Problem::Toy(p)
            }
            Case::LcvxPdg => {
                if self.grid.n.is_some() {
                    return incompatible("lcvx-pdg derives N from params.dt; grid.N is not accepted".into());
                }
                let p: PdgParams = overlay(&PdgParams::default(), &self.params, "/params")?;
                p.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                Problem::Pdg { params: p, bracket: PDG_BRACKET }
            }
            Case::Quadrotor => {
                let mut v = fixture(trajopt_vehicles::QUADROTOR_FIXTURE);
                merge_json(&mut v, &self.params);
                let p: QuadrotorParams = from_value_at(v, "/params")?;
                p.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                Problem::Quadrotor { params: p, nodes: self.grid.n.unwrap_or(DEFAULT_NODES) }
            }
            Case::Freeflyer => {
                let mut v = fixture(trajopt_vehicles::FREEFLYER_FIXTURE);
                merge_json(&mut v, &self.params);
                let p: FreeFlyerParams = from_value_at(v, "/params")?;
                p.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                Problem::Freeflyer { params: p, nodes: self.grid.n.unwrap_or(DEFAULT_NODES) }
            }
        };

        // both blocks are type-checked even when the other algorithm runs
        let scvx: ScvxConfig = overlay(&default_scvx(self.case), &self.scvx, "/scvx")?;
        let gusto: GustoConfig = overlay(&default_gusto(self.case), &self.gusto, "/gusto")?;
        let solver = match algo {
            AlgorithmChoice::Lcvx => SolverChoice::Lcvx,
            AlgorithmChoice::Scvx => {
                scvx.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                SolverChoice::Scvx(scvx)
            }
            AlgorithmChoice::Gusto => {
                gusto.validate().map_err(|e| ConfigError::Incompatible(e.to_string()))?;
                SolverChoice::Gusto(gusto)
            }
        };
        Ok(Resolved { problem, solver, scheme })
    }

    /// Applies the command-line `--algorithm` and `--max-iters` switches.
    pub fn with_switches(mut self, algorithm: Option<AlgorithmChoice>, max_iters: Option<usize>) -> Self {
        if let Some(a) = algorithm {
            self.algorithm = Some(a);
        }
        if let Some(k) = max_iters {
            let block = match self.algorithm() {
                AlgorithmChoice::Scvx => &mut self.scvx,
                AlgorithmChoice::Gusto => &mut self.gusto,
                AlgorithmChoice::Lcvx => return self,
            };
            if let Value::Object(map) = block {
                map.insert("max_iters".into(), k.into());
            }
        }
        self
    }
}
