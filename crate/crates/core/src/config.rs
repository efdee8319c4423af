//! JSON run configuration with validation and key-path error reporting.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diagnostics::DEFAULT_EXCESS_LEVELS;
use crate::error::{Error, Result};
use crate::integrate::StepControl;
use crate::state::{GasParams, SetupKind, MIN_CELLS};
use crate::verification::{Family, InitialDataSpec};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "POLYGAS_OUT";
pub const DEFAULT_OUT: &str = "polygas-out";

pub const DEFAULT_TRUNCATION_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_RECORDS: f64 = 100.0;

/// Human-readable list of defaults, shown by `--help`.
pub const DEFAULTS_HELP: &str = "\
Run config keys (JSON object; unknown keys are rejected):
  setup                 cauchy | halfline_insulated | halfline_isothermal (required)
  L                     truncation half-length (required, > 0)
  n                     number of cells (required, >= 4)
  t_end                 final time (required, > 0)
  theta_bc              wall temperature; only 1 is accepted (halfline_isothermal)
  gas.{mu,kappa,R,c_v}  default 1, 1, 1, 1
  step.cfl_hyperbolic   default 0.5
  step.cfl_parabolic    default 0.4
  step.dt_min           default 1e-12
  step.dt_max           default 0.05
  step.positivity_floor default 1e-10
  initial.family        gaussian_bump | tanh_front | random_smooth (default gaussian_bump)
  initial.amplitude_v, amplitude_u, amplitude_theta   default 0
  initial.width         default 1;  initial.center  default 0
  initial.seed          default 0;  initial.modes   default 6
  mms                   true to start from the manufactured solution with sources (default false)
  cadence               time between audit records (default t_end / 100)
  snapshot_every        time between snapshots (default: initial and final only)
  output_dir            default $POLYGAS_OUT, else ./polygas-out
  excess_levels         default [1.5, 2, 3]
  truncation_threshold  default 1e-2

MMS config keys (for `mms`):
  setup                 one setup or omitted for all three
  n_list                default [64, 128, 256, 512]
  t_end                 default 0.2
  steady                true for the constant solution (default false)
  gas, step, output_dir as above";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    setup: SetupKind,
    #[serde(rename = "L")]
    half_length: f64,
    n: usize,
    t_end: f64,
    #[serde(default)]
    theta_bc: Option<f64>,
    #[serde(default)]
    gas: GasParams,
    #[serde(default)]
    step: StepControl,
    #[serde(default)]
    initial: Option<InitialDataSpec>,
    #[serde(default)]
    mms: bool,
    #[serde(default)]
    cadence: Option<f64>,
    #[serde(default)]
    snapshot_every: Option<f64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    excess_levels: Option<Vec<f64>>,
    #[serde(default)]
    truncation_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSelection {
    Data(InitialDataSpec),
    Manufactured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub setup: SetupKind,
    pub half_length: f64,
    pub n_cells: usize,
    pub t_end: f64,
    pub gas: GasParams,
    pub step: StepControl,
    pub initial: InitialSelection,
    pub cadence: f64,
    pub snapshot_every: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub excess_levels: Vec<f64>,
    pub truncation_threshold: f64,
}

impl RunConfig {
    /// A config with every optional key at its default.
    pub fn new(setup: SetupKind, half_length: f64, n_cells: usize, t_end: f64) -> Self {
        RunConfig {
            setup,
            half_length,
            n_cells,
            t_end,
            gas: GasParams::default(),
            step: StepControl::default(),
            initial: InitialSelection::Data(InitialDataSpec::default()),
            cadence: t_end / DEFAULT_RECORDS,
            snapshot_every: None,
            output_dir: None,
            excess_levels: DEFAULT_EXCESS_LEVELS.to_vec(),
            truncation_threshold: DEFAULT_TRUNCATION_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return Err(Error::config(
                "L",
                format!("must be positive, got {}", self.half_length),
            ));
        }
        if self.n_cells < MIN_CELLS {
            return Err(Error::config(
                "n",
                format!("need at least {MIN_CELLS} cells, got {}", self.n_cells),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        self.gas.validate()?;
        self.step.validate()?;
        if !(self.cadence > 0.0) {
            return Err(Error::config(
                "cadence",
                format!("must be positive, got {}", self.cadence),
            ));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) {
                return Err(Error::config(
                    "snapshot_every",
                    format!("must be positive, got {s}"),
                ));
            }
        }
        if let Some(a) = self.excess_levels.iter().find(|&&a| !(a > 1.0)) {
            return Err(Error::config(
                "excess_levels",
                format!("levels must exceed 1, got {a}"),
            ));
        }
        if !(self.truncation_threshold > 0.0) {
            return Err(Error::config(
                "truncation_threshold",
                format!("must be positive, got {}", self.truncation_threshold),
            ));
        }
        if let InitialSelection::Data(spec) = &self.initial {
            if !(spec.width > 0.0) {
                return Err(Error::config(
                    "initial.width",
                    format!("must be positive, got {}", spec.width),
                ));
            }
            if spec.family == Family::RandomSmooth && spec.modes == 0 {
                return Err(Error::config("initial.modes", "need at least one mode"));
            }
        }
        Ok(())
    }
}

fn path_error(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let inner = err.into_inner();
    Error::config(
        if path.is_empty() {
            ".".to_string()
        } else {
            path
        },
        inner.to_string(),
    )
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::config(".", format!("malformed JSON: {e}")))
}

/// Applies `key.path=value` overrides to a JSON document. The value is read
/// as JSON when it parses, otherwise as a string.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item.as_str(), "override must look like key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (k, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::config(key, "override path crosses a non-object"))?;
            if k + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Parses and validates a run config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = parse_value(text)?;
    apply_overrides(&mut doc, overrides)?;
    run_config_from_value(doc)
}

pub fn run_config_from_value(doc: Value) -> Result<RunConfig> {
    let raw: RawRun = serde_path_to_error::deserialize(doc).map_err(path_error)?;
    match (raw.setup, raw.theta_bc) {
        (_, None) => {}
        (SetupKind::HalfLineIsothermal, Some(1.0)) => {}
        (SetupKind::HalfLineIsothermal, Some(t)) => {
            return Err(Error::config(
                "theta_bc",
                format!("the isothermal wall temperature is fixed at 1, got {t}"),
            ))
        }
        (kind, Some(_)) => {
            return Err(Error::config(
                "theta_bc",
                format!("only the halfline_isothermal setup has a wall temperature, not {kind}"),
            ))
        }
    }
    let initial = match (raw.mms, raw.initial) {
        (true, Some(_)) => {
            return Err(Error::config(
                "mms",
                "give either `mms: true` or `initial`, not both",
            ))
        }
        (true, None) => InitialSelection::Manufactured,
        (false, spec) => InitialSelection::Data(spec.unwrap_or_default()),
    };
    let cfg = RunConfig {
        setup: raw.setup,
        half_length: raw.half_length,
        n_cells: raw.n,
        t_end: raw.t_end,
        gas: raw.gas,
        step: raw.step,
        initial,
        cadence: raw.cadence.unwrap_or(raw.t_end / DEFAULT_RECORDS),
        snapshot_every: raw.snapshot_every,
        output_dir: raw.output_dir,
        excess_levels: raw
            .excess_levels
            .unwrap_or_else(|| DEFAULT_EXCESS_LEVELS.to_vec()),
        truncation_threshold: raw
            .truncation_threshold
            .unwrap_or(DEFAULT_TRUNCATION_THRESHOLD),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMms {
    #[serde(default)]
    setup: Option<SetupKind>,
    #[serde(default = "default_n_list")]
    n_list: Vec<usize>,
    #[serde(default = "default_mms_t_end")]
    t_end: f64,
    #[serde(default)]
    steady: bool,
    #[serde(default)]
    gas: GasParams,
    #[serde(default)]
    step: StepControl,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn default_n_list() -> Vec<usize> {
    vec![64, 128, 256, 512]
}

fn default_mms_t_end() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub setups: Vec<SetupKind>,
    pub n_list: Vec<usize>,
    pub t_end: f64,
    pub steady: bool,
    pub gas: GasParams,
    pub step: StepControl,
    pub output_dir: Option<PathBuf>,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            setups: SetupKind::ALL.to_vec(),
            n_list: default_n_list(),
            t_end: default_mms_t_end(),
            steady: false,
            gas: GasParams::default(),
            step: StepControl::default(),
            output_dir: None,
        }
    }
}

pub fn parse_mms_config(text: &str, overrides: &[String]) -> Result<MmsConfig> {
    let mut doc = parse_value(text)?;
    apply_overrides(&mut doc, overrides)?;
    let raw: RawMms = serde_path_to_error::deserialize(doc).map_err(path_error)?;
    if raw.n_list.len() < 3 {
        return Err(Error::config(
            "n_list",
            format!("need at least 3 resolutions, got {}", raw.n_list.len()),
        ));
    }
    if let Some(n) = raw.n_list.iter().find(|&&n| n < MIN_CELLS) {
        return Err(Error::config(
            "n_list",
            format!("resolution {n} is below {MIN_CELLS}"),
        ));
    }
    if !(raw.t_end > 0.0) {
        return Err(Error::config(
            "t_end",
            format!("must be positive, got {}", raw.t_end),
        ));
    }
    raw.gas.validate()?;
    raw.step.validate()?;
    Ok(MmsConfig {
        setups: raw
            .setup
            .map_or_else(|| SetupKind::ALL.to_vec(), |s| vec![s]),
        n_list: raw.n_list,
        t_end: raw.t_end,
        steady: raw.steady,
        gas: raw.gas,
        step: raw.step,
        output_dir: raw.output_dir,
    })
}
