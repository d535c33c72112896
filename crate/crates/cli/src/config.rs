//! Config documents and their validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab_core::rational::{q_frac, serde_q, serde_q_vec};
use shadowlab_core::{SystemHandle, Q};

use crate::CliError;

/// One experiment as written in a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Either a named system or a full system document.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Alias(String),
    Doc(SystemHandle),
}

impl SystemSpec {
    fn resolve(&self) -> Result<SystemHandle, CliError> {
        match self {
            SystemSpec::Doc(s) => Ok(s.clone()),
            SystemSpec::Alias(name) => {
                let key = name.to_lowercase().replace('_', "-");
                match key.as_str() {
                    "golden-mean" => Ok(SystemHandle::golden_mean()),
                    "full-shift" => Ok(SystemHandle::full_shift(2)),
                    _ => key
                        .strip_prefix("full-shift-")
                        .and_then(|k| k.parse().ok())
                        .filter(|&k| k >= 1)
                        .map(SystemHandle::full_shift)
                        .ok_or_else(|| CliError::ConfigSchema(format!("unknown system alias {name:?}"))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Trace,
    EntropyTable,
    DblCompare,
    ApproxOdometer,
    ApproxEntropy,
    GurevichSeries,
    GurevichEntropy,
    DelahayeAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Trace,
        Experiment::EntropyTable,
        Experiment::DblCompare,
        Experiment::ApproxOdometer,
        Experiment::ApproxEntropy,
        Experiment::GurevichSeries,
        Experiment::GurevichEntropy,
        Experiment::DelahayeAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::EntropyTable => "entropy-table",
            Experiment::DblCompare => "dbl-compare",
            Experiment::ApproxOdometer => "approx-odometer",
            Experiment::ApproxEntropy => "approx-entropy",
            Experiment::GurevichSeries => "gurevich-series",
            Experiment::GurevichEntropy => "gurevich-entropy",
            Experiment::DelahayeAudit => "delahaye-audit",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

// ---------------------------------------------------------------------------
// parameter payloads

/// A periodic point given by its cycle, as a Dirac mass or as its orbit measure.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub cycle: Vec<u32>,
    #[serde(with = "serde_q")]
    pub weight: Q,
    #[serde(default)]
    pub orbit: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    #[serde(with = "serde_q")]
    pub eps: Q,
    /// random pseudo-orbit of this length, drawn from the seed
    #[serde(default)]
    pub length: Option<usize>,
    /// explicit pseudo-orbit, each word extended by zeros
    #[serde(default)]
    pub words: Option<Vec<Vec<u32>>>,
    #[serde(default, deserialize_with = "opt_q")]
    pub delta: Option<Q>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyTableParams {
    #[serde(default = "default_n_list")]
    pub n: Vec<usize>,
    #[serde(default = "default_eps_list", with = "serde_q_vec")]
    pub eps: Vec<Q>,
}

fn default_n_list() -> Vec<usize> {
    vec![5, 10, 15, 20]
}

fn default_eps_list() -> Vec<Q> {
    vec![q_frac(1, 2)]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DblParams {
    pub mu: Vec<Atom>,
    pub nu: Vec<Atom>,
    #[serde(default = "default_family_n")]
    pub n_max: usize,
}

fn default_family_n() -> usize {
    shadowlab_core::measures::DEFAULT_N_MAX
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxOdometerParams {
    pub components: Vec<Atom>,
    #[serde(with = "serde_q")]
    pub eps: Q,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxEntropyParams {
    pub components: Vec<Atom>,
    pub c: f64,
    #[serde(with = "serde_q")]
    pub eps: Q,
    #[serde(default)]
    pub m_max: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GurevichSeriesParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub n_max: u64,
    #[serde(rename = "L", with = "serde_q")]
    pub l: Q,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GurevichEntropyParams {
    #[serde(rename = "N")]
    pub n: u32,
    /// highest level; by default every level under the vertex cap
    #[serde(default)]
    pub max_level: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelahayeParams {
    #[serde(default = "default_level")]
    pub level: u32,
    #[serde(default = "default_formula_n")]
    pub formula_n: u32,
    #[serde(default = "default_formula_n")]
    pub renorm_levels: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_level() -> u32 {
    12
}
fn default_formula_n() -> u32 {
    6
}
fn default_samples() -> usize {
    100
}
fn default_max_iter() -> usize {
    10_000
}

fn opt_q<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(with = "serde_q")] Q);
    Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
}

#[derive(Debug, Clone)]
pub enum Params {
    Trace(TraceParams),
    EntropyTable(EntropyTableParams),
    DblCompare(DblParams),
    ApproxOdometer(ApproxOdometerParams),
    ApproxEntropy(ApproxEntropyParams),
    GurevichSeries(GurevichSeriesParams),
    GurevichEntropy(GurevichEntropyParams),
    DelahayeAudit(DelahayeParams),
}

/// A config that passed validation.
#[derive(Debug, Clone)]
pub struct Plan {
    pub experiment: Experiment,
    pub system: SystemHandle,
    pub params: Params,
    /// the params exactly as written, echoed into the report
    pub raw_params: Value,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

fn typed<T: DeserializeOwned>(e: Experiment, v: &Value) -> Result<T, CliError> {
    // a missing params block reads as {}
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|err| CliError::ConfigSchema(format!("{e} params: {err}")))
}

fn schema(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::ConfigSchema(msg.into()))
    }
}

fn check_atoms(name: &str, atoms: &[Atom]) -> Result<(), CliError> {
    schema(!atoms.is_empty(), format!("{name} needs at least one atom"))?;
    schema(atoms.iter().all(|a| !a.cycle.is_empty()), format!("{name} has an empty cycle"))
}

impl ExperimentConfig {
    pub fn plan(&self, seed_override: Option<u64>) -> Result<Plan, CliError> {
        let experiment: Experiment = self.experiment.parse()?;
        let system = match &self.system {
            Some(s) => s.resolve()?,
            None => SystemHandle::full_shift(2),
        };
        let e = experiment;
        let params = match e {
            Experiment::Trace => {
                let p: TraceParams = typed(e, &self.params)?;
                schema(p.length.is_some() != p.words.is_some(), "trace params need exactly one of length or words")?;
                schema(p.length != Some(0) && p.words.as_ref().is_none_or(|w| !w.is_empty()), "trace pseudo-orbit is empty")?;
                schema(system.is_symbolic(), "trace runs on shift systems")?;
                Params::Trace(p)
            }
            Experiment::EntropyTable => {
                let p: EntropyTableParams = typed(e, &self.params)?;
                schema(!p.n.is_empty() && p.n.iter().all(|&n| n > 0), "entropy-table needs positive n values")?;
                schema(!p.eps.is_empty(), "entropy-table needs eps values")?;
                Params::EntropyTable(p)
            }
            Experiment::DblCompare => {
                let p: DblParams = typed(e, &self.params)?;
                check_atoms("mu", &p.mu)?;
                check_atoms("nu", &p.nu)?;
                Params::DblCompare(p)
            }
            Experiment::ApproxOdometer => {
                let p: ApproxOdometerParams = typed(e, &self.params)?;
                check_atoms("components", &p.components)?;
                Params::ApproxOdometer(p)
            }
            Experiment::ApproxEntropy => {
                let p: ApproxEntropyParams = typed(e, &self.params)?;
                check_atoms("components", &p.components)?;
                schema(p.c.is_finite() && p.c >= 0.0, "c must be a nonnegative number")?;
                Params::ApproxEntropy(p)
            }
            Experiment::GurevichSeries => {
                let p: GurevichSeriesParams = typed(e, &self.params)?;
                schema(p.n >= 1 && p.n_max >= 1, "N and n_max must be positive")?;
                Params::GurevichSeries(p)
            }
            Experiment::GurevichEntropy => Params::GurevichEntropy(typed(e, &self.params)?),
            Experiment::DelahayeAudit => {
                let p: DelahayeParams = typed(e, &self.params)?;
                schema(p.level > p.formula_n && p.level > p.renorm_levels, "level must exceed formula_n and renorm_levels")?;
                Params::DelahayeAudit(p)
            }
        };
        Ok(Plan {
            experiment,
            system,
            params,
            raw_params: self.params.clone(),
            seed: seed_override.or(self.seed).unwrap_or(0),
            output: self.output.clone(),
        })
    }
}

/// Reads a config file holding one experiment or a list of them.
pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::ConfigSchema(format!("{}: {e}", path.display())))?;
    let docs = match value {
        Value::Array(items) => items,
        other => vec![other],
    };
    if docs.is_empty() {
        return Err(CliError::ConfigSchema("empty experiment list".into()));
    }
    docs.into_iter()
        .map(|d| serde_json::from_value(d).map_err(|e| CliError::ConfigSchema(e.to_string())))
        .collect()
}
