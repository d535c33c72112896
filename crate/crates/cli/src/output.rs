//! Artifact files and the on-disk result cache.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Plan;
use crate::experiments::{Outcome, Table};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Deterministic report: no timestamps, keys in sorted order.
pub fn report_json(plan: &Plan, outcome: &Outcome) -> Value {
    json!({
        "experiment": plan.experiment,
        "seed": plan.seed,
        "system": serde_json::to_value(&plan.system).unwrap_or(Value::Null),
        "params": plan.raw_params,
        "result": outcome.result,
        "tolerance_misses": outcome.misses,
        "version": VERSION,
    })
}

pub fn table_csv(table: &Table, seed: u64) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Experiment(e.to_string());
    // the seed travels with every artifact
    w.write_record(std::iter::once("seed").chain(table.header.iter().map(String::as_str))).map_err(csv_err)?;
    let seed = seed.to_string();
    for row in &table.rows {
        w.write_record(std::iter::once(seed.as_str()).chain(row.iter().map(String::as_str))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Experiment(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Experiment(e.to_string()))
}

pub struct Artifacts {
    pub report: Value,
    pub csv: String,
    pub misses: usize,
}

pub fn write(dir: &Path, art: &Artifacts, metadata: &Value) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let put = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))
    };
    put("report.json", serde_json::to_string_pretty(&art.report).expect("json value") + "\n")?;
    put("report.csv", art.csv.clone())?;
    put("metadata.json", serde_json::to_string_pretty(metadata).expect("json value") + "\n")
}

// ---------------------------------------------------------------------------
// memoized results under SHADOWLAB_CACHE

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    report: Value,
    csv: String,
    misses: usize,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Cache { dir }
    }

    pub fn key(plan: &Plan) -> String {
        let doc = json!({
            "experiment": plan.experiment,
            "system": serde_json::to_value(&plan.system).unwrap_or(Value::Null),
            "params": plan.raw_params,
            "seed": plan.seed,
            "version": VERSION,
        });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<Artifacts> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let e: CacheEntry = serde_json::from_str(&text).ok()?;
        Some(Artifacts { report: e.report, csv: e.csv, misses: e.misses })
    }

    pub fn put(&self, key: &str, art: &Artifacts) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let entry = CacheEntry { report: art.report.clone(), csv: art.csv.clone(), misses: art.misses };
        let path = self.path(key);
        fs::write(&path, serde_json::to_string(&entry).expect("json value")).map_err(io(&path))
    }
}
