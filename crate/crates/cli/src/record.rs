use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::run::{Assertion, RunError, Table};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: String,
    pub kind: String,
    pub seed: Option<u64>,
    /// Effective configuration after command-line overrides, as TOML.
    pub config: String,
    pub instances: Vec<Value>,
    pub summary: Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub wall_clock_ms: u128,
}

/// Hash of the effective configuration. The output directory is left out,
/// so moving results around does not change it.
pub fn config_hash(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.output.dir = None;
    let text = toml::to_string(&c).expect("config serializes");
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

impl RunRecord {
    /// Everything that must be identical between two runs of one config.
    pub fn reproducible_part(&self) -> Value {
        let mut v = serde_json::json!({
            "config_hash": self.config_hash,
            "instances": self.instances,
            "summary": self.summary,
            "assertions": self.assertions,
        });
        strip_timing(&mut v);
        v
    }
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| k != "runtime_ms" && k != "wall_clock_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub fn write(dir: &Path, record: &RunRecord, tables: &[Table]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let json = serde_json::to_string_pretty(record).expect("record serializes");
    fs::write(dir.join("results.json"), json).map_err(io)?;
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        w.write_record(&t.header).map_err(|e| RunError::Io(e.to_string()))?;
        for row in &t.rows {
            w.write_record(row).map_err(|e| RunError::Io(e.to_string()))?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}
