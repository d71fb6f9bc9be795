//! Flag and config-file resolution.
//!
//! A config file is a flat JSON object whose keys are the long flag names
//! (`"seed"`, `"format"`, `"n-bar"`, ...). Flags given on the command line
//! win over the file; unknown keys are rejected.

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Global {
    /// Seed for every random stream.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo size (realizations or draws, per subcommand).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// JSON file with defaults for any flag.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "samples", "out", "format"];

pub fn read_config(path: &Path) -> Result<Map<String, Value>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    match serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))? {
        Value::Object(m) => Ok(m),
        _ => Err(format!("{}: expected a JSON object", path.display())),
    }
}

/// Split a config map into the global part and the subcommand part.
pub fn split_globals(mut file: Map<String, Value>) -> (Map<String, Value>, Map<String, Value>) {
    let mut globals = Map::new();
    for key in GLOBAL_KEYS {
        if let Some(v) = file.remove(key) {
            globals.insert(key.to_string(), v);
        }
    }
    (globals, file)
}

/// Overlay the flags that were given onto the file values.
pub fn resolve<T: Serialize + DeserializeOwned>(file: Map<String, Value>, flags: &T) -> Result<T, String> {
    let mut merged = file;
    if let Value::Object(given) = serde_json::to_value(flags).map_err(|e| e.to_string())? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| format!("invalid config: {e}"))
}
