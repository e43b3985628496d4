//! Stage configuration: defaults, then an optional JSON file merged over
//! them, then `key.path=value` overrides.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn load<T: Serialize + DeserializeOwned + Default>(file: Option<&Path>, overrides: &[String]) -> Result<T, CliError> {
    let mut v = serde_json::to_value(T::default()).expect("defaults serialize");
    if let Some(p) = file {
        if !p.exists() {
            return Err(CliError::MissingInput(p.to_path_buf()));
        }
        let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        let patch: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        merge(&mut v, patch);
    }
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {o:?} is not KEY=VALUE")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut v, key, value)?;
    }
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, pv) in p {
                match b.get_mut(&k) {
                    Some(bv) => merge(bv, pv),
                    None => {
                        b.insert(k, pv);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn set_path(v: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{key}: {} is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Config(format!("empty override key in {key:?}")))
}

/// First 16 hex digits of SHA-256 over the compact JSON form with sorted keys.
pub fn hash<T: Serialize>(cfg: &T) -> String {
    let v = serde_json::to_value(cfg).expect("config serializes");
    let bytes = serde_json::to_vec(&v).expect("value serializes");
    Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}
