//! Layered configuration: built-in defaults, then the JSON config file, then
//! command-line flags.
//!
//! Config keys are the long flag names (`t-end`, `x-min`, ...). A run
//! manifest is also accepted as a config file: its `config` object is used
//! when its `command` matches.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys of a config file for `command`, after unwrapping a manifest.
pub fn load_file(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Config(format!("{} must hold a JSON object", path.display())));
    };
    if let (Some(Value::String(cmd)), Some(Value::Object(_))) = (map.get("command"), map.get("config")) {
        if cmd != command {
            return Err(CliError::Config(format!(
                "manifest {} belongs to `{cmd}`, not `{command}`",
                path.display()
            )));
        }
        let Some(Value::Object(inner)) = map.remove("config") else {
            unreachable!("checked above")
        };
        return Ok(inner);
    }
    Ok(map)
}

/// Merges `defaults < file < flags` and returns the resolved arguments and
/// the resolved configuration as echoed in manifests.
pub fn resolve<T: Serialize + DeserializeOwned>(
    defaults: Value,
    file: Option<&Map<String, Value>>,
    flags: &T,
) -> Result<(T, Map<String, Value>), CliError> {
    let Value::Object(flag_map) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?
    else {
        unreachable!("argument structs serialize to objects")
    };
    let Value::Object(mut merged) = defaults else {
        unreachable!("defaults are objects")
    };
    if let Some(file) = file {
        let mut unknown: Vec<&str> = file
            .keys()
            .filter(|k| !flag_map.contains_key(k.as_str()))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            unknown.sort_unstable();
            let mut known: Vec<&str> = flag_map.keys().map(String::as_str).collect();
            known.sort_unstable();
            return Err(CliError::Config(format!(
                "unknown config keys: {} (known: {})",
                unknown.join(", "),
                known.join(", ")
            )));
        }
        for (k, v) in file {
            if !v.is_null() {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    for (k, v) in flag_map {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let args = serde_json::from_value(Value::Object(merged.clone()))
        .map_err(|e| CliError::Config(format!("bad config value: {e}")))?;
    Ok((args, merged))
}

/// A value every resolved configuration must carry.
pub fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("missing required setting `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, Default, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case")]
    struct Demo {
        tau: Option<f64>,
        t_end: Option<f64>,
        name: Option<String>,
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = json!({"tau": 0.2, "t-end": 3.0});
        let flags = Demo {
            tau: Some(0.1),
            ..Demo::default()
        };
        let (d, merged) = resolve(
            json!({"tau": 1.0, "t-end": 1.0, "name": "x"}),
            file.as_object(),
            &flags,
        )
        .unwrap();
        assert_eq!(d.tau, Some(0.1));
        assert_eq!(d.t_end, Some(3.0));
        assert_eq!(d.name.as_deref(), Some("x"));
        assert_eq!(merged["tau"], json!(0.1));
    }

    #[test]
    fn unknown_keys_are_listed() {
        let file = json!({"tua": 0.2, "t_end": 3.0});
        let err = resolve(json!({}), file.as_object(), &Demo::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t_end, tua"), "{msg}");
    }

    #[test]
    fn wrong_types_are_rejected() {
        let file = json!({"tau": "fast"});
        assert!(resolve(json!({}), file.as_object(), &Demo::default()).is_err());
    }
}
