//! JSON run configs with `--key value` overrides of top-level scalars.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Splits `--key value` pairs. Every flag needs a value.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .filter(|k| !k.is_empty())
            .ok_or_else(|| CliError::Config(format!("expected `--key value`, found `{flag}`")))?;
        let value = it
            .next()
            .ok_or_else(|| CliError::Config(format!("flag --{key} has no value")))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}

/// Reads `path` as a JSON object, applies `overrides` and deserializes it
/// strictly into `T`. The `extra` keys are removed from the document first
/// and returned separately so drivers can carry artifact settings such as
/// the output directory alongside a library config.
pub fn load<T>(
    path: &Path,
    overrides: &[(String, String)],
    extra: &[&str],
) -> Result<(T, Map<String, Value>), CliError>
where
    T: DeserializeOwned + Serialize + Default,
{
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut doc) = doc else {
        return Err(CliError::Config(format!(
            "{}: top level must be an object",
            path.display()
        )));
    };
    let Value::Object(defaults) = serde_json::to_value(T::default()).expect("defaults serialize")
    else {
        unreachable!("configs serialize to objects");
    };
    for (key, raw) in overrides {
        let current = doc.get(key).or_else(|| defaults.get(key));
        let is_extra = extra.contains(&key.as_str());
        match current {
            Some(Value::Object(_) | Value::Array(_)) => {
                return Err(CliError::Config(format!("--{key} is not a scalar setting")));
            }
            None if !is_extra => return Err(CliError::Config(format!("unknown setting --{key}"))),
            _ => {}
        }
        // numbers and booleans parse as JSON, anything else is a string
        let value = serde_json::from_str::<Value>(raw)
            .ok()
            .filter(|v| !v.is_object() && !v.is_array())
            .unwrap_or_else(|| Value::String(raw.clone()));
        doc.insert(key.clone(), value);
    }
    let mut pulled = Map::new();
    for key in extra {
        if let Some(v) = doc.remove(*key) {
            pulled.insert((*key).to_string(), v);
        }
    }
    let config = serde_json::from_value(Value::Object(doc))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((config, pulled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lipad::eval::TabularConfig;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn overrides_replace_scalars() {
        let f = write(r#"{"n_samples": 100}"#);
        let o = parse_overrides(&[
            "--n_samples".into(),
            "250".into(),
            "--out_dir".into(),
            "x".into(),
        ])
        .unwrap();
        let (cfg, extra): (TabularConfig, _) = load(f.path(), &o, &["out_dir"]).unwrap();
        assert_eq!(cfg.n_samples, 250);
        assert_eq!(extra["out_dir"], Value::String("x".into()));
    }

    #[test]
    fn unknown_and_structured_keys_are_rejected() {
        let f = write(r#"{"n_samples": 100}"#);
        let bad = |args: &[&str]| {
            let o =
                parse_overrides(&args.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap();
            load::<TabularConfig>(f.path(), &o, &[]).is_err()
        };
        assert!(bad(&["--nope", "1"]));
        assert!(bad(&["--gammas", "0.1"]));
        assert!(load::<TabularConfig>(write(r#"{"bogus": 1}"#).path(), &[], &[]).is_err());
        assert!(parse_overrides(&["--n_samples".into()]).is_err());
        assert!(parse_overrides(&["n_samples".into(), "1".into()]).is_err());
    }
}
