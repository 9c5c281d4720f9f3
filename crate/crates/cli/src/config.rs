//! Flag/config-file/environment merge.
//!
//! Precedence per key: a flag given on the command line, then (for `out`
//! only) `SIGHTWALK_OUT_DIR`, then the subcommand's table in the config
//! file, then the flag default.

use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const OUT_DIR_ENV: &str = "SIGHTWALK_OUT_DIR";

/// A problem with how the command was invoked; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Reads the config file and returns the table for `section`, if any.
pub fn load_section(path: &Path, section: &str) -> anyhow::Result<Option<toml::Table>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    match doc.remove(section) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(usage(format!("--config {}: `{section}` must be a table", path.display()))),
    }
}

fn given_on_command_line(m: &ArgMatches, key: &str) -> bool {
    let id = key.replace('-', "_");
    m.try_get_raw(&id).is_ok() && m.value_source(&id) == Some(ValueSource::CommandLine)
}

/// Merges the parsed flags with the config table and the out-dir variable.
pub fn resolve<T: Serialize + DeserializeOwned>(
    parsed: &T,
    matches: &ArgMatches,
    section_name: &str,
    section: Option<&toml::Table>,
    out_env: Option<&str>,
) -> anyhow::Result<T> {
    let Value::Object(mut merged) = serde_json::to_value(parsed)? else {
        unreachable!("argument structs serialize to maps");
    };
    if let Some(table) = section {
        for (key, value) in table {
            if !merged.contains_key(key) {
                return Err(usage(format!("unknown key `{key}` in [{section_name}]")));
            }
            if !given_on_command_line(matches, key) {
                merged.insert(key.clone(), serde_json::to_value(value)?);
            }
        }
    }
    if let Some(dir) = out_env {
        if merged.contains_key("out") && !given_on_command_line(matches, "out") {
            merged.insert("out".into(), Value::String(dir.into()));
        }
    }
    from_map(merged, section_name)
}

fn from_map<T: DeserializeOwned>(map: Map<String, Value>, section_name: &str) -> anyhow::Result<T> {
    serde_json::from_value(Value::Object(map)).map_err(|e| usage(format!("[{section_name}]: {e}")))
}

/// The resolved settings as a config file that reproduces the run.
pub fn banner<T: Serialize>(section_name: &str, resolved: &T) -> anyhow::Result<String> {
    let mut doc = toml::Table::new();
    doc.insert(section_name.into(), toml::Value::try_from(resolved)?);
    Ok(format!("# resolved config\n{}", toml::to_string(&doc)?))
}
