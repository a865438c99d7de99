//! `--config` handling: INI sections or a metadata JSON sidecar, turned into
//! flag tokens that are spliced in ahead of the command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::CommandFactory;
use ini::Ini;

use super::Cli;
use crate::error::{Error, Result};

pub const SUBCOMMANDS: [&str; 4] = ["run", "sweep", "cluster", "check"];

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Finds `--config PATH` or `--config=PATH` without a full parse.
pub fn find_config(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Key/value pairs for `subcommand` from an INI file (section named after the
/// subcommand) or a metadata JSON (its `args` object).
pub fn read_config(path: &Path, subcommand: &str) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
        if let Some(sub) = v.get("subcommand").and_then(|s| s.as_str()) {
            if sub != subcommand {
                return Err(parse_err(
                    path,
                    format!("metadata is for `{sub}`, not `{subcommand}`"),
                ));
            }
        }
        let args = v
            .get("args")
            .and_then(|a| a.as_object())
            .ok_or_else(|| parse_err(path, "missing `args` object"))?;
        return args
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => Ok((k.clone(), s.clone())),
                other => Ok((k.clone(), json_to_flag_value(other))),
            })
            .collect();
    }
    let ini = Ini::load_from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let mut out = BTreeMap::new();
    if let Some(sec) = ini.section(Some(subcommand)) {
        for (k, v) in sec.iter() {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(out)
}

/// Renders a JSON value the way the matching flag expects it.
pub fn json_to_flag_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::Bool(b) => b.to_string(),
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(a) => a
            .iter()
            .map(json_to_flag_value)
            .collect::<Vec<_>>()
            .join(","),
        serde_json::Value::Object(_) => v.to_string(),
    }
}

/// Flattens a serialized argument struct into the string map echoed to
/// metadata. `None` fields are dropped.
pub fn echo_args<T: serde::Serialize>(args: &T) -> Result<BTreeMap<String, String>> {
    let v = serde_json::to_value(args)?;
    let mut out = BTreeMap::new();
    if let serde_json::Value::Object(map) = v {
        for (k, v) in map {
            if !v.is_null() {
                out.insert(k, json_to_flag_value(&v));
            }
        }
    }
    Ok(out)
}

/// Turns config entries into argv tokens for `subcommand`.
///
/// Boolean switches become a bare `--key` when true and are dropped when
/// false. Unknown keys are rejected.
fn config_tokens(
    path: &Path,
    subcommand: &str,
    entries: &BTreeMap<String, String>,
) -> Result<Vec<String>> {
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| parse_err(path, format!("unknown subcommand {subcommand}")))?;
    let mut tokens = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| parse_err(path, format!("unknown key {key:?} for `{subcommand}`")))?;
        if arg.is_positional() {
            tokens.extend(value.split(',').map(str::to_string));
        } else if arg.get_action().takes_values() {
            tokens.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => tokens.push(format!("--{key}")),
                "false" | "0" | "no" | "" => {}
                _ => return Err(parse_err(path, format!("{key} expects true or false"))),
            }
        }
    }
    Ok(tokens)
}

fn flag_name(tok: &str) -> Option<&str> {
    let name = tok.strip_prefix("--")?;
    Some(name.split('=').next().unwrap_or(name))
}

/// Splices config-file tokens in right after the subcommand so that later
/// command-line flags override them.
pub fn merge_argv(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = find_config(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = argv
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|p| p + 1)
    else {
        return Ok(argv);
    };
    let entries = read_config(&path, &argv[pos])?;
    let user_flags: Vec<&str> = argv[pos + 1..]
        .iter()
        .filter_map(|t| flag_name(t))
        .collect();
    for k in entries.keys() {
        if user_flags.contains(&k.as_str()) {
            log::info!(
                "--{k} given on the command line overrides {}",
                path.display()
            );
        }
    }
    let mut entries = entries;
    // A positional list from the command line replaces the configured one.
    if entries.contains_key("suites") && argv[pos + 1..].iter().any(|t| !t.starts_with('-')) {
        entries.remove("suites");
    }
    entries.remove("config");
    let tokens = config_tokens(&path, &argv[pos], &entries)?;
    let mut merged = argv[..=pos].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(merged)
}
