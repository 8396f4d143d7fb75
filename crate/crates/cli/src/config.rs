//! `--config` handling: `key = value` lines become flags unless the same
//! flag is already on the command line.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Parses `key = value` lines. `#` starts a comment; keys may use `_` or
/// `-`; values may be quoted.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        let mut val = v.trim();
        if val.len() >= 2 && (val.starts_with('"') && val.ends_with('"') || val.starts_with('\'') && val.ends_with('\'')) {
            val = &val[1..val.len() - 1];
        }
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, val.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&format!("{flag}="))
    })
}

/// Appends config entries to `args` for every flag not given explicitly.
/// `true`/`false` values toggle boolean switches.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::data("io-error", format!("cannot read config {path}: {e}")))?;
    let mut out = args.clone();
    for (key, val) in parse_config(&text)? {
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        match val.as_str() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={val}").into()),
        }
    }
    Ok(out)
}
