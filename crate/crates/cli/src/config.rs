use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

/// Fully resolved run parameters, echoed as `key=value` lines.
///
/// `command` holds the subcommand; every other key is one of its long flags
/// (`true`/`false` for switches), so a config file replays the run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        let mut c = Self::default();
        c.set("command", command);
        c
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn command(&self) -> Option<&str> {
        self.get("command")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(c) = self.command() {
            out.push_str(&format!("command={c}\n"));
        }
        for (k, v) in self.entries.iter().filter(|(k, _)| *k != "command") {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::schema(path, i as u64 + 1, format!("expected key=value, got `{line}`"))
            })?;
            c.set(k.trim(), v.trim());
        }
        if c.command().is_none() {
            return Err(CliError::schema(path, 1, "config has no `command` entry"));
        }
        Ok(c)
    }

    /// Command line equivalent: `[command, --key, value, --switch, …]`.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec![self.command().unwrap_or_default().to_string()];
        for (k, v) in self.entries.iter().filter(|(k, _)| *k != "command") {
            match v.as_str() {
                "true" => args.push(format!("--{k}")),
                "false" => {}
                _ => {
                    args.push(format!("--{k}"));
                    args.push(v.clone());
                }
            }
        }
        args
    }
}
