//! Flat key-value config files, exit-code mapping and provenance headers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

/// Exit code for invalid inputs and failed domain checks.
pub const EXIT_DOMAIN: u8 = 1;
/// Exit code for usage mistakes and unreadable or malformed files.
pub const EXIT_USAGE: u8 = 2;

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::MissingInput(_) | Error::Schema(_) | Error::Json(_) | Error::Csv(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

/// Values from an optional TOML file of top-level `key = value` pairs.
#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: toml::Table,
}

impl ConfigFile {
    /// Loads `path`, rejecting nested tables and keys outside `allowed`.
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::from(Error::io(path, e)))?;
        let values: toml::Table = text
            .parse()
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        for (k, v) in &values {
            if !allowed.contains(&k.as_str()) {
                return Err(Failure::usage(format!(
                    "{}: unknown key `{k}` (allowed: {})",
                    path.display(),
                    allowed.join(", ")
                )));
            }
            let nested = match v {
                toml::Value::Table(_) => true,
                toml::Value::Array(a) => a.iter().any(|x| matches!(x, toml::Value::Table(_) | toml::Value::Array(_))),
                _ => false,
            };
            if nested {
                return Err(Failure::usage(format!("{}: key `{k}` must be a flat value", path.display())));
            }
        }
        Ok(ConfigFile {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> CmdResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.clone().try_into().map(Some).map_err(|e| {
                let file = self.path.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
                Failure::usage(format!("{file}: bad value for `{key}`: {e}"))
            }),
        }
    }

    /// Flag, then file, then `default`.
    pub fn resolve<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> CmdResult<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    /// Flag, then file; error when neither supplies `key`.
    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, flag_name: &str) -> CmdResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => self
                .get(key)?
                .ok_or_else(|| Failure::usage(format!("{flag_name} is required (or set `{key}` in --config)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Tool version, fully resolved configuration and input digests. Output
/// paths and worker counts are left out so reruns compare byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, InputDigest>,
}

impl Provenance {
    pub fn new(command: &'static str) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
        }
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) -> CmdResult {
        self.config = serde_json::to_value(config).map_err(|e| Failure::from(Error::from(e)))?;
        Ok(())
    }

    /// Reads an input file and records its digest under `role`.
    pub fn read(&mut self, role: impl Into<String>, path: &Path) -> CmdResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Failure::from(Error::io(path, e)))?;
        self.inputs.insert(
            role.into(),
            InputDigest {
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
        Ok(bytes)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }

    /// One `#` comment line for the top of a CSV file.
    pub fn csv_header(&self) -> Vec<u8> {
        let mut line = b"# provenance: ".to_vec();
        line.extend(serde_json::to_vec(self).expect("provenance serializes"));
        line.push(b'\n');
        line
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::io(dir, e)))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::from(Error::io(path, e)))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> CmdResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Failure::from(Error::from(e)))?;
    out.push(b'\n');
    Ok(out)
}
