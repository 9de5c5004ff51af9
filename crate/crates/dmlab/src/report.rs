//! JSON run reports and their determinism hash.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Keys left out of the determinism hash.
pub const VOLATILE_KEYS: [&str; 3] = ["timings", "environment", "determinism_hash"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One numeric claim together with the bound it was tested against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            passed: value >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub dmlab: &'static str,
    pub dmlab_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            dmlab: env!("CARGO_PKG_VERSION"),
            dmlab_core: dmlab_core::VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub out_dir: String,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub versions: Versions,
    pub config: RunConfig,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    /// Set when a stage stopped the run early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub environment: Environment,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub determinism_hash: String,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, environment: Environment) -> Self {
        Self {
            command: command.to_string(),
            seed: config.seed,
            versions: Versions::default(),
            config: config.clone(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            error: None,
            environment,
            timings: BTreeMap::new(),
            determinism_hash: String::new(),
        }
    }

    pub fn insert<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), CliError> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Hashes the report and stores the hex digest in `determinism_hash`.
    pub fn seal(&mut self) -> Result<&str, CliError> {
        self.determinism_hash = determinism_hash(&serde_json::to_value(&*self)?)?;
        Ok(&self.determinism_hash)
    }
}

/// SHA-256 of the compact JSON text of `report` with the
/// [`VOLATILE_KEYS`] removed at the top level. Object keys serialize in
/// sorted order, so the text is canonical.
pub fn determinism_hash(report: &Value) -> Result<String, CliError> {
    let mut v = report.clone();
    if let Value::Object(map) = &mut v {
        for k in VOLATILE_KEYS {
            map.remove(k);
        }
    }
    let bytes = serde_json::to_vec(&v)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> RunReport {
        let env = Environment {
            out_dir: "a".into(),
            threads: 1,
        };
        let mut r = RunReport::new("solve", &RunConfig::default(), env);
        r.insert("x", &1.5).unwrap();
        r.checks.push(Check::at_most("gap", 1e-9, 1e-8));
        r
    }

    #[test]
    fn hash_ignores_volatile_fields() {
        let mut a = report();
        let mut b = report();
        b.timings.insert("solve".into(), 3.0);
        b.environment.out_dir = "elsewhere".into();
        b.environment.threads = 8;
        assert_eq!(a.seal().unwrap().to_string(), b.seal().unwrap().to_string());
        let mut c = report();
        c.seed = 2;
        assert_ne!(a.determinism_hash, c.seal().unwrap());
    }

    #[test]
    fn hash_sees_results() {
        let mut a = report();
        let mut b = report();
        b.insert("x", &1.5000000000000002).unwrap();
        assert_ne!(a.seal().unwrap().to_string(), b.seal().unwrap().to_string());
        assert_eq!(a.determinism_hash.len(), 64);
    }

    #[test]
    fn checks_record_their_bounds() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_least("b", 0.5, 0.8).passed);
        assert!(!Check::holds("c", false).passed);
        let r = report();
        assert!(r.failed_checks().is_empty());
    }
}
