//! Merges flags with an optional TOML config file.
//!
//! Keys may sit at the top level of the file or under a table named after the
//! subcommand (which wins). Flags override both. Every key looked up is
//! recorded, so the resolved configuration can be echoed into the report.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Default)]
pub struct Resolver {
    file: toml::Table,
    section: Option<toml::Table>,
    resolved: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut file: toml::Table =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let section = match file.remove(command) {
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => bail!("config key `{command}` must be a table"),
            None => None,
        };
        Ok(Self { file, section, resolved: BTreeMap::new() })
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        let kebab = key.replace('_', "-");
        let found = [self.section.as_ref(), Some(&self.file)]
            .into_iter()
            .flatten()
            .find_map(|t| t.get(key).or_else(|| t.get(&kebab)));
        match found {
            None => Ok(None),
            Some(v) => {
                v.clone().try_into().map(Some).with_context(|| format!("config value for `{key}` has the wrong type"))
            }
        }
    }

    /// Flag, else config value, else `None`.
    pub fn opt<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup(key)?,
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn or<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => self.lookup(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn req<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => bail!("missing required --{}", key.replace('_', "-")),
        }
    }

    /// Boolean switch: set by the flag or by `key = true` in the file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let v = flag || self.lookup(key)?.unwrap_or(false);
        self.record(key, &v);
        Ok(v)
    }

    pub fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        let v = serde_json::to_value(v).expect("config values serialize");
        self.resolved.insert(key.to_owned(), v);
    }

    pub fn into_resolved(self) -> BTreeMap<String, Value> {
        self.resolved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolver(text: &str, command: &str) -> Resolver {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        Resolver::load(Some(&path), command).unwrap()
    }

    #[test]
    fn precedence() {
        let mut r = resolver("gamma = 0.5\nseed = 3\n[laplace]\ngamma = 0.7\n", "laplace");
        assert_eq!(r.req::<f64>("gamma", None).unwrap(), 0.7);
        assert_eq!(r.req::<u64>("seed", None).unwrap(), 3);
        assert_eq!(r.req("seed", Some(9u64)).unwrap(), 9);
        assert_eq!(r.or("replicas", None, 10usize).unwrap(), 10);
        assert!(r.req::<f64>("d", None).is_err());
        let out = r.into_resolved();
        assert_eq!(out["seed"], Value::from(9));
        assert_eq!(out["d"], Value::Null);
    }

    #[test]
    fn kebab_keys_and_types() {
        let mut r = resolver("gamma-prime = 0.8\nt = [1.0, 2.0]\nl2 = true\n", "x");
        assert_eq!(r.req::<f64>("gamma_prime", None).unwrap(), 0.8);
        assert_eq!(r.req::<Vec<f64>>("t", None).unwrap(), vec![1.0, 2.0]);
        assert!(r.switch("l2", false).unwrap());
        assert!(r.req::<u64>("gamma_prime", None).is_err());
    }
}
