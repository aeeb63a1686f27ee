//! Flat key/value experiment configuration.
//!
//! One experiment per file. The native format is a plain text file of
//! `key = value` lines (`#` starts a comment); a flat JSON object with the
//! same keys is accepted interchangeably, and a previously written report
//! can be fed back directly (its `config` echo section is used). Every key
//! an experiment does not consume is rejected by name, and every value the
//! experiment resolves, defaults included, lands in the echo map so that a
//! report reproduces its run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thermoclock_core::{Error, Result};

#[derive(Debug)]
pub struct Config {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    echo: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn from_map(map: BTreeMap<String, String>) -> Self {
        Config { map, used: RefCell::new(BTreeSet::new()), echo: RefCell::new(BTreeMap::new()) }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
        })?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_text(&text)
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidParameter(format!(
                    "config line {} is not `key = value`: {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate config key `{key}`")));
            }
        }
        Ok(Self::from_map(map))
    }

    /// Accepts either a flat JSON object or a full run report, in which
    /// case the report's `config` echo section is the configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config is not valid JSON: {e}")))?;
        let object = match &value {
            serde_json::Value::Object(o) if o.contains_key("records") => match o.get("config") {
                Some(serde_json::Value::Object(echo)) => echo,
                _ => {
                    return Err(Error::InvalidParameter(
                        "report is missing its `config` echo section".into(),
                    ))
                }
            },
            serde_json::Value::Object(o) => o,
            _ => {
                return Err(Error::InvalidParameter(
                    "JSON config must be an object of key/value pairs".into(),
                ))
            }
        };
        let mut map = BTreeMap::new();
        for (key, v) in object {
            let rendered = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "config key `{key}` must be a scalar, got {other}"
                    )))
                }
            };
            map.insert(key.clone(), rendered);
        }
        Ok(Self::from_map(map))
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let found = self.map.get(key).map(String::as_str);
        if found.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        found
    }

    fn record(&self, key: &str, value: impl ToString) {
        self.echo.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn require_str(&self, key: &str) -> Result<String> {
        match self.raw(key) {
            Some(v) => {
                self.record(key, v);
                Ok(v.to_string())
            }
            None => Err(Error::InvalidParameter(format!("missing required config key `{key}`"))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or(default).to_string();
        self.record(key, &v);
        v
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, v: &str, kind: &str) -> Result<T> {
        v.parse().map_err(|_| {
            Error::InvalidParameter(format!("config key `{key}` must be {kind}, got {v:?}"))
        })
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let v = self.require_str(key)?;
        self.parse(key, &v, "a number")
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                self.parse(key, &v, "a number")
            }
            None => {
                self.record(key, default);
                Ok(default)
            }
        }
    }

    pub fn require_u32(&self, key: &str) -> Result<u32> {
        let v = self.require_str(key)?;
        self.parse(key, &v, "a nonnegative integer")
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                self.parse(key, &v, "a nonnegative integer")
            }
            None => {
                self.record(key, default);
                Ok(default)
            }
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                self.parse(key, &v, "a nonnegative integer")
            }
            None => {
                self.record(key, default);
                Ok(default)
            }
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                self.parse(key, &v, "true or false")
            }
            None => {
                self.record(key, default);
                Ok(default)
            }
        }
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                Ok(Some(self.parse(key, &v, "a nonnegative integer")?))
            }
            None => Ok(None),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            Some(v) => {
                let v = v.to_string();
                self.record(key, &v);
                Ok(Some(self.parse(key, &v, "a number")?))
            }
            None => Ok(None),
        }
    }

    /// The output directory is environment plumbing, not part of the
    /// experiment: it is consumed without entering the echo.
    pub fn out_dir(&self) -> Option<String> {
        self.raw("out").map(str::to_string)
    }

    /// Rejects any key that no consumer asked about.
    pub fn reject_unknown(&self, experiment: &str) -> Result<()> {
        let used = self.used.borrow();
        for key in self.map.keys() {
            if !used.contains(key) {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key `{key}` for experiment {experiment}"
                )));
            }
        }
        Ok(())
    }

    /// Every resolved key/value pair, defaults included.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.echo.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_forms_parse_identically() {
        let text = Config::from_text("experiment = chain\nseed = 7 # trailing comment\n").unwrap();
        let json = Config::from_json(r#"{"experiment": "chain", "seed": 7}"#).unwrap();
        assert_eq!(text.require_str("experiment").unwrap(), "chain");
        assert_eq!(json.require_str("experiment").unwrap(), "chain");
        assert_eq!(text.u64_or("seed", 0).unwrap(), 7);
        assert_eq!(json.u64_or("seed", 0).unwrap(), 7);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let cfg = Config::from_text("experiment = chain\nbogus = 1\n").unwrap();
        cfg.require_str("experiment").unwrap();
        let err = cfg.reject_unknown("chain").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn defaults_land_in_the_echo() {
        let cfg = Config::from_text("experiment = chain\n").unwrap();
        assert_eq!(cfg.f64_or("dt_fraction", 0.01).unwrap(), 0.01);
        assert_eq!(cfg.echo().get("dt_fraction").unwrap(), "0.01");
    }

    #[test]
    fn report_files_fall_back_to_their_echo_section() {
        let report = r#"{"records": [], "config": {"experiment": "chain", "seed": "3"}}"#;
        let cfg = Config::from_json(report).unwrap();
        assert_eq!(cfg.require_str("experiment").unwrap(), "chain");
        assert_eq!(cfg.u64_or("seed", 0).unwrap(), 3);
    }

    #[test]
    fn malformed_lines_and_duplicates_are_rejected() {
        assert!(Config::from_text("just words\n").is_err());
        assert!(Config::from_text("a = 1\na = 2\n").is_err());
        assert!(Config::from_json("[1, 2]").is_err());
    }
}
