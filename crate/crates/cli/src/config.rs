//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::str::FromStr;

use blowup_core::LabError;

/// Parsed configuration; remembers which keys were read so unknown keys can be reported.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

fn err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(err(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), v.trim().to_string()).is_some() {
                return Err(err(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Config { entries, used: Default::default() })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn string(&self, key: &str) -> Result<String, LabError> {
        self.raw(key)
            .map(str::to_string)
            .ok_or_else(|| err(format!("missing key `{key}`")))
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, LabError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| err(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, LabError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, LabError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) if v.trim().is_empty() => Ok(Some(Vec::new())),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse()
                        .map_err(|_| err(format!("key `{key}`: cannot parse list item `{item}`")))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Keys present in the file but never read.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let c = Config::parse("# header\nname = demo # trailing\n\nxs = 1, 2.5 ,3\n").unwrap();
        assert_eq!(c.string("name").unwrap(), "demo");
        assert_eq!(c.list::<f64>("xs").unwrap().unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(c.get::<f64>("missing").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("just words").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        assert!(Config::parse("= 3").is_err());
        let c = Config::parse("n = abc").unwrap();
        assert!(c.get::<usize>("n").is_err());
    }

    #[test]
    fn tracks_unused_keys() {
        let c = Config::parse("a = 1\nb = 2").unwrap();
        let _ = c.raw("a");
        assert_eq!(c.unused(), vec!["b".to_string()]);
    }
}
