//! Flat `key = value` configuration files.
//!
//! Keys are consumed as a command reads them; whatever is left over at the
//! end is reported as unknown.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<mami_core::Error> for ConfigError {
    fn from(e: mami_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl KvConfig {
    /// Parses `text`. Blank lines and lines starting with `#` are skipped;
    /// a key may appear only once.
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line).ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            if entries.insert(k.clone(), v).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Ok(KvConfig {
            entries,
            base_dir: PathBuf::new(),
        })
    }

    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Applies a `--set key=value` override.
    pub fn set(&mut self, pair: &str) -> ConfigResult<()> {
        let (k, v) = split_pair(pair).ok_or_else(|| ConfigError(format!("override {pair:?} is not key=value")))?;
        self.entries.insert(k, v);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| ConfigError(format!("{key} = {v:?}: {e}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> ConfigResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> ConfigResult<T>
    where
        T::Err: fmt::Display,
    {
        self.take(key)?.ok_or_else(|| ConfigError(format!("missing required key {key:?}")))
    }

    /// Comma-separated list, or `start:stop:step` for an inclusive range.
    pub fn take_list(&mut self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let Some(v) = self.entries.remove(key) else {
            return Ok(None);
        };
        parse_list(&v).map(Some).map_err(|e| ConfigError(format!("{key} = {v:?}: {e}")))
    }

    pub fn take_path(&mut self, key: &str) -> Option<PathBuf> {
        self.entries.remove(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                self.base_dir.join(p)
            } else {
                p
            }
        })
    }

    /// Fails if any key was never read.
    pub fn finish(self) -> ConfigResult<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(ConfigError(format!("unknown key(s): {}", keys.join(", "))))
        }
    }
}

fn split_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || !(stop >= start) {
            return Err("range needs start <= stop and a positive step".into());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // multiply rather than accumulate so grid points stay exact
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    if v.trim().is_empty() {
        return Err("empty list".into());
    }
    v.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_leftovers() {
        let mut c = KvConfig::parse("# hello\n\nm = 100\nk=12\n bogus = 1 \n").unwrap();
        assert_eq!(c.require::<usize>("m").unwrap(), 100);
        assert_eq!(c.take_or::<usize>("k", 1).unwrap(), 12);
        let err = c.finish().unwrap_err();
        assert!(err.0.contains("bogus"));
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(KvConfig::parse("a=1\na=2").is_err());
        assert!(KvConfig::parse("just words").is_err());
        assert!(KvConfig::parse("=3").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut c = KvConfig::parse("m=4").unwrap();
        c.set("m=8").unwrap();
        assert_eq!(c.require::<usize>("m").unwrap(), 8);
        assert!(c.set("nothing").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1, 2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_list("-4:4:2").unwrap(), vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(parse_list("0:1:0.1").unwrap().len(), 11);
        assert!(parse_list("0:1:0").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn bad_values_name_the_key() {
        let mut c = KvConfig::parse("m=lots").unwrap();
        assert!(c.require::<usize>("m").unwrap_err().0.contains("m = \"lots\""));
        assert!(c.require::<usize>("k").unwrap_err().0.contains("missing"));
    }
}
