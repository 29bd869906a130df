use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::failure::Failure;

/// Key=value record written next to every run's outputs.
///
/// `arg` lines hold the original command line, one argument per line, so
/// `replay` can re-run it.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        let mut m = Manifest::default();
        m.set("command", command);
        m.set("version", se2ot::VERSION);
        for a in args {
            m.set("arg", a);
        }
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let text: String = self
            .entries
            .iter()
            .map(|(k, v)| format!("{k}={}\n", v.replace('\n', " ")))
            .collect();
        fs::write(path, text).map_err(|e| Failure::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut m = Manifest::default();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Io(format!("{}: malformed manifest line {line:?}", path.display())))?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }

    pub fn args(&self) -> Vec<String> {
        self.values("arg").map(str::to_string).collect()
    }

    pub fn values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// `<path>.manifest`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}
