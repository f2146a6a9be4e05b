//! Provenance header written as the first line of every data file.

use std::fmt::{Display, Write as _};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pairs: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata::default()
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string().replace(char::is_whitespace, "_");
        match self.pairs.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.pairs.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `# key=value key=value\n`
    pub fn line(&self) -> String {
        let mut s = String::from("#");
        for (k, v) in &self.pairs {
            let _ = write!(s, " {k}={v}");
        }
        s.push('\n');
        s
    }

    /// Parses a line produced by [`Metadata::line`].
    pub fn parse(line: &str) -> Option<Metadata> {
        let rest = line.trim_end().strip_prefix('#')?;
        let mut m = Metadata::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok.split_once('=')?;
            m.pairs.push((k.to_string(), v.to_string()));
        }
        Some(m)
    }
}
