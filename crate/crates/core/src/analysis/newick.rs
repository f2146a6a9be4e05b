use std::fmt::Write as _;

use super::{AnalysisError, Dendrogram};
use crate::scalar::Real;

const RESERVED: &[char] = &['(', ')', '[', ']', '\'', ':', ';', ',', ' ', '\t', '\n', '\r'];

fn quote(label: &str) -> String {
    if label.is_empty() || label.contains(RESERVED) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Newick string; branch lengths are parent height minus child height.
pub fn export_newick<T: Real>(t: &Dendrogram<T>) -> String {
    fn walk<T: Real>(t: &Dendrogram<T>, id: usize, out: &mut String) {
        match t.children(id) {
            Some((a, b)) => {
                out.push('(');
                for (k, child) in [a, b].into_iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    walk(t, child, out);
                    let _ = write!(out, ":{}", t.height_of(id) - t.height_of(child));
                }
                out.push(')');
            }
            None => out.push_str(&quote(&t.leaves[id])),
        }
    }
    let mut s = String::new();
    walk(t, t.root(), &mut s);
    s.push(';');
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewickNode {
    pub name: Option<String>,
    pub length: Option<f64>,
    pub children: Vec<NewickNode>,
}

impl NewickNode {
    /// Sorted leaf names.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort();
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        if self.children.is_empty() {
            out.push(self.name.clone().unwrap_or_default());
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// Every internal node as (sorted leaves, height above the leaves), sorted
    /// by leaves. Height is measured along the first child path.
    pub fn clusters(&self) -> Vec<(Vec<String>, f64)> {
        fn depth(n: &NewickNode) -> f64 {
            n.children.first().map_or(0.0, |c| c.length.unwrap_or(0.0) + depth(c))
        }
        fn walk(n: &NewickNode, out: &mut Vec<(Vec<String>, f64)>) {
            if !n.children.is_empty() {
                out.push((n.leaves(), depth(n)));
                n.children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> AnalysisError {
        AnalysisError::Newick(format!("{msg} at byte {}", self.pos))
    }

    fn skip(&mut self) -> Result<(), AnalysisError> {
        loop {
            match self.s.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let end = self.s[self.pos..]
                        .iter()
                        .position(|&c| c == b']')
                        .ok_or_else(|| self.err("unterminated comment"))?;
                    self.pos += end + 1;
                }
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>, AnalysisError> {
        self.skip()?;
        Ok(self.s.get(self.pos).copied())
    }

    fn label(&mut self) -> Result<Option<String>, AnalysisError> {
        if self.peek()? == Some(b'\'') {
            let mut out = Vec::new();
            self.pos += 1;
            loop {
                match self.s.get(self.pos) {
                    None => return Err(self.err("unterminated quote")),
                    Some(b'\'') if self.s.get(self.pos + 1) == Some(&b'\'') => {
                        out.push(b'\'');
                        self.pos += 2;
                    }
                    Some(b'\'') => {
                        self.pos += 1;
                        break;
                    }
                    Some(&c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                }
            }
            return String::from_utf8(out).map(Some).map_err(|_| self.err("invalid utf-8"));
        }
        let start = self.pos;
        while let Some(&c) = self.s.get(self.pos) {
            if RESERVED.contains(&(c as char)) {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        String::from_utf8(self.s[start..self.pos].to_vec())
            .map(Some)
            .map_err(|_| self.err("invalid utf-8"))
    }

    fn node(&mut self) -> Result<NewickNode, AnalysisError> {
        let mut children = Vec::new();
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.node()?);
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        }
        let name = self.label()?;
        let mut length = None;
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip()?;
            let start = self.pos;
            while let Some(&c) = self.s.get(self.pos) {
                if c.is_ascii_digit() || matches!(c, b'.' | b'-' | b'+' | b'e' | b'E') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
            length = Some(text.parse().map_err(|_| self.err("bad branch length"))?);
        }
        if children.is_empty() && name.is_none() {
            return Err(self.err("empty leaf"));
        }
        Ok(NewickNode { name, length, children })
    }
}

pub fn parse_newick(text: &str) -> Result<NewickNode, AnalysisError> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let root = p.node()?;
    if p.peek()? != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek()?.is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{upgma, DistanceMatrix};

    #[test]
    fn two_leaves() {
        let m = DistanceMatrix::new(vec!["A".into(), "B".into()], vec![0.0, 4.0, 4.0, 0.0]).unwrap();
        assert_eq!(export_newick(&upgma(&m).unwrap()), "(A:2,B:2);");
    }

    #[test]
    fn round_trip_structure() {
        let labels = ["b c", "it's", "A", "D"].map(String::from).to_vec();
        let d = [0.0, 2.0, 6.0, 10.0, 2.0, 0.0, 6.0, 10.0, 6.0, 6.0, 0.0, 10.0, 10.0, 10.0, 10.0, 0.0];
        let t = upgma(&DistanceMatrix::new(labels, d.to_vec()).unwrap()).unwrap();
        let text = export_newick(&t);
        let parsed = parse_newick(&format!("[seed=1]\n{text}\n")).unwrap();
        let want: Vec<(Vec<String>, f64)> = t.clusters();
        assert_eq!(parsed.clusters(), want);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_newick("(A,B)").is_err());
        assert!(parse_newick("(A,;").is_err());
        assert!(parse_newick("(A:x,B);").is_err());
        assert!(parse_newick("(A,B);x").is_err());
    }
}
