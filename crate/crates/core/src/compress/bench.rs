//! Per-file compressor benchmark.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use super::{Codec, CompressError};

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Compressed { output_bytes: u64, seconds: f64, peak_memory: Option<u64> },
    Unavailable,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub codec: String,
    /// Empty for the single row recorded for an unavailable codec.
    pub file: String,
    pub input_bytes: u64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    /// `(codec, total input bytes, total output bytes, total seconds)` for every
    /// codec that compressed all files.
    pub fn totals(&self) -> Vec<(String, u64, u64, f64)> {
        let mut out: Vec<(String, u64, u64, f64)> = Vec::new();
        let mut broken: Vec<&str> = Vec::new();
        for row in &self.rows {
            match &row.outcome {
                Outcome::Compressed { output_bytes, seconds, .. } => {
                    match out.iter_mut().find(|t| t.0 == row.codec) {
                        Some(t) => {
                            t.1 += row.input_bytes;
                            t.2 += output_bytes;
                            t.3 += seconds;
                        }
                        None => out.push((row.codec.clone(), row.input_bytes, *output_bytes, *seconds)),
                    }
                }
                _ => broken.push(&row.codec),
            }
        }
        out.retain(|t| !broken.contains(&t.0.as_str()));
        out
    }

    pub fn unavailable(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.outcome == Outcome::Unavailable)
            .map(|r| r.codec.as_str())
            .collect()
    }

    /// CSV with columns `codec,file,input_bytes,output_bytes,seconds`; per-codec
    /// totals use the file name `TOTAL`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("codec,file,input_bytes,output_bytes,seconds\n");
        for row in &self.rows {
            let (out, secs) = match &row.outcome {
                Outcome::Compressed { output_bytes, seconds, .. } => {
                    (output_bytes.to_string(), format!("{seconds:.6}"))
                }
                Outcome::Unavailable => ("unavailable".to_string(), "0".to_string()),
                Outcome::Failed(_) => ("failed".to_string(), "0".to_string()),
            };
            let _ = writeln!(s, "{},{},{},{},{}", row.codec, csv_field(&row.file), row.input_bytes, out, secs);
        }
        for (codec, input, output, secs) in self.totals() {
            let _ = writeln!(s, "{codec},TOTAL,{input},{output},{secs:.6}");
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Compresses every file individually with every codec.
///
/// Unavailable codecs get a single `Unavailable` row; a codec failing on one
/// file records `Failed` for that file and the run continues.
pub fn benchmark(
    corpus: &[PathBuf],
    codecs: &[Arc<dyn Codec>],
) -> Result<BenchmarkReport, CompressError> {
    let files: Vec<(String, Vec<u8>)> = corpus
        .iter()
        .map(|p| Ok((p.display().to_string(), fs::read(p)?)))
        .collect::<Result<_, CompressError>>()?;

    let mut report = BenchmarkReport::default();
    for codec in codecs {
        let name = codec.id().name.clone();
        if !codec.is_available() {
            report.rows.push(BenchmarkRow {
                codec: name,
                file: String::new(),
                input_bytes: 0,
                outcome: Outcome::Unavailable,
            });
            continue;
        }
        for (file, data) in &files {
            let outcome = match codec.compress_bytes(data) {
                Ok(r) => Outcome::Compressed {
                    output_bytes: r.output_bits / 8,
                    seconds: r.wall_time.as_secs_f64(),
                    peak_memory: r.peak_memory,
                },
                Err(CompressError::Unavailable(_)) => Outcome::Unavailable,
                Err(e) => Outcome::Failed(e.to_string()),
            };
            report.rows.push(BenchmarkRow {
                codec: name.clone(),
                file: file.clone(),
                input_bytes: data.len() as u64,
                outcome,
            });
        }
    }
    Ok(report)
}
