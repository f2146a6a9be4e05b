//! Run configuration: TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use artinfo::TileMode;
use serde::Deserialize;

use crate::UsageError;

/// Grid mode as configured; `Auto` picks fixed blocks for fine grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMode {
    Auto,
    Fixed(TileMode),
}

impl GridMode {
    /// Fixed blocks once either grid dimension reaches 32, equal division below.
    pub fn resolve(self, grid: (usize, usize)) -> TileMode {
        match self {
            GridMode::Fixed(m) => m,
            GridMode::Auto if grid.0 >= 32 || grid.1 >= 32 => TileMode::FixedBlock,
            GridMode::Auto => TileMode::EqualDivision,
        }
    }
}

impl FromStr for GridMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(GridMode::Auto),
            other => other.parse().map(GridMode::Fixed),
        }
    }
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridMode::Auto => f.write_str("auto"),
            GridMode::Fixed(m) => m.fmt(f),
        }
    }
}

/// Parses `RxC`, e.g. `16x16`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid '{s}' is not of the form RxC"))?;
    let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|&n| n > 0);
    match (parse(r), parse(c)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(format!("grid '{s}' needs two positive integers")),
    }
}

/// Contents of a `--config` file; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub codec: Option<String>,
    pub levels: Option<usize>,
    pub grid: Option<String>,
    pub grid_mode: Option<String>,
    pub ctm: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub trim: Option<u8>,
    pub r_initial: Option<usize>,
    pub r_final: Option<usize>,
    /// Extra external codecs, name to command template.
    #[serde(default)]
    pub codecs: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }
}

/// Effective settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub codec: String,
    pub levels: usize,
    pub grid: (usize, usize),
    pub grid_mode: GridMode,
    pub ctm: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub trim: Option<u8>,
    pub r_initial: usize,
    pub r_final: Option<usize>,
    pub codecs: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            codec: "cm".into(),
            levels: 256,
            grid: (16, 16),
            grid_mode: GridMode::Auto,
            ctm: None,
            seed: 0,
            out: PathBuf::from("out"),
            jobs: None,
            trim: None,
            r_initial: artinfo::hdc::DEFAULT_R_INITIAL,
            r_final: None,
            codecs: BTreeMap::new(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub codec: Option<String>,
    pub levels: Option<usize>,
    pub grid: Option<String>,
    pub grid_mode: Option<String>,
    pub ctm: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub trim: Option<u8>,
    pub r_initial: Option<usize>,
    pub r_final: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, cli: Overrides) -> Result<Self, UsageError> {
        let d = RunConfig::default();
        let grid = match cli.grid.or(file.grid) {
            Some(g) => parse_grid(&g).map_err(UsageError)?,
            None => d.grid,
        };
        let grid_mode = match cli.grid_mode.or(file.grid_mode) {
            Some(m) => m.parse().map_err(UsageError)?,
            None => d.grid_mode,
        };
        let levels = cli.levels.or(file.levels).unwrap_or(d.levels);
        if !levels.is_power_of_two() || !(2..=256).contains(&levels) {
            return Err(UsageError(format!("levels {levels} must be a power of two in 2..=256")));
        }
        if cli.jobs.or(file.jobs) == Some(0) {
            return Err(UsageError("jobs must be positive".into()));
        }
        let r_initial = cli.r_initial.or(file.r_initial).unwrap_or(d.r_initial);
        if r_initial == 0 {
            return Err(UsageError("r_initial must be positive".into()));
        }
        Ok(RunConfig {
            codec: cli.codec.or(file.codec).unwrap_or(d.codec),
            levels,
            grid,
            grid_mode,
            ctm: cli.ctm.or(file.ctm),
            seed: cli.seed.or(file.seed).unwrap_or(d.seed),
            out: cli.out.or(file.out).unwrap_or(d.out),
            jobs: cli.jobs.or(file.jobs),
            trim: cli.trim.or(file.trim),
            r_initial,
            r_final: cli.r_final.or(file.r_final),
            codecs: file.codecs,
        })
    }

    pub fn tile_mode(&self) -> TileMode {
        self.grid_mode.resolve(self.grid)
    }

    pub fn grid_label(&self) -> String {
        format!("{}x{}", self.grid.0, self.grid.1)
    }
}
