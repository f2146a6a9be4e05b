use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use artinfo::MeasureKind;
use artinfo_cli::cache::ResultCache;
use artinfo_cli::commands::{self, Env};
use artinfo_cli::config::{FileConfig, Overrides, RunConfig};
use artinfo_cli::{exit_code, UsageError, EXIT_USAGE};
use clap::{Args, Parser, Subcommand};

/// Compression- and block-decomposition-based complexity measures for images.
///
/// Set ARTINFO_CACHE_DIR to keep compressed sizes between runs.
#[derive(Parser, Debug)]
#[command(name = "artinfo", version)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Compressor used for NC (cm, gzip, bzip2, xz, lzma, ac, ppmd, paq8 or a configured one).
    #[arg(long, global = true)]
    codec: Option<String>,
    /// Gray levels after quantization (power of two, at most 256).
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Fingerprint grid as RxC.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Tile boundaries: auto, equal_division or fixed_block.
    #[arg(long, global = true)]
    grid_mode: Option<String>,
    /// CTM table (CSV of block,value); a small illustrative table is used otherwise.
    #[arg(long, global = true)]
    ctm: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Trim uniform margins, with the given intensity tolerance (default 0).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "0")]
    trim: Option<u8>,
    #[arg(long, global = true)]
    r_initial: Option<usize>,
    #[arg(long, global = true)]
    r_final: Option<usize>,
    /// Ignore ARTINFO_CACHE_DIR.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-image NC, NBDM1, NBDM2 and alpha; per-author rankings.
    Measure { manifest: PathBuf },
    /// Author fingerprints, distance matrix, UPGMA tree and MST.
    Fingerprint { manifest: PathBuf },
    /// Mean NC and alpha per artist, grouped by style.
    StyleScatter { manifest: PathBuf },
    /// UPGMA tree and MST from a distance matrix CSV.
    Tree { distances: PathBuf },
    /// Compress files with every (or the listed) codec.
    Benchmark {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Comma-separated codec names.
        #[arg(long, value_delimiter = ',')]
        codecs: Option<Vec<String>>,
    },
    /// Measure-evaluation experiments.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Mantel test between two distance matrix CSVs.
    Mantel {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = artinfo::analysis::DEFAULT_PERMUTATIONS)]
        permutations: usize,
    },
    /// Write the synthetic fixture corpus.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 96)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        per_author: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Measures against the percentage of randomly edited pixels.
    PixelEdition {
        /// Image to edit; a built-in 256x256 test card otherwise.
        #[arg(long)]
        image: Option<PathBuf>,
        /// Rates in percent: a list (1,5,10) or an inclusive range (1..50).
        #[arg(long, default_value = "1..50")]
        rates: String,
        #[arg(long, value_delimiter = ',', default_value = "nc,nbdm1,nbdm2")]
        measures: Vec<MeasureKind>,
    },
    /// Per-image measures for several datasets given as NAME=MANIFEST.
    Datasets {
        #[arg(required = true, value_parser = parse_dataset)]
        datasets: Vec<(String, PathBuf)>,
        #[arg(long, value_delimiter = ',', default_value = "nc,nbdm1")]
        measures: Vec<MeasureKind>,
    },
    /// BDM of random binary matrices before and after super-sampling.
    Supersample {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        factor: usize,
    },
}

fn parse_dataset(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("'{s}' is not NAME=MANIFEST"))?;
    if name.is_empty() || path.is_empty() {
        return Err(format!("'{s}' is not NAME=MANIFEST"));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

fn parse_rates(s: &str) -> Result<Vec<f64>, UsageError> {
    let bad = || UsageError(format!("invalid rates '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).map(f64::from).collect());
    }
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn run(cli: Cli) -> Result<()> {
    let o = cli.opts;
    let file = match &o.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let config = RunConfig::resolve(
        file,
        Overrides {
            codec: o.codec,
            levels: o.levels,
            grid: o.grid,
            grid_mode: o.grid_mode,
            ctm: o.ctm,
            seed: o.seed,
            out: o.out,
            jobs: o.jobs,
            trim: o.trim,
            r_initial: o.r_initial,
            r_final: o.r_final,
        },
    )?;
    if let Some(j) = config.jobs {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    if let Command::Synth { dir, size, per_author } = &cli.command {
        commands::cmd_synth(dir, *size, *per_author, config.seed)?;
        return Ok(());
    }
    let cache = if o.no_cache { None } else { ResultCache::from_env()? };
    let env = Env::new(config, cache)?;
    match &cli.command {
        Command::Measure { manifest } => {
            commands::cmd_measure(&env, manifest)?;
        }
        Command::Fingerprint { manifest } => {
            commands::cmd_fingerprint(&env, manifest)?;
        }
        Command::StyleScatter { manifest } => {
            commands::cmd_style_scatter(&env, manifest)?;
        }
        Command::Tree { distances } => {
            commands::cmd_tree(&env, distances)?;
        }
        Command::Benchmark { files, codecs } => {
            commands::cmd_benchmark(&env, files, codecs.as_deref())?;
        }
        Command::Experiment(Experiment::PixelEdition { image, rates, measures }) => {
            commands::cmd_pixel_edition(&env, image.as_deref(), &parse_rates(rates)?, measures)?;
        }
        Command::Experiment(Experiment::Datasets { datasets, measures }) => {
            commands::cmd_datasets(&env, datasets, measures)?;
        }
        Command::Experiment(Experiment::Supersample { count, size, factor }) => {
            commands::cmd_supersample(&env, *count, *size, *factor)?;
        }
        Command::Mantel { a, b, permutations } => {
            let (r, p, _) = commands::cmd_mantel(&env, a, b, *permutations)?;
            println!("r={r} p={p}");
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
