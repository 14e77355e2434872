//! `qtwist`: runs the exact identity check suites and prints reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qtwist_core::harness::{self, Format, Suite, SuiteConfig, DEFAULT_SEED};

#[derive(Parser, Debug)]
#[command(name = "qtwist", version, about = "Exact identity checks for quaternionic twistor geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a check suite: algebra, connection, ehrep, twistor, penrose, hermtwist or all.
    Check(CheckArgs),
}

#[derive(clap::Args, Debug)]
struct CheckArgs {
    /// Suite identifier.
    suite: String,
    /// Quaternionic dimension of the model R^{4n}.
    #[arg(long)]
    n: Option<usize>,
    /// Maximal degree of generated polynomial fields.
    #[arg(long)]
    degree: Option<u32>,
    /// Samples per check.
    #[arg(long)]
    samples: Option<usize>,
    /// Run seed; falls back to QTWIST_SEED, then the config file, then 42.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Include per-check timings in the report (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("usage: qtwist check <algebra|connection|ehrep|twistor|penrose|hermtwist|all> [--n N] [--degree D] [--samples S] [--seed U64] [--format text|json] [--config PATH] [--timings]");
    ExitCode::from(2)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut m = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("{}:{}: expected key=value", path.display(), no + 1))?;
        m.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(m)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value for {key}: {v:?}"))
}

fn build_config(args: &CheckArgs) -> Result<(SuiteConfig, bool), String> {
    let mut cfg = SuiteConfig::default();
    let mut timings = false;
    let mut file_seed = None;
    if let Some(path) = &args.config {
        for (k, v) in read_config(path)? {
            match k.as_str() {
                "n" => cfg.n = parse_value(&k, &v)?,
                "degree" => cfg.degree = parse_value(&k, &v)?,
                "samples" => cfg.samples = parse_value(&k, &v)?,
                "seed" => file_seed = Some(parse_value(&k, &v)?),
                "format" => {
                    cfg.format = match v.as_str() {
                        "text" => Format::Text,
                        "json" => Format::Json,
                        _ => return Err(format!("invalid value for format: {v:?}")),
                    }
                }
                "timings" => timings = parse_value(&k, &v)?,
                _ => return Err(format!("unknown config key: {k}")),
            }
        }
    }
    cfg.suites = Suite::parse(&args.suite).ok_or_else(|| format!("unknown suite: {}", args.suite))?;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(d) = args.degree {
        cfg.degree = d;
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    let env_seed = match std::env::var("QTWIST_SEED") {
        Ok(v) => Some(parse_value::<u64>("QTWIST_SEED", v.trim())?),
        Err(_) => None,
    };
    cfg.seed = args.seed.or(env_seed).or(file_seed).unwrap_or(DEFAULT_SEED);
    if let Some(f) = args.format {
        cfg.format = match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        };
    }
    timings |= args.timings;
    cfg.validate()?;
    Ok((cfg, timings))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Check(args) = cli.command;
    let (cfg, timings) = match build_config(&args) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let res = match harness::run(&cfg) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    match cfg.format {
        Format::Json => print!("{}", harness::render_json(&cfg, &res, timings)),
        Format::Text => {
            print!("{}", harness::render_text(&res, timings));
            eprintln!("elapsed: {} ms", res.elapsed_ms);
        }
    }
    if res.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
