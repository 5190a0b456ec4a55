//! Permission audits over app-store datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use idpfilter::audit::{
    category_histogram, histogram_csv, histogram_table, load_dataset, summarize, Dataset, PermissionMap, Platform,
};

#[derive(Parser)]
#[command(name = "idp-audit", version, about = "Classify app permissions and summarize IDP exposure")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Input {
    /// android, firefox, opera, workspace or zoom
    #[arg(long)]
    platform: Platform,
    /// CSV with columns name, category, permissions (';'-separated), and optionally users, rating
    #[arg(long)]
    input: PathBuf,
    /// Permission tables in TOML; the bundled tables are used when omitted
    #[arg(long)]
    mapping: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bucket {
    Category,
}

#[derive(Subcommand)]
enum Cmd {
    /// Platform-level counts and ratios as JSON
    Summarize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-category histogram of IDP+PIDP permissions per app
    Histogram {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "category")]
        bucket: Bucket,
        /// Long-format CSV output; the table is always printed
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(input: &Input) -> Result<(PermissionMap, Dataset), String> {
    let map = match &input.mapping {
        Some(p) => PermissionMap::load(p).map_err(|e| e.to_string())?,
        None => PermissionMap::bundled(),
    };
    let ds = load_dataset(&input.input, input.platform).map_err(|e| e.to_string())?;
    for e in &ds.errors {
        eprintln!("warning: {}:{}: {}", input.input.display(), e.line, e.message);
    }
    Ok((map, ds))
}

fn write_out(path: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Summarize { input, out } => {
            let (map, ds) = load(&input)?;
            let summary = summarize(&map, &ds.records).map_err(|e| e.to_string())?;
            let mut json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
            json.push('\n');
            write_out(out.as_ref(), &json)
        }
        Cmd::Histogram { input, bucket: Bucket::Category, out } => {
            let (map, ds) = load(&input)?;
            let stats = category_histogram(&map, &ds.records).map_err(|e| e.to_string())?;
            print!("{}", histogram_table(&stats));
            match out {
                Some(p) => write_out(Some(&p), &histogram_csv(&stats).map_err(|e| e.to_string())?),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
