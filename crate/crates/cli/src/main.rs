mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mldict_core::Error;

use config::{Config, FileConfig, Overrides};

/// Multi-level dictionary compression for binary images.
#[derive(Parser, Debug)]
#[command(name = "mldict", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Settings file (TOML); flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Dictionary directory (manifest plus one file per level).
    #[arg(long, global = true, value_name = "DIR")]
    dicts: Option<PathBuf>,

    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Patches counted per training chunk.
    #[arg(long, global = true, value_name = "N")]
    chunk_size: Option<usize>,

    /// Mass kept when pruning the 8×8 and 16×16 dictionaries.
    #[arg(long, global = true, value_name = "F")]
    mass_fraction: Option<f64>,

    /// Entry cap for the 8×8 and 16×16 dictionaries.
    #[arg(long, global = true, value_name = "N")]
    max_entries: Option<usize>,

    /// External codec for bench, as NAME=COMMAND with {input} and {output}
    /// placeholders. Repeatable.
    #[arg(long = "codec", global = true, value_name = "NAME=CMD")]
    codecs: Vec<String>,

    /// Output file or directory, depending on the command.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train dictionaries from one or more image directories.
    Train {
        #[arg(required = true, value_name = "DIR")]
        corpus: Vec<PathBuf>,
    },
    /// Compress an image into a container.
    Encode { input: PathBuf },
    /// Decompress a container to PBM.
    Decode { input: PathBuf },
    /// Write histogram and mass-curve CSVs for a dictionary set.
    Stats,
    /// Compare compression ratios over a directory of images.
    Bench { corpus: PathBuf },
    /// Describe a container or dictionary file.
    Inspect { input: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) => 3,
        Error::Format(_) | Error::Version { .. } | Error::Image { .. } => 4,
        Error::Corruption(_) | Error::Truncated(_) | Error::Checksum { .. } => 5,
        Error::WrongDictionary { .. } => 6,
        Error::Io { .. } => 1,
    }
}

fn run(cli: Cli) -> mldict_core::Result<()> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = Config::resolve(
        file,
        Overrides {
            dicts: g.dicts,
            seed: g.seed,
            chunk_size: g.chunk_size,
            mass_fraction: g.mass_fraction,
            max_entries: g.max_entries,
            codecs: g.codecs,
            out: g.out,
        },
    )?;
    match cli.command {
        Command::Train { corpus } => commands::train(&corpus, &cfg),
        Command::Encode { input } => commands::encode(&input, &cfg),
        Command::Decode { input } => commands::decode(&input, &cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Bench { corpus } => commands::bench(&corpus, &cfg),
        Command::Inspect { input } => commands::inspect(&input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mldict: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
