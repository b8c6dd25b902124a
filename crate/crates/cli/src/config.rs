//! Settings file. Every key mirrors a command-line flag; flags win.
//!
//! ```toml
//! dicts = "dicts"
//! seed = 7
//! chunk_size = 1000
//! mass_fraction = 0.99
//! max_entries = 1048576
//! drop_unit = true
//! drop_unit_level4 = false
//! epsilon = [1e-5, 1e-5, 1e-6, 1e-6]   # levels 2, 4, 8, 16
//! codec = ["gzip=gzip -9 -c {input} > {output}"]
//! out = "bench.csv"
//! ```

use std::path::{Path, PathBuf};

use mldict_core::bench::ExternalCodec;
use mldict_core::dictionary::{default_epsilon, DEFAULT_CHUNK_SIZE, DEFAULT_MASS_FRACTION, DEFAULT_MAX_ENTRIES};
use mldict_core::{Error, Level, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dicts: Option<PathBuf>,
    pub seed: Option<u64>,
    pub chunk_size: Option<usize>,
    pub mass_fraction: Option<f64>,
    pub max_entries: Option<usize>,
    pub drop_unit: Option<bool>,
    pub drop_unit_level4: Option<bool>,
    pub epsilon: Option<[f64; 4]>,
    #[serde(default)]
    pub codec: Vec<String>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {}", e.message())))
    }
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub dicts: Option<PathBuf>,
    pub seed: u64,
    pub chunk_size: usize,
    pub mass_fraction: f64,
    pub max_entries: usize,
    pub drop_unit: bool,
    pub drop_unit_level4: bool,
    pub epsilon: [f64; 4],
    pub codecs: Vec<ExternalCodec>,
    pub out: Option<PathBuf>,
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dicts: Option<PathBuf>,
    pub seed: Option<u64>,
    pub chunk_size: Option<usize>,
    pub mass_fraction: Option<f64>,
    pub max_entries: Option<usize>,
    pub codecs: Vec<String>,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        // Codec lists do not merge: any --codec replaces the file's list.
        let codec_specs = if flags.codecs.is_empty() { file.codec } else { flags.codecs };
        let codecs = codec_specs
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ExternalCodec>>>()?;
        let mut names: Vec<&str> = codecs.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("codec names must be unique".into()));
        }
        let cfg = Config {
            dicts: flags.dicts.or(file.dicts),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            chunk_size: flags.chunk_size.or(file.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE),
            mass_fraction: flags.mass_fraction.or(file.mass_fraction).unwrap_or(DEFAULT_MASS_FRACTION),
            max_entries: flags.max_entries.or(file.max_entries).unwrap_or(DEFAULT_MAX_ENTRIES),
            drop_unit: file.drop_unit.unwrap_or(true),
            drop_unit_level4: file.drop_unit_level4.unwrap_or(false),
            epsilon: file.epsilon.unwrap_or(Level::ALL.map(default_epsilon)),
            codecs,
            out: flags.out.or(file.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::Input("chunk size must be at least 1".into()));
        }
        if !(self.mass_fraction > 0.0 && self.mass_fraction <= 1.0) {
            return Err(Error::Input(format!("mass fraction {} outside (0, 1]", self.mass_fraction)));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Input(format!("epsilon {e} must be positive")));
        }
        Ok(())
    }

    pub fn dicts_dir(&self) -> Result<&Path> {
        self.dicts
            .as_deref()
            .ok_or_else(|| Error::Input("no dictionary directory: pass --dicts or set dicts in the config".into()))
    }
}
