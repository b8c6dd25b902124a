//! Corpus evaluation: binarize, encode, verify, measure, tabulate.
//!
//! External codecs are shell command templates run on the binarized PBM;
//! `{input}` and `{output}` are replaced with quoted paths. A codec that
//! fails or produces nothing leaves an empty cell.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use rayon::prelude::*;

use crate::codec::{decode_bytes, encode_to_bytes, ratio_for_bytes};
use crate::dictionary::DictionarySet;
use crate::error::{Error, Result};
use crate::imgproc::{list_images, load_binary, write_pbm, BinaryImage};

pub const PROPOSED: &str = "proposed";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalCodec {
    pub name: String,
    pub template: String,
}

impl FromStr for ExternalCodec {
    type Err = Error;

    /// `NAME=TEMPLATE`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, template) = s
            .split_once('=')
            .ok_or_else(|| Error::input(format!("codec {s:?} is not NAME=TEMPLATE")))?;
        let name = name.trim();
        if name.is_empty()
            || name == PROPOSED
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::input(format!("bad codec name {name:?}")));
        }
        if template.trim().is_empty() {
            return Err(Error::input(format!("codec {name} has an empty command")));
        }
        Ok(Self {
            name: name.to_owned(),
            template: template.to_owned(),
        })
    }
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

impl ExternalCodec {
    /// Runs the codec on a PBM file and returns the output size, or why there
    /// is none.
    pub fn run(&self, input: &Path, output: &Path) -> std::result::Result<u64, String> {
        let cmd = self
            .template
            .replace("{input}", &shell_quote(input))
            .replace("{output}", &shell_quote(output));
        let out = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| format!("could not start sh: {e}"))?;
        if !out.status.success() {
            return Err(format!(
                "exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
        match std::fs::metadata(output) {
            Ok(m) if m.len() > 0 => Ok(m.len()),
            Ok(_) => Err("produced an empty file".into()),
            Err(e) => Err(format!("no output file: {e}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub pixels: u64,
    pub proposed_bytes: u64,
    /// One entry per configured external codec, in configuration order.
    pub external_bytes: Vec<Option<u64>>,
}

impl BenchRow {
    pub fn proposed_ratio(&self) -> f64 {
        ratio_for_bytes(self.pixels, self.proposed_bytes as usize)
    }

    pub fn external_ratio(&self, i: usize) -> Option<f64> {
        self.external_bytes[i].map(|b| ratio_for_bytes(self.pixels, b as usize))
    }

    /// Index of the best column: 0 is the proposed codec, `i + 1` external
    /// codec `i`. Ties go to the earlier column.
    pub fn best_column(&self) -> usize {
        let mut best = (0, self.proposed_ratio());
        for i in 0..self.external_bytes.len() {
            if let Some(r) = self.external_ratio(i) {
                if r > best.1 {
                    best = (i + 1, r);
                }
            }
        }
        best.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub codecs: Vec<String>,
    pub rows: Vec<BenchRow>,
    pub warnings: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl BenchReport {
    /// Column names: `proposed`, then the external codecs.
    pub fn columns(&self) -> Vec<&str> {
        std::iter::once(PROPOSED).chain(self.codecs.iter().map(String::as_str)).collect()
    }

    /// Mean ratio per column over the rows where that codec produced output.
    pub fn mean_ratios(&self) -> Vec<Option<f64>> {
        let mut out = vec![mean(self.rows.iter().map(BenchRow::proposed_ratio))];
        for i in 0..self.codecs.len() {
            out.push(mean(self.rows.iter().filter_map(|r| r.external_ratio(i))));
        }
        out
    }

    pub fn best_name(&self, row: &BenchRow) -> &str {
        self.columns()[row.best_column()]
    }

    /// `image,pixels,proposed_bytes,proposed_ratio[,<codec>_bytes,<codec>_ratio]...,best`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::input(format!("writing bench CSV: {e}"));
        let mut header: Vec<String> = ["image", "pixels", "proposed_bytes", "proposed_ratio"]
            .map(String::from)
            .to_vec();
        for c in &self.codecs {
            header.push(format!("{c}_bytes"));
            header.push(format!("{c}_ratio"));
        }
        header.push("best".into());
        w.write_record(&header).map_err(err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.image.clone(),
                r.pixels.to_string(),
                r.proposed_bytes.to_string(),
                r.proposed_ratio().to_string(),
            ];
            for i in 0..self.codecs.len() {
                rec.push(r.external_bytes[i].map(|b| b.to_string()).unwrap_or_default());
                rec.push(r.external_ratio(i).map(|v| v.to_string()).unwrap_or_default());
            }
            rec.push(self.best_name(r).to_owned());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::input(format!("writing bench CSV: {e}")))
    }

    /// Aligned ratio table with a trailing mean row; the best cell of each
    /// row is starred.
    pub fn text_table(&self) -> String {
        let cols = self.columns();
        let mut cells: Vec<Vec<String>> = Vec::with_capacity(self.rows.len() + 2);
        cells.push(std::iter::once("image".to_owned()).chain(cols.iter().map(|c| c.to_string())).collect());
        for r in &self.rows {
            let best = r.best_column();
            let mut line = vec![r.image.clone()];
            let ratios = std::iter::once(Some(r.proposed_ratio()))
                .chain((0..self.codecs.len()).map(|i| r.external_ratio(i)));
            for (i, v) in ratios.enumerate() {
                line.push(match v {
                    Some(v) if i == best => format!("*{v:.3}"),
                    Some(v) => format!("{v:.3}"),
                    None => "-".into(),
                });
            }
            cells.push(line);
        }
        let mut line = vec!["mean".to_owned()];
        line.extend(
            self.mean_ratios()
                .into_iter()
                .map(|m| m.map_or("-".into(), |v| format!("{v:.3}"))),
        );
        cells.push(line);

        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    write!(out, "{cell:<w$}", w = widths[c]).unwrap();
                } else {
                    write!(out, "  {cell:>w$}", w = widths[c]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Hook applied to each serialized container before the verifying decode.
/// Only useful for fault injection.
pub type ContainerFilter = dyn Fn(&str, &mut Vec<u8>) + Sync;

#[derive(Default)]
pub struct BenchOptions<'a> {
    pub codecs: Vec<ExternalCodec>,
    pub container_filter: Option<&'a ContainerFilter>,
}

fn bench_one(
    name: &str,
    img: &BinaryImage,
    dicts: &DictionarySet,
    opts: &BenchOptions<'_>,
) -> Result<(BenchRow, Vec<String>)> {
    let mut bytes = encode_to_bytes(img, dicts)?;
    if let Some(f) = opts.container_filter {
        f(name, &mut bytes);
    }
    match decode_bytes(&bytes, dicts) {
        Ok(back) if back == *img => {}
        Ok(_) => return Err(Error::corrupt(format!("{name}: round trip changed pixels"))),
        Err(e) => return Err(Error::corrupt(format!("{name}: round trip failed: {e}"))),
    }

    let mut warnings = Vec::new();
    let mut external_bytes = Vec::with_capacity(opts.codecs.len());
    if !opts.codecs.is_empty() {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let input = dir.path().join("input.pbm");
        let mut pbm = Vec::new();
        write_pbm(img, &mut pbm).expect("writing to a Vec cannot fail");
        std::fs::write(&input, pbm).map_err(|e| Error::io(&input, e))?;
        for (i, codec) in opts.codecs.iter().enumerate() {
            let output = dir.path().join(format!("output{i}"));
            match codec.run(&input, &output) {
                Ok(n) => external_bytes.push(Some(n)),
                Err(why) => {
                    warnings.push(format!("{name}: codec {} {why}", codec.name));
                    external_bytes.push(None);
                }
            }
        }
    }
    Ok((
        BenchRow {
            image: name.to_owned(),
            pixels: img.pixel_count(),
            proposed_bytes: bytes.len() as u64,
            external_bytes,
        },
        warnings,
    ))
}

/// Benchmarks already-loaded images. Rows keep the input order.
pub fn bench_images(
    images: &[(String, BinaryImage)],
    dicts: &DictionarySet,
    opts: &BenchOptions<'_>,
) -> Result<BenchReport> {
    let results: Vec<_> = images
        .par_iter()
        .map(|(name, img)| bench_one(name, img, dicts, opts))
        .collect::<Result<_>>()?;
    let mut report = BenchReport {
        codecs: opts.codecs.iter().map(|c| c.name.clone()).collect(),
        rows: Vec::with_capacity(results.len()),
        warnings: Vec::new(),
    };
    for (row, warnings) in results {
        report.rows.push(row);
        report.warnings.extend(warnings);
    }
    Ok(report)
}

/// Loads every image in `dir` (file name order) and benchmarks it.
pub fn run_corpus(dir: &Path, dicts: &DictionarySet, opts: &BenchOptions<'_>) -> Result<BenchReport> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::input(format!("no images in {}", dir.display())));
    }
    let images: Vec<(String, BinaryImage)> = paths
        .par_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            load_binary(p).map(|img| (name, img))
        })
        .collect::<Result<_>>()?;
    bench_images(&images, dicts, opts)
}
