//! Dictionary statistics: log-binned frequency histograms, cumulative mass
//! curves, top-k coverage, and CSV export of convergence series.
//!
//! Column layouts are documented in `docs/analysis.md`.

use std::io::Write;
use std::path::Path;

use crate::dictionary::{prefix_for_mass, ConvergenceMonitor, Dictionary};
use crate::error::{Error, Result};
use crate::patchkey::PatchKey;
use crate::scalar::{ratio, Scalar};

pub const DEFAULT_HISTOGRAM_BINS: usize = 30;

/// Counts of dictionary entries per normalized-frequency interval.
#[derive(Clone, Debug, PartialEq)]
pub struct LogHistogram<T> {
    /// `bins + 1` strictly increasing edges, log-spaced.
    pub edges: Vec<T>,
    pub counts: Vec<u64>,
}

impl<T: Scalar> LogHistogram<T> {
    /// Bin index for a normalized frequency. Values outside the range clamp
    /// to the first or last bin.
    pub fn bin_of(&self, p: T) -> usize {
        let bins = self.counts.len();
        let lo = self.edges[0].ln();
        let hi = self.edges[bins].ln();
        let pos = (p.ln() - lo) / (hi - lo) * T::from_count(bins as u64);
        if !(pos > T::zero()) {
            return 0;
        }
        pos.floor().to_usize().unwrap_or(bins).min(bins - 1)
    }

    /// Highest bin with a nonzero count.
    pub fn top_occupied(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }
}

/// Histogram of `frequency / total` over `bins` log-spaced bins covering
/// `[1/total, 1]`.
pub fn log_histogram<T: Scalar>(d: &Dictionary, bins: usize) -> Result<LogHistogram<T>> {
    if d.is_empty() {
        return Err(Error::input("histogram of an empty dictionary"));
    }
    if bins == 0 {
        return Err(Error::input("histogram needs at least one bin"));
    }
    // A dictionary holding a single observation has 1/total = 1; widen to a
    // decade so the edges stay increasing.
    let lo = if d.total() > 1 { ratio::<T>(1, d.total()) } else { T::from_f64_lossy(0.1) };
    let (llo, lhi) = (lo.ln(), T::zero());
    let n = T::from_count(bins as u64);
    let mut edges: Vec<T> = (0..=bins)
        .map(|i| (llo + (lhi - llo) * T::from_count(i as u64) / n).exp())
        .collect();
    edges[0] = lo;
    edges[bins] = T::one();
    let mut h = LogHistogram {
        edges,
        counts: vec![0; bins],
    };
    for (_, c) in d.iter() {
        let b = h.bin_of(ratio::<T>(c, d.total()));
        h.counts[b] += 1;
    }
    Ok(h)
}

/// Cumulative probability of the top-k patterns, k = 1..=len, in canonical
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct MassCurve<T> {
    pub keys: Vec<PatchKey>,
    pub frequencies: Vec<u64>,
    pub cumulative: Vec<T>,
}

impl<T: Scalar> MassCurve<T> {
    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn last(&self) -> Option<T> {
        self.cumulative.last().copied()
    }
}

pub fn mass_curve<T: Scalar>(d: &Dictionary) -> Result<MassCurve<T>> {
    if d.is_empty() {
        return Err(Error::input("mass curve of an empty dictionary"));
    }
    let entries = d.canonical_entries();
    let mut cum = 0u64;
    let mut cumulative = Vec::with_capacity(entries.len());
    for &(_, c) in &entries {
        cum += c;
        cumulative.push(ratio::<T>(cum, d.total()));
    }
    let (keys, frequencies) = entries.into_iter().unzip();
    Ok(MassCurve {
        keys,
        frequencies,
        cumulative,
    })
}

/// Smallest k whose top-k patterns carry at least `fraction` of the mass.
pub fn top_k_for_mass(d: &Dictionary, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::input(format!("mass fraction {fraction} outside (0, 1]")));
    }
    if d.is_empty() {
        return Err(Error::input("top-k of an empty dictionary"));
    }
    Ok(prefix_for_mass(
        d.canonical_entries().into_iter().map(|(_, c)| c),
        d.total(),
        fraction,
    ))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Columns: `chunk_index`, then one probability column per tracked pattern
/// headed by its key (`L2:0`, ...). Chunk indices start at 1.
pub fn write_convergence_csv<T: Scalar, W: Write>(mon: &ConvergenceMonitor<T>, out: W) -> Result<()> {
    if mon.chunks() == 0 {
        return Err(Error::input("convergence monitor has no samples"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chunk_index".to_owned()];
    header.extend(mon.tracked().iter().map(|k| k.to_string()));
    let wr = |e: csv::Error| Error::input(format!("writing convergence CSV: {e}"));
    w.write_record(&header).map_err(wr)?;
    for n in 0..mon.chunks() {
        let mut row = vec![(n + 1).to_string()];
        row.extend((0..mon.tracked().len()).map(|i| mon.series(i)[n].to_string()));
        w.write_record(&row).map_err(wr)?;
    }
    w.flush().map_err(|e| Error::input(format!("writing convergence CSV: {e}")))
}

pub fn export_convergence<T: Scalar>(mon: &ConvergenceMonitor<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_convergence_csv(mon, std::io::BufWriter::new(file))
}

/// Columns: `bin,low,high,count`.
pub fn export_histogram<T: Scalar>(h: &LogHistogram<T>, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["bin", "low", "high", "count"]).map_err(|e| csv_err(path, e))?;
    for (i, c) in h.counts.iter().enumerate() {
        w.write_record([
            i.to_string(),
            h.edges[i].to_string(),
            h.edges[i + 1].to_string(),
            c.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns: `k,key,frequency,cumulative`.
pub fn export_mass_curve<T: Scalar>(m: &MassCurve<T>, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "key", "frequency", "cumulative"]).map_err(|e| csv_err(path, e))?;
    for i in 0..m.len() {
        w.write_record([
            (i + 1).to_string(),
            m.keys[i].digits(),
            m.frequencies[i].to_string(),
            m.cumulative[i].to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
