//! Chunk-wise probability tracking and the lagged convergence test.
//!
//! After every training chunk the monitor records, for each tracked pattern,
//! its running probability `p[n]` (cumulative count over cumulative total).
//! A pattern has converged at chunk `n` when `|p[n] - p[n-k]| < ε` for every
//! lag `k`.

use super::Dictionary;
use crate::patchkey::{Level, PatchKey};
use crate::scalar::{ratio, Scalar};

pub const DEFAULT_LAGS: [usize; 4] = [1, 10, 100, 1000];

/// 1e-5 for the two small levels, 1e-6 for 8×8 and 16×16.
pub fn default_epsilon(level: Level) -> f64 {
    match level {
        Level::L2 | Level::L4 => 1e-5,
        Level::L8 | Level::L16 => 1e-6,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Not enough history for the largest lag.
    Undetermined,
    Converged,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceStatus {
    /// One entry per tracked symbol, in tracking order. Empty when undetermined.
    pub per_symbol: Vec<bool>,
    pub overall: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceMonitor<T> {
    tracked: Vec<PatchKey>,
    max_tracked: usize,
    history: Vec<Vec<T>>,
    epsilon: T,
    lags: Vec<usize>,
    chunks: usize,
    first_converged: Option<usize>,
}

impl<T: Scalar> ConvergenceMonitor<T> {
    /// Tracks the `max_tracked` most frequent patterns as of the first
    /// recorded chunk.
    pub fn new(max_tracked: usize, epsilon: T) -> Self {
        Self {
            tracked: Vec::new(),
            max_tracked,
            history: Vec::new(),
            epsilon,
            lags: DEFAULT_LAGS.to_vec(),
            chunks: 0,
            first_converged: None,
        }
    }

    /// Tracks exactly `symbols`.
    pub fn with_symbols(symbols: Vec<PatchKey>, epsilon: T) -> Self {
        let n = symbols.len();
        Self {
            history: vec![Vec::new(); n],
            tracked: symbols,
            max_tracked: n,
            ..Self::new(n, epsilon)
        }
    }

    pub fn with_lags(mut self, lags: Vec<usize>) -> Self {
        assert!(!lags.is_empty(), "at least one lag is required");
        self.lags = lags;
        self
    }

    pub fn tracked(&self) -> &[PatchKey] {
        &self.tracked
    }

    /// Probability series of the `i`-th tracked symbol, one value per chunk.
    pub fn series(&self, i: usize) -> &[T] {
        &self.history[i]
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    /// First chunk count at which every tracked symbol satisfied the test.
    pub fn first_converged(&self) -> Option<usize> {
        self.first_converged
    }

    /// Appends one sample per tracked symbol from the running counts in `dict`.
    pub fn record(&mut self, dict: &Dictionary) {
        if self.chunks == 0 && self.tracked.is_empty() {
            self.tracked = dict
                .canonical_entries()
                .into_iter()
                .take(self.max_tracked)
                .map(|(k, _)| k)
                .collect();
            self.history = vec![Vec::new(); self.tracked.len()];
        }
        let total = dict.total();
        for (key, series) in self.tracked.iter().zip(self.history.iter_mut()) {
            series.push(ratio(dict.get(key).unwrap_or(0), total));
        }
        self.chunks += 1;
        if self.first_converged.is_none() && self.check().overall == Verdict::Converged {
            self.first_converged = Some(self.chunks);
        }
    }

    fn symbol_converged(&self, series: &[T]) -> bool {
        let n = series.len() - 1;
        self.lags
            .iter()
            .all(|&k| (series[n] - series[n - k]).abs() < self.epsilon)
    }

    /// Evaluates the lagged test at the latest chunk.
    pub fn check(&self) -> ConvergenceStatus {
        let max_lag = *self.lags.iter().max().unwrap();
        if self.chunks <= max_lag || self.tracked.is_empty() {
            return ConvergenceStatus {
                per_symbol: Vec::new(),
                overall: Verdict::Undetermined,
            };
        }
        let per_symbol: Vec<bool> = self.history.iter().map(|s| self.symbol_converged(s)).collect();
        let overall = if per_symbol.iter().all(|&c| c) {
            Verdict::Converged
        } else {
            Verdict::NotConverged
        };
        ConvergenceStatus { per_symbol, overall }
    }
}
