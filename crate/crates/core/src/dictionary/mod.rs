//! Per-level pattern frequency dictionaries.

mod convergence;
mod format;
mod set;
mod trainer;

use std::cmp::Reverse;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::patchkey::{Level, PatchKey};
use crate::scalar::{ratio, Scalar};

pub use convergence::{default_epsilon, ConvergenceMonitor, ConvergenceStatus, Verdict, DEFAULT_LAGS};
pub use format::{load, save, FORMAT_VERSION, MAGIC};
pub(crate) use set::hex as hex_digest;
pub use set::{DictionarySet, ManifestEntry, MANIFEST_FILE};
pub use trainer::{train_sharded, TrainedModel, TrainerConfig, TrainerState, DEFAULT_CHUNK_SIZE, DEFAULT_TRACKED_SYMBOLS};

/// Training provenance carried alongside the counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Meta {
    /// Sorted, deduplicated corpus labels.
    pub corpus_tags: Vec<String>,
    /// Patches observed during training, before any pruning.
    pub patch_count: u64,
    /// Creation time in seconds since the Unix epoch (0 when unset).
    pub created: u64,
}

impl Meta {
    pub fn add_tag(&mut self, tag: impl Into<String>) {
        let tag = tag.into();
        if let Err(pos) = self.corpus_tags.binary_search(&tag) {
            self.corpus_tags.insert(pos, tag);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dictionary {
    level: Level,
    entries: HashMap<PatchKey, u64>,
    total: u64,
    meta: Meta,
}

impl Dictionary {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            entries: HashMap::new(),
            total: 0,
            meta: Meta::default(),
        }
    }

    pub fn from_counts(level: Level, counts: impl IntoIterator<Item = (PatchKey, u64)>) -> Result<Self> {
        let mut d = Self::new(level);
        for (k, c) in counts {
            d.add(k, c)?;
        }
        Ok(d)
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut Meta {
        &mut self.meta
    }

    pub fn get(&self, key: &PatchKey) -> Option<u64> {
        self.entries.get(key).copied()
    }

    pub fn contains(&self, key: &PatchKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PatchKey, u64)> {
        self.entries.iter().map(|(k, &c)| (k, c))
    }

    /// Adds `count` occurrences of `key`. Zero counts are ignored.
    pub fn add(&mut self, key: PatchKey, count: u64) -> Result<()> {
        if key.level() != self.level {
            return Err(Error::input(format!(
                "cannot add {} key to a {} dictionary",
                key.level(),
                self.level
            )));
        }
        if count > 0 {
            *self.entries.entry(key).or_insert(0) += count;
            self.total += count;
        }
        Ok(())
    }

    pub(crate) fn observe(&mut self, key: PatchKey) {
        debug_assert_eq!(key.level(), self.level);
        *self.entries.entry(key).or_insert(0) += 1;
        self.total += 1;
        self.meta.patch_count += 1;
    }

    /// Entries by descending frequency, ties broken by ascending key.
    pub fn canonical_entries(&self) -> Vec<(PatchKey, u64)> {
        let mut v: Vec<(PatchKey, u64)> = self.entries.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable_by_key(|&(k, c)| (Reverse(c), k));
        v
    }

    pub fn probability<T: Scalar>(&self, key: &PatchKey) -> Option<T> {
        self.get(key).map(|c| ratio(c, self.total))
    }

    /// Canonical rank (0 = most frequent) and probability of `key`.
    pub fn rank_and_probability<T: Scalar>(&self, key: &PatchKey) -> Option<(usize, T)> {
        let c = self.get(key)?;
        let rank = self
            .entries
            .iter()
            .filter(|&(k, &o)| o > c || (o == c && k < key))
            .count();
        Some((rank, ratio(c, self.total)))
    }

    /// Inserts every missing level-2 pattern with count 1, so any 2×2 block
    /// has a codeword.
    pub fn complete_level2(&mut self) {
        if self.level != Level::L2 {
            return;
        }
        for v in 0..16u8 {
            let key = PatchKey::from_packed(Level::L2, &[v << 4]).expect("valid nibble");
            if let std::collections::hash_map::Entry::Vacant(e) = self.entries.entry(key) {
                e.insert(1);
                self.total += 1;
            }
        }
    }
}

/// Pointwise sum of two same-level dictionaries.
pub fn merge(a: &Dictionary, b: &Dictionary) -> Result<Dictionary> {
    if a.level != b.level {
        return Err(Error::input(format!(
            "cannot merge {} and {} dictionaries",
            a.level, b.level
        )));
    }
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = big.clone();
    for (&k, &c) in &small.entries {
        *out.entries.entry(k).or_insert(0) += c;
    }
    out.total = a.total + b.total;
    out.meta = Meta {
        corpus_tags: {
            let mut t: Vec<String> = a.meta.corpus_tags.iter().chain(&b.meta.corpus_tags).cloned().collect();
            t.sort();
            t.dedup();
            t
        },
        patch_count: a.meta.patch_count + b.meta.patch_count,
        created: a.meta.created.max(b.meta.created),
    };
    Ok(out)
}

/// What [`prune`] removes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrunePolicy {
    /// Drop frequency-1 patterns at levels 8 and 16.
    pub drop_unit: bool,
    /// Also drop frequency-1 patterns at level 4.
    pub drop_unit_level4: bool,
    /// Keep the shortest canonical prefix whose mass reaches this fraction
    /// (levels 8 and 16 only).
    pub mass_fraction: Option<f64>,
    /// Hard cap on entries kept at levels 8 and 16.
    pub max_entries: usize,
}

pub const DEFAULT_MASS_FRACTION: f64 = 0.99;
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 20;

impl Default for PrunePolicy {
    fn default() -> Self {
        Self {
            drop_unit: true,
            drop_unit_level4: false,
            mass_fraction: Some(DEFAULT_MASS_FRACTION),
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl PrunePolicy {
    /// Keeps everything.
    pub fn none() -> Self {
        Self {
            drop_unit: false,
            drop_unit_level4: false,
            mass_fraction: None,
            max_entries: usize::MAX,
        }
    }
}

/// Smallest `k` such that the top `k` canonical entries (counts given in
/// canonical order) carry at least `fraction` of `total`.
pub(crate) fn prefix_for_mass(counts: impl IntoIterator<Item = u64>, total: u64, fraction: f64) -> usize {
    let mut cum = 0u128;
    let mut k = 0;
    for c in counts {
        if cum as f64 / total as f64 >= fraction {
            break;
        }
        cum += c as u128;
        k += 1;
    }
    k
}

pub fn prune(d: &Dictionary, policy: &PrunePolicy) -> Dictionary {
    let level = d.level;
    let big = matches!(level, Level::L8 | Level::L16);
    let drop_unit = (big && policy.drop_unit) || (level == Level::L4 && policy.drop_unit_level4);
    if level == Level::L2 || (!big && !drop_unit) {
        return d.clone();
    }

    let mut kept: Vec<(PatchKey, u64)> = d
        .canonical_entries()
        .into_iter()
        .filter(|&(_, c)| !(drop_unit && c == 1))
        .collect();

    if big {
        let mut limit = kept.len().min(policy.max_entries);
        if let Some(f) = policy.mass_fraction {
            let remaining: u64 = kept.iter().map(|&(_, c)| c).sum();
            if remaining > 0 {
                limit = limit.min(prefix_for_mass(kept.iter().map(|&(_, c)| c), remaining, f));
            }
        }
        kept.truncate(limit);
    }

    let mut out = Dictionary {
        level,
        entries: kept.into_iter().collect(),
        total: 0,
        meta: d.meta.clone(),
    };
    // Blank regions must stay codable at every level.
    for key in [PatchKey::zeros(level), PatchKey::ones(level)] {
        if let Some(c) = d.get(&key) {
            out.entries.insert(key, c);
        }
    }
    out.total = out.entries.values().sum();
    out
}
