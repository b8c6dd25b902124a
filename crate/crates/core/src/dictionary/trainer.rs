//! Corpus training: tile, buffer, shuffle, count in chunks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::convergence::{default_epsilon, ConvergenceMonitor};
use super::{merge, Dictionary};
use crate::error::Result;
use crate::imgproc::{pad_to_16, BinaryImage};
use crate::patchkey::{tile_keys, Level, PatchKey};
use crate::scalar::Scalar;

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_TRACKED_SYMBOLS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub chunk_size: usize,
    pub seed: u64,
    pub tracked_symbols: usize,
    /// Convergence tolerance per level, indexed by [`Level::index`].
    pub epsilon: [f64; 4],
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            chunk_size: DEFAULT_CHUNK_SIZE,
            seed: 0,
            tracked_symbols: DEFAULT_TRACKED_SYMBOLS,
            epsilon: Level::ALL.map(default_epsilon),
        }
    }
}

/// Accumulators for one training run (or one shard of it).
#[derive(Clone, Debug)]
pub struct TrainerState<T: Scalar = f64> {
    config: TrainerConfig,
    dicts: [Dictionary; 4],
    buffers: [Vec<PatchKey>; 4],
    monitors: [ConvergenceMonitor<T>; 4],
    flushes: u64,
    images: u64,
}

/// What a finished run produces.
#[derive(Clone, Debug)]
pub struct TrainedModel<T: Scalar = f64> {
    /// Indexed by [`Level::index`]; unpruned.
    pub dictionaries: [Dictionary; 4],
    pub monitors: [ConvergenceMonitor<T>; 4],
    pub images: u64,
}

impl<T: Scalar> TrainerState<T> {
    pub fn new(config: TrainerConfig) -> Self {
        assert!(config.chunk_size >= 1, "chunk size must be at least 1");
        let monitors = Level::ALL.map(|l| {
            ConvergenceMonitor::new(config.tracked_symbols, T::from_f64_lossy(config.epsilon[l.index()]))
        });
        Self {
            dicts: Level::ALL.map(Dictionary::new),
            buffers: Default::default(),
            monitors,
            flushes: 0,
            images: 0,
            config,
        }
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn dictionary(&self, level: Level) -> &Dictionary {
        &self.dicts[level.index()]
    }

    pub fn monitor(&self, level: Level) -> &ConvergenceMonitor<T> {
        &self.monitors[level.index()]
    }

    pub fn buffered(&self, level: Level) -> &[PatchKey] {
        &self.buffers[level.index()]
    }

    pub fn images(&self) -> u64 {
        self.images
    }

    /// Appends the non-overlapping tiling of the padded image at every level
    /// to the shuffle buffers. Nothing is counted until a flush.
    pub fn ingest(&mut self, img: &BinaryImage) {
        let padded = pad_to_16(img);
        for level in Level::ALL {
            let keys = tile_keys(padded.image(), level).expect("padded image tiles at every level");
            self.buffers[level.index()].extend(keys);
        }
        self.images += 1;
    }

    pub fn tag(&mut self, tag: &str) {
        for d in &mut self.dicts {
            d.meta_mut().add_tag(tag);
        }
    }

    fn rng(&self, level: Level) -> ChaCha8Rng {
        let stream = (level.index() as u64) << 56 ^ self.flushes.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        ChaCha8Rng::seed_from_u64(self.config.seed ^ stream)
    }

    fn count_chunk(&mut self, level: Level, chunk: &[PatchKey]) {
        let i = level.index();
        for &k in chunk {
            self.dicts[i].observe(k);
        }
        self.monitors[i].record(&self.dicts[i]);
    }

    fn drain(&mut self, final_partial: bool) {
        let size = self.config.chunk_size;
        for level in Level::ALL {
            let mut buf = std::mem::take(&mut self.buffers[level.index()]);
            let mut rng = self.rng(level);
            buf.shuffle(&mut rng);
            let full = buf.len() / size * size;
            for start in (0..full).step_by(size) {
                self.count_chunk(level, &buf[start..start + size]);
            }
            let rest = buf.split_off(full);
            if final_partial && !rest.is_empty() {
                self.count_chunk(level, &rest);
            } else {
                self.buffers[level.index()] = rest;
            }
        }
        self.flushes += 1;
    }

    /// Shuffles each level's buffer and counts every full chunk; a partial
    /// tail stays buffered for the next flush.
    pub fn flush_chunks(&mut self) {
        if self.buffers.iter().all(Vec::is_empty) {
            return;
        }
        self.drain(false);
    }

    /// Flushes everything, including the final partial chunks.
    pub fn finalize(mut self) -> TrainedModel<T> {
        if self.buffers.iter().any(|b| !b.is_empty()) {
            self.drain(true);
        }
        TrainedModel {
            dictionaries: self.dicts,
            monitors: self.monitors,
            images: self.images,
        }
    }
}

/// Trains each shard independently and merges the dictionaries.
pub fn train_sharded<'a, T: Scalar>(
    shards: impl IntoIterator<Item = &'a [BinaryImage]>,
    config: &TrainerConfig,
) -> Result<[Dictionary; 4]> {
    let mut acc = Level::ALL.map(Dictionary::new);
    for shard in shards {
        let mut state = TrainerState::<T>::new(config.clone());
        for img in shard {
            state.ingest(img);
        }
        let model = state.finalize();
        for (a, d) in acc.iter_mut().zip(&model.dictionaries) {
            *a = merge(a, d)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn random_image(w: usize, h: usize, seed: u64) -> BinaryImage {
        let mut s = seed | 1;
        BinaryImage::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s & 3 == 0
        })
    }

    #[test]
    fn ingest_all_ones_block() {
        let mut t = TrainerState::<f64>::new(TrainerConfig::default());
        t.ingest(&BinaryImage::from_fn(16, 16, |_, _| true));
        let expect = [(Level::L16, 1), (Level::L8, 4), (Level::L4, 16), (Level::L2, 64)];
        for (level, n) in expect {
            let buf = t.buffered(level);
            assert_eq!(buf.len(), n);
            assert!(buf.iter().all(|k| *k == PatchKey::ones(level)));
        }
    }

    #[test]
    fn level2_buffer_matches_direct_tiling() {
        let img = random_image(32, 32, 5);
        let mut t = TrainerState::<f64>::new(TrainerConfig::default());
        t.ingest(&img);
        let mut oracle: HashMap<u8, usize> = HashMap::new();
        for by in (0..32).step_by(2) {
            for bx in (0..32).step_by(2) {
                let v = img.get(bx, by) << 3 | img.get(bx + 1, by) << 2 | img.get(bx, by + 1) << 1 | img.get(bx + 1, by + 1);
                *oracle.entry(v).or_default() += 1;
            }
        }
        let mut got: HashMap<u8, usize> = HashMap::new();
        for k in t.buffered(Level::L2) {
            *got.entry(k.nibble(0)).or_default() += 1;
        }
        assert_eq!(t.buffered(Level::L2).len(), 256);
        assert_eq!(got, oracle);
    }

    #[test]
    fn chunking_arithmetic() {
        let config = TrainerConfig {
            chunk_size: 1000,
            ..TrainerConfig::default()
        };
        let mut t = TrainerState::<f64>::new(config);
        t.flush_chunks();
        assert_eq!(t.monitor(Level::L2).chunks(), 0);
        // 2500 buffered keys: two full chunks and a 500-key tail.
        t.buffers[0] = vec![PatchKey::zeros(Level::L2); 2500];
        t.flush_chunks();
        assert_eq!(t.dictionary(Level::L2).total(), 2000);
        assert_eq!(t.buffered(Level::L2).len(), 500);
        assert_eq!(t.monitor(Level::L2).chunks(), 2);
        let model = t.finalize();
        assert_eq!(model.dictionaries[0].total(), 2500);
        assert_eq!(model.monitors[0].chunks(), 3);
    }

    #[test]
    fn duplicate_images_double_counts() {
        let img = random_image(48, 32, 11);
        let mut once = TrainerState::<f64>::new(TrainerConfig::default());
        once.ingest(&img);
        let once = once.finalize();
        let mut twice = TrainerState::<f64>::new(TrainerConfig::default());
        twice.ingest(&img);
        twice.ingest(&img);
        let twice = twice.finalize();
        for (a, b) in once.dictionaries.iter().zip(&twice.dictionaries) {
            for (k, c) in a.iter() {
                assert_eq!(b.get(k), Some(2 * c));
            }
            assert_eq!(b.total(), 2 * a.total());
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let imgs: Vec<_> = (0..4).map(|i| random_image(64, 48, i + 1)).collect();
        let config = TrainerConfig {
            chunk_size: 100,
            seed: 42,
            ..TrainerConfig::default()
        };
        let run = || {
            let mut t = TrainerState::<f64>::new(config.clone());
            for img in &imgs {
                t.ingest(img);
                t.flush_chunks();
            }
            t.finalize()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.dictionaries, b.dictionaries);
        assert_eq!(a.monitors, b.monitors);

        let other = {
            let mut t = TrainerState::<f64>::new(TrainerConfig { seed: 43, ..config.clone() });
            for img in &imgs {
                t.ingest(img);
                t.flush_chunks();
            }
            t.finalize()
        };
        // Seed changes the trajectory, never the final counts.
        assert_eq!(a.dictionaries, other.dictionaries);
        assert_ne!(a.monitors[0], other.monitors[0]);
    }

    #[test]
    fn shards_merge_to_monolithic_counts() {
        let imgs: Vec<_> = (0..8).map(|i| random_image(40, 40, 100 + i)).collect();
        let config = TrainerConfig::default();
        let sharded = train_sharded::<f64>(imgs.chunks(3), &config).unwrap();
        let mut mono = TrainerState::<f64>::new(config.clone());
        for img in &imgs {
            mono.ingest(img);
        }
        let mono = mono.finalize();
        assert_eq!(sharded, mono.dictionaries);
    }
}
