//! The four-level dictionary family shared by encoder and decoder.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::Dictionary;
use crate::error::{Error, Result};
use crate::patchkey::{Level, PatchKey};

pub const MANIFEST_FILE: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "MLDICT-MANIFEST 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub level: Level,
    pub file: String,
    pub sha256: [u8; 32],
}

/// Canonical order of one coding dictionary.
#[derive(Clone, Debug)]
struct Ranked {
    keys: Vec<PatchKey>,
    freqs: Vec<u64>,
    rank: HashMap<PatchKey, u32>,
}

impl Ranked {
    fn new(d: &Dictionary) -> Self {
        let entries = d.canonical_entries();
        let rank = entries.iter().enumerate().map(|(i, &(k, _))| (k, i as u32)).collect();
        let (keys, freqs) = entries.into_iter().unzip();
        Self { keys, freqs, rank }
    }
}

/// Dictionaries for levels 2, 4, 8 and 16 plus the identity hash that
/// containers record.
///
/// The level-2 dictionary is completed to all 16 patterns for coding; the
/// stored (and hashed) form is the one supplied.
#[derive(Clone, Debug)]
pub struct DictionarySet {
    stored: [Dictionary; 4],
    digests: [[u8; 32]; 4],
    manifest_hash: [u8; 32],
    ranked: [Ranked; 4],
}

fn file_name(level: Level) -> String {
    format!("level{}.mld", level.side())
}

impl DictionarySet {
    /// Takes dictionaries in [`Level::ALL`] order.
    pub fn new(dicts: [Dictionary; 4]) -> Result<Self> {
        for (d, level) in dicts.iter().zip(Level::ALL) {
            if d.level() != level {
                return Err(Error::input(format!(
                    "expected a {level} dictionary in slot {}, got {}",
                    level.index(),
                    d.level()
                )));
            }
        }
        let digests = dicts.each_ref().map(|d| Sha256::digest(d.to_bytes()).into());
        let manifest_hash = manifest_hash(&digests);
        let ranked = dicts.each_ref().map(|d| {
            if d.level() == Level::L2 {
                let mut full = d.clone();
                full.complete_level2();
                Ranked::new(&full)
            } else {
                Ranked::new(d)
            }
        });
        Ok(Self {
            stored: dicts,
            digests,
            manifest_hash,
            ranked,
        })
    }

    /// Empty dictionaries at every level: every block descends to 2×2.
    pub fn empty() -> Self {
        Self::new(Level::ALL.map(Dictionary::new)).expect("levels are in order")
    }

    pub fn dictionary(&self, level: Level) -> &Dictionary {
        &self.stored[level.index()]
    }

    pub fn dictionaries(&self) -> &[Dictionary; 4] {
        &self.stored
    }

    pub fn manifest_hash(&self) -> [u8; 32] {
        self.manifest_hash
    }

    pub fn manifest_hash_hex(&self) -> String {
        hex(&self.manifest_hash)
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        Level::ALL
            .iter()
            .map(|&level| ManifestEntry {
                level,
                file: file_name(level),
                sha256: self.digests[level.index()],
            })
            .collect()
    }

    /// Whether `key` is codable at its level.
    pub fn contains(&self, key: &PatchKey) -> bool {
        self.ranked[key.level().index()].rank.contains_key(key)
    }

    pub fn rank_of(&self, key: &PatchKey) -> Option<u32> {
        self.ranked[key.level().index()].rank.get(key).copied()
    }

    pub fn key_at(&self, level: Level, rank: u32) -> Option<PatchKey> {
        self.ranked[level.index()].keys.get(rank as usize).copied()
    }

    /// Training frequency of the pattern at `rank` in the coding dictionary.
    pub fn frequency_at(&self, level: Level, rank: u32) -> Option<u64> {
        self.ranked[level.index()].freqs.get(rank as usize).copied()
    }

    /// Number of codable patterns at `level` (16 at level 2).
    pub fn coding_len(&self, level: Level) -> usize {
        self.ranked[level.index()].keys.len()
    }

    /// Writes one file per level plus the manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::from(MANIFEST_HEADER);
        manifest.push('\n');
        for (d, entry) in self.stored.iter().zip(self.manifest()) {
            let path = dir.join(&entry.file);
            std::fs::write(&path, d.to_bytes()).map_err(|e| Error::io(&path, e))?;
            writeln!(manifest, "{} {} {}", entry.level, entry.file, hex(&entry.sha256)).unwrap();
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    /// Loads a directory written by [`DictionarySet::save`], verifying every
    /// file against the manifest.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let entries = parse_manifest(&text)?;
        let mut dicts: [Option<Dictionary>; 4] = Default::default();
        for entry in entries {
            let path: PathBuf = dir.join(&entry.file);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let digest: [u8; 32] = Sha256::digest(&bytes).into();
            if digest != entry.sha256 {
                return Err(Error::corrupt(format!(
                    "{} does not match its manifest hash",
                    path.display()
                )));
            }
            let d = Dictionary::from_bytes(&bytes)?;
            if d.level() != entry.level {
                return Err(Error::corrupt(format!(
                    "{} holds a {} dictionary, manifest says {}",
                    path.display(),
                    d.level(),
                    entry.level
                )));
            }
            dicts[entry.level.index()] = Some(d);
        }
        let dicts = dicts.map(|d| d.expect("manifest lists every level"));
        Self::new(dicts)
    }
}

fn manifest_hash(digests: &[[u8; 32]; 4]) -> [u8; 32] {
    let mut h = Sha256::new();
    for d in digests {
        h.update(d);
    }
    h.finalize().into()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_hex32(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MANIFEST_HEADER) {
        return Err(Error::format("manifest header missing"));
    }
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [level, file, sha] = parts[..] else {
            return Err(Error::format(format!("bad manifest line {line:?}")));
        };
        let level: Level = level.parse()?;
        if file.contains('/') || file.contains('\\') || file == ".." {
            return Err(Error::format(format!("manifest file name {file:?} is not local")));
        }
        let sha256 = parse_hex32(sha).ok_or_else(|| Error::format(format!("bad hash in {line:?}")))?;
        if entries.iter().any(|e| e.level == level) {
            return Err(Error::format(format!("manifest lists {level} twice")));
        }
        entries.push(ManifestEntry {
            level,
            file: file.to_owned(),
            sha256,
        });
    }
    if entries.len() != 4 {
        return Err(Error::format("manifest must list all four levels"));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DictionarySet {
        let mut dicts = Level::ALL.map(Dictionary::new);
        dicts[0].add("L2:F".parse().unwrap(), 10).unwrap();
        dicts[1].add(PatchKey::zeros(Level::L4), 4).unwrap();
        dicts[3].add(PatchKey::zeros(Level::L16), 2).unwrap();
        DictionarySet::new(dicts).unwrap()
    }

    #[test]
    fn level2_is_completed_for_coding_only() {
        let set = sample();
        assert_eq!(set.dictionary(Level::L2).len(), 1);
        assert_eq!(set.coding_len(Level::L2), 16);
        assert_eq!(set.rank_of(&"L2:F".parse().unwrap()), Some(0));
        assert_eq!(set.key_at(Level::L2, 1).unwrap().digits(), "0");
        assert!(set.contains(&PatchKey::zeros(Level::L16)));
        assert!(!set.contains(&PatchKey::ones(Level::L16)));
    }

    #[test]
    fn save_load_preserves_hash() {
        let set = sample();
        let dir = tempfile::tempdir().unwrap();
        set.save(dir.path()).unwrap();
        let back = DictionarySet::load(dir.path()).unwrap();
        assert_eq!(back.manifest_hash(), set.manifest_hash());
        assert_eq!(back.dictionaries(), set.dictionaries());
    }

    #[test]
    fn tampered_file_is_detected() {
        let set = sample();
        let dir = tempfile::tempdir().unwrap();
        set.save(dir.path()).unwrap();
        let p = dir.path().join("level4.mld");
        let mut b = std::fs::read(&p).unwrap();
        b[20] ^= 1;
        std::fs::write(&p, b).unwrap();
        assert!(matches!(DictionarySet::load(dir.path()), Err(Error::Corruption(_))));
    }

    #[test]
    fn different_dictionaries_hash_differently() {
        assert_ne!(sample().manifest_hash(), DictionarySet::empty().manifest_hash());
    }

    #[test]
    fn wrong_slot_rejected() {
        let mut dicts = Level::ALL.map(Dictionary::new);
        dicts.swap(0, 1);
        assert!(DictionarySet::new(dicts).is_err());
    }
}
