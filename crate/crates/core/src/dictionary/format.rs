//! Binary dictionary files.
//!
//! ```text
//! magic      "MLDICT"
//! version    u16
//! level      u8            block side: 2, 4, 8 or 16
//! entries    u64
//! total      u64
//! patches    u64           meta: patches observed in training
//! created    u64           meta: unix seconds
//! tags       u16 count, then (u16 length, UTF-8 bytes) each
//! entry*     packed key digits (high nibble first), frequency varint
//! crc32      u32           over every preceding byte
//! ```
//!
//! Integers are little-endian. Entries appear in canonical order (descending
//! frequency, then ascending key), so equal dictionaries give equal files.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::path::Path;

use super::{Dictionary, Meta};
use crate::error::{Error, Result};
use crate::patchkey::{Level, PatchKey};
use crate::wire::{put_u16, put_u32, put_u64, put_varint, Cursor};

pub const MAGIC: &[u8; 6] = b"MLDICT";
pub const FORMAT_VERSION: u16 = 1;

impl Dictionary {
    pub fn to_bytes(&self) -> Vec<u8> {
        let key_bytes = self.level.side() * self.level.side() / 8;
        let mut out = Vec::with_capacity(64 + self.len() * (key_bytes.max(1) + 3));
        out.extend_from_slice(MAGIC);
        put_u16(&mut out, FORMAT_VERSION);
        out.push(self.level.side() as u8);
        put_u64(&mut out, self.len() as u64);
        put_u64(&mut out, self.total);
        put_u64(&mut out, self.meta.patch_count);
        put_u64(&mut out, self.meta.created);
        put_u16(&mut out, self.meta.corpus_tags.len() as u16);
        for tag in &self.meta.corpus_tags {
            let b = tag.as_bytes();
            let len = b.len().min(u16::MAX as usize);
            put_u16(&mut out, len as u16);
            out.extend_from_slice(&b[..len]);
        }
        for (key, count) in self.canonical_entries() {
            out.extend_from_slice(key.packed());
            put_varint(&mut out, count);
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < MAGIC.len() {
            return if MAGIC.starts_with(data) {
                Err(Error::truncated("dictionary file ends inside the magic"))
            } else {
                Err(Error::format("not a dictionary file"))
            };
        }
        if &data[..MAGIC.len()] != MAGIC {
            return Err(Error::format("not a dictionary file (bad magic)"));
        }
        let mut c = Cursor::new(data, "dictionary file");
        c.take(MAGIC.len())?;
        let version = c.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let level = Level::from_side(c.u8()? as usize).map_err(|e| Error::corrupt(e.to_string()))?;
        let count = c.u64()?;
        let total = c.u64()?;
        let patch_count = c.u64()?;
        let created = c.u64()?;
        let ntags = c.u16()?;
        let mut corpus_tags = Vec::with_capacity(ntags as usize);
        for _ in 0..ntags {
            let len = c.u16()? as usize;
            let s = std::str::from_utf8(c.take(len)?)
                .map_err(|_| Error::corrupt("corpus tag is not UTF-8"))?;
            corpus_tags.push(s.to_owned());
        }

        let key_len = level.side() * level.side() / 8;
        let key_len = key_len.max(1);
        // Every entry takes at least key_len + 1 bytes, so a count larger than
        // that can only mean the file was cut short.
        if count > (c.remaining() / (key_len + 1)) as u64 {
            return Err(Error::truncated(format!(
                "header promises {count} entries but only {} bytes follow",
                c.remaining()
            )));
        }
        let mut entries = HashMap::with_capacity(count as usize);
        let mut prev: Option<(u64, PatchKey)> = None;
        let mut sum = 0u64;
        for _ in 0..count {
            let key = PatchKey::from_packed(level, c.take(key_len)?)
                .map_err(|e| Error::corrupt(e.to_string()))?;
            let freq = c.varint()?;
            if freq == 0 {
                return Err(Error::corrupt(format!("{key} has zero frequency")));
            }
            if let Some(p) = prev {
                if (Reverse(p.0), p.1) >= (Reverse(freq), key) {
                    return Err(Error::corrupt("entries are not in canonical order"));
                }
            }
            prev = Some((freq, key));
            sum = sum
                .checked_add(freq)
                .ok_or_else(|| Error::corrupt("frequencies overflow"))?;
            entries.insert(key, freq);
        }
        let body_len = c.position();
        let stored = c.u32()?;
        let computed = crc32fast::hash(&data[..body_len]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        if c.remaining() != 0 {
            return Err(Error::format(format!(
                "{} unexpected bytes after the checksum",
                c.remaining()
            )));
        }
        if sum != total {
            return Err(Error::corrupt(format!(
                "frequencies sum to {sum}, header says {total}"
            )));
        }
        Ok(Dictionary {
            level,
            entries,
            total,
            meta: Meta {
                corpus_tags,
                patch_count,
                created,
            },
        })
    }
}

pub fn save(d: &Dictionary, path: &Path) -> Result<()> {
    std::fs::write(path, d.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Dictionary> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Dictionary::from_bytes(&data)
}
