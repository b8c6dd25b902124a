//! Container layout (all integers little-endian):
//!
//! ```text
//! magic           "MLBC"
//! version         u16
//! flags           u16          reserved, must be 0
//! orig_width      u32
//! orig_height     u32
//! dict_hash       [u8; 32]     SHA-256 identity of the dictionary set
//! table × 4       levels 16, 8, 4, 2 in that order:
//!                   count u32  number of symbols, ESCAPE included
//!                   levels 16/8/4: ESCAPE's code length u8, then
//!                   (rank varint, code length u8) × (count - 1)
//!                   level 2: (rank varint, code length u8) × count
//! payload_bits    u64
//! payload         ceil(payload_bits / 8) bytes, MSB-first
//! crc32           u32          over every preceding byte
//! ```

use super::Symbol;
use crate::error::{Error, Result};
use crate::patchkey::Level;
use crate::wire::{put_u16, put_u32, put_u64, put_varint, Cursor};

pub const CONTAINER_MAGIC: &[u8; 4] = b"MLBC";
pub const CONTAINER_VERSION: u16 = 1;

/// One header table row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub symbol: Symbol,
    pub length: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedContainer {
    pub(crate) flags: u16,
    pub(crate) orig_width: u32,
    pub(crate) orig_height: u32,
    pub(crate) dictionary_hash: [u8; 32],
    /// Indexed by [`Level::index`].
    pub(crate) tables: [Vec<TableEntry>; 4],
    pub(crate) payload_bits: u64,
    pub(crate) payload: Vec<u8>,
}

impl CompressedContainer {
    pub fn orig_width(&self) -> u32 {
        self.orig_width
    }

    pub fn orig_height(&self) -> u32 {
        self.orig_height
    }

    pub fn dictionary_hash(&self) -> &[u8; 32] {
        &self.dictionary_hash
    }

    pub fn table(&self, level: Level) -> &[TableEntry] {
        &self.tables[level.index()]
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload_bits
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    fn header_len(&self) -> usize {
        let mut n = 4 + 2 + 2 + 4 + 4 + 32;
        for level in Level::TOP_DOWN {
            n += 4;
            for e in &self.tables[level.index()] {
                n += 1 + match e.symbol {
                    Symbol::Escape => 0,
                    Symbol::Pattern(r) => varint_len(r as u64),
                };
            }
        }
        n + 8
    }

    /// Serialized size in bytes.
    pub fn byte_len(&self) -> usize {
        self.header_len() + self.payload.len() + 4
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(CONTAINER_MAGIC);
        put_u16(&mut out, CONTAINER_VERSION);
        put_u16(&mut out, self.flags);
        put_u32(&mut out, self.orig_width);
        put_u32(&mut out, self.orig_height);
        out.extend_from_slice(&self.dictionary_hash);
        for level in Level::TOP_DOWN {
            let table = &self.tables[level.index()];
            put_u32(&mut out, table.len() as u32);
            for (i, e) in table.iter().enumerate() {
                match e.symbol {
                    Symbol::Escape => {
                        debug_assert!(i == 0 && level != Level::L2, "ESCAPE is implicit symbol 0");
                    }
                    Symbol::Pattern(r) => put_varint(&mut out, r as u64),
                }
                out.push(e.length);
            }
        }
        put_u64(&mut out, self.payload_bits);
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        out
    }

    /// Parses and checks magic, version, checksum and framing. Table contents
    /// are validated against the dictionaries at decode time.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < CONTAINER_MAGIC.len() || &data[..4] != CONTAINER_MAGIC {
            return Err(Error::format("not a container (bad magic)"));
        }
        let mut c = Cursor::new(data, "container");
        c.take(4)?;
        let version = c.u16()?;
        if version != CONTAINER_VERSION {
            return Err(Error::Version {
                found: version,
                expected: CONTAINER_VERSION,
            });
        }
        if data.len() < 8 {
            return Err(Error::truncated("container too short"));
        }
        let body = &data[..data.len() - 4];
        let stored = u32::from_le_bytes(data[data.len() - 4..].try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }

        let mut c = Cursor::new(body, "container");
        c.take(6)?;
        let flags = c.u16()?;
        if flags != 0 {
            return Err(Error::format(format!("unknown container flags {flags:#06x}")));
        }
        let orig_width = c.u32()?;
        let orig_height = c.u32()?;
        let dictionary_hash: [u8; 32] = c.take(32)?.try_into().unwrap();
        let mut tables: [Vec<TableEntry>; 4] = Default::default();
        for level in Level::TOP_DOWN {
            let count = c.u32()? as usize;
            // Each row is at least one byte.
            if count > c.remaining() {
                return Err(Error::corrupt(format!("{level} table claims {count} rows")));
            }
            let mut table = Vec::with_capacity(count);
            for i in 0..count {
                let symbol = if i == 0 && level != Level::L2 {
                    Symbol::Escape
                } else {
                    let r = c.varint()?;
                    Symbol::Pattern(
                        u32::try_from(r).map_err(|_| Error::corrupt("pattern rank exceeds u32"))?,
                    )
                };
                table.push(TableEntry {
                    symbol,
                    length: c.u8()?,
                });
            }
            tables[level.index()] = table;
        }
        let payload_bits = c.u64()?;
        let payload_len = payload_bits.div_ceil(8);
        if payload_len != c.remaining() as u64 {
            return Err(Error::corrupt(format!(
                "payload of {payload_bits} bits needs {payload_len} bytes, {} present",
                c.remaining()
            )));
        }
        let payload = c.take(payload_len as usize)?.to_vec();
        Ok(Self {
            flags,
            orig_width,
            orig_height,
            dictionary_hash,
            tables,
            payload_bits,
            payload,
        })
    }
}

fn varint_len(v: u64) -> usize {
    (64 - v.leading_zeros() as usize).max(1).div_ceil(7)
}
