//! MSB-first bit packing.
//!
//! The first bit written lands in bit 7 of byte 0. Unused trailing bits of
//! the last byte stay zero; decoders rely on that when validating payloads.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Appends the low `count` bits of `value`, most significant first.
    ///
    /// Panics if `count > 64` or `value` does not fit in `count` bits.
    pub fn write_bits(&mut self, value: u64, count: u32) {
        assert!(count <= 64, "cannot write {count} bits at once");
        assert!(
            count == 64 || value >> count == 0,
            "value {value:#x} does not fit in {count} bits"
        );
        let mut remaining = count;
        while remaining > 0 {
            let used = (self.bit_len % 8) as u32;
            if used == 0 {
                self.bytes.push(0);
            }
            let free = 8 - used;
            let take = free.min(remaining);
            let chunk = ((value >> (remaining - take)) & ((1u64 << take) - 1)) as u8;
            *self.bytes.last_mut().unwrap() |= chunk << (free - take);
            remaining -= take;
            self.bit_len += take as u64;
        }
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write_bits(bit as u64, 1);
    }
}

/// Reads bits back out of a buffer, never past `bit_len`.
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    /// Panics if `bit_len` exceeds the buffer.
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        assert!(bit_len <= bytes.len() as u64 * 8, "bit length exceeds buffer");
        Self {
            bytes,
            bit_len,
            pos: 0,
        }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len - self.pos
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bit_len {
            return Err(Error::truncated("bitstream exhausted"));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(bit == 1)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        assert!(count <= 64, "cannot read {count} bits at once");
        if (count as u64) > self.remaining() {
            return Err(Error::truncated(format!(
                "need {count} bits, {} left",
                self.remaining()
            )));
        }
        let mut value = 0u64;
        let mut remaining = count;
        while remaining > 0 {
            let used = (self.pos % 8) as u32;
            let avail = 8 - used;
            let take = avail.min(remaining);
            let byte = self.bytes[(self.pos / 8) as usize];
            let chunk = (byte >> (avail - take)) & ((1u16 << take) - 1) as u8;
            value = (value << take) | chunk as u64;
            remaining -= take;
            self.pos += take as u64;
        }
        Ok(value)
    }
}
