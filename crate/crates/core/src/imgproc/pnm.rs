//! PBM (P1 / P4) reading and P4 writing.
//!
//! PBM stores 1 for black. Our bit 1 means "brighter than the threshold",
//! so samples are inverted on the way in and out.

use std::io::Write;

use super::BinaryImage;
use crate::error::{Error, Result};

pub fn write_pbm<W: Write>(img: &BinaryImage, mut out: W) -> std::io::Result<()> {
    write!(out, "P4\n{} {}\n", img.width(), img.height())?;
    let row_bytes = img.width().div_ceil(8);
    let mut row = vec![0u8; row_bytes];
    for y in 0..img.height() {
        row.fill(0);
        for x in 0..img.width() {
            if img.get(x, y) == 0 {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.write_all(&row)?;
    }
    out.flush()
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("PBM header: expected a number"));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("PBM header: number out of range"))
    }
}

pub fn read_pbm(data: &[u8]) -> Result<BinaryImage> {
    let raw = match data.get(..2) {
        Some(b"P4") => true,
        Some(b"P1") => false,
        _ => return Err(Error::format("not a PBM file (expected P1 or P4)")),
    };
    let mut hdr = Header { data, pos: 2 };
    let width = hdr.number()?;
    let height = hdr.number()?;
    if width == 0 || height == 0 {
        return Err(Error::format("PBM with zero dimension"));
    }
    let pixels = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("PBM dimensions overflow"))?;

    let mut bits = Vec::with_capacity(pixels.min(data.len() * 8));
    if raw {
        // Exactly one whitespace byte separates the header from the raster.
        let start = hdr.pos + 1;
        let row_bytes = width.div_ceil(8);
        let needed = row_bytes
            .checked_mul(height)
            .ok_or_else(|| Error::format("PBM dimensions overflow"))?;
        let raster = data
            .get(start..)
            .filter(|r| r.len() >= needed)
            .ok_or_else(|| Error::truncated("PBM raster shorter than header promises"))?;
        for row in raster[..needed].chunks_exact(row_bytes) {
            for x in 0..width {
                let black = row[x / 8] & (0x80 >> (x % 8)) != 0;
                bits.push((!black) as u8);
            }
        }
    } else {
        for &c in &data[hdr.pos..] {
            match c {
                b'0' => bits.push(1),
                b'1' => bits.push(0),
                c if c.is_ascii_whitespace() => {}
                _ => return Err(Error::format("unexpected byte in P1 raster")),
            }
            if bits.len() == pixels {
                break;
            }
        }
        if bits.len() < pixels {
            return Err(Error::truncated("P1 raster shorter than header promises"));
        }
    }
    BinaryImage::new(width, height, bits)
}
