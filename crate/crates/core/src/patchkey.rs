//! Canonical serialization of n×n binary blocks.
//!
//! A 2×2 block `[[b1, b2], [b3, b4]]` becomes the hex digit of the nibble
//! `b1 b2 b3 b4` (b1 most significant). Larger blocks concatenate the keys of
//! their four quadrants in the order top-left, top-right, bottom-left,
//! bottom-right. Unrolled, the bit string is the block read in Morton order
//! with the row bit above the column bit, which is what [`PatchKey`] stores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imgproc::BinaryImage;

/// Block side length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    L2,
    L4,
    L8,
    L16,
}

impl Level {
    /// Finest to coarsest.
    pub const ALL: [Level; 4] = [Level::L2, Level::L4, Level::L8, Level::L16];
    /// Encoder descent order.
    pub const TOP_DOWN: [Level; 4] = [Level::L16, Level::L8, Level::L4, Level::L2];

    pub fn from_side(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Level::L2),
            4 => Ok(Level::L4),
            8 => Ok(Level::L8),
            16 => Ok(Level::L16),
            _ => Err(Error::input(format!("block side {n} is not one of 2, 4, 8, 16"))),
        }
    }

    pub const fn side(self) -> usize {
        match self {
            Level::L2 => 2,
            Level::L4 => 4,
            Level::L8 => 8,
            Level::L16 => 16,
        }
    }

    pub const fn bit_count(self) -> usize {
        self.side() * self.side()
    }

    pub const fn digit_count(self) -> usize {
        self.bit_count() / 4
    }

    const fn byte_count(self) -> usize {
        self.bit_count().div_ceil(8)
    }

    /// Position in [`Level::ALL`].
    pub const fn index(self) -> usize {
        match self {
            Level::L2 => 0,
            Level::L4 => 1,
            Level::L8 => 2,
            Level::L16 => 3,
        }
    }

    pub fn child(self) -> Option<Level> {
        match self {
            Level::L2 => None,
            Level::L4 => Some(Level::L2),
            Level::L8 => Some(Level::L4),
            Level::L16 => Some(Level::L8),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.side())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .strip_prefix('L')
            .unwrap_or(s)
            .parse::<usize>()
            .map_err(|_| Error::format(format!("bad level {s:?}")))?;
        Level::from_side(n).map_err(|e| Error::format(e.to_string()))
    }
}

/// Morton index of (x, y) inside a 16×16 block; lower levels use the same
/// table restricted to their side length.
const fn morton_table() -> [u8; 256] {
    let mut t = [0u8; 256];
    let mut y = 0;
    while y < 16 {
        let mut x = 0;
        while x < 16 {
            let mut i = 0usize;
            let mut k = 0;
            while k < 4 {
                i |= ((x >> k) & 1) << (2 * k);
                i |= ((y >> k) & 1) << (2 * k + 1);
                k += 1;
            }
            t[y * 16 + x] = i as u8;
            x += 1;
        }
        y += 1;
    }
    t
}

static MORTON: [u8; 256] = morton_table();

#[inline]
fn morton(x: usize, y: usize) -> usize {
    MORTON[y * 16 + x] as usize
}

/// Level-tagged hex key of a binary block.
///
/// Ordering is by level, then lexicographic on the hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchKey {
    level: Level,
    // Morton-ordered bits, MSB first; bytes past the level's length are zero.
    bits: [u8; 32],
}

impl PatchKey {
    pub fn zeros(level: Level) -> Self {
        Self { level, bits: [0; 32] }
    }

    pub fn ones(level: Level) -> Self {
        let mut bits = [0u8; 32];
        if level == Level::L2 {
            bits[0] = 0xF0;
        } else {
            bits[..level.byte_count()].fill(0xFF);
        }
        Self { level, bits }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// True for the all-zero and all-one patterns.
    pub fn is_uniform(&self) -> bool {
        *self == Self::zeros(self.level) || *self == Self::ones(self.level)
    }

    #[inline]
    fn bit(&self, i: usize) -> u8 {
        (self.bits[i / 8] >> (7 - i % 8)) & 1
    }

    #[inline]
    fn set_bit(&mut self, i: usize) {
        self.bits[i / 8] |= 0x80 >> (i % 8);
    }

    /// The `i`-th hex digit as a value in `0..16`.
    pub fn nibble(&self, i: usize) -> u8 {
        let b = self.bits[i / 2];
        if i.is_multiple_of(2) {
            b >> 4
        } else {
            b & 0x0F
        }
    }

    /// Hex digits packed two per byte, high nibble first. Level 2 yields one
    /// byte with the digit in the high nibble.
    pub fn packed(&self) -> &[u8] {
        &self.bits[..self.level.byte_count()]
    }

    pub fn from_packed(level: Level, packed: &[u8]) -> Result<Self> {
        if packed.len() != level.byte_count() {
            return Err(Error::format(format!(
                "{level} key needs {} packed bytes, got {}",
                level.byte_count(),
                packed.len()
            )));
        }
        if level == Level::L2 && packed[0] & 0x0F != 0 {
            return Err(Error::format("level-2 key has a nonzero padding nibble"));
        }
        let mut bits = [0u8; 32];
        bits[..packed.len()].copy_from_slice(packed);
        Ok(Self { level, bits })
    }

    /// Uppercase hex digit string.
    pub fn digits(&self) -> String {
        (0..self.level.digit_count())
            .map(|i| char::from_digit(self.nibble(i) as u32, 16).unwrap().to_ascii_uppercase())
            .collect()
    }

    pub fn from_digits(level: Level, digits: &str) -> Result<Self> {
        if digits.len() != level.digit_count() {
            return Err(Error::format(format!(
                "{level} key needs {} hex digits, got {}",
                level.digit_count(),
                digits.len()
            )));
        }
        let mut bits = [0u8; 32];
        for (i, c) in digits.chars().enumerate() {
            let v = match c {
                '0'..='9' | 'A'..='F' => c.to_digit(16).unwrap() as u8,
                _ => return Err(Error::format(format!("invalid key digit {c:?}"))),
            };
            bits[i / 2] |= if i % 2 == 0 { v << 4 } else { v };
        }
        Ok(Self { level, bits })
    }

    /// Reads the `level`-sized block whose top-left corner is `(x0, y0)`.
    pub fn from_image(img: &BinaryImage, level: Level, x0: usize, y0: usize) -> Self {
        let n = level.side();
        debug_assert!(x0 + n <= img.width() && y0 + n <= img.height());
        let mut key = Self::zeros(level);
        let w = img.width();
        let bits = img.bits();
        for y in 0..n {
            let row = &bits[(y0 + y) * w + x0..(y0 + y) * w + x0 + n];
            for (x, &b) in row.iter().enumerate() {
                if b != 0 {
                    key.set_bit(morton(x, y));
                }
            }
        }
        key
    }

    /// Writes this block into `img` with its top-left corner at `(x0, y0)`.
    pub fn paint(&self, img: &mut BinaryImage, x0: usize, y0: usize) {
        let n = self.level.side();
        for y in 0..n {
            for x in 0..n {
                img.set(x0 + x, y0 + y, self.bit(morton(x, y)) == 1);
            }
        }
    }

    /// The four quadrant keys (TL, TR, BL, BR). Equivalent to splitting the
    /// hex digit string into four equal parts.
    pub fn split(&self) -> Result<[PatchKey; 4]> {
        let child = self
            .level
            .child()
            .ok_or_else(|| Error::input("a level-2 key has no quadrants"))?;
        let quarter = child.bit_count();
        let mut out = [PatchKey::zeros(child); 4];
        for (q, key) in out.iter_mut().enumerate() {
            if quarter % 8 == 0 {
                let (start, len) = (q * quarter / 8, quarter / 8);
                key.bits[..len].copy_from_slice(&self.bits[start..start + len]);
            } else {
                key.bits[0] = self.nibble(q) << 4;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PatchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.digits())
    }
}

impl fmt::Debug for PatchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PatchKey({self})")
    }
}

impl FromStr for PatchKey {
    type Err = Error;

    /// Parses the `L4:F000` text form.
    fn from_str(s: &str) -> Result<Self> {
        let (level, digits) = s
            .split_once(':')
            .ok_or_else(|| Error::format(format!("key {s:?} lacks a level prefix")))?;
        PatchKey::from_digits(level.parse()?, digits)
    }
}

/// Keys the row-major `n×n` bit matrix `block`.
pub fn block_to_key(block: &[u8], n: usize) -> Result<PatchKey> {
    let level = Level::from_side(n)?;
    if block.len() != n * n {
        return Err(Error::input(format!(
            "{n}x{n} block needs {} bits, got {}",
            n * n,
            block.len()
        )));
    }
    let img = BinaryImage::new(n, n, block.to_vec())?;
    Ok(PatchKey::from_image(&img, level, 0, 0))
}

/// Row-major bit matrix of a key.
pub fn key_to_block(key: &PatchKey) -> Vec<u8> {
    let n = key.level().side();
    let mut img = BinaryImage::zeros(n, n);
    key.paint(&mut img, 0, 0);
    img.bits().to_vec()
}

pub fn split_key(key: &PatchKey) -> Result<[PatchKey; 4]> {
    key.split()
}

/// Keys of the non-overlapping `level` tiling, block rows top to bottom,
/// blocks left to right.
pub fn tile_keys(img: &BinaryImage, level: Level) -> Result<Vec<PatchKey>> {
    let n = level.side();
    if !img.width().is_multiple_of(n) || !img.height().is_multiple_of(n) {
        return Err(Error::input(format!(
            "{}x{} image does not tile into {n}x{n} blocks",
            img.width(),
            img.height()
        )));
    }
    let mut keys = Vec::with_capacity((img.width() / n) * (img.height() / n));
    for by in (0..img.height()).step_by(n) {
        for bx in (0..img.width()).step_by(n) {
            keys.push(PatchKey::from_image(img, level, bx, by));
        }
    }
    Ok(keys)
}
