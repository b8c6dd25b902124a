//! Multi-level block coder.
//!
//! The padded image is cut into 16×16 blocks in raster order. Each block is
//! coded top-down: if its pattern is in the 16×16 dictionary it is emitted as
//! one codeword, otherwise an ESCAPE codeword is emitted and the four 8×8
//! quadrants are coded the same way, and so on down to 2×2, where the
//! (completed) dictionary covers every pattern.
//!
//! One canonical Huffman book per level is built for each image. Symbols are
//! the patterns the image actually uses, weighted by their training
//! frequency, plus ESCAPE at levels 16, 8 and 4 weighted by the number of
//! splits at that level.

mod container;

use std::collections::BTreeSet;

use crate::bitstream::{BitReader, BitWriter};
use crate::dictionary::DictionarySet;
use crate::error::{Error, Result};
use crate::huffman::{build_capped_lengths, kraft_numerator, CodeBook, MAX_CODE_LEN};
use crate::imgproc::{crop, pad_to_16, BinaryImage, PaddedImage, BLOCK_ALIGN};
use crate::patchkey::{Level, PatchKey};

pub use container::{CompressedContainer, TableEntry, CONTAINER_MAGIC, CONTAINER_VERSION};

/// A code-book symbol: ESCAPE or a pattern's rank in its level's dictionary.
///
/// The derived order (ESCAPE first, then ascending rank) is the canonical
/// symbol order of every book.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Escape,
    Pattern(u32),
}

/// Coding decision for one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanNode {
    /// The block is emitted as a single dictionary pattern.
    Coded(PatchKey),
    /// The block is escaped and its quadrants (TL, TR, BL, BR) follow.
    Split(Box<[PlanNode; 4]>),
}

impl PlanNode {
    /// Depth of the deepest split below this node (0 for a coded node).
    pub fn depth(&self) -> usize {
        match self {
            PlanNode::Coded(_) => 0,
            PlanNode::Split(children) => 1 + children.iter().map(PlanNode::depth).max().unwrap(),
        }
    }

    pub fn leaves(&self) -> Vec<PatchKey> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let PlanNode::Coded(k) = n {
                out.push(*k);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&PlanNode)) {
        f(self);
        if let PlanNode::Split(children) = self {
            for c in children.iter() {
                c.visit(f);
            }
        }
    }
}

/// Quadtree for one 16×16 block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub x: usize,
    pub y: usize,
    pub root: PlanNode,
}

fn plan_node(key: PatchKey, dicts: &DictionarySet) -> PlanNode {
    if key.level() == Level::L2 || dicts.contains(&key) {
        return PlanNode::Coded(key);
    }
    let quads = key.split().expect("level above 2 splits");
    PlanNode::Split(Box::new(quads.map(|q| plan_node(q, dicts))))
}

/// Greedy top-down plan for every 16×16 block, raster order.
pub fn plan(img: &PaddedImage, dicts: &DictionarySet) -> Vec<BlockPlan> {
    let im = img.image();
    let mut plans = Vec::with_capacity((im.width() / BLOCK_ALIGN) * (im.height() / BLOCK_ALIGN));
    for y in (0..im.height()).step_by(BLOCK_ALIGN) {
        for x in (0..im.width()).step_by(BLOCK_ALIGN) {
            let key = PatchKey::from_image(im, Level::L16, x, y);
            plans.push(BlockPlan {
                x,
                y,
                root: plan_node(key, dicts),
            });
        }
    }
    plans
}

/// The four per-image books, indexed by [`Level::index`]. A level nobody
/// visits has no book.
#[derive(Clone, Debug)]
pub struct ImageCodebooks {
    books: [Option<CodeBook<Symbol>>; 4],
}

impl ImageCodebooks {
    pub fn book(&self, level: Level) -> Option<&CodeBook<Symbol>> {
        self.books[level.index()].as_ref()
    }

    fn expect(&self, level: Level) -> Result<&CodeBook<Symbol>> {
        self.book(level)
            .ok_or_else(|| Error::corrupt(format!("payload needs a {level} code book the header lacks")))
    }

    /// Rebuilds books from header tables, rejecting anything an encoder
    /// could not have produced.
    fn from_tables(tables: &[Vec<TableEntry>; 4], dicts: &DictionarySet) -> Result<Self> {
        let mut books: [Option<CodeBook<Symbol>>; 4] = Default::default();
        for level in Level::ALL {
            let table = &tables[level.index()];
            if table.is_empty() {
                continue;
            }
            let limit = dicts.coding_len(level) as u64;
            let mut prev: Option<Symbol> = None;
            for e in table {
                if let Symbol::Pattern(r) = e.symbol {
                    if r as u64 >= limit {
                        return Err(Error::corrupt(format!(
                            "{level} table references rank {r}, dictionary has {limit} patterns"
                        )));
                    }
                }
                if prev.is_some_and(|p| p >= e.symbol) {
                    return Err(Error::corrupt(format!("{level} table is not in canonical order")));
                }
                prev = Some(e.symbol);
            }
            let lengths: Vec<u8> = table.iter().map(|e| e.length).collect();
            let complete = kraft_numerator(&lengths) == 1 << MAX_CODE_LEN;
            let valid = if lengths.len() == 1 { lengths[0] == 1 } else { complete };
            if !valid || lengths.iter().any(|&l| l == 0 || l > MAX_CODE_LEN) {
                return Err(Error::corrupt(format!("{level} code lengths do not form a Huffman code")));
            }
            let symbols = table.iter().map(|e| e.symbol).collect();
            books[level.index()] = Some(CodeBook::from_lengths(symbols, lengths).map_err(|e| Error::corrupt(e.to_string()))?);
        }
        Ok(Self { books })
    }

    fn tables(&self) -> [Vec<TableEntry>; 4] {
        self.books.each_ref().map(|b| match b {
            None => Vec::new(),
            Some(book) => book
                .symbols()
                .iter()
                .zip(book.lengths())
                .map(|(&symbol, &length)| TableEntry { symbol, length })
                .collect(),
        })
    }
}

/// Per-level books for one image.
pub fn build_image_codebooks(plans: &[BlockPlan], dicts: &DictionarySet) -> Result<ImageCodebooks> {
    let mut visited = [false; 4];
    let mut splits = [0u64; 4];
    let mut coded: [BTreeSet<u32>; 4] = Default::default();
    for p in plans {
        let mut level_of = |n: &PlanNode, level: Level| {
            visited[level.index()] = true;
            match n {
                PlanNode::Coded(k) => {
                    let rank = dicts.rank_of(k).expect("planned keys are in the dictionary");
                    coded[level.index()].insert(rank);
                }
                PlanNode::Split(_) => splits[level.index()] += 1,
            }
        };
        walk_levels(&p.root, Level::L16, &mut level_of);
    }

    let mut books: [Option<CodeBook<Symbol>>; 4] = Default::default();
    for level in Level::ALL {
        let i = level.index();
        if !visited[i] {
            continue;
        }
        let mut symbols = Vec::with_capacity(coded[i].len() + 1);
        let mut weights = Vec::with_capacity(coded[i].len() + 1);
        if level != Level::L2 {
            symbols.push(Symbol::Escape);
            weights.push(splits[i].max(1));
        }
        for &rank in &coded[i] {
            symbols.push(Symbol::Pattern(rank));
            weights.push(dicts.frequency_at(level, rank).expect("rank in range").max(1));
        }
        let lengths = build_capped_lengths(&weights)?;
        books[i] = Some(CodeBook::from_lengths(symbols, lengths)?);
    }
    Ok(ImageCodebooks { books })
}

fn walk_levels(node: &PlanNode, level: Level, f: &mut impl FnMut(&PlanNode, Level)) {
    f(node, level);
    if let PlanNode::Split(children) = node {
        let child = level.child().expect("splits stop above level 2");
        for c in children.iter() {
            walk_levels(c, child, f);
        }
    }
}

fn emit(node: &PlanNode, level: Level, books: &ImageCodebooks, dicts: &DictionarySet, out: &mut BitWriter) {
    let book = books.book(level).expect("every visited level has a book");
    match node {
        PlanNode::Coded(k) => {
            let rank = dicts.rank_of(k).expect("planned keys are in the dictionary");
            book.write(out, &Symbol::Pattern(rank));
        }
        PlanNode::Split(children) => {
            book.write(out, &Symbol::Escape);
            let child = level.child().expect("splits stop above level 2");
            for c in children.iter() {
                emit(c, child, books, dicts, out);
            }
        }
    }
}

pub fn encode(img: &BinaryImage, dicts: &DictionarySet) -> Result<CompressedContainer> {
    let (w, h) = (img.width(), img.height());
    if w > u32::MAX as usize || h > u32::MAX as usize {
        return Err(Error::input("image dimensions exceed the container limit"));
    }
    let padded = pad_to_16(img);
    let plans = plan(&padded, dicts);
    let books = build_image_codebooks(&plans, dicts)?;
    let mut out = BitWriter::new();
    for p in &plans {
        emit(&p.root, Level::L16, &books, dicts, &mut out);
    }
    Ok(CompressedContainer {
        flags: 0,
        orig_width: w as u32,
        orig_height: h as u32,
        dictionary_hash: dicts.manifest_hash(),
        tables: books.tables(),
        payload_bits: out.bit_len(),
        payload: out.into_bytes(),
    })
}

pub fn encode_to_bytes(img: &BinaryImage, dicts: &DictionarySet) -> Result<Vec<u8>> {
    Ok(encode(img, dicts)?.to_bytes())
}

fn decode_node(
    level: Level,
    x: usize,
    y: usize,
    books: &ImageCodebooks,
    dicts: &DictionarySet,
    input: &mut BitReader<'_>,
    out: &mut BinaryImage,
) -> Result<()> {
    let book = books.expect(level)?;
    match *book.read(input)? {
        Symbol::Pattern(rank) => {
            let key = dicts
                .key_at(level, rank)
                .ok_or_else(|| Error::corrupt(format!("{level} rank {rank} out of range")))?;
            key.paint(out, x, y);
        }
        Symbol::Escape => {
            let child = level
                .child()
                .ok_or_else(|| Error::corrupt("ESCAPE at level 2"))?;
            let h = child.side();
            for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
                decode_node(child, x + dx, y + dy, books, dicts, input, out)?;
            }
        }
    }
    Ok(())
}

pub fn decode(c: &CompressedContainer, dicts: &DictionarySet) -> Result<BinaryImage> {
    if c.dictionary_hash != dicts.manifest_hash() {
        return Err(Error::WrongDictionary {
            expected: crate::dictionary::hex_digest(&c.dictionary_hash),
            found: dicts.manifest_hash_hex(),
        });
    }
    let (w, h) = (c.orig_width as usize, c.orig_height as usize);
    if w == 0 || h == 0 {
        return Err(Error::corrupt("zero image dimension"));
    }
    let (bw, bh) = (w.div_ceil(BLOCK_ALIGN), h.div_ceil(BLOCK_ALIGN));
    // Every block costs at least one bit; this also bounds the allocation.
    if (bw as u128) * (bh as u128) > c.payload_bits as u128 {
        return Err(Error::corrupt(format!(
            "{bw}x{bh} blocks cannot fit in {} payload bits",
            c.payload_bits
        )));
    }
    if c.payload.len() as u64 != c.payload_bits.div_ceil(8) {
        return Err(Error::corrupt("payload length disagrees with its bit count"));
    }
    let books = ImageCodebooks::from_tables(&c.tables, dicts)?;

    let mut img = BinaryImage::zeros(bw * BLOCK_ALIGN, bh * BLOCK_ALIGN);
    let mut input = BitReader::new(&c.payload, c.payload_bits);
    for by in 0..bh {
        for bx in 0..bw {
            decode_node(Level::L16, bx * BLOCK_ALIGN, by * BLOCK_ALIGN, &books, dicts, &mut input, &mut img)
                .map_err(|e| match e {
                    Error::Truncated(m) => Error::corrupt(format!("payload underrun: {m}")),
                    other => other,
                })?;
        }
    }
    if input.remaining() != 0 {
        return Err(Error::corrupt(format!(
            "payload overrun: {} bits left after the last block",
            input.remaining()
        )));
    }
    let tail = c.payload_bits % 8;
    if tail != 0 && c.payload.last().is_some_and(|&b| b & (0xFF >> tail) != 0) {
        return Err(Error::corrupt("nonzero padding bits after the payload"));
    }
    crop(&PaddedImage::from_parts(img, w, h))
}

pub fn decode_bytes(data: &[u8], dicts: &DictionarySet) -> Result<BinaryImage> {
    decode(&CompressedContainer::from_bytes(data)?, dicts)
}

/// Uncompressed size at 1 bit per pixel over the container size.
pub fn compression_ratio(original: &BinaryImage, c: &CompressedContainer) -> f64 {
    ratio_for_bytes(original.pixel_count(), c.byte_len())
}

/// `pixels / (8 × bytes)`.
pub fn ratio_for_bytes(pixels: u64, bytes: usize) -> f64 {
    pixels as f64 / (8.0 * bytes as f64)
}

#[cfg(test)]
mod tests;
