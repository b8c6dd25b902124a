//! Canonical Huffman codes.
//!
//! Lengths come from a standard Huffman merge with a deterministic tie-break
//! (lowest weight first, then the earliest-created node). Codewords are then
//! assigned canonically from the lengths alone: sort by (length, symbol
//! position) and count upwards, so a decoder only needs the symbol order and
//! the length of each symbol.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::hash::Hash;

use crate::bitstream::{BitReader, BitWriter};
use crate::error::{Error, Result};

/// Longest codeword we accept.
pub const MAX_CODE_LEN: u8 = 32;

/// Optimal prefix-code lengths for `weights`, in input order.
///
/// A one-symbol alphabet gets a single 1-bit code.
pub fn build_lengths(weights: &[u64]) -> Result<Vec<u8>> {
    match weights.len() {
        0 => return Err(Error::input("cannot build a code for an empty alphabet")),
        1 => return Ok(vec![1]),
        _ => {}
    }
    if weights.contains(&0) {
        return Err(Error::input("symbol weights must be positive"));
    }

    let n = weights.len();
    // Leaves are nodes 0..n; merged nodes get increasing ids after them.
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u128, usize)>> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Reverse((w as u128, i)))
        .collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, next)));
        next += 1;
    }

    // Parents always have larger ids than their children.
    let root = next - 1;
    let mut depth = vec![0u32; 2 * n - 1];
    for id in (0..root).rev() {
        depth[id] = depth[parent[id]] + 1;
    }
    let lengths: Vec<u32> = depth[..n].to_vec();
    if let Some(&max) = lengths.iter().max() {
        if max > MAX_CODE_LEN as u32 {
            return Err(Error::input(format!(
                "Huffman code would need {max}-bit codewords (limit {MAX_CODE_LEN})"
            )));
        }
    }
    Ok(lengths.into_iter().map(|l| l as u8).collect())
}

/// Like [`build_lengths`], but when the optimal code would exceed
/// [`MAX_CODE_LEN`] the weights are repeatedly halved (never below 1) until
/// it fits. Deterministic; optimal whenever no scaling was needed.
pub fn build_capped_lengths(weights: &[u64]) -> Result<Vec<u8>> {
    let mut scaled = weights.to_vec();
    loop {
        match build_lengths(&scaled) {
            Ok(l) => return Ok(l),
            Err(e) if scaled.iter().all(|&w| w <= 1) => return Err(e),
            Err(_) => scaled.iter_mut().for_each(|w| *w = (*w >> 1).max(1)),
        }
    }
}

/// Σ 2^(32 - len). Equals 2^32 exactly for a complete code.
pub fn kraft_numerator(lengths: &[u8]) -> u64 {
    lengths
        .iter()
        .map(|&l| 1u64 << (MAX_CODE_LEN - l.min(MAX_CODE_LEN)))
        .sum()
}

/// Canonical codewords for the given lengths, in symbol order.
pub fn canonical_codes(lengths: &[u8]) -> Result<Vec<u32>> {
    if let Some(&bad) = lengths.iter().find(|&&l| l == 0 || l > MAX_CODE_LEN) {
        return Err(Error::input(format!("code length {bad} outside 1..={MAX_CODE_LEN}")));
    }
    if kraft_numerator(lengths) > 1u64 << MAX_CODE_LEN {
        return Err(Error::input("code lengths violate the Kraft inequality"));
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (lengths[i], i));

    let mut codes = vec![0u32; lengths.len()];
    let mut code = 0u64;
    let mut prev_len = 0u8;
    for i in order {
        code <<= lengths[i] - prev_len;
        codes[i] = code as u32;
        code += 1;
        prev_len = lengths[i];
    }
    Ok(codes)
}

/// An immutable canonical code over symbols of type `S`.
#[derive(Clone, Debug)]
pub struct CodeBook<S> {
    symbols: Vec<S>,
    lengths: Vec<u8>,
    codes: Vec<u32>,
    index: HashMap<S, usize>,
    // Decode tables indexed by code length.
    first_code: [u64; MAX_CODE_LEN as usize + 1],
    count: [u32; MAX_CODE_LEN as usize + 1],
    base: [u32; MAX_CODE_LEN as usize + 1],
    sorted: Vec<u32>,
    max_len: u8,
}

impl<S: Clone + Eq + Hash> CodeBook<S> {
    /// Builds Huffman lengths from `weights` and canonicalizes them.
    pub fn from_weights(symbols: Vec<S>, weights: &[u64]) -> Result<Self> {
        if symbols.len() != weights.len() {
            return Err(Error::input("one weight per symbol is required"));
        }
        let lengths = build_lengths(weights)?;
        Self::from_lengths(symbols, lengths)
    }

    /// Canonical book from explicit lengths. Symbols must be distinct.
    pub fn from_lengths(symbols: Vec<S>, lengths: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != lengths.len() {
            return Err(Error::input("need a nonempty alphabet with one length per symbol"));
        }
        let codes = canonical_codes(&lengths)?;
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::input("duplicate symbol in code book"));
            }
        }

        let mut sorted: Vec<u32> = (0..symbols.len() as u32).collect();
        sorted.sort_by_key(|&i| (lengths[i as usize], i));
        let mut count = [0u32; MAX_CODE_LEN as usize + 1];
        for &l in &lengths {
            count[l as usize] += 1;
        }
        let mut first_code = [0u64; MAX_CODE_LEN as usize + 1];
        let mut base = [0u32; MAX_CODE_LEN as usize + 1];
        let mut code = 0u64;
        let mut seen = 0u32;
        for l in 1..=MAX_CODE_LEN as usize {
            code = (code + count[l - 1] as u64) << 1;
            first_code[l] = code;
            base[l] = seen;
            seen += count[l];
        }
        let max_len = *lengths.iter().max().unwrap();
        Ok(Self {
            symbols,
            lengths,
            codes,
            index,
            first_code,
            count,
            base,
            sorted,
            max_len,
        })
    }
}

impl<S: Eq + Hash> CodeBook<S> {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[S] {
        &self.symbols
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn index_of(&self, symbol: &S) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// `(codeword, length)` for a symbol.
    pub fn code_of(&self, symbol: &S) -> Option<(u32, u8)> {
        self.index_of(symbol).map(|i| (self.codes[i], self.lengths[i]))
    }

    pub fn write_index(&self, out: &mut BitWriter, i: usize) {
        out.write_bits(self.codes[i] as u64, self.lengths[i] as u32);
    }

    /// Panics if the symbol is not in the book.
    pub fn write(&self, out: &mut BitWriter, symbol: &S) {
        let i = self.index_of(symbol).expect("symbol not present in code book");
        self.write_index(out, i);
    }

    /// Reads one codeword and returns the symbol's position in the book.
    pub fn read_index(&self, input: &mut BitReader<'_>) -> Result<usize> {
        let mut code = 0u64;
        for len in 1..=self.max_len as usize {
            code = (code << 1) | input.read_bit()? as u64;
            let offset = code.wrapping_sub(self.first_code[len]);
            if offset < self.count[len] as u64 {
                return Ok(self.sorted[(self.base[len] as u64 + offset) as usize] as usize);
            }
        }
        Err(Error::corrupt("bit pattern is not a codeword"))
    }

    pub fn read(&self, input: &mut BitReader<'_>) -> Result<&S> {
        let i = self.read_index(input)?;
        Ok(&self.symbols[i])
    }

    /// Σ weight·length, the encoded size of a message with these counts.
    pub fn cost(&self, weights: &[u64]) -> u128 {
        weights
            .iter()
            .zip(&self.lengths)
            .map(|(&w, &l)| w as u128 * l as u128)
            .sum()
    }
}
