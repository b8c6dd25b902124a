use super::*;
use crate::dictionary::{Dictionary, TrainerConfig, TrainerState};
use proptest::prelude::*;

fn set_with(entries: &[(PatchKey, u64)]) -> DictionarySet {
    let mut dicts = Level::ALL.map(Dictionary::new);
    for &(k, c) in entries {
        dicts[k.level().index()].add(k, c).unwrap();
    }
    DictionarySet::new(dicts).unwrap()
}

/// Rectangles and stripes on a blank page: repetitive enough that trained
/// dictionaries hit at every level.
fn page(w: usize, h: usize, seed: u64) -> BinaryImage {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s
    };
    let rects: Vec<[usize; 4]> = (0..6)
        .map(|_| {
            let x = next() as usize % w;
            let y = next() as usize % h;
            [x, y, x + 1 + next() as usize % 40, y + 1 + next() as usize % 25]
        })
        .collect();
    let period = 2 + (next() % 5) as usize;
    BinaryImage::from_fn(w, h, |x, y| {
        rects.iter().any(|r| x >= r[0] && x < r[2] && y >= r[1] && y < r[3])
            || (y % 37 < 3 && x % period == 0)
    })
}

fn trained() -> DictionarySet {
    let mut state = TrainerState::<f64>::new(TrainerConfig::default());
    for i in 0..6 {
        state.ingest(&page(160, 128, i));
    }
    DictionarySet::new(state.finalize().dictionaries).unwrap()
}

fn noise(w: usize, h: usize, seed: u64) -> BinaryImage {
    let mut s = seed | 1;
    BinaryImage::from_fn(w, h, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 33) & 1 == 1
    })
}

#[test]
fn golden_all_zero_block() {
    let dicts = set_with(&[(PatchKey::zeros(Level::L16), 5)]);
    let c = encode(&BinaryImage::zeros(16, 16), &dicts).unwrap();
    assert_eq!(
        c.table(Level::L16),
        &[
            TableEntry { symbol: Symbol::Escape, length: 1 },
            TableEntry { symbol: Symbol::Pattern(0), length: 1 },
        ]
    );
    for level in [Level::L8, Level::L4, Level::L2] {
        assert!(c.table(level).is_empty());
    }
    assert_eq!(c.payload_bits(), 1);
    assert_eq!(c.payload(), &[0x80]);

    let b = c.to_bytes();
    assert_eq!(b.len(), 80);
    assert_eq!(&b[..4], b"MLBC");
    assert_eq!(&b[4..8], &[1, 0, 0, 0]);
    assert_eq!(&b[8..16], &[16, 0, 0, 0, 16, 0, 0, 0]);
    assert_eq!(&b[16..48], &dicts.manifest_hash());
    // L16: count 2, ESCAPE length 1, rank 0 length 1
    assert_eq!(&b[48..55], &[2, 0, 0, 0, 1, 0, 1]);
    assert_eq!(&b[55..67], &[0; 12]);
    assert_eq!(&b[67..75], &1u64.to_le_bytes());
    assert_eq!(b[75], 0x80);
    assert_eq!(&b[76..], &crc32fast::hash(&b[..76]).to_le_bytes());
}

#[test]
fn blank_page_compresses_over_100() {
    let dicts = set_with(&[(PatchKey::zeros(Level::L16), 5)]);
    let img = BinaryImage::zeros(512, 512);
    let c = encode(&img, &dicts).unwrap();
    // 1024 one-bit blocks: 128 payload bytes plus 79 bytes of framing.
    assert_eq!(c.byte_len(), 207);
    let r = compression_ratio(&img, &c);
    assert!((r - 262144.0 / (8.0 * 207.0)).abs() < 1e-12);
    assert!(r > 100.0);
    assert_eq!(decode(&c, &dicts).unwrap(), img);
}

#[test]
fn empty_dictionaries_descend_to_level2() {
    let dicts = DictionarySet::empty();
    let img = noise(16, 16, 3);
    let plans = plan(&pad_to_16(&img), &dicts);
    assert_eq!(plans.len(), 1);
    let root = &plans[0].root;
    assert_eq!(root.depth(), 3);
    let leaves = root.leaves();
    assert_eq!(leaves.len(), 64);
    assert!(leaves.iter().all(|k| k.level() == Level::L2));
    assert_eq!(decode(&encode(&img, &dicts).unwrap(), &dicts).unwrap(), img);
}

#[test]
fn plan_stops_at_the_largest_available_level() {
    // A 16×16 block whose top-left 8×8 quadrant is one pixel off blank.
    let mut img = BinaryImage::zeros(16, 16);
    img.set(1, 1, true);
    let dot = PatchKey::from_image(&img, Level::L4, 0, 0);
    let dicts = set_with(&[
        (PatchKey::zeros(Level::L8), 3),
        (PatchKey::zeros(Level::L4), 3),
    ]);
    assert_eq!(plan(&pad_to_16(&img), &dicts)[0].root.depth(), 3);
    let dicts = set_with(&[
        (PatchKey::zeros(Level::L8), 3),
        (PatchKey::zeros(Level::L4), 3),
        (dot, 1),
    ]);
    let p = &plan(&pad_to_16(&img), &dicts)[0].root;
    assert_eq!(p.depth(), 2);
    let PlanNode::Split(q) = p else { panic!("root should split") };
    assert_eq!(q[1], PlanNode::Coded(PatchKey::zeros(Level::L8)));
    assert_eq!(q[2], PlanNode::Coded(PatchKey::zeros(Level::L8)));
    assert_eq!(q[3], PlanNode::Coded(PatchKey::zeros(Level::L8)));
    let PlanNode::Split(tl) = &q[0] else { panic!("TL should split") };
    assert_eq!(tl[0], PlanNode::Coded(dot));
    for n in &tl[1..] {
        assert_eq!(*n, PlanNode::Coded(PatchKey::zeros(Level::L4)));
    }
    // The full 16×16 pattern is available: no descent at all.
    let whole = PatchKey::from_image(&img, Level::L16, 0, 0);
    let dicts = set_with(&[(whole, 1)]);
    assert_eq!(plan(&pad_to_16(&img), &dicts)[0].root, PlanNode::Coded(whole));
}

#[test]
fn book_weights_come_from_the_dictionary() {
    let a = PatchKey::zeros(Level::L16);
    let b = PatchKey::ones(Level::L16);
    let dicts = set_with(&[(a, 100), (b, 1)]);
    // Blocks: a, b, and one that escapes.
    let img = BinaryImage::from_fn(48, 16, |x, y| match x / 16 {
        0 => false,
        1 => true,
        _ => (x + y) % 2 == 0,
    });
    let c = encode(&img, &dicts).unwrap();
    let t = c.table(Level::L16);
    let got: Vec<(Symbol, u8)> = t.iter().map(|e| (e.symbol, e.length)).collect();
    // Weights ESCAPE 1, rank 0 100, rank 1 1.
    assert_eq!(got, [(Symbol::Escape, 2), (Symbol::Pattern(0), 1), (Symbol::Pattern(1), 2)]);
    assert_eq!(decode(&c, &dicts).unwrap(), img);
}

#[test]
fn unused_patterns_stay_out_of_the_tables() {
    let dicts = trained();
    let img = BinaryImage::zeros(32, 32);
    let c = encode(&img, &dicts).unwrap();
    assert_eq!(c.table(Level::L16).len(), 2);
    assert!(c.table(Level::L2).is_empty());
}

#[test]
fn trained_round_trips_and_ratio() {
    let dicts = trained();
    for i in 0..10 {
        let img = page(97 + i * 13, 71 + i * 7, 1000 + i as u64);
        let c = encode(&img, &dicts).unwrap();
        let bytes = c.to_bytes();
        assert_eq!(bytes.len(), c.byte_len());
        assert_eq!(decode_bytes(&bytes, &dicts).unwrap(), img, "image {i}");
    }
    let img = page(160, 128, 2);
    let c = encode(&img, &dicts).unwrap();
    assert!(compression_ratio(&img, &c) > 1.0);
}

#[test]
fn encoding_is_deterministic() {
    let dicts = trained();
    let img = page(200, 150, 42);
    let a = encode_to_bytes(&img, &dicts).unwrap();
    let b = encode_to_bytes(&img, &trained()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wrong_dictionary_is_reported() {
    let img = page(64, 64, 1);
    let bytes = encode_to_bytes(&img, &trained()).unwrap();
    match decode_bytes(&bytes, &DictionarySet::empty()) {
        Err(Error::WrongDictionary { expected, found }) => {
            assert_eq!(expected, trained().manifest_hash_hex());
            assert_eq!(found, DictionarySet::empty().manifest_hash_hex());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_single_byte_flip_is_caught() {
    let dicts = trained();
    let img = page(48, 40, 9);
    let bytes = encode_to_bytes(&img, &dicts).unwrap();
    for i in 0..bytes.len() {
        for mask in [0x01u8, 0x80, 0xFF] {
            let mut m = bytes.clone();
            m[i] ^= mask;
            if let Ok(out) = decode_bytes(&m, &dicts) {
                panic!("flip {mask:#x} at {i} decoded silently (same image: {})", out == img);
            }
        }
    }
    for cut in 0..bytes.len() {
        assert!(decode_bytes(&bytes[..cut], &dicts).is_err());
    }
}

fn reseal(mut m: Vec<u8>) -> Vec<u8> {
    let n = m.len();
    let crc = crc32fast::hash(&m[..n - 4]);
    m[n - 4..].copy_from_slice(&crc.to_le_bytes());
    m
}

/// With the checksum recomputed, structural checks are all that stand between
/// a mutant and the decoder. None of them may panic.
#[test]
fn resealed_mutants_never_panic() {
    let dicts = trained();
    let img = page(40, 40, 5);
    let bytes = encode_to_bytes(&img, &dicts).unwrap();
    let mut caught = 0;
    for i in 0..bytes.len() - 4 {
        for mask in [0x01u8, 0x10, 0x80, 0xFF] {
            let mut m = bytes.clone();
            m[i] ^= mask;
            match decode_bytes(&reseal(m), &dicts) {
                Err(_) => caught += 1,
                Ok(out) => assert_ne!(out, img, "flip at {i} changed nothing"),
            }
        }
    }
    assert!(caught > 0);
}

#[test]
fn table_validation() {
    let dicts = set_with(&[(PatchKey::zeros(Level::L16), 5)]);
    let good = encode(&BinaryImage::zeros(16, 16), &dicts).unwrap();
    assert!(decode(&good, &dicts).is_ok());

    let mut c = good.clone();
    c.tables[Level::L16.index()][1].symbol = Symbol::Pattern(1);
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));

    let mut c = good.clone();
    c.tables[Level::L16.index()][1].length = 2;
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));

    let mut c = good.clone();
    c.tables[Level::L16.index()].swap(0, 1);
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));

    let mut c = good.clone();
    c.tables[Level::L16.index()].clear();
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));
}

#[test]
fn payload_framing_is_exact() {
    let dicts = set_with(&[(PatchKey::zeros(Level::L16), 5)]);
    let good = encode(&BinaryImage::zeros(16, 16), &dicts).unwrap();

    let mut c = good.clone();
    c.payload = vec![0x81];
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))), "padding");

    let mut c = good.clone();
    c.payload_bits = 2;
    c.payload = vec![0xC0];
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))), "overrun");

    let mut c = good.clone();
    c.orig_width = 32;
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))), "underrun");

    let mut c = good;
    c.orig_height = 0;
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));
}

#[test]
fn large_dimensions_do_not_allocate() {
    let dicts = set_with(&[(PatchKey::zeros(Level::L16), 5)]);
    let mut c = encode(&BinaryImage::zeros(16, 16), &dicts).unwrap();
    c.orig_width = u32::MAX;
    c.orig_height = u32::MAX;
    assert!(matches!(decode(&c, &dicts), Err(Error::Corruption(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn round_trip_random_sizes(w in 1usize..90, h in 1usize..90, seed in any::<u64>(), structured in any::<bool>()) {
        let dicts = trained();
        let img = if structured { page(w, h, seed) } else { noise(w, h, seed) };
        let bytes = encode_to_bytes(&img, &dicts).unwrap();
        prop_assert_eq!(decode_bytes(&bytes, &dicts).unwrap(), img.clone());
        let empty = DictionarySet::empty();
        prop_assert_eq!(decode_bytes(&encode_to_bytes(&img, &empty).unwrap(), &empty).unwrap(), img);
    }
}

#[test]
fn growing_dict16_barely_moves_the_blank_page() {
    let img = BinaryImage::zeros(64, 48);
    let mut entries = vec![(PatchKey::zeros(Level::L16), 5)];
    let mut prev = encode(&img, &set_with(&entries)).unwrap().byte_len();
    let mut seed = 1u64;
    for round in 0..40 {
        for _ in 0..(round * 7 + 1) {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut packed = [0u8; 32];
            for (i, b) in packed.iter_mut().enumerate() {
                *b = (seed >> (i % 8 * 8)) as u8 ^ i as u8;
            }
            let k = PatchKey::from_packed(Level::L16, &packed).unwrap();
            if !k.is_uniform() {
                entries.push((k, 1 + seed % 20));
            }
        }
        let dicts = set_with(&entries);
        let size = encode(&img, &dicts).unwrap().byte_len();
        let rank = dicts.rank_of(&PatchKey::zeros(Level::L16)).unwrap();
        // The only thing that can grow is the zero key's rank varint.
        assert!(size <= prev + 1, "round {round}: {prev} -> {size} (rank {rank})");
        assert_eq!(decode(&encode(&img, &dicts).unwrap(), &dicts).unwrap(), img);
        prev = size;
    }
}
