use std::path::{Path, PathBuf};

use log::{info, warn};
use mldict_core::analysis::{
    export_convergence, export_histogram, export_mass_curve, log_histogram, mass_curve, top_k_for_mass,
    DEFAULT_HISTOGRAM_BINS,
};
use mldict_core::bench::{run_corpus, BenchOptions};
use mldict_core::codec::{compression_ratio, CompressedContainer, CONTAINER_MAGIC};
use mldict_core::dictionary::{prune, DictionarySet, Verdict, MAGIC as DICT_MAGIC, MANIFEST_FILE};
use mldict_core::imgproc::{list_images, load_binary, write_pbm, BinaryImage};
use mldict_core::{Dictionary, Error, Level, PrunePolicy, Result, TrainerConfig, TrainerState};
use rayon::prelude::*;

use crate::config::Config;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

/// Creation stamp for dictionary files: `SOURCE_DATE_EPOCH` when set, else 0,
/// so reruns give identical bytes.
fn created_stamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "converged",
        Verdict::NotConverged => "not converged",
        Verdict::Undetermined => "undetermined",
    }
}

fn dir_tag(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub fn train(corpus: &[PathBuf], cfg: &Config) -> Result<()> {
    let out = cfg.dicts_dir()?;
    let mut state = TrainerState::new(TrainerConfig {
        chunk_size: cfg.chunk_size,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        ..TrainerConfig::default()
    });
    let mut skipped = 0usize;
    for dir in corpus {
        let paths = list_images(dir)?;
        // Decoding fans out; ingestion stays in file order so the run is
        // deterministic.
        let loaded: Vec<(PathBuf, Result<BinaryImage>)> =
            paths.into_par_iter().map(|p| {
                let img = load_binary(&p);
                (p, img)
            }).collect();
        let before = state.images();
        for (path, img) in loaded {
            match img {
                Ok(img) => state.ingest(&img),
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    skipped += 1;
                }
            }
        }
        if state.images() > before {
            state.tag(&dir_tag(dir));
        }
        state.flush_chunks();
        info!("{}: {} images", dir.display(), state.images() - before);
    }
    if state.images() == 0 {
        return Err(Error::Input(format!("no usable images ({skipped} unreadable)")));
    }

    let model = state.finalize();
    let policy = PrunePolicy {
        drop_unit: cfg.drop_unit,
        drop_unit_level4: cfg.drop_unit_level4,
        mass_fraction: Some(cfg.mass_fraction),
        max_entries: cfg.max_entries,
    };
    let stamp = created_stamp();
    let dicts: [Dictionary; 4] = model.dictionaries.each_ref().map(|d| {
        let mut p = prune(d, &policy);
        p.meta_mut().created = stamp;
        p
    });
    let set = DictionarySet::new(dicts)?;
    set.save(out)?;
    for level in Level::ALL {
        let mon = &model.monitors[level.index()];
        if mon.chunks() > 0 {
            export_convergence(mon, &out.join(format!("convergence_{level}.csv")))?;
        }
    }

    println!("trained on {} images ({} skipped)", model.images, skipped);
    println!("{:<6}{:>12}{:>12}{:>14}  convergence", "level", "observed", "kept", "top-k(0.90)");
    for level in Level::ALL {
        let raw = &model.dictionaries[level.index()];
        let kept = set.dictionary(level);
        let k90 = if kept.is_empty() { 0 } else { top_k_for_mass(kept, 0.90)? };
        let mon = &model.monitors[level.index()];
        let conv = match mon.first_converged() {
            Some(n) => format!("{} (first at chunk {n} of {})", verdict_text(mon.check().overall), mon.chunks()),
            None => format!("{} after {} chunks", verdict_text(mon.check().overall), mon.chunks()),
        };
        println!("{:<6}{:>12}{:>12}{:>14}  {conv}", level.to_string(), raw.len(), kept.len(), k90);
    }
    println!("manifest {} -> {}", set.manifest_hash_hex(), out.display());
    Ok(())
}

fn load_dicts(cfg: &Config) -> Result<DictionarySet> {
    DictionarySet::load(cfg.dicts_dir()?)
}

pub fn encode(input: &Path, cfg: &Config) -> Result<()> {
    let dicts = load_dicts(cfg)?;
    let img = load_binary(input)?;
    let c = mldict_core::encode(&img, &dicts)?;
    let bytes = c.to_bytes();
    let out = cfg.out.clone().unwrap_or_else(|| input.with_extension("mlbc"));
    write_file(&out, &bytes)?;
    println!(
        "{}: {}x{}, {} bytes, ratio {:.4}",
        out.display(),
        img.width(),
        img.height(),
        bytes.len(),
        compression_ratio(&img, &c)
    );
    Ok(())
}

pub fn decode(input: &Path, cfg: &Config) -> Result<()> {
    let dicts = load_dicts(cfg)?;
    let img = mldict_core::decode_bytes(&read_file(input)?, &dicts)?;
    let out = cfg.out.clone().unwrap_or_else(|| input.with_extension("pbm"));
    let mut pbm = Vec::new();
    write_pbm(&img, &mut pbm).map_err(|e| io_err(&out, e))?;
    write_file(&out, &pbm)?;
    println!("{}: {}x{}", out.display(), img.width(), img.height());
    Ok(())
}

pub fn stats(cfg: &Config) -> Result<()> {
    let dicts = load_dicts(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| cfg.dicts.clone().unwrap_or_default().join("stats"));
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    println!("{:<6}{:>10}{:>14}{:>14}{:>14}", "level", "entries", "total", "top-k(0.90)", "top-k(0.99)");
    for level in Level::ALL {
        let d = dicts.dictionary(level);
        if d.is_empty() {
            println!("{:<6}{:>10}{:>14}{:>14}{:>14}", level.to_string(), 0, 0, "-", "-");
            continue;
        }
        export_histogram(
            &log_histogram::<f64>(d, DEFAULT_HISTOGRAM_BINS)?,
            &out.join(format!("histogram_{level}.csv")),
        )?;
        export_mass_curve(&mass_curve::<f64>(d)?, &out.join(format!("mass_{level}.csv")))?;
        println!(
            "{:<6}{:>10}{:>14}{:>14}{:>14}",
            level.to_string(),
            d.len(),
            d.total(),
            top_k_for_mass(d, 0.90)?,
            top_k_for_mass(d, 0.99)?
        );
    }
    println!("csv -> {}", out.display());
    Ok(())
}

pub fn bench(corpus: &Path, cfg: &Config) -> Result<()> {
    let dicts = load_dicts(cfg)?;
    let opts = BenchOptions {
        codecs: cfg.codecs.clone(),
        container_filter: None,
    };
    let report = run_corpus(corpus, &dicts, &opts)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    print!("{}", report.text_table());
    if let Some(path) = &cfg.out {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        report.write_csv(std::io::BufWriter::new(file))?;
        println!("csv -> {}", path.display());
    }
    Ok(())
}

fn inspect_dictionary(d: &Dictionary) {
    println!("dictionary {}", d.level());
    println!("  entries      {}", d.len());
    println!("  total        {}", d.total());
    println!("  patches      {}", d.meta().patch_count);
    println!("  created      {}", d.meta().created);
    println!("  tags         {}", d.meta().corpus_tags.join(", "));
    for (i, (k, c)) in d.canonical_entries().into_iter().take(5).enumerate() {
        println!("  #{i:<3} {k} {c}");
    }
}

pub fn inspect(input: &Path) -> Result<()> {
    if input.is_dir() && input.join(MANIFEST_FILE).is_file() {
        let set = DictionarySet::load(input)?;
        println!("dictionary set {}", set.manifest_hash_hex());
        for level in Level::ALL {
            let d = set.dictionary(level);
            println!("  {level:<4} {:>10} entries {:>14} total", d.len(), d.total());
        }
        return Ok(());
    }
    let data = read_file(input)?;
    if data.starts_with(CONTAINER_MAGIC) {
        let c = CompressedContainer::from_bytes(&data)?;
        println!("container, {} bytes", data.len());
        println!("  image        {}x{}", c.orig_width(), c.orig_height());
        println!("  dictionaries {}", hex(c.dictionary_hash()));
        for level in Level::TOP_DOWN {
            let t = c.table(level);
            let max = t.iter().map(|e| e.length).max().unwrap_or(0);
            println!("  {level:<4} table  {:>6} symbols, longest code {max}", t.len());
        }
        println!("  payload      {} bits", c.payload_bits());
        Ok(())
    } else if data.starts_with(DICT_MAGIC) {
        inspect_dictionary(&Dictionary::from_bytes(&data)?);
        Ok(())
    } else {
        Err(Error::Format(format!("{}: neither a container nor a dictionary", input.display())))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
