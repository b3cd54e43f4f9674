//! Dedup, curation, and splitting subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use fuzzforge_core::curation::{
    self, read_embedding_cache, select_diverse_with_rule, write_embedding_cache, Embedding,
    SelectionRule, SplitSpec,
};
use fuzzforge_core::dataset::{DatasetManifest, ManifestEntry, Origin, Provenance, Split};

use super::{CurateArgs, DedupArgs, SplitArgs};

/// Sorted PNG paths under a directory.
fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    anyhow::ensure!(!files.is_empty(), "no PNG files under {}", dir.display());
    Ok(files)
}

/// Embed every image in the directory with the built-in provider.
fn embed_directory(dir: &Path, jobs: usize) -> Result<Vec<Embedding>> {
    let files = png_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let img = image::open(path)
                    .with_context(|| format!("decoding {}", path.display()))?
                    .to_rgba8();
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                Ok(curation::embed(&img, &name))
            })
            .collect()
    })
}

pub fn dedup(args: DedupArgs, jobs: usize) -> Result<()> {
    let embeddings = match (&args.images, &args.embeddings) {
        (Some(dir), None) => embed_directory(dir, jobs)?,
        (None, Some(cache)) => read_embedding_cache(cache)?,
        _ => anyhow::bail!("exactly one of --images or --embeddings is required"),
    };
    if let Some(cache) = &args.cache {
        write_embedding_cache(&embeddings, cache)?;
    }
    let kept = curation::dedup(&embeddings, args.tau);
    let names: Vec<&str> = kept.iter().map(|&i| embeddings[i].image_name.as_str()).collect();
    let mut body = serde_json::to_string_pretty(&names)?;
    body.push('\n');
    fs::write(&args.out, body)?;
    log::info!(
        "kept {} of {} images at tau={} -> {}",
        kept.len(),
        embeddings.len(),
        args.tau,
        args.out.display()
    );
    Ok(())
}

fn ratio_triple(ratios: &[f64]) -> Result<(f64, f64, f64)> {
    anyhow::ensure!(ratios.len() == 3, "--ratios needs exactly three values (train,val,test)");
    Ok((ratios[0], ratios[1], ratios[2]))
}

pub fn curate(args: CurateArgs, jobs: usize) -> Result<()> {
    let embeddings = embed_directory(&args.images, jobs)?;
    let kept = curation::dedup(&embeddings, args.tau);
    let survivors: Vec<Embedding> = kept.iter().map(|&i| embeddings[i].clone()).collect();

    let selected: Vec<usize> = if args.k > 0 {
        let rule = if args.mean_distance {
            SelectionRule::MeanDistance
        } else {
            SelectionRule::FarthestPoint
        };
        select_diverse_with_rule(&survivors, args.k.min(survivors.len()), rule)?
    } else {
        (0..survivors.len()).collect()
    };

    // Manifest entries point back at the source directory; annotations are
    // external for curated real imagery.
    let entries: Vec<ManifestEntry> = selected
        .iter()
        .map(|&i| {
            let name = survivors[i].image_name.clone();
            ManifestEntry {
                annotation_path: String::new(),
                image_name: name.clone(),
                image_path: args.images.join(&name).to_string_lossy().into_owned(),
                origin: Origin::Real,
            }
        })
        .collect();
    let curated =
        DatasetManifest::new(entries, Split::Unsplit, Provenance::empty())?;

    fs::create_dir_all(&args.out)?;
    curated.write(&args.out.join("curated.json"))?;

    let spec = SplitSpec::new(ratio_triple(&args.ratios)?, args.seed)?;
    let (train, val, test) = curation::split(&curated, &spec)?;
    train.write(&args.out.join("train.json"))?;
    val.write(&args.out.join("val.json"))?;
    test.write(&args.out.join("test.json"))?;
    log::info!(
        "curated {} -> {} images; split {}/{}/{} into {}",
        embeddings.len(),
        curated.len(),
        train.len(),
        val.len(),
        test.len(),
        args.out.display()
    );
    Ok(())
}

pub fn split(args: SplitArgs) -> Result<()> {
    let manifest = DatasetManifest::read(&args.manifest)?;
    let spec = SplitSpec::new(ratio_triple(&args.ratios)?, args.seed)?;
    let (train, val, test) = curation::split(&manifest, &spec)?;
    fs::create_dir_all(&args.out)?;
    train.write(&args.out.join("train.json"))?;
    val.write(&args.out.join("val.json"))?;
    test.write(&args.out.join("test.json"))?;
    log::info!(
        "split {} images {}/{}/{} into {}",
        manifest.len(),
        train.len(),
        val.len(),
        test.len(),
        args.out.display()
    );
    Ok(())
}
