//! Sprite preparation and batch frame generation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use fuzzforge_core::config::PipelineConfig;
use fuzzforge_core::dataset::{
    write_frame_json, write_yolo, AnnotationRecord, DatasetManifest, ManifestEntry, Origin,
    Provenance, Split,
};
use fuzzforge_core::generate::{frame_stem, m1_frame, m2_frame, paired_records, BackgroundSource};
use fuzzforge_core::sprites::{build_catalog, SpriteCatalog};
use fuzzforge_core::Method;

use super::{GenArgs, PrepSpritesArgs};

pub fn prep_sprites(args: PrepSpritesArgs) -> Result<()> {
    let catalog = build_catalog(&args.roots, args.stride, args.alpha_threshold)?;
    anyhow::ensure!(!catalog.is_empty(), "no sprites found under the given roots");
    let manifest = catalog.save(&args.out)?;
    log::info!(
        "cataloged {} sprites ({} fully transparent frames skipped) -> {}",
        catalog.len(),
        catalog.skipped_empty,
        manifest.display()
    );
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<(PipelineConfig, String)> {
    match path {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok((PipelineConfig::default(), fuzzforge_core::config::digest_bytes(b""))),
    }
}

struct FrameSink<'a> {
    out: &'a Path,
    formats: &'a [String],
}

impl FrameSink<'_> {
    fn prepare(out: &Path, formats: &[String]) -> Result<()> {
        fs::create_dir_all(out.join("images"))?;
        fs::create_dir_all(out.join("annotations"))?;
        for f in formats {
            anyhow::ensure!(
                f == "json" || f == "yolo",
                "unknown output format \"{f}\" (expected json or yolo)"
            );
        }
        Ok(())
    }

    /// Write one frame's image and annotation files; returns the manifest
    /// entry. Every path is distinct per frame, so workers never collide.
    fn write(&self, stem: &str, image: &image::RgbaImage, record: &AnnotationRecord) -> Result<ManifestEntry> {
        let image_rel = format!("images/{stem}.png");
        image
            .save(self.out.join(&image_rel))
            .with_context(|| format!("writing {image_rel}"))?;
        let annotation_rel = format!("annotations/{stem}.json");
        if self.formats.iter().any(|f| f == "json") {
            write_frame_json(record, &self.out.join(&annotation_rel))?;
        }
        if self.formats.iter().any(|f| f == "yolo") {
            write_yolo(record, &self.out.join(format!("annotations/{stem}.txt")))?;
        }
        Ok(ManifestEntry {
            annotation_path: annotation_rel,
            image_name: record.image_name.clone(),
            image_path: image_rel,
            origin: Origin::Synthetic,
        })
    }
}

fn run_pool<T: Send>(
    jobs: usize,
    count: u64,
    work: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    pool.install(|| (0..count).into_par_iter().map(|i| work(i)).collect())
}

pub fn gen_m2(args: GenArgs, jobs: usize) -> Result<()> {
    let (config, digest) = load_config(&args.config)?;
    let master_seed = args.seed.unwrap_or(config.master_seed);
    let catalog = SpriteCatalog::load(&args.catalog)?;
    let image_size = config.compositor.image_size;
    let background_ref =
        args.backgrounds.clone().unwrap_or_else(|| config.compositor.background.clone());
    let backgrounds = BackgroundSource::load(&background_ref, image_size)?;
    let randomizer = config.compositor.randomizer();
    let alpha_threshold = config.compositor.alpha_annot_threshold;

    FrameSink::prepare(&args.out, &config.output.formats)?;
    let sink = FrameSink { out: &args.out, formats: &config.output.formats };

    let entries = run_pool(jobs, args.count, |index| {
        let out = m2_frame(
            image_size,
            &randomizer,
            alpha_threshold,
            &catalog,
            &backgrounds,
            master_seed,
            index,
        )?;
        let stem = frame_stem(Method::M2, index);
        let record =
            fuzzforge_core::generate::frame_record(&out.frame, &format!("{stem}.png"));
        sink.write(&stem, &out.frame.image, &record)
    })?;

    let provenance = Provenance {
        config_digest: digest,
        master_seed,
        method_tag: Some(Method::M2.as_str().to_string()),
        mixture: None,
    };
    let manifest = DatasetManifest::new(entries, Split::Unsplit, provenance)?;
    manifest.write(&args.out.join("manifest.json"))?;
    log::info!("generated {} overlay frames into {}", args.count, args.out.display());
    Ok(())
}

pub fn gen_m1(args: GenArgs, jobs: usize) -> Result<()> {
    let (config, digest) = load_config(&args.config)?;
    let master_seed = args.seed.unwrap_or(config.master_seed);
    let catalog = SpriteCatalog::load(&args.catalog)?;
    let scene = config.scene.scene_config();
    let background_ref = args.backgrounds.clone().unwrap_or_else(|| scene.background_ref.clone());
    let backgrounds = BackgroundSource::load(&background_ref, scene.image_size)?;

    FrameSink::prepare(&args.out, &config.output.formats)?;
    fs::create_dir_all(args.out.join("paired"))?;
    let sink = FrameSink { out: &args.out, formats: &config.output.formats };

    // Per frame: the training annotation (all projection boxes) plus the
    // paired quad/alpha records used by diff-annotations.
    let results = run_pool(jobs, args.count, |index| {
        let rendered = m1_frame(&scene, &catalog, &backgrounds, master_seed, index)?;
        let stem = frame_stem(Method::M1, index);
        let image_name = format!("{stem}.png");
        let record = fuzzforge_core::generate::frame_record(&rendered.frame, &image_name);
        let entry = sink.write(&stem, &rendered.frame.image, &record)?;

        let (quad, alpha) = paired_records(&rendered, &image_name);
        let quad_rel = format!("paired/quad_{stem}.json");
        let alpha_rel = format!("paired/alpha_{stem}.json");
        write_frame_json(&quad, &args.out.join(&quad_rel))?;
        write_frame_json(&alpha, &args.out.join(&alpha_rel))?;
        Ok((entry, quad_rel, alpha_rel, image_name))
    })?;

    let mut entries = Vec::with_capacity(results.len());
    let mut quad_entries = Vec::with_capacity(results.len());
    let mut alpha_entries = Vec::with_capacity(results.len());
    for (entry, quad_rel, alpha_rel, image_name) in results {
        let paired = |annotation_path: String| ManifestEntry {
            annotation_path,
            image_name: image_name.clone(),
            image_path: format!("../{}", entry.image_path),
            origin: Origin::Synthetic,
        };
        quad_entries.push(paired(quad_rel.trim_start_matches("paired/").to_string()));
        alpha_entries.push(paired(alpha_rel.trim_start_matches("paired/").to_string()));
        entries.push(entry);
    }

    let provenance = Provenance {
        config_digest: digest,
        master_seed,
        method_tag: Some(Method::M1.as_str().to_string()),
        mixture: None,
    };
    DatasetManifest::new(entries, Split::Unsplit, provenance.clone())?
        .write(&args.out.join("manifest.json"))?;
    DatasetManifest::new(quad_entries, Split::Unsplit, provenance.clone())?
        .write(&args.out.join("paired/quad_manifest.json"))?;
    DatasetManifest::new(alpha_entries, Split::Unsplit, provenance)?
        .write(&args.out.join("paired/alpha_manifest.json"))?;
    log::info!("generated {} billboard frames into {}", args.count, args.out.display());
    Ok(())
}
