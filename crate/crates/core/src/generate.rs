//! Per-frame generation drivers. Every frame is a pure function of
//! `(config, catalog, master_seed, frame_index)`: the frame's RNG stream is
//! derived up front and all draws happen in a fixed order, so batches can be
//! generated concurrently in any schedule.

use std::path::{Path, PathBuf};

use image::RgbaImage;
use rand::Rng;
use thiserror::Error;

use crate::compositor::{
    compose_with_threshold, procedural_background, randomize_overlays, ComposeError,
    ComposeOutput, OverlayRandomizer,
};
use crate::dataset::{AnnotationRecord, DatasetError, ObjectAnnotation};
use crate::frame::{GeneratedFrame, Method, SeedRecord};
use crate::rng::derive_rng;
use crate::scene::{place_billboards, render_m1, sample_camera, RenderedScene, SceneConfig, SceneError};
use crate::sprites::SpriteCatalog;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("background directory {0} holds no PNG files")]
    NoBackgrounds(PathBuf),
    #[error("background {path} is {got:?} but frames are {want:?}")]
    BackgroundSize { path: PathBuf, got: (u32, u32), want: (u32, u32) },
    #[error("{path}: {message}")]
    BackgroundLoad { path: PathBuf, message: String },
}

/// Where frame backgrounds come from.
#[derive(Debug, Clone)]
pub enum BackgroundSource {
    /// Seeded gradient-plus-noise rasters.
    Procedural,
    /// Pre-rendered PNGs, all matching the frame size; one is drawn
    /// uniformly per frame.
    Files(Vec<RgbaImage>),
}

impl BackgroundSource {
    /// Resolve `"procedural"` or a directory path (PNGs sorted by name).
    pub fn load(reference: &str, image_size: (u32, u32)) -> Result<Self, GenerateError> {
        if reference == "procedural" {
            return Ok(Self::Procedural);
        }
        let dir = Path::new(reference);
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| GenerateError::BackgroundLoad { path: dir.into(), message: e.to_string() })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(GenerateError::NoBackgrounds(dir.into()));
        }
        let mut images = Vec::with_capacity(paths.len());
        for path in paths {
            let img = image::open(&path)
                .map_err(|e| GenerateError::BackgroundLoad { path: path.clone(), message: e.to_string() })?
                .to_rgba8();
            if img.dimensions() != image_size {
                return Err(GenerateError::BackgroundSize {
                    path,
                    got: img.dimensions(),
                    want: image_size,
                });
            }
            images.push(img);
        }
        Ok(Self::Files(images))
    }

    /// The background for one frame; consumes draws from the frame stream.
    pub fn frame_background(&self, image_size: (u32, u32), rng: &mut impl Rng) -> RgbaImage {
        match self {
            Self::Procedural => procedural_background(image_size, rng),
            Self::Files(images) => images[rng.random_range(0..images.len())].clone(),
        }
    }
}

/// Canonical frame file stem, e.g. `m2_000042`.
pub fn frame_stem(method: Method, index: u64) -> String {
    format!("{}_{:06}", method.as_str().to_lowercase(), index)
}

/// Generate one 3D-billboard frame.
pub fn m1_frame(
    config: &SceneConfig,
    catalog: &SpriteCatalog,
    backgrounds: &BackgroundSource,
    master_seed: u64,
    frame_index: u64,
) -> Result<RenderedScene, GenerateError> {
    config.validate()?;
    let mut rng = derive_rng(master_seed, frame_index);
    let background = backgrounds.frame_background(config.image_size, &mut rng);
    let camera = sample_camera(config, &mut rng);
    let placements = place_billboards(config, catalog, &mut rng)?;
    let seed_record = SeedRecord { master_seed, frame_index };
    Ok(render_m1(&camera, &placements, catalog, &background, seed_record)?)
}

/// Generate one 2D-overlay frame.
pub fn m2_frame(
    image_size: (u32, u32),
    randomizer: &OverlayRandomizer,
    alpha_threshold: u8,
    catalog: &SpriteCatalog,
    backgrounds: &BackgroundSource,
    master_seed: u64,
    frame_index: u64,
) -> Result<ComposeOutput, GenerateError> {
    let mut rng = derive_rng(master_seed, frame_index);
    let background = backgrounds.frame_background(image_size, &mut rng);
    let specs = randomize_overlays(image_size, catalog, randomizer, &mut rng)?;
    let seed_record = SeedRecord { master_seed, frame_index };
    Ok(compose_with_threshold(&background, catalog, &specs, seed_record, alpha_threshold)?)
}

/// Annotation record for a generated frame (single "fire" class).
pub fn frame_record(frame: &GeneratedFrame, image_name: &str) -> AnnotationRecord {
    AnnotationRecord::new(
        image_name.to_string(),
        frame.image.dimensions(),
        frame.boxes.iter().map(|b| ObjectAnnotation { class_id: 0, bbox: *b }).collect(),
    )
    .expect("generated boxes are clipped to the image")
}

/// Paired records for annotation-accuracy comparison: the projected-quad
/// boxes and the alpha-tight boxes of the same render, restricted to
/// billboards that contributed visible alpha.
pub fn paired_records(
    scene: &RenderedScene,
    image_name: &str,
) -> (AnnotationRecord, AnnotationRecord) {
    let size = scene.frame.image.dimensions();
    let mut quad = Vec::new();
    let mut alpha = Vec::new();
    for (b, a) in scene.frame.boxes.iter().zip(&scene.alpha_boxes) {
        if let Some(a) = a {
            quad.push(ObjectAnnotation { class_id: 0, bbox: *b });
            alpha.push(ObjectAnnotation { class_id: 0, bbox: *a });
        }
    }
    (
        AnnotationRecord::new(image_name.to_string(), size, quad)
            .expect("projected boxes are clipped"),
        AnnotationRecord::new(image_name.to_string(), size, alpha)
            .expect("alpha boxes lie inside the image"),
    )
}
