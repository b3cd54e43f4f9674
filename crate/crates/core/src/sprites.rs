//! Flame sprite ingestion: alpha trimming, frame-stride sampling, and the
//! tagged sprite catalog.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::RgbaImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::alpha_extent;

/// Any pixel with alpha strictly above this counts as colored content.
pub const ALPHA_TRIM_THRESHOLD: u8 = 0;

#[derive(Debug, Error)]
pub enum SpriteError {
    #[error("sprite has no pixel with alpha above the trim threshold")]
    EmptySprite,
    #[error("stride must be >= 1 (got {0})")]
    InvalidStride(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("catalog manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// Trimmed RGBA flame image with provenance tags.
#[derive(Debug, Clone)]
pub struct Sprite {
    pub image: RgbaImage,
    /// Emission method / shape / color variant tags, parsed from directory
    /// names.
    pub tags: BTreeSet<String>,
    /// Frame index within the source render sequence.
    pub source_frame: u32,
    /// Offset of the trimmed extent inside the raw raster.
    pub crop_offset: (u32, u32),
}

impl Sprite {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    /// Width-over-height ratio of the trimmed extent.
    pub fn aspect(&self) -> f64 {
        self.width() as f64 / self.height() as f64
    }
}

/// Minimal sub-raster containing every pixel with `alpha > threshold`.
pub fn trim_sprite_with_threshold(raw: &RgbaImage, threshold: u8) -> Result<Sprite, SpriteError> {
    let (x0, y0, x1, y1) = alpha_extent(raw, threshold).ok_or(SpriteError::EmptySprite)?;
    let image = image::imageops::crop_imm(raw, x0, y0, x1 - x0, y1 - y0).to_image();
    Ok(Sprite {
        image,
        tags: BTreeSet::new(),
        source_frame: 0,
        crop_offset: (x0, y0),
    })
}

/// [`trim_sprite_with_threshold`] at the default threshold.
pub fn trim_sprite(raw: &RgbaImage) -> Result<Sprite, SpriteError> {
    trim_sprite_with_threshold(raw, ALPHA_TRIM_THRESHOLD)
}

/// Frame indices `{0, stride, 2·stride, …} ∩ [0, frame_count)`.
pub fn sample_frames(frame_count: usize, stride: usize) -> Result<Vec<usize>, SpriteError> {
    if stride < 1 {
        return Err(SpriteError::InvalidStride(stride));
    }
    Ok((0..frame_count).step_by(stride).collect())
}

/// Ordered, trimmed sprite collection.
#[derive(Debug, Clone, Default)]
pub struct SpriteCatalog {
    pub sprites: Vec<Sprite>,
    /// Source files skipped because they were fully transparent.
    pub skipped_empty: usize,
}

/// One manifest row; fields are declared in sorted-key order so the emitted
/// JSON is canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    frame: u32,
    height: u32,
    path: String,
    tags: Vec<String>,
    width: u32,
}

impl SpriteCatalog {
    pub fn len(&self) -> usize {
        self.sprites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sprites.is_empty()
    }

    /// Write trimmed sprite PNGs plus `catalog.json` into `dir`.
    /// Deterministic: identical catalogs produce identical bytes.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, SpriteError> {
        fs::create_dir_all(dir).map_err(|source| SpriteError::Io { path: dir.into(), source })?;
        let mut entries = Vec::with_capacity(self.sprites.len());
        for (i, sprite) in self.sprites.iter().enumerate() {
            let name = format!("sprite_{i:05}.png");
            let path = dir.join(&name);
            sprite
                .image
                .save(&path)
                .map_err(|source| SpriteError::Decode { path: path.clone(), source })?;
            entries.push(ManifestEntry {
                frame: sprite.source_frame,
                height: sprite.height(),
                path: name,
                tags: sprite.tags.iter().cloned().collect(),
                width: sprite.width(),
            });
        }
        let manifest = dir.join("catalog.json");
        let body = serde_json::to_string_pretty(&entries).expect("manifest serialization");
        fs::write(&manifest, body.as_bytes())
            .map_err(|source| SpriteError::Io { path: manifest.clone(), source })?;
        Ok(manifest)
    }

    /// Load a catalog previously written by [`SpriteCatalog::save`].
    pub fn load(manifest_path: &Path) -> Result<Self, SpriteError> {
        let text = fs::read_to_string(manifest_path)
            .map_err(|source| SpriteError::Io { path: manifest_path.into(), source })?;
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(&text).map_err(|e| SpriteError::Manifest {
                path: manifest_path.into(),
                message: e.to_string(),
            })?;
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut sprites = Vec::with_capacity(entries.len());
        for entry in entries {
            let path = dir.join(&entry.path);
            let image = image::open(&path)
                .map_err(|source| SpriteError::Decode { path: path.clone(), source })?
                .to_rgba8();
            sprites.push(Sprite {
                image,
                tags: entry.tags.into_iter().collect(),
                source_frame: entry.frame,
                crop_offset: (0, 0),
            });
        }
        Ok(Self { sprites, skipped_empty: 0 })
    }
}

/// Trailing digit run in the file stem, e.g. `flame_0042.png` -> 42.
fn frame_index_of(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Directory name tokens split on underscores become tags.
fn tags_of(dir: &Path) -> BTreeSet<String> {
    dir.file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.split('_').filter(|t| !t.is_empty()).map(str::to_owned).collect())
        .unwrap_or_default()
}

/// Build a deterministic catalog of trimmed, stride-sampled sprites.
///
/// Roots are visited in lexicographic order; within a root, files sort by
/// parsed frame index (then name), the stride picks every `stride`-th file,
/// and fully transparent files are skipped with a warning count.
pub fn build_catalog(
    roots: &[PathBuf],
    stride: usize,
    alpha_threshold: u8,
) -> Result<SpriteCatalog, SpriteError> {
    if stride < 1 {
        return Err(SpriteError::InvalidStride(stride));
    }
    let mut sorted_roots: Vec<&PathBuf> = roots.iter().collect();
    sorted_roots.sort_by_key(|p| p.to_string_lossy().into_owned());

    let mut catalog = SpriteCatalog::default();
    for root in sorted_roots {
        let tags = tags_of(root);
        let mut files: Vec<(u32, String, PathBuf)> = Vec::new();
        let dir = fs::read_dir(root).map_err(|source| SpriteError::Io { path: root.clone(), source })?;
        for entry in dir {
            let entry = entry.map_err(|source| SpriteError::Io { path: root.clone(), source })?;
            let path = entry.path();
            let is_png = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if !is_png {
                continue;
            }
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.push((frame_index_of(&path).unwrap_or(0), name, path));
        }
        files.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        for pos in sample_frames(files.len(), stride)? {
            let (frame, _, path) = &files[pos];
            let raw = image::open(path)
                .map_err(|source| SpriteError::Decode { path: path.clone(), source })?
                .to_rgba8();
            match trim_sprite_with_threshold(&raw, alpha_threshold) {
                Ok(mut sprite) => {
                    sprite.tags = tags.clone();
                    sprite.source_frame = *frame;
                    catalog.sprites.push(sprite);
                }
                Err(SpriteError::EmptySprite) => {
                    log::warn!("skipping fully transparent sprite {}", path.display());
                    catalog.skipped_empty += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(catalog)
}
