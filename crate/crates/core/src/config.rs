//! Pipeline configuration: one TOML file drives sprite prep, both
//! generators, curation, and mixtures. The raw config bytes are digested so
//! every output manifest records exactly what produced it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compositor::OverlayRandomizer;
use crate::curation::SelectionRule;
use crate::scene::{SceneConfig, WorldBox};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

/// `[sprites]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpritesSection {
    pub roots: Vec<PathBuf>,
    pub stride: usize,
    pub alpha_trim_threshold: u8,
}

impl Default for SpritesSection {
    fn default() -> Self {
        Self { roots: Vec::new(), stride: 12, alpha_trim_threshold: 0 }
    }
}

/// `[scene]` section (angles in degrees; converted on use).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSection {
    pub image_size: (u32, u32),
    pub fov_vertical_deg: f64,
    pub camera_region: WorldBox,
    pub yaw_range_deg: (f64, f64),
    pub pitch_deg: f64,
    pub track_targets: Option<Vec<[f64; 3]>>,
    pub placement_region: WorldBox,
    pub flame_count_range: (u32, u32),
    pub flame_size_range: (f64, f64),
    pub billboard_normal: [f64; 3],
    /// "procedural" or a directory of background PNGs.
    pub background: String,
}

impl Default for SceneSection {
    fn default() -> Self {
        let d = SceneConfig::default();
        Self {
            image_size: d.image_size,
            fov_vertical_deg: d.fov_vertical.to_degrees(),
            camera_region: d.camera_region,
            yaw_range_deg: (d.yaw_range.0.to_degrees(), d.yaw_range.1.to_degrees()),
            pitch_deg: d.pitch.to_degrees(),
            track_targets: None,
            placement_region: d.placement_region,
            flame_count_range: d.flame_count_range,
            flame_size_range: d.flame_size_range,
            billboard_normal: d.billboard_normal,
            background: d.background_ref,
        }
    }
}

impl SceneSection {
    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            camera_region: self.camera_region,
            yaw_range: (self.yaw_range_deg.0.to_radians(), self.yaw_range_deg.1.to_radians()),
            pitch: self.pitch_deg.to_radians(),
            track_targets: self.track_targets.clone(),
            fov_vertical: self.fov_vertical_deg.to_radians(),
            image_size: self.image_size,
            placement_region: self.placement_region,
            flame_count_range: self.flame_count_range,
            flame_size_range: self.flame_size_range,
            billboard_normal: self.billboard_normal,
            background_ref: self.background.clone(),
        }
    }
}

/// `[compositor]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositorSection {
    pub image_size: (u32, u32),
    pub count_range: (u32, u32),
    pub height_frac_range: (f64, f64),
    pub min_visible_fraction: f64,
    pub max_retries: u32,
    pub alpha_annot_threshold: u8,
    /// "procedural" or a directory of background PNGs.
    pub background: String,
}

impl Default for CompositorSection {
    fn default() -> Self {
        let d = OverlayRandomizer::default();
        Self {
            image_size: (640, 480),
            count_range: d.count_range,
            height_frac_range: d.height_frac_range,
            min_visible_fraction: d.min_visible_fraction,
            max_retries: d.max_retries,
            alpha_annot_threshold: 0,
            background: "procedural".to_string(),
        }
    }
}

impl CompositorSection {
    pub fn randomizer(&self) -> OverlayRandomizer {
        OverlayRandomizer {
            count_range: self.count_range,
            height_frac_range: self.height_frac_range,
            min_visible_fraction: self.min_visible_fraction,
            max_retries: self.max_retries,
        }
    }
}

/// `[curation]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationSection {
    pub tau: f64,
    /// Diversity-selection size; 0 keeps everything that survives dedup.
    pub k: usize,
    pub ratios: (f64, f64, f64),
    pub seed: u64,
    pub selection: SelectionRule,
}

impl Default for CurationSection {
    fn default() -> Self {
        Self {
            tau: crate::curation::DEFAULT_TAU,
            k: 0,
            ratios: (0.714, 0.143, 0.143),
            seed: 0,
            selection: SelectionRule::FarthestPoint,
        }
    }
}

/// `[mixtures]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MixturesSection {
    pub seeds: Vec<u64>,
}

impl Default for MixturesSection {
    fn default() -> Self {
        Self { seeds: vec![1, 2, 3, 4, 5] }
    }
}

/// `[output]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    /// Annotation formats to write per frame: "json" and/or "yolo".
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { formats: vec!["json".to_string()] }
    }
}

/// Whole pipeline configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub sprites: SpritesSection,
    pub scene: SceneSection,
    pub compositor: CompositorSection,
    pub curation: CurationSection,
    pub mixtures: MixturesSection,
    pub output: OutputSection,
}

/// SHA-256 hex digest of the raw config bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

impl PipelineConfig {
    /// Parse a TOML config file; returns the config plus the digest of the
    /// exact bytes read.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes =
            fs::read(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let text = String::from_utf8_lossy(&bytes);
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        Ok((config, digest_bytes(&bytes)))
    }
}
