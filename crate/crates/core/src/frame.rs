//! Generated-frame output types shared by both generation routes.

use image::RgbaImage;
use serde::{Deserialize, Serialize};

use crate::geometry::BBox;

/// Which generation route produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// 3D billboard projection with corner-projection annotation.
    M1,
    /// 2D overlay compositing with alpha-tight annotation.
    M2,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
        }
    }
}

/// Seed bookkeeping: every frame is a pure function of this pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub frame_index: u64,
}

/// One generated frame: composited raster plus its annotation boxes.
///
/// Invariant: every box lies within the image rectangle.
#[derive(Debug, Clone)]
pub struct GeneratedFrame {
    pub image: RgbaImage,
    pub boxes: Vec<BBox>,
    pub seed_record: SeedRecord,
    pub method: Method,
}
