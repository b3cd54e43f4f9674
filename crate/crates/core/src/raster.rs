//! Shared raster helpers: alpha-over blending, nearest-neighbor scaling, and
//! alpha-tight extent scans.

use image::{Rgba, RgbaImage};

/// Standard `over` operator on straight-alpha u8 pixels, with rounding.
pub fn blend_over(dst: &mut Rgba<u8>, src: Rgba<u8>) {
    let sa = src.0[3] as u32;
    if sa == 0 {
        return;
    }
    let inv = 255 - sa;
    for c in 0..3 {
        dst.0[c] = ((src.0[c] as u32 * sa + dst.0[c] as u32 * inv + 127) / 255) as u8;
    }
    dst.0[3] = (sa + dst.0[3] as u32 * inv / 255).min(255) as u8;
}

/// Nearest-neighbor resize to exactly `(w, h)`.
pub fn scale_nearest(src: &RgbaImage, w: u32, h: u32) -> RgbaImage {
    let (sw, sh) = src.dimensions();
    RgbaImage::from_fn(w, h, |x, y| {
        let sx = (((x as f64 + 0.5) * sw as f64 / w as f64) as u32).min(sw - 1);
        let sy = (((y as f64 + 0.5) * sh as f64 / h as f64) as u32).min(sh - 1);
        *src.get_pixel(sx, sy)
    })
}

/// Tight pixel extent of all pixels with `alpha > threshold`:
/// `(x_min, y_min, x_max_exclusive, y_max_exclusive)`, or `None` when empty.
pub fn alpha_extent(img: &RgbaImage, threshold: u8) -> Option<(u32, u32, u32, u32)> {
    let mut ext: Option<(u32, u32, u32, u32)> = None;
    for (x, y, px) in img.enumerate_pixels() {
        if px.0[3] > threshold {
            ext = Some(match ext {
                None => (x, y, x + 1, y + 1),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
            });
        }
    }
    ext
}

/// Running min/max accumulator for pixel coordinates, used while rasterizing
/// to track each source's own contribution extent.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtentTracker {
    ext: Option<(u32, u32, u32, u32)>,
}

impl ExtentTracker {
    pub fn add(&mut self, x: u32, y: u32) {
        self.ext = Some(match self.ext {
            None => (x, y, x + 1, y + 1),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
        });
    }

    pub fn extent(&self) -> Option<(u32, u32, u32, u32)> {
        self.ext
    }

    /// Extent as a box in continuous pixel coordinates.
    pub fn to_bbox(&self) -> Option<crate::geometry::BBox> {
        self.ext.and_then(|(x0, y0, x1, y1)| {
            crate::geometry::BBox::from_corners(x0 as f64, y0 as f64, x1 as f64, y1 as f64).ok()
        })
    }
}
