//! 3D billboard generation: camera sampling under movement rules, flame
//! plane placement in a scene volume, and perspective rendering with
//! corner-projection annotations.

use image::RgbaImage;
use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{GeneratedFrame, Method, SeedRecord};
use crate::geometry::{project_billboard, Billboard, CameraPose, Orientation, NEAR_PLANE_EPS};
use crate::raster::{blend_over, ExtentTracker};
use crate::rng::{uniform_in, uniform_in_u32};
use crate::sprites::{Sprite, SpriteCatalog};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("sprite catalog is empty")]
    EmptyCatalog,
    #[error("background is {got:?} but the camera image size is {want:?}")]
    DimensionMismatch { got: (u32, u32), want: (u32, u32) },
    #[error("invalid scene config: {0}")]
    InvalidConfig(&'static str),
}

/// Axis-aligned region of world space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorldBox {
    pub fn sample(&self, rng: &mut impl Rng) -> Vector3<f64> {
        Vector3::new(
            uniform_in(rng, self.min[0], self.max[0]),
            uniform_in(rng, self.min[1], self.max[1]),
            uniform_in(rng, self.min[2], self.max[2]),
        )
    }

    pub fn point(p: [f64; 3]) -> Self {
        Self { min: p, max: p }
    }
}

/// Everything the Method 1 generator needs to sample a frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneConfig {
    pub camera_region: WorldBox,
    /// Inclusive yaw range in radians; ignored when track targets are set.
    pub yaw_range: (f64, f64),
    /// Fixed pitch (0 keeps the horizontal-view rule).
    pub pitch: f64,
    /// When present, the camera aims at the nearest target instead of
    /// drawing a yaw.
    pub track_targets: Option<Vec<[f64; 3]>>,
    /// Vertical field of view in radians.
    pub fov_vertical: f64,
    pub image_size: (u32, u32),
    pub placement_region: WorldBox,
    /// Inclusive billboard count range; lower bound must be >= 1.
    pub flame_count_range: (u32, u32),
    /// Inclusive world-unit height range for billboards.
    pub flame_size_range: (f64, f64),
    /// Constant normal for fixed-orientation flame planes.
    pub billboard_normal: [f64; 3],
    /// Identifier of the background set ("procedural" or a directory).
    pub background_ref: String,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            camera_region: WorldBox { min: [-4.0, -0.5, -4.0], max: [4.0, 0.5, 4.0] },
            yaw_range: (0.0, std::f64::consts::TAU),
            pitch: 0.0,
            track_targets: None,
            fov_vertical: 60f64.to_radians(),
            image_size: (640, 480),
            placement_region: WorldBox { min: [-6.0, -2.0, -6.0], max: [6.0, 2.0, 6.0] },
            flame_count_range: (1, 3),
            flame_size_range: (0.5, 3.0),
            billboard_normal: [0.0, 0.0, -1.0],
            background_ref: "procedural".to_string(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.flame_count_range.0 < 1 {
            return Err(SceneError::InvalidConfig("flame_count_range lower bound must be >= 1"));
        }
        if !(self.fov_vertical > 0.0 && self.fov_vertical < std::f64::consts::PI) {
            return Err(SceneError::InvalidConfig("fov_vertical must be in (0, pi)"));
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(SceneError::InvalidConfig("image_size must be positive"));
        }
        let size_lo = self.flame_size_range.0;
        if !size_lo.is_finite() || size_lo <= 0.0 {
            return Err(SceneError::InvalidConfig("flame_size_range must be positive"));
        }
        let n = Vector3::from(self.billboard_normal);
        if (n.norm() - 1.0).abs() > 1e-6 {
            return Err(SceneError::InvalidConfig("billboard_normal must be unit length"));
        }
        Ok(())
    }
}

/// Draw a camera pose: position uniform in the camera region, yaw uniform or
/// aimed at the nearest track target, pitch fixed.
pub fn sample_camera(config: &SceneConfig, rng: &mut impl Rng) -> CameraPose {
    let position = config.camera_region.sample(rng);
    let yaw = match &config.track_targets {
        Some(targets) if !targets.is_empty() => {
            let nearest = targets
                .iter()
                .map(|t| Vector3::from(*t))
                .min_by(|a, b| {
                    let da = (a - position).norm_squared();
                    let db = (b - position).norm_squared();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            crate::geometry::look_at_yaw(&position, &nearest)
        }
        _ => uniform_in(rng, config.yaw_range.0, config.yaw_range.1),
    };
    CameraPose::from_vertical_fov(position, yaw, config.pitch, config.fov_vertical, config.image_size)
        .expect("config validated")
}

/// A billboard paired with the catalog sprite textured onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub billboard: Billboard,
    pub sprite_index: usize,
}

/// Draw billboard placements: count uniform in range, centers uniform in the
/// placement region, heights uniform in the size range, width preserving the
/// sprite aspect ratio, orientation fixed to the configured normal.
pub fn place_billboards(
    config: &SceneConfig,
    catalog: &SpriteCatalog,
    rng: &mut impl Rng,
) -> Result<Vec<Placement>, SceneError> {
    if catalog.is_empty() {
        return Err(SceneError::EmptyCatalog);
    }
    let normal = Vector3::from(config.billboard_normal).normalize();
    let count = uniform_in_u32(rng, config.flame_count_range.0, config.flame_count_range.1);
    let mut placements = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let sprite_index = rng.random_range(0..catalog.len());
        let center = config.placement_region.sample(rng);
        let height = uniform_in(rng, config.flame_size_range.0, config.flame_size_range.1);
        let width = height * catalog.sprites[sprite_index].aspect();
        let billboard = Billboard::new(center, width, height, Orientation::Fixed(normal))
            .expect("positive size and unit normal");
        placements.push(Placement { billboard, sprite_index });
    }
    Ok(placements)
}

/// Per-placement render bookkeeping.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub frame: GeneratedFrame,
    /// For each emitted box, the alpha-tight extent of that billboard's own
    /// composited pixels (None when no texel with alpha > 0 landed in frame).
    /// This is the Method 2 style annotation of the same render, kept for
    /// annotation-accuracy comparisons.
    pub alpha_boxes: Vec<Option<crate::geometry::BBox>>,
}

/// Render billboards over a background by perspective-correct ray/plane
/// texture sampling (nearest-neighbor), composited back-to-front by quad
/// center depth. Annotation boxes are the clipped corner-projection
/// rectangles.
pub fn render_m1(
    camera: &CameraPose,
    placements: &[Placement],
    catalog: &SpriteCatalog,
    background: &RgbaImage,
    seed_record: SeedRecord,
) -> Result<RenderedScene, SceneError> {
    if background.dimensions() != camera.image_size {
        return Err(SceneError::DimensionMismatch {
            got: background.dimensions(),
            want: camera.image_size,
        });
    }
    for p in placements {
        if p.sprite_index >= catalog.len() {
            return Err(SceneError::EmptyCatalog);
        }
    }

    // Painter's algorithm: farthest quad center first.
    let mut order: Vec<usize> = (0..placements.len()).collect();
    let depth = |i: usize| camera.to_camera(&placements[i].billboard.center).z;
    order.sort_by(|&a, &b| depth(b).partial_cmp(&depth(a)).unwrap());

    let mut canvas = background.clone();
    // Boxes keyed by placement index so output order is placement order.
    let mut results: Vec<Option<(crate::geometry::BBox, Option<crate::geometry::BBox>)>> =
        vec![None; placements.len()];

    for &idx in &order {
        let placement = &placements[idx];
        let Some(bbox) = project_billboard(camera, &placement.billboard) else {
            continue;
        };
        let sprite = &catalog.sprites[placement.sprite_index];
        let alpha = rasterize_billboard(camera, &placement.billboard, sprite, &mut canvas, &bbox);
        results[idx] = Some((bbox, alpha));
    }

    let mut boxes = Vec::new();
    let mut alpha_boxes = Vec::new();
    for r in results.into_iter().flatten() {
        boxes.push(r.0);
        alpha_boxes.push(r.1);
    }

    Ok(RenderedScene {
        frame: GeneratedFrame { image: canvas, boxes, seed_record, method: Method::M1 },
        alpha_boxes,
    })
}

/// Sample the sprite onto the canvas for every pixel whose center ray hits
/// the quad. Returns the alpha-tight extent of the contributed pixels.
fn rasterize_billboard(
    camera: &CameraPose,
    billboard: &Billboard,
    sprite: &Sprite,
    canvas: &mut RgbaImage,
    bbox: &crate::geometry::BBox,
) -> Option<crate::geometry::BBox> {
    let normal_w = billboard.normal_for(camera)?;
    let (right_w, up_w) = billboard.plane_axes(&normal_w);
    // Quad frame expressed in camera coordinates; rotation keeps the axes
    // orthonormal, so plane parameters stay unit-scaled.
    let origin = camera.to_camera(&billboard.center);
    let (rb, db, fb) = camera.basis();
    let to_cam_dir =
        |v: &Vector3<f64>| Vector3::new(rb.dot(v), db.dot(v), fb.dot(v));
    let right = to_cam_dir(&right_w);
    let up = to_cam_dir(&up_w);
    let normal = to_cam_dir(&normal_w);
    // Top-left corner of the quad in camera space.
    let corner = origin - right * (billboard.width / 2.0) + up * (billboard.height / 2.0);

    let (w, h) = canvas.dimensions();
    let (bx0, by0, bx1, by1) = bbox.corners();
    let x_lo = bx0.floor().max(0.0) as u32;
    let y_lo = by0.floor().max(0.0) as u32;
    let x_hi = (bx1.ceil() as u32).min(w);
    let y_hi = (by1.ceil() as u32).min(h);

    let (sw, sh) = (sprite.width(), sprite.height());
    let mut extent = ExtentTracker::default();

    for py in y_lo..y_hi {
        for px in x_lo..x_hi {
            // Ray through the pixel center.
            let dir = Vector3::new(
                (px as f64 + 0.5 - camera.principal_point.0) / camera.focal,
                (py as f64 + 0.5 - camera.principal_point.1) / camera.focal,
                1.0,
            );
            let denom = normal.dot(&dir);
            if denom.abs() < 1e-12 {
                continue;
            }
            let t = normal.dot(&origin) / denom;
            if t <= NEAR_PLANE_EPS {
                continue;
            }
            let hit = dir * t;
            let rel = hit - corner;
            let s = rel.dot(&right) / billboard.width;
            let tau = -rel.dot(&up) / billboard.height;
            if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&tau) {
                continue;
            }
            let tx = ((s * sw as f64) as u32).min(sw - 1);
            let ty = ((tau * sh as f64) as u32).min(sh - 1);
            let texel = *sprite.image.get_pixel(tx, ty);
            if texel.0[3] > 0 {
                extent.add(px, py);
                blend_over(canvas.get_pixel_mut(px, py), texel);
            }
        }
    }
    extent.to_bbox()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::rng::derive_rng;
    use image::Rgba;
    use std::collections::BTreeSet;

    fn opaque_sprite(w: u32, h: u32) -> Sprite {
        Sprite {
            image: RgbaImage::from_pixel(w, h, Rgba([240, 110, 20, 255])),
            tags: BTreeSet::new(),
            source_frame: 0,
            crop_offset: (0, 0),
        }
    }

    fn catalog_of(sprites: Vec<Sprite>) -> SpriteCatalog {
        SpriteCatalog { sprites, skipped_empty: 0 }
    }

    fn seed0() -> SeedRecord {
        SeedRecord { master_seed: 0, frame_index: 0 }
    }

    fn fixed_camera_config() -> SceneConfig {
        SceneConfig {
            camera_region: WorldBox::point([0.0, 0.0, 0.0]),
            yaw_range: (0.0, 0.0),
            fov_vertical: 2.0 * (1.0f64).atan(), // focal = H/2
            image_size: (1000, 1000),
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_region_gives_deterministic_pose() {
        let config = fixed_camera_config();
        let pose = sample_camera(&config, &mut derive_rng(3, 0));
        assert_eq!(pose.position, Vector3::zeros());
        assert_eq!(pose.yaw, 0.0);
        assert_eq!(pose.pitch, 0.0);
        assert!((pose.focal - 500.0).abs() < 1e-9);
    }

    #[test]
    fn track_target_aims_camera() {
        let mut config = fixed_camera_config();
        config.track_targets = Some(vec![[5.0, 0.0, 0.0]]);
        let pose = sample_camera(&config, &mut derive_rng(3, 0));
        let (u, v) = crate::geometry::project_point(&pose, &Vector3::new(5.0, 0.0, 0.0)).unwrap();
        assert!((u - 500.0).abs() < 1e-9);
        assert!((v - 500.0).abs() < 1e-9);
    }

    #[test]
    fn pose_sequence_is_seed_deterministic() {
        let config = SceneConfig::default();
        let a: Vec<CameraPose> =
            (0..5).map(|i| sample_camera(&config, &mut derive_rng(42, i))).collect();
        let b: Vec<CameraPose> =
            (0..5).map(|i| sample_camera(&config, &mut derive_rng(42, i))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn single_forced_placement() {
        let mut config = SceneConfig::default();
        config.flame_count_range = (1, 1);
        config.placement_region = WorldBox::point([1.0, 2.0, 3.0]);
        let catalog = catalog_of(vec![opaque_sprite(8, 8)]);
        let placements = place_billboards(&config, &catalog, &mut derive_rng(0, 0)).unwrap();
        assert_eq!(placements.len(), 1);
        assert_eq!(placements[0].billboard.center, Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn width_preserves_sprite_aspect() {
        let mut config = SceneConfig::default();
        config.flame_count_range = (1, 1);
        config.flame_size_range = (4.0, 4.0);
        // 1:2 aspect (w:h).
        let catalog = catalog_of(vec![opaque_sprite(5, 10)]);
        let placements = place_billboards(&config, &catalog, &mut derive_rng(0, 0)).unwrap();
        assert!((placements[0].billboard.width - 2.0).abs() < 1e-12);
        assert!((placements[0].billboard.height - 4.0).abs() < 1e-12);
    }

    #[test]
    fn placements_are_seed_deterministic() {
        let mut config = SceneConfig::default();
        config.flame_count_range = (3, 3);
        let catalog = catalog_of(vec![opaque_sprite(8, 8), opaque_sprite(4, 4)]);
        let a = place_billboards(&config, &catalog, &mut derive_rng(7, 1)).unwrap();
        let b = place_billboards(&config, &catalog, &mut derive_rng(7, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn empty_catalog_is_rejected() {
        let config = SceneConfig::default();
        let err = place_billboards(&config, &catalog_of(vec![]), &mut derive_rng(0, 0));
        assert_eq!(err.unwrap_err(), SceneError::EmptyCatalog);
    }

    fn test_camera() -> CameraPose {
        CameraPose::new(Vector3::zeros(), 0.0, 0.0, 500.0, (500.0, 500.0), (1000, 1000)).unwrap()
    }

    fn gray(w: u32, h: u32) -> RgbaImage {
        RgbaImage::from_pixel(w, h, Rgba([60, 60, 60, 255]))
    }

    #[test]
    fn no_placements_returns_background() {
        let cam = test_camera();
        let background = gray(1000, 1000);
        let out = render_m1(&cam, &[], &catalog_of(vec![]), &background, seed0()).unwrap();
        assert_eq!(out.frame.image, background);
        assert!(out.frame.boxes.is_empty());
    }

    #[test]
    fn on_axis_quad_box_and_pixels_agree() {
        let cam = test_camera();
        let catalog = catalog_of(vec![opaque_sprite(16, 16)]);
        let placement = Placement {
            billboard: Billboard::new(
                Vector3::new(0.0, 0.0, 10.0),
                2.0,
                2.0,
                Orientation::FaceCamera,
            )
            .unwrap(),
            sprite_index: 0,
        };
        let out = render_m1(&cam, &[placement], &catalog, &gray(1000, 1000), seed0()).unwrap();
        assert_eq!(out.frame.boxes.len(), 1);
        let b = &out.frame.boxes[0];
        assert!((b.cx() - 500.0).abs() < 1e-9);
        assert!((b.cy() - 500.0).abs() < 1e-9);
        assert!((b.w() - 100.0).abs() < 1e-9);
        assert!((b.h() - 100.0).abs() < 1e-9);
        // Composited opaque region matches the box within one pixel.
        let alpha = out.alpha_boxes[0].unwrap();
        let (ax0, ay0, ax1, ay1) = alpha.corners();
        assert!((ax0 - 450.0).abs() <= 1.0 && (ay0 - 450.0).abs() <= 1.0);
        assert!((ax1 - 550.0).abs() <= 1.0 && (ay1 - 550.0).abs() <= 1.0);
    }

    #[test]
    fn behind_camera_quad_is_invisible() {
        let cam = test_camera();
        let catalog = catalog_of(vec![opaque_sprite(8, 8)]);
        let placement = Placement {
            billboard: Billboard::new(
                Vector3::new(0.0, 0.0, -10.0),
                2.0,
                2.0,
                Orientation::FaceCamera,
            )
            .unwrap(),
            sprite_index: 0,
        };
        let background = gray(1000, 1000);
        let out = render_m1(&cam, &[placement], &catalog, &background, seed0()).unwrap();
        assert!(out.frame.boxes.is_empty());
        assert_eq!(out.frame.image, background);
    }

    #[test]
    fn background_dimension_mismatch_rejected() {
        let cam = test_camera();
        let err = render_m1(&cam, &[], &catalog_of(vec![]), &gray(10, 10), seed0());
        assert!(matches!(err, Err(SceneError::DimensionMismatch { .. })));
    }

    #[test]
    fn projection_box_contains_alpha_box_for_visible_quads() {
        // Fully in-frustum quads: corner-projection annotation must contain
        // the pixel-quantized alpha extent after outward grid snapping.
        let cam = test_camera();
        let catalog = catalog_of(vec![opaque_sprite(12, 20)]);
        for i in 0..40u64 {
            let mut rng = derive_rng(13, i);
            let cx = uniform_in(&mut rng, -2.0, 2.0);
            let cy = uniform_in(&mut rng, -2.0, 2.0);
            let cz = uniform_in(&mut rng, 6.0, 18.0);
            let h = uniform_in(&mut rng, 0.5, 2.0);
            let billboard =
                Billboard::new(Vector3::new(cx, cy, cz), h * 0.6, h, Orientation::FaceCamera)
                    .unwrap();
            let out = render_m1(
                &cam,
                &[Placement { billboard, sprite_index: 0 }],
                &catalog,
                &gray(1000, 1000),
                seed0(),
            )
            .unwrap();
            if let (Some(quad_box), Some(Some(alpha))) =
                (out.frame.boxes.first(), out.alpha_boxes.first())
            {
                assert!(
                    alpha.contained_in(&quad_box.snap_outward()),
                    "alpha box {alpha:?} outside quad box {quad_box:?}"
                );
            }
        }
    }

    #[test]
    fn emitted_boxes_already_clipped() {
        let cam = test_camera();
        let catalog = catalog_of(vec![opaque_sprite(8, 8)]);
        let img_rect = BBox::from_corners(0.0, 0.0, 1000.0, 1000.0).unwrap();
        for i in 0..30u64 {
            let mut rng = derive_rng(29, i);
            let billboard = Billboard::new(
                Vector3::new(
                    uniform_in(&mut rng, -8.0, 8.0),
                    uniform_in(&mut rng, -8.0, 8.0),
                    uniform_in(&mut rng, 2.0, 12.0),
                ),
                1.5,
                1.5,
                Orientation::FaceCamera,
            )
            .unwrap();
            let out = render_m1(
                &cam,
                &[Placement { billboard, sprite_index: 0 }],
                &catalog,
                &gray(1000, 1000),
                seed0(),
            )
            .unwrap();
            for b in &out.frame.boxes {
                assert_eq!(b.intersect(&img_rect), Some(*b));
            }
        }
    }

    #[test]
    fn overlapping_quads_render_near_over_far() {
        let cam = test_camera();
        let near_sprite = Sprite {
            image: RgbaImage::from_pixel(4, 4, Rgba([255, 0, 0, 255])),
            tags: BTreeSet::new(),
            source_frame: 0,
            crop_offset: (0, 0),
        };
        let far_sprite = Sprite {
            image: RgbaImage::from_pixel(4, 4, Rgba([0, 255, 0, 255])),
            tags: BTreeSet::new(),
            source_frame: 0,
            crop_offset: (0, 0),
        };
        let catalog = catalog_of(vec![near_sprite, far_sprite]);
        let near = Placement {
            billboard: Billboard::new(Vector3::new(0.0, 0.0, 5.0), 1.0, 1.0, Orientation::FaceCamera)
                .unwrap(),
            sprite_index: 0,
        };
        let far = Placement {
            billboard: Billboard::new(Vector3::new(0.0, 0.0, 10.0), 4.0, 4.0, Orientation::FaceCamera)
                .unwrap(),
            sprite_index: 1,
        };
        // Listed far-last; painter's order must still put near on top.
        let out = render_m1(&cam, &[near, far], &catalog, &gray(1000, 1000), seed0()).unwrap();
        assert_eq!(out.frame.image.get_pixel(500, 500).0, [255, 0, 0, 255]);
        assert_eq!(out.frame.image.get_pixel(400, 500).0, [0, 255, 0, 255]);
    }
}
