//! Bounding-box arithmetic, IoU, the pinhole camera model, and quad
//! projection with near-plane and image-border clipping.
//!
//! Conventions (fixed once, every oracle depends on them):
//! * right-handed frames; camera frame is X right, Y down, Z forward,
//! * image origin top-left, `u` grows right, `v` grows down,
//! * world "up" is `-Y` (so a camera with `yaw = pitch = 0` has its axes
//!   aligned with the world axes),
//! * `yaw` rotates about the world vertical (positive turns the forward axis
//!   toward `+X`), `pitch` tilts about the camera's X axis (positive looks
//!   up); square pixels, `f_x = f_y`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points closer to the camera plane than this are treated as invisible, and
/// quads are clipped against `z = NEAR_PLANE_EPS` before projection.
pub const NEAR_PLANE_EPS: f64 = 1e-4;

/// World up direction under the Y-down convention.
pub const WORLD_UP: Vector3<f64> = Vector3::new(0.0, -1.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate box: width and height must be positive and finite (w={w}, h={h})")]
    DegenerateBox { w: f64, h: f64 },
    #[error("billboard normal must have unit length within 1e-9 (|n| = {norm})")]
    NonUnitNormal { norm: f64 },
    #[error("invalid camera: focal and image dimensions must be positive")]
    InvalidCamera,
}

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// The canonical presentation is center + dimensions (the annotation
/// primitive); internally the corners are stored so corner-form round trips
/// are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    /// Build from center and dimensions. Rejects non-finite values and
    /// non-positive width or height.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(w > 0.0 && h > 0.0 && cx.is_finite() && cy.is_finite() && w.is_finite() && h.is_finite())
        {
            return Err(GeometryError::DegenerateBox { w, h });
        }
        Ok(Self {
            x_min: cx - w / 2.0,
            y_min: cy - h / 2.0,
            x_max: cx + w / 2.0,
            y_max: cy + h / 2.0,
        })
    }

    /// Build from corner form `(x_min, y_min, x_max, y_max)`.
    pub fn from_corners(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let (w, h) = (x_max - x_min, y_max - y_min);
        if !(w > 0.0 && h > 0.0 && x_min.is_finite() && y_min.is_finite() && w.is_finite() && h.is_finite())
        {
            return Err(GeometryError::DegenerateBox { w, h });
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.x_min, self.y_min, self.x_max, self.y_max)
    }

    pub fn cx(&self) -> f64 {
        (self.x_min + self.x_max) / 2.0
    }

    pub fn cy(&self) -> f64 {
        (self.y_min + self.y_max) / 2.0
    }

    pub fn w(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn h(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.w() * self.h()
    }

    /// Intersection over union; 0 when disjoint. Total on valid boxes.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = ix * iy;
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        inter / union
    }

    /// Intersection with another rectangle, `None` when empty or degenerate.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        BBox::from_corners(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        )
        .ok()
    }

    /// True when `self` lies entirely inside `other`.
    pub fn contained_in(&self, other: &BBox) -> bool {
        self.x_min >= other.x_min
            && self.y_min >= other.y_min
            && self.x_max <= other.x_max
            && self.y_max <= other.y_max
    }

    /// Smallest pixel-grid-aligned box containing `self` (floor the mins,
    /// ceil the maxes). Used when comparing continuous geometry against
    /// pixel-quantized alpha masks.
    pub fn snap_outward(&self) -> BBox {
        BBox {
            x_min: self.x_min.floor(),
            y_min: self.y_min.floor(),
            x_max: self.x_max.ceil(),
            y_max: self.y_max.ceil(),
        }
    }
}

/// Convenience wrapper for the free-function form used throughout the specs
/// of the metric code.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

/// Pinhole camera: position plus yaw/pitch orientation and intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub pitch: f64,
    /// Focal length in pixels (`f_x = f_y`).
    pub focal: f64,
    pub principal_point: (f64, f64),
    pub image_size: (u32, u32),
}

impl CameraPose {
    pub fn new(
        position: Vector3<f64>,
        yaw: f64,
        pitch: f64,
        focal: f64,
        principal_point: (f64, f64),
        image_size: (u32, u32),
    ) -> Result<Self, GeometryError> {
        let focal_valid = focal.is_finite() && focal > 0.0;
        if !focal_valid || image_size.0 == 0 || image_size.1 == 0 {
            return Err(GeometryError::InvalidCamera);
        }
        Ok(Self { position, yaw, pitch, focal, principal_point, image_size })
    }

    /// Camera with the principal point at the image center and a focal length
    /// derived from the vertical field of view: `f = (H/2) / tan(fov/2)`.
    pub fn from_vertical_fov(
        position: Vector3<f64>,
        yaw: f64,
        pitch: f64,
        fov_vertical: f64,
        image_size: (u32, u32),
    ) -> Result<Self, GeometryError> {
        let h = image_size.1 as f64;
        let focal = (h / 2.0) / (fov_vertical / 2.0).tan();
        Self::new(
            position,
            yaw,
            pitch,
            focal,
            (image_size.0 as f64 / 2.0, h / 2.0),
            image_size,
        )
    }

    /// Columns of the world-from-camera rotation: the camera basis vectors
    /// expressed in world coordinates.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        // Columns of R_y(yaw) * R_x(pitch).
        let right = Vector3::new(cy, 0.0, -sy);
        let down = Vector3::new(sy * sp, cp, cy * sp);
        let forward = Vector3::new(sy * cp, -sp, cy * cp);
        (right, down, forward)
    }

    /// World point expressed in the camera frame.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.position;
        let (right, down, forward) = self.basis();
        Vector3::new(right.dot(&d), down.dot(&d), forward.dot(&d))
    }

    /// Forward axis in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.basis().2
    }

    /// Image rectangle `[0, W] x [0, H]`.
    pub fn image_rect(&self) -> BBox {
        BBox::from_corners(0.0, 0.0, self.image_size.0 as f64, self.image_size.1 as f64)
            .expect("image dimensions validated at construction")
    }
}

/// Yaw that aims the forward axis at `target` from `position` (horizontal
/// component only; pitch is handled separately).
pub fn look_at_yaw(position: &Vector3<f64>, target: &Vector3<f64>) -> f64 {
    let d = target - position;
    d.x.atan2(d.z)
}

/// Billboard orientation: a constant normal, or recomputed toward the camera
/// before every projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Orientation {
    Fixed(Vector3<f64>),
    FaceCamera,
}

/// Textured quad in world space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Billboard {
    pub center: Vector3<f64>,
    pub width: f64,
    pub height: f64,
    pub orientation: Orientation,
}

impl Billboard {
    pub fn new(
        center: Vector3<f64>,
        width: f64,
        height: f64,
        orientation: Orientation,
    ) -> Result<Self, GeometryError> {
        if !(width > 0.0 && height > 0.0) {
            return Err(GeometryError::DegenerateBox { w: width, h: height });
        }
        if let Orientation::Fixed(n) = orientation {
            let norm = n.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(GeometryError::NonUnitNormal { norm });
            }
        }
        Ok(Self { center, width, height, orientation })
    }

    /// Effective unit normal for a given camera. `None` when a camera-facing
    /// quad coincides with the camera position.
    pub fn normal_for(&self, camera: &CameraPose) -> Option<Vector3<f64>> {
        match self.orientation {
            Orientation::Fixed(n) => Some(n),
            Orientation::FaceCamera => {
                let d = camera.position - self.center;
                let norm = d.norm();
                (norm > 1e-12).then(|| d / norm)
            }
        }
    }

    /// In-plane unit axes `(right, up)`: up is the direction in the quad's
    /// plane closest to the world vertical, so flames stand upright.
    pub fn plane_axes(&self, normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let mut right = WORLD_UP.cross(normal);
        if right.norm() < 1e-9 {
            // Normal (anti)parallel to the vertical: fall back to world +Z.
            right = Vector3::new(0.0, 0.0, 1.0).cross(normal);
        }
        let right = right.normalize();
        let up = normal.cross(&right);
        (right, up)
    }

    /// The four corners in world space, cyclic order, starting top-left when
    /// viewed along `-normal`.
    pub fn corners(&self, normal: &Vector3<f64>) -> [Vector3<f64>; 4] {
        let (right, up) = self.plane_axes(normal);
        let rw = right * (self.width / 2.0);
        let uh = up * (self.height / 2.0);
        [
            self.center - rw + uh,
            self.center + rw + uh,
            self.center + rw - uh,
            self.center - rw - uh,
        ]
    }
}

/// Project a world point. `None` for depth at or below the near-plane
/// epsilon; points outside the image rectangle still project.
pub fn project_point(camera: &CameraPose, p: &Vector3<f64>) -> Option<(f64, f64)> {
    let c = camera.to_camera(p);
    if c.z <= NEAR_PLANE_EPS {
        return None;
    }
    Some((
        camera.focal * c.x / c.z + camera.principal_point.0,
        camera.focal * c.y / c.z + camera.principal_point.1,
    ))
}

/// Clip a camera-frame polygon against the near plane `z = NEAR_PLANE_EPS`
/// (single-plane Sutherland–Hodgman).
fn clip_near_plane(poly: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE_EPS;
        let b_in = b.z >= NEAR_PLANE_EPS;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE_EPS - a.z) / (b.z - a.z);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Project a billboard to its clipped image-space bounding rectangle.
///
/// The quad polygon is clipped against the near plane, the surviving vertices
/// are projected, their min/max rectangle is intersected with the image
/// rectangle, and the result is returned in center+dims form. `None` when the
/// quad is wholly behind the near plane, projects edge-on to zero area, or
/// misses the image.
pub fn project_billboard(camera: &CameraPose, plane: &Billboard) -> Option<BBox> {
    let normal = plane.normal_for(camera)?;
    let corners = plane.corners(&normal);
    let cam_poly: Vec<Vector3<f64>> = corners.iter().map(|p| camera.to_camera(p)).collect();
    let clipped = clip_near_plane(&cam_poly);
    if clipped.len() < 3 {
        return None;
    }

    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for c in &clipped {
        let u = camera.focal * c.x / c.z + camera.principal_point.0;
        let v = camera.focal * c.y / c.z + camera.principal_point.1;
        u_min = u_min.min(u);
        u_max = u_max.max(u);
        v_min = v_min.min(v);
        v_max = v_max.max(v);
    }

    let (w, h) = (camera.image_size.0 as f64, camera.image_size.1 as f64);
    BBox::from_corners(u_min.max(0.0), v_min.max(0.0), u_max.min(w), v_max.min(h)).ok()
}
