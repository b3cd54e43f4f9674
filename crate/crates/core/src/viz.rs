//! Box-overlay rendering for visual inspection of annotations.

use image::{Rgba, RgbaImage};
use thiserror::Error;

use crate::dataset::AnnotationRecord;

#[derive(Debug, Error, PartialEq)]
pub enum VizError {
    #[error("record is for a {record:?} image but the raster is {image:?}")]
    DimensionMismatch { record: (u32, u32), image: (u32, u32) },
    #[error("box {index} exceeds the image rectangle (never silently clipped)")]
    BoxOutOfRange { index: usize },
}

pub const OUTLINE_THICKNESS: u32 = 2;
pub const OUTLINE_COLOR: Rgba<u8> = Rgba([255, 32, 32, 255]);

/// Draw 2-px rectangle outlines for every box in the record. Pure function
/// of its inputs; out-of-range boxes are an error, never clipped.
pub fn overlay_boxes(image: &RgbaImage, record: &AnnotationRecord) -> Result<RgbaImage, VizError> {
    if image.dimensions() != record.image_size {
        return Err(VizError::DimensionMismatch {
            record: record.image_size,
            image: image.dimensions(),
        });
    }
    let (w, h) = image.dimensions();
    let mut out = image.clone();
    for (index, obj) in record.objects.iter().enumerate() {
        let (bx0, by0, bx1, by1) = obj.bbox.corners();
        if bx0 < 0.0 || by0 < 0.0 || bx1 > w as f64 || by1 > h as f64 {
            return Err(VizError::BoxOutOfRange { index });
        }
        // Outline strips drawn inward from the rounded rectangle.
        let x0 = bx0.round() as u32;
        let y0 = by0.round() as u32;
        let x1 = (bx1.round() as u32).min(w);
        let y1 = (by1.round() as u32).min(h);
        let t = OUTLINE_THICKNESS;
        for y in y0..y1 {
            for x in x0..x1 {
                let on_horizontal = y < y0 + t || y >= y1.saturating_sub(t);
                let on_vertical = x < x0 + t || x >= x1.saturating_sub(t);
                if on_horizontal || on_vertical {
                    out.put_pixel(x, y, OUTLINE_COLOR);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObjectAnnotation;
    use crate::geometry::BBox;

    fn blank(w: u32, h: u32) -> RgbaImage {
        RgbaImage::from_pixel(w, h, Rgba([10, 10, 10, 255]))
    }

    #[test]
    fn empty_record_leaves_image_unchanged() {
        let img = blank(20, 20);
        let rec = AnnotationRecord::new("x.png".into(), (20, 20), vec![]).unwrap();
        assert_eq!(overlay_boxes(&img, &rec).unwrap(), img);
    }

    #[test]
    fn outline_recolors_exactly_the_four_strips() {
        let img = blank(40, 40);
        let bbox = BBox::from_corners(10.0, 12.0, 30.0, 28.0).unwrap();
        let rec = AnnotationRecord::new(
            "x.png".into(),
            (40, 40),
            vec![ObjectAnnotation { class_id: 0, bbox }],
        )
        .unwrap();
        let out = overlay_boxes(&img, &rec).unwrap();
        for y in 0..40u32 {
            for x in 0..40u32 {
                let inside = (10..30).contains(&x) && (12..28).contains(&y);
                let on_strip = inside
                    && (y < 14 || y >= 26 || x < 12 || x >= 28);
                let expected = if on_strip { OUTLINE_COLOR } else { Rgba([10, 10, 10, 255]) };
                assert_eq!(*out.get_pixel(x, y), expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let img = blank(10, 10);
        let rec = AnnotationRecord::new("x.png".into(), (20, 20), vec![]).unwrap();
        assert!(matches!(
            overlay_boxes(&img, &rec),
            Err(VizError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn out_of_range_box_rejected() {
        // Bypass record validation with a record whose declared size is
        // larger, then draw on a smaller raster of the same declared size:
        // build the record at the raster size but with a box touching the
        // exact border, then shrink the box check by constructing directly.
        let img = blank(20, 20);
        let rec = AnnotationRecord {
            image_name: "x.png".into(),
            image_size: (20, 20),
            objects: vec![ObjectAnnotation {
                class_id: 0,
                bbox: BBox::from_corners(10.0, 10.0, 25.0, 15.0).unwrap(),
            }],
        };
        assert_eq!(overlay_boxes(&img, &rec), Err(VizError::BoxOutOfRange { index: 0 }));
    }
}
