//! Annotation-accuracy comparison between the projection route (corner
//! projection of the 3D quad) and the alpha-tight route (scan of the
//! composited alpha mask) for frames generated from identical placements.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::AnnotationRecord;
use crate::geometry::iou;

#[derive(Debug, Error, PartialEq)]
pub enum DiffError {
    #[error("pairing mismatch: {0}")]
    PairingMismatch(String),
}

/// Aggregate statistics over paired annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub pairs: usize,
    pub objects: usize,
    pub mean_iou: f64,
    pub min_iou: f64,
    /// Alpha-tight boxes not contained in the projected-quad box after
    /// outward pixel-grid snapping. Expected 0 for fully visible quads:
    /// compositing is pixel-quantized, so the fair comparand is the quad box
    /// dilated to whole pixels.
    pub containment_violations: usize,
}

/// Compare paired records object-by-object: `quad` holds projected-quad
/// boxes, `alpha` the alpha-tight boxes of the same render.
pub fn diff_annotations(
    pairs: &[(AnnotationRecord, AnnotationRecord)],
) -> Result<DiffStats, DiffError> {
    let mut objects = 0usize;
    let mut iou_sum = 0.0f64;
    let mut min_iou = f64::INFINITY;
    let mut violations = 0usize;

    for (quad, alpha) in pairs {
        if quad.objects.len() != alpha.objects.len() {
            return Err(DiffError::PairingMismatch(format!(
                "{}: {} projected boxes vs {} alpha boxes",
                quad.image_name,
                quad.objects.len(),
                alpha.objects.len()
            )));
        }
        for (q, a) in quad.objects.iter().zip(&alpha.objects) {
            objects += 1;
            let v = iou(&q.bbox, &a.bbox);
            iou_sum += v;
            min_iou = min_iou.min(v);
            if !a.bbox.contained_in(&q.bbox.snap_outward()) {
                violations += 1;
            }
        }
    }

    Ok(DiffStats {
        pairs: pairs.len(),
        objects,
        mean_iou: if objects > 0 { iou_sum / objects as f64 } else { 0.0 },
        min_iou: if objects > 0 { min_iou } else { 0.0 },
        containment_violations: violations,
    })
}

/// Pair record lists. With an explicit pairing (`(quad_name, alpha_name)`
/// rows) records are looked up by name; otherwise they are zipped in order
/// and must agree in length and image names.
pub fn pair_records(
    quad_records: Vec<AnnotationRecord>,
    alpha_records: Vec<AnnotationRecord>,
    pairing: Option<&[(String, String)]>,
) -> Result<Vec<(AnnotationRecord, AnnotationRecord)>, DiffError> {
    match pairing {
        Some(rows) => {
            let mut quads: HashMap<String, AnnotationRecord> =
                quad_records.into_iter().map(|r| (r.image_name.clone(), r)).collect();
            let mut alphas: HashMap<String, AnnotationRecord> =
                alpha_records.into_iter().map(|r| (r.image_name.clone(), r)).collect();
            rows.iter()
                .map(|(qn, an)| {
                    let q = quads
                        .remove(qn)
                        .ok_or_else(|| DiffError::PairingMismatch(format!("no record named {qn}")))?;
                    let a = alphas
                        .remove(an)
                        .ok_or_else(|| DiffError::PairingMismatch(format!("no record named {an}")))?;
                    Ok((q, a))
                })
                .collect()
        }
        None => {
            if quad_records.len() != alpha_records.len() {
                return Err(DiffError::PairingMismatch(format!(
                    "{} records vs {}",
                    quad_records.len(),
                    alpha_records.len()
                )));
            }
            for (q, a) in quad_records.iter().zip(&alpha_records) {
                if q.image_name != a.image_name {
                    return Err(DiffError::PairingMismatch(format!(
                        "ordered pairing aligns {} with {}",
                        q.image_name, a.image_name
                    )));
                }
            }
            Ok(quad_records.into_iter().zip(alpha_records).collect())
        }
    }
}
