//! Bit-exact annotation and manifest formats: per-frame JSON, YOLO text,
//! COCO-style export, detection-result ingestion, and dataset manifests.
//!
//! Pixel center+dims is the canonical box form; YOLO and COCO are derived
//! views. All writers emit sorted keys and fixed 6-decimal floats so dataset
//! diffs are stable across platforms.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: parse error: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("confidence {value} outside [0, 1] (record {index})")]
    InvalidConfidence { value: f64, index: usize },
    #[error("record {index}: {message}")]
    InvalidBox { index: usize, message: String },
    #[error("box {index} of {image_name} lies outside the {width}x{height} image")]
    BoxOutOfBounds { image_name: String, index: usize, width: u32, height: u32 },
    #[error("duplicate image name in manifest: {0}")]
    DuplicateImageName(String),
}

/// Single annotated object; `class_id` is 0 ("fire") throughout this
/// artifact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectAnnotation {
    pub class_id: u32,
    pub bbox: BBox,
}

/// Per-frame ground-truth record.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_name: String,
    pub image_size: (u32, u32),
    pub objects: Vec<ObjectAnnotation>,
}

impl AnnotationRecord {
    /// Validates that every box lies within `[0, W] x [0, H]`.
    pub fn new(
        image_name: String,
        image_size: (u32, u32),
        objects: Vec<ObjectAnnotation>,
    ) -> Result<Self, DatasetError> {
        let rect = BBox::from_corners(0.0, 0.0, image_size.0 as f64, image_size.1 as f64)
            .expect("image dimensions must be positive");
        for (index, obj) in objects.iter().enumerate() {
            if !obj.bbox.contained_in(&rect) {
                return Err(DatasetError::BoxOutOfBounds {
                    image_name,
                    index,
                    width: image_size.0,
                    height: image_size.1,
                });
            }
        }
        Ok(Self { image_name, image_size, objects })
    }
}

/// One detector output row.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_name: String,
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: BBox,
}

fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    fs::write(path, bytes).map_err(|source| DatasetError::Io { path: path.into(), source })
}

/// Render the per-frame JSON body: sorted keys, boxes in pixel center+dims,
/// floats with 6 decimals.
pub fn frame_json_string(record: &AnnotationRecord) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"height\":{},\"image\":\"{}\",\"objects\":[",
        record.image_size.1,
        json_escape(&record.image_name)
    );
    for (i, obj) in record.objects.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"class\":{},\"cx\":{},\"cy\":{},\"h\":{},\"w\":{}}}",
            obj.class_id,
            fixed6(obj.bbox.cx()),
            fixed6(obj.bbox.cy()),
            fixed6(obj.bbox.h()),
            fixed6(obj.bbox.w()),
        );
    }
    let _ = writeln!(out, "],\"width\":{}}}", record.image_size.0);
    out
}

/// Write the per-frame JSON annotation file.
pub fn write_frame_json(record: &AnnotationRecord, path: &Path) -> Result<(), DatasetError> {
    write_bytes(path, frame_json_string(record).as_bytes())
}

/// Read a per-frame JSON annotation file back into a record.
pub fn read_frame_json(path: &Path) -> Result<AnnotationRecord, DatasetError> {
    let text =
        fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|source| DatasetError::Parse { path: path.into(), source })?;
    let schema =
        |message: String| DatasetError::Schema { path: path.into(), message };

    let image_name = value["image"]
        .as_str()
        .ok_or_else(|| schema("missing \"image\"".into()))?
        .to_owned();
    let width = value["width"].as_u64().ok_or_else(|| schema("missing \"width\"".into()))? as u32;
    let height =
        value["height"].as_u64().ok_or_else(|| schema("missing \"height\"".into()))? as u32;
    let objs = value["objects"].as_array().ok_or_else(|| schema("missing \"objects\"".into()))?;
    let mut objects = Vec::with_capacity(objs.len());
    for (index, o) in objs.iter().enumerate() {
        let f = |k: &str| o[k].as_f64().ok_or_else(|| schema(format!("object missing \"{k}\"")));
        let bbox = BBox::new(f("cx")?, f("cy")?, f("w")?, f("h")?)
            .map_err(|e| DatasetError::InvalidBox { index, message: e.to_string() })?;
        let class_id =
            o["class"].as_u64().ok_or_else(|| schema("object missing \"class\"".into()))? as u32;
        objects.push(ObjectAnnotation { class_id, bbox });
    }
    AnnotationRecord::new(image_name, (width, height), objects)
}

/// YOLO text body: one `class cx/W cy/H w/W h/H` line per object, normalized
/// to [0, 1] with 6 decimals.
pub fn yolo_string(record: &AnnotationRecord) -> String {
    let (w, h) = (record.image_size.0 as f64, record.image_size.1 as f64);
    let mut out = String::new();
    for obj in &record.objects {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            obj.class_id,
            fixed6(obj.bbox.cx() / w),
            fixed6(obj.bbox.cy() / h),
            fixed6(obj.bbox.w() / w),
            fixed6(obj.bbox.h() / h),
        );
    }
    out
}

/// Write the YOLO annotation file (empty record gives an empty file).
pub fn write_yolo(record: &AnnotationRecord, path: &Path) -> Result<(), DatasetError> {
    write_bytes(path, yolo_string(record).as_bytes())
}

/// COCO-style export: single JSON with images/annotations/categories arrays,
/// annotation bbox in `(x_min, y_min, w, h)` form, stable integer ids
/// assigned in input order starting at 1.
pub fn coco_string(records: &[AnnotationRecord], category_name: &str) -> String {
    let mut out = String::from("{\"annotations\":[");
    let mut ann_id = 0u64;
    for (img_idx, record) in records.iter().enumerate() {
        for obj in &record.objects {
            ann_id += 1;
            if ann_id > 1 {
                out.push(',');
            }
            let (x0, y0, _, _) = obj.bbox.corners();
            let _ = write!(
                out,
                "{{\"area\":{},\"bbox\":[{},{},{},{}],\"category_id\":{},\"id\":{},\"image_id\":{},\"iscrowd\":0}}",
                fixed6(obj.bbox.area()),
                fixed6(x0),
                fixed6(y0),
                fixed6(obj.bbox.w()),
                fixed6(obj.bbox.h()),
                obj.class_id + 1,
                ann_id,
                img_idx + 1,
            );
        }
    }
    let _ = write!(
        out,
        "],\"categories\":[{{\"id\":1,\"name\":\"{}\"}}],\"images\":[",
        json_escape(category_name)
    );
    for (img_idx, record) in records.iter().enumerate() {
        if img_idx > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"file_name\":\"{}\",\"height\":{},\"id\":{},\"width\":{}}}",
            json_escape(&record.image_name),
            record.image_size.1,
            img_idx + 1,
            record.image_size.0,
        );
    }
    out.push_str("]}\n");
    out
}

/// Write the COCO export for a list of records.
pub fn export_coco(records: &[AnnotationRecord], path: &Path) -> Result<(), DatasetError> {
    write_bytes(path, coco_string(records, "fire").as_bytes())
}

/// Read a COCO export back into per-image records.
pub fn import_coco(path: &Path) -> Result<Vec<AnnotationRecord>, DatasetError> {
    let text =
        fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|source| DatasetError::Parse { path: path.into(), source })?;
    let schema =
        |message: String| DatasetError::Schema { path: path.into(), message };

    let images = value["images"].as_array().ok_or_else(|| schema("missing \"images\"".into()))?;
    let mut records = Vec::with_capacity(images.len());
    let mut id_to_idx = std::collections::HashMap::new();
    for img in images {
        let id = img["id"].as_u64().ok_or_else(|| schema("image missing \"id\"".into()))?;
        let name = img["file_name"]
            .as_str()
            .ok_or_else(|| schema("image missing \"file_name\"".into()))?;
        let width =
            img["width"].as_u64().ok_or_else(|| schema("image missing \"width\"".into()))? as u32;
        let height =
            img["height"].as_u64().ok_or_else(|| schema("image missing \"height\"".into()))? as u32;
        id_to_idx.insert(id, records.len());
        records.push(AnnotationRecord {
            image_name: name.to_owned(),
            image_size: (width, height),
            objects: Vec::new(),
        });
    }
    let anns =
        value["annotations"].as_array().ok_or_else(|| schema("missing \"annotations\"".into()))?;
    for (index, ann) in anns.iter().enumerate() {
        let image_id = ann["image_id"]
            .as_u64()
            .ok_or_else(|| schema("annotation missing \"image_id\"".into()))?;
        let idx = *id_to_idx
            .get(&image_id)
            .ok_or_else(|| schema(format!("annotation references unknown image {image_id}")))?;
        let bbox =
            ann["bbox"].as_array().ok_or_else(|| schema("annotation missing \"bbox\"".into()))?;
        if bbox.len() != 4 {
            return Err(schema("bbox must have 4 entries".into()));
        }
        let v = |i: usize| bbox[i].as_f64().ok_or_else(|| schema("bbox entry not a number".into()));
        let (x, y, w, h) = (v(0)?, v(1)?, v(2)?, v(3)?);
        let category = ann["category_id"].as_u64().unwrap_or(1) as u32;
        let b = BBox::from_corners(x, y, x + w, y + h)
            .map_err(|e| DatasetError::InvalidBox { index, message: e.to_string() })?;
        records[idx].objects.push(ObjectAnnotation { class_id: category - 1, bbox: b });
    }
    Ok(records)
}

/// Parse a JSON array of detection objects
/// (`{"image","class","confidence","cx","cy","w","h"}`), rejecting
/// confidences outside `[0, 1]` and degenerate boxes.
pub fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>, DatasetError> {
    let text =
        fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    parse_detections(&text, path)
}

/// [`read_detections`] on an in-memory string.
pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<DetectionRecord>, DatasetError> {
    #[derive(Deserialize)]
    struct Raw {
        image: String,
        class: u32,
        confidence: f64,
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
    }
    let raws: Vec<Raw> = serde_json::from_str(text)
        .map_err(|source| DatasetError::Parse { path: path.into(), source })?;
    let mut records = Vec::with_capacity(raws.len());
    for (index, raw) in raws.into_iter().enumerate() {
        if !(0.0..=1.0).contains(&raw.confidence) {
            return Err(DatasetError::InvalidConfidence { value: raw.confidence, index });
        }
        let bbox = BBox::new(raw.cx, raw.cy, raw.w, raw.h)
            .map_err(|e| DatasetError::InvalidBox { index, message: e.to_string() })?;
        records.push(DetectionRecord {
            image_name: raw.image,
            class_id: raw.class,
            confidence: raw.confidence,
            bbox,
        });
    }
    Ok(records)
}

/// Serialize detections (used by the echo/self-test path of the CLI).
pub fn detections_string(records: &[DetectionRecord]) -> String {
    let mut out = String::from("[");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"class\":{},\"confidence\":{},\"cx\":{},\"cy\":{},\"h\":{},\"image\":\"{}\",\"w\":{}}}",
            r.class_id,
            fixed6(r.confidence),
            fixed6(r.bbox.cx()),
            fixed6(r.bbox.cy()),
            fixed6(r.bbox.h()),
            json_escape(&r.image_name),
            fixed6(r.bbox.w()),
        );
    }
    out.push_str("]\n");
    out
}

/// Where a dataset entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Real,
    Synthetic,
}

/// Split membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    Unsplit,
}

/// One manifest row; fields in sorted-key order for canonical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub annotation_path: String,
    pub image_name: String,
    pub image_path: String,
    pub origin: Origin,
}

/// Generation provenance stamped into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method_tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mixture: Option<String>,
}

impl Provenance {
    pub fn empty() -> Self {
        Self { config_digest: String::new(), master_seed: 0, method_tag: None, mixture: None }
    }
}

/// Ordered collection of annotated image records with split membership and
/// provenance. Image names are unique within a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub provenance: Provenance,
    pub split: Split,
}

impl DatasetManifest {
    pub fn new(
        entries: Vec<ManifestEntry>,
        split: Split,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.image_name.as_str()) {
                return Err(DatasetError::DuplicateImageName(e.image_name.clone()));
            }
        }
        Ok(Self { entries, provenance, split })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_origin(&self, origin: Origin) -> usize {
        self.entries.iter().filter(|e| e.origin == origin).count()
    }

    /// Deterministic pretty-JSON bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialization");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        write_bytes(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path)
            .map_err(|source| DatasetError::Io { path: path.into(), source })?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|source| DatasetError::Parse { path: path.into(), source })?;
        // Re-validate uniqueness on ingest.
        DatasetManifest::new(manifest.entries, manifest.split, manifest.provenance)
    }

    /// Load every referenced annotation record, resolving relative paths
    /// against `root`.
    pub fn load_records(&self, root: &Path) -> Result<Vec<AnnotationRecord>, DatasetError> {
        self.entries
            .iter()
            .map(|e| read_frame_json(&root.join(&e.annotation_path)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_one_box() -> AnnotationRecord {
        AnnotationRecord::new(
            "frame_000001.png".into(),
            (1000, 1000),
            vec![ObjectAnnotation {
                class_id: 0,
                bbox: BBox::new(500.0, 500.0, 100.0, 100.0).unwrap(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn frame_json_golden_bytes() {
        let expected = "{\"height\":1000,\"image\":\"frame_000001.png\",\"objects\":[{\"class\":0,\"cx\":500.000000,\"cy\":500.000000,\"h\":100.000000,\"w\":100.000000}],\"width\":1000}\n";
        assert_eq!(frame_json_string(&record_one_box()), expected);
    }

    #[test]
    fn frame_json_empty_objects() {
        let rec = AnnotationRecord::new("x.png".into(), (10, 10), vec![]).unwrap();
        assert!(frame_json_string(&rec).contains("\"objects\":[]"));
    }

    #[test]
    fn frame_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let rec = record_one_box();
        write_frame_json(&rec, &path).unwrap();
        assert_eq!(read_frame_json(&path).unwrap(), rec);
    }

    #[test]
    fn record_rejects_out_of_bounds_box() {
        let err = AnnotationRecord::new(
            "x.png".into(),
            (100, 100),
            vec![ObjectAnnotation { class_id: 0, bbox: BBox::new(99.0, 50.0, 10.0, 10.0).unwrap() }],
        );
        assert!(matches!(err, Err(DatasetError::BoxOutOfBounds { .. })));
    }

    #[test]
    fn yolo_normalization() {
        assert_eq!(yolo_string(&record_one_box()), "0 0.500000 0.500000 0.100000 0.100000\n");
    }

    #[test]
    fn yolo_edge_touching_box() {
        let rec = AnnotationRecord::new(
            "x.png".into(),
            (100, 100),
            vec![ObjectAnnotation {
                class_id: 0,
                bbox: BBox::from_corners(90.0, 40.0, 100.0, 60.0).unwrap(),
            }],
        )
        .unwrap();
        assert_eq!(yolo_string(&rec), "0 0.950000 0.500000 0.100000 0.200000\n");
    }

    #[test]
    fn yolo_empty_record_is_empty_file() {
        let rec = AnnotationRecord::new("x.png".into(), (10, 10), vec![]).unwrap();
        assert_eq!(yolo_string(&rec), "");
    }

    #[test]
    fn coco_ids_and_conversion() {
        let rec_a = AnnotationRecord::new(
            "a.png".into(),
            (100, 100),
            vec![
                ObjectAnnotation { class_id: 0, bbox: BBox::new(50.0, 50.0, 10.0, 10.0).unwrap() },
                ObjectAnnotation { class_id: 0, bbox: BBox::new(20.0, 20.0, 4.0, 4.0).unwrap() },
            ],
        )
        .unwrap();
        let rec_b = AnnotationRecord::new(
            "b.png".into(),
            (100, 100),
            vec![ObjectAnnotation { class_id: 0, bbox: BBox::new(10.0, 10.0, 8.0, 8.0).unwrap() }],
        )
        .unwrap();
        let s = coco_string(&[rec_a, rec_b], "fire");
        // 2 images, 3 annotations, ids 1..3, center (50,50,10,10) -> corner [45,45,10,10].
        assert_eq!(s.matches("\"file_name\"").count(), 2);
        assert_eq!(s.matches("\"iscrowd\"").count(), 3);
        assert!(s.contains("\"bbox\":[45.000000,45.000000,10.000000,10.000000]"));
        assert!(s.contains("\"id\":3"));
    }

    #[test]
    fn coco_round_trip_preserves_boxes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coco.json");
        let rec = record_one_box();
        export_coco(std::slice::from_ref(&rec), &path).unwrap();
        let back = import_coco(&path).unwrap();
        assert_eq!(back.len(), 1);
        let (a, b) = (rec.objects[0].bbox, back[0].objects[0].bbox);
        let (ax0, ay0, ax1, ay1) = a.corners();
        let (bx0, by0, bx1, by1) = b.corners();
        assert!((ax0 - bx0).abs() < 1e-6 && (ay0 - by0).abs() < 1e-6);
        assert!((ax1 - bx1).abs() < 1e-6 && (ay1 - by1).abs() < 1e-6);
    }

    #[test]
    fn formats_agree_after_normalization() {
        let rec = AnnotationRecord::new(
            "x.png".into(),
            (640, 480),
            vec![ObjectAnnotation {
                class_id: 0,
                bbox: BBox::new(123.456789, 240.0, 64.25, 48.125).unwrap(),
            }],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let jp = dir.path().join("a.json");
        let cp = dir.path().join("a.coco.json");
        write_frame_json(&rec, &jp).unwrap();
        export_coco(std::slice::from_ref(&rec), &cp).unwrap();
        let from_json = read_frame_json(&jp).unwrap().objects[0].bbox;
        let from_coco = import_coco(&cp).unwrap()[0].objects[0].bbox;
        let yolo = yolo_string(&rec);
        let parts: Vec<f64> = yolo.split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect();
        let from_yolo =
            BBox::new(parts[0] * 640.0, parts[1] * 480.0, parts[2] * 640.0, parts[3] * 480.0)
                .unwrap();
        for other in [from_json, from_coco, from_yolo] {
            assert!((other.cx() - rec.objects[0].bbox.cx()).abs() < 1e-3);
            assert!((other.w() - rec.objects[0].bbox.w()).abs() < 1e-3);
        }
        // JSON and COCO both carry the full 6-decimal precision.
        assert!((from_json.cx() - from_coco.cx()).abs() < 1e-6);
    }

    #[test]
    fn detections_empty_array() {
        assert!(parse_detections("[]", Path::new("t")).unwrap().is_empty());
    }

    #[test]
    fn detections_valid_record() {
        let text = r#"[{"image":"a.png","class":0,"confidence":0.75,"cx":10.0,"cy":20.0,"w":4.0,"h":6.0}]"#;
        let recs = parse_detections(text, Path::new("t")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].image_name, "a.png");
        assert_eq!(recs[0].confidence, 0.75);
        assert_eq!(recs[0].bbox.w(), 4.0);
    }

    #[test]
    fn detections_confidence_out_of_range() {
        let text = r#"[{"image":"a.png","class":0,"confidence":1.5,"cx":10.0,"cy":20.0,"w":4.0,"h":6.0}]"#;
        let err = parse_detections(text, Path::new("t")).unwrap_err();
        assert!(matches!(err, DatasetError::InvalidConfidence { value, index: 0 } if value == 1.5));
    }

    #[test]
    fn detections_zero_area_rejected() {
        let text = r#"[{"image":"a.png","class":0,"confidence":0.5,"cx":10.0,"cy":20.0,"w":0.0,"h":6.0}]"#;
        assert!(matches!(
            parse_detections(text, Path::new("t")),
            Err(DatasetError::InvalidBox { .. })
        ));
    }

    #[test]
    fn detections_parse_error_carries_position() {
        let err = parse_detections("[{\"image\": }]", Path::new("t")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "expected line info in: {msg}");
    }

    #[test]
    fn detections_round_trip() {
        let recs = vec![DetectionRecord {
            image_name: "a.png".into(),
            class_id: 0,
            confidence: 0.5,
            bbox: BBox::new(10.0, 20.0, 4.0, 6.0).unwrap(),
        }];
        let text = detections_string(&recs);
        assert_eq!(parse_detections(&text, Path::new("t")).unwrap(), recs);
    }

    #[test]
    fn manifest_unique_names_enforced() {
        let entry = ManifestEntry {
            annotation_path: "a.json".into(),
            image_name: "a.png".into(),
            image_path: "a.png".into(),
            origin: Origin::Synthetic,
        };
        let err =
            DatasetManifest::new(vec![entry.clone(), entry], Split::Unsplit, Provenance::empty());
        assert!(matches!(err, Err(DatasetError::DuplicateImageName(_))));
    }

    #[test]
    fn manifest_write_read_round_trip() {
        let entries: Vec<ManifestEntry> = (0..3)
            .map(|i| ManifestEntry {
                annotation_path: format!("f{i}.json"),
                image_name: format!("f{i}.png"),
                image_path: format!("f{i}.png"),
                origin: if i % 2 == 0 { Origin::Real } else { Origin::Synthetic },
            })
            .collect();
        let m = DatasetManifest::new(entries, Split::Train, Provenance::empty()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.write(&path).unwrap();
        assert_eq!(DatasetManifest::read(&path).unwrap(), m);
        assert_eq!(m.count_origin(Origin::Real), 2);
    }
}
