//! Single-class detection evaluation: confidence-ordered greedy IoU
//! matching, interpolated average precision, AP across IoU thresholds, AP50,
//! fitness, and multi-seed aggregation with report tables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AnnotationRecord, DetectionRecord};
use crate::geometry::BBox;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("detection references image \"{0}\" absent from the truth set")]
    UnknownImage(String),
    #[error("no reports to aggregate")]
    EmptyInput,
}

/// The ten COCO-style IoU thresholds 0.50, 0.55, …, 0.95.
pub fn iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Ground truth indexed by image name.
#[derive(Debug, Clone, Default)]
pub struct TruthSet {
    boxes: HashMap<String, Vec<BBox>>,
    total: usize,
}

impl TruthSet {
    pub fn from_records(records: &[AnnotationRecord]) -> Self {
        let mut boxes: HashMap<String, Vec<BBox>> = HashMap::new();
        let mut total = 0;
        for r in records {
            let entry = boxes.entry(r.image_name.clone()).or_default();
            for o in &r.objects {
                entry.push(o.bbox);
                total += 1;
            }
        }
        Self { boxes, total }
    }

    pub fn total_truths(&self) -> usize {
        self.total
    }

    pub fn contains_image(&self, name: &str) -> bool {
        self.boxes.contains_key(name)
    }
}

/// Matching outcome for one detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMatch {
    pub confidence: f64,
    pub matched: bool,
}

/// Point on the cumulative precision-recall curve, emitted in nonincreasing
/// confidence order (recall is nondecreasing along the sequence).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub recall: f64,
    pub precision: f64,
    pub confidence: f64,
}

/// Greedy per-image matching: detections in confidence order (ties by input
/// order) each claim the unmatched truth box of highest IoU when that IoU
/// reaches the threshold; each truth matches at most once.
///
/// The result is aligned with the input detections.
pub fn match_detections(
    detections: &[DetectionRecord],
    truths: &TruthSet,
    iou_threshold: f64,
) -> Vec<DetectionMatch> {
    let mut per_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, d) in detections.iter().enumerate() {
        per_image.entry(d.image_name.as_str()).or_default().push(i);
    }

    let mut out: Vec<DetectionMatch> = detections
        .iter()
        .map(|d| DetectionMatch { confidence: d.confidence, matched: false })
        .collect();

    for (image, mut det_indices) in per_image {
        let empty = Vec::new();
        let truth_boxes = truths.boxes.get(image).unwrap_or(&empty);
        let mut used = vec![false; truth_boxes.len()];
        // Stable sort keeps input order on confidence ties.
        det_indices.sort_by(|&a, &b| {
            detections[b].confidence.partial_cmp(&detections[a].confidence).unwrap()
        });
        for di in det_indices {
            let mut best: Option<(usize, f64)> = None;
            for (ti, tb) in truth_boxes.iter().enumerate() {
                if used[ti] {
                    continue;
                }
                let iou = detections[di].bbox.iou(tb);
                if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((ti, iou));
                }
            }
            if let Some((ti, _)) = best {
                used[ti] = true;
                out[di].matched = true;
            }
        }
    }
    out
}

/// Cumulative PR points over all detections sorted by confidence descending
/// (stable on ties).
pub fn pr_curve(matches: &[DetectionMatch], total_truths: usize) -> Vec<PRPoint> {
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| matches[b].confidence.partial_cmp(&matches[a].confidence).unwrap());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut points = Vec::with_capacity(matches.len());
    for i in order {
        if matches[i].matched {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push(PRPoint {
            recall: if total_truths > 0 { tp as f64 / total_truths as f64 } else { 0.0 },
            precision: tp as f64 / (tp + fp) as f64,
            confidence: matches[i].confidence,
        });
    }
    points
}

/// Interpolation mode for the average-precision integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMode {
    /// 101-point interpolation at recalls {0, 0.01, …, 1.00}.
    #[default]
    Coco101,
    /// Exact area under the monotone precision envelope.
    ExactArea,
}

/// Average precision from match results with monotone interpolation
/// (precision at recall r = max precision at recall >= r).
///
/// 0 when there are truths but no matches, and 0 (vacuous) when both sides
/// are empty.
pub fn average_precision(matches: &[DetectionMatch], total_truths: usize) -> f64 {
    average_precision_with_mode(matches, total_truths, ApMode::Coco101)
}

/// [`average_precision`] with an explicit interpolation mode.
pub fn average_precision_with_mode(
    matches: &[DetectionMatch],
    total_truths: usize,
    mode: ApMode,
) -> f64 {
    if total_truths == 0 || matches.is_empty() {
        return 0.0;
    }
    let points = pr_curve(matches, total_truths);
    // Monotone envelope from the right.
    let mut envelope = vec![0.0f64; points.len()];
    let mut running = 0.0f64;
    for i in (0..points.len()).rev() {
        running = running.max(points[i].precision);
        envelope[i] = running;
    }
    match mode {
        ApMode::Coco101 => {
            let recalls: Vec<f64> = points.iter().map(|p| p.recall).collect();
            let mut sum = 0.0;
            for i in 0..=100 {
                let r = i as f64 / 100.0;
                // First PR point with recall >= r.
                let idx = recalls.partition_point(|&pr| pr < r);
                if idx < envelope.len() {
                    sum += envelope[idx];
                }
            }
            sum / 101.0
        }
        ApMode::ExactArea => {
            let mut area = 0.0;
            let mut prev_recall = 0.0;
            for (p, env) in points.iter().zip(&envelope) {
                area += (p.recall - prev_recall) * env;
                prev_recall = p.recall;
            }
            area
        }
    }
}

/// Per-test-set evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// AP at each of the ten IoU thresholds 0.50..0.95.
    pub per_threshold: Vec<f64>,
    /// Mean of the ten.
    pub ap: f64,
    /// AP at IoU 0.50.
    pub ap50: f64,
    /// 0.1 * AP50 + 0.9 * AP.
    pub fitness: f64,
    pub truth_count: usize,
    pub detection_count: usize,
}

/// The model-selection scalar used across the reports.
pub fn fitness(ap50: f64, ap: f64) -> f64 {
    0.1 * ap50 + 0.9 * ap
}

/// Evaluate detections against ground truth at the ten IoU thresholds.
pub fn evaluate(
    detections: &[DetectionRecord],
    truth_records: &[AnnotationRecord],
) -> Result<EvalReport, MetricsError> {
    let truths = TruthSet::from_records(truth_records);
    for d in detections {
        if !truths.contains_image(&d.image_name) {
            return Err(MetricsError::UnknownImage(d.image_name.clone()));
        }
    }
    let per_threshold: Vec<f64> = iou_thresholds()
        .into_iter()
        .map(|t| average_precision(&match_detections(detections, &truths, t), truths.total_truths()))
        .collect();
    let ap = per_threshold.iter().sum::<f64>() / per_threshold.len() as f64;
    let ap50 = per_threshold[0];
    Ok(EvalReport {
        ap,
        ap50,
        fitness: fitness(ap50, ap),
        per_threshold,
        truth_count: truths.total_truths(),
        detection_count: detections.len(),
    })
}

/// Mean and sample standard deviation of one metric over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Sample statistics with the n-1 denominator; std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

/// Per-metric seed statistics for one (training set, test set) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub ap50: MeanStd,
    pub ap: MeanStd,
    pub fitness: MeanStd,
    pub seeds: usize,
}

/// Aggregate reports from several seeds into mean/std per metric.
pub fn aggregate_seeds(reports: &[EvalReport]) -> Result<SeedStats, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let collect = |f: fn(&EvalReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    Ok(SeedStats {
        ap50: mean_std(&collect(|r| r.ap50)),
        ap: mean_std(&collect(|r| r.ap)),
        fitness: mean_std(&collect(|r| r.fitness)),
        seeds: reports.len(),
    })
}

/// One table row: a named training combination with a cell per column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    pub cells: Vec<MeanStd>,
}

/// Render `mean ± std` percent cell text (2 decimals).
pub fn format_cell(cell: &MeanStd) -> String {
    format!("{:.2} ± {:.2}", cell.mean * 100.0, cell.std * 100.0)
}

/// Markdown comparison table: bold best and italic second-best per column by
/// mean (higher is better). Equal bests are all bolded and a tie note is
/// appended.
pub fn render_table(columns: &[String], rows: &[TableRow]) -> String {
    let mut out = String::new();
    out.push_str("| Combination |");
    for c in columns {
        out.push_str(&format!(" {c} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in columns {
        out.push_str("---|");
    }
    out.push('\n');

    // Best / second-best means per column.
    let mut best = vec![f64::NEG_INFINITY; columns.len()];
    for row in rows {
        for (j, cell) in row.cells.iter().enumerate() {
            if cell.mean > best[j] {
                best[j] = cell.mean;
            }
        }
    }
    let mut second = vec![f64::NEG_INFINITY; columns.len()];
    for row in rows {
        for (j, cell) in row.cells.iter().enumerate() {
            if cell.mean < best[j] && cell.mean > second[j] {
                second[j] = cell.mean;
            }
        }
    }
    let mut tie_columns: Vec<&str> = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let n_best = rows.iter().filter(|r| r.cells.get(j).is_some_and(|c| c.mean == best[j])).count();
        if n_best > 1 {
            tie_columns.push(col);
        }
    }

    for row in rows {
        out.push_str(&format!("| {} |", row.name));
        for (j, cell) in row.cells.iter().enumerate() {
            let text = format_cell(cell);
            let decorated = if cell.mean == best[j] {
                format!("**{text}**")
            } else if cell.mean == second[j] {
                format!("*{text}*")
            } else {
                text
            };
            out.push_str(&format!(" {decorated} |"));
        }
        out.push('\n');
    }
    if !tie_columns.is_empty() {
        out.push_str(&format!("\nTies for best in: {}.\n", tie_columns.join(", ")));
    }
    out
}

/// CSV rendering of the same rows: raw fractional means/stds, 6 decimals.
pub fn render_csv(columns: &[String], rows: &[TableRow]) -> String {
    let mut out = String::from("combination");
    for c in columns {
        out.push_str(&format!(",{c} mean,{c} std"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.name);
        for cell in &row.cells {
            out.push_str(&format!(",{:.6},{:.6}", cell.mean, cell.std));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObjectAnnotation;

    fn gt_record(boxes: &[BBox]) -> AnnotationRecord {
        AnnotationRecord::new(
            "img.png".into(),
            (1000, 1000),
            boxes.iter().map(|b| ObjectAnnotation { class_id: 0, bbox: *b }).collect(),
        )
        .unwrap()
    }

    fn det(b: BBox, confidence: f64) -> DetectionRecord {
        DetectionRecord { image_name: "img.png".into(), class_id: 0, confidence, bbox: b }
    }

    fn bb(cx: f64, cy: f64) -> BBox {
        BBox::new(cx, cy, 10.0, 10.0).unwrap()
    }

    #[test]
    fn match_above_threshold() {
        let gt = gt_record(&[bb(50.0, 50.0)]);
        let truths = TruthSet::from_records(std::slice::from_ref(&gt));
        // Offset by 2px: IoU = (8*10)/(2*100-80) = 80/120 ≈ 0.667.
        let d = det(bb(52.0, 50.0), 0.9);
        let m = match_detections(&[d], &truths, 0.5);
        assert!(m[0].matched);
    }

    #[test]
    fn duplicate_detection_penalized() {
        let gt = gt_record(&[bb(50.0, 50.0)]);
        let truths = TruthSet::from_records(std::slice::from_ref(&gt));
        let d_hi = det(bb(50.0, 50.0), 0.9);
        let d_lo = det(bb(51.0, 50.0), 0.8);
        let m = match_detections(&[d_lo.clone(), d_hi.clone()], &truths, 0.5);
        // Higher-confidence one wins regardless of input order.
        assert!(!m[0].matched);
        assert!(m[1].matched);
    }

    #[test]
    fn no_truths_all_unmatched() {
        let truths = TruthSet::from_records(&[]);
        let m = match_detections(&[det(bb(50.0, 50.0), 0.9)], &truths, 0.5);
        assert!(!m[0].matched);
    }

    #[test]
    fn perfect_single_detection_ap_one() {
        let m = [DetectionMatch { confidence: 1.0, matched: true }];
        assert_eq!(average_precision(&m, 1), 1.0);
    }

    #[test]
    fn unmatched_single_detection_ap_zero() {
        let m = [DetectionMatch { confidence: 1.0, matched: false }];
        assert_eq!(average_precision(&m, 1), 0.0);
    }

    #[test]
    fn worked_match_miss_match_case() {
        // 2 GT; detections in confidence order: match, miss, match.
        let m = [
            DetectionMatch { confidence: 0.9, matched: true },
            DetectionMatch { confidence: 0.8, matched: false },
            DetectionMatch { confidence: 0.7, matched: true },
        ];
        let expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
        assert!((average_precision(&m, 2) - expected).abs() < 1e-12);
        assert!((expected - 0.8350).abs() < 1e-4);
    }

    #[test]
    fn ap_ignores_confidence_scale() {
        let flags = [true, false, true, true, false];
        let base: Vec<DetectionMatch> = flags
            .iter()
            .enumerate()
            .map(|(i, &matched)| DetectionMatch { confidence: 1.0 - i as f64 * 0.1, matched })
            .collect();
        let squashed: Vec<DetectionMatch> = base
            .iter()
            .map(|m| DetectionMatch { confidence: m.confidence.powi(3) * 0.5, matched: m.matched })
            .collect();
        assert_eq!(average_precision(&base, 4), average_precision(&squashed, 4));
    }

    #[test]
    fn pr_curve_recall_nondecreasing() {
        let m = [
            DetectionMatch { confidence: 0.9, matched: true },
            DetectionMatch { confidence: 0.8, matched: false },
            DetectionMatch { confidence: 0.7, matched: true },
            DetectionMatch { confidence: 0.6, matched: true },
        ];
        let pts = pr_curve(&m, 3);
        for w in pts.windows(2) {
            assert!(w[1].recall >= w[0].recall);
            assert!(w[1].confidence <= w[0].confidence);
        }
    }

    #[test]
    fn evaluate_perfect_detector() {
        let gt = gt_record(&[bb(50.0, 50.0), bb(200.0, 200.0)]);
        let dets: Vec<DetectionRecord> =
            gt.objects.iter().map(|o| det(o.bbox, 1.0)).collect();
        let report = evaluate(&dets, std::slice::from_ref(&gt)).unwrap();
        assert_eq!(report.ap, 1.0);
        assert_eq!(report.ap50, 1.0);
        assert_eq!(report.fitness, 1.0);
    }

    #[test]
    fn evaluate_empty_detections() {
        let gt = gt_record(&[bb(50.0, 50.0)]);
        let report = evaluate(&[], std::slice::from_ref(&gt)).unwrap();
        assert_eq!(report.ap, 0.0);
        assert_eq!(report.ap50, 0.0);
        assert_eq!(report.fitness, 0.0);
    }

    #[test]
    fn evaluate_unknown_image_rejected() {
        let gt = gt_record(&[bb(50.0, 50.0)]);
        let mut d = det(bb(50.0, 50.0), 0.9);
        d.image_name = "other.png".into();
        assert_eq!(
            evaluate(&[d], &[gt]).unwrap_err(),
            MetricsError::UnknownImage("other.png".into())
        );
    }

    #[test]
    fn ap50_upper_bounds_ap() {
        // Detections with varying overlap quality.
        let gt = gt_record(&[bb(50.0, 50.0), bb(200.0, 200.0), bb(400.0, 100.0)]);
        let dets = vec![
            det(bb(52.0, 50.0), 0.9),
            det(bb(203.0, 201.0), 0.8),
            det(bb(420.0, 100.0), 0.7),
            det(bb(600.0, 600.0), 0.6),
        ];
        let report = evaluate(&dets, std::slice::from_ref(&gt)).unwrap();
        assert!(report.ap <= report.ap50 + 1e-12);
        assert!(report.ap50 <= 1.0 && report.ap >= 0.0);
        // Per-threshold APs are nonincreasing in the threshold.
        for w in report.per_threshold.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn fitness_weighted_combination() {
        assert!((fitness(0.1514, 0.0565) - 0.06599).abs() < 1e-9);
        assert!((fitness(0.2438, 0.0887) - 0.10421).abs() < 1e-9);
        assert_eq!(fitness(1.0, 1.0), 1.0);
    }

    #[test]
    fn aggregate_mean_and_sample_std() {
        let reports: Vec<EvalReport> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&v| EvalReport {
                per_threshold: vec![v; 10],
                ap: v,
                ap50: v,
                fitness: v,
                truth_count: 1,
                detection_count: 1,
            })
            .collect();
        let stats = aggregate_seeds(&reports).unwrap();
        assert!((stats.ap.mean - 3.0).abs() < 1e-12);
        assert!((stats.ap.std - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((stats.ap.std - 1.5811).abs() < 1e-4);
    }

    #[test]
    fn aggregate_single_report_zero_std() {
        let r = EvalReport {
            per_threshold: vec![0.5; 10],
            ap: 0.5,
            ap50: 0.5,
            fitness: 0.5,
            truth_count: 1,
            detection_count: 1,
        };
        let stats = aggregate_seeds(std::slice::from_ref(&r)).unwrap();
        assert_eq!(stats.ap.std, 0.0);
        let same = aggregate_seeds(&[r.clone(), r]).unwrap();
        assert_eq!(same.ap.std, 0.0);
    }

    #[test]
    fn aggregate_empty_rejected() {
        assert_eq!(aggregate_seeds(&[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn table_cell_formatting() {
        assert_eq!(format_cell(&MeanStd { mean: 0.423, std: 0.0362 }), "42.30 ± 3.62");
    }

    #[test]
    fn single_row_bolded_everywhere() {
        let cols = vec!["AP50 (%)".to_string(), "AP (%)".to_string()];
        let rows = vec![TableRow {
            name: "R500_S500".into(),
            cells: vec![MeanStd { mean: 0.423, std: 0.0362 }, MeanStd { mean: 0.2263, std: 0.0149 }],
        }];
        let md = render_table(&cols, &rows);
        assert!(md.contains("**42.30 ± 3.62**"));
        assert!(md.contains("**22.63 ± 1.49**"));
    }

    #[test]
    fn tie_bolds_both_and_notes() {
        let cols = vec!["AP (%)".to_string()];
        let rows = vec![
            TableRow { name: "a".into(), cells: vec![MeanStd { mean: 0.5, std: 0.0 }] },
            TableRow { name: "b".into(), cells: vec![MeanStd { mean: 0.5, std: 0.0 }] },
            TableRow { name: "c".into(), cells: vec![MeanStd { mean: 0.4, std: 0.0 }] },
        ];
        let md = render_table(&cols, &rows);
        assert_eq!(md.matches("**50.00 ± 0.00**").count(), 2);
        assert!(md.contains("*40.00 ± 0.00*"));
        assert!(md.contains("Ties for best in: AP (%)."));
    }

    #[test]
    fn second_best_italicized() {
        let cols = vec!["AP (%)".to_string()];
        let rows = vec![
            TableRow { name: "a".into(), cells: vec![MeanStd { mean: 0.6, std: 0.01 }] },
            TableRow { name: "b".into(), cells: vec![MeanStd { mean: 0.5, std: 0.01 }] },
            TableRow { name: "c".into(), cells: vec![MeanStd { mean: 0.4, std: 0.01 }] },
        ];
        let md = render_table(&cols, &rows);
        assert!(md.contains("**60.00 ± 1.00**"));
        assert!(md.contains("*50.00 ± 1.00*"));
        assert!(!md.contains("*40.00"));
    }

    #[test]
    fn csv_rendering() {
        let cols = vec!["AP".to_string()];
        let rows =
            vec![TableRow { name: "r".into(), cells: vec![MeanStd { mean: 0.5, std: 0.25 }] }];
        let csv = render_csv(&cols, &rows);
        assert_eq!(csv, "combination,AP mean,AP std\nr,0.500000,0.250000\n");
    }
}
