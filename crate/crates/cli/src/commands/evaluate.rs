//! Evaluation, reporting, overlay, and annotation-diff subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use fuzzforge_core::dataset::{read_detections, read_frame_json, DatasetManifest};
use fuzzforge_core::diff::{diff_annotations, pair_records};
use fuzzforge_core::metrics::{aggregate_seeds, evaluate, EvalReport, TableRow};
use fuzzforge_core::viz::overlay_boxes;

use super::{DiffArgs, EvalArgs, OverlayArgs, ReportArgs};

fn manifest_root<'a>(explicit: &'a Option<PathBuf>, manifest_path: &'a Path) -> PathBuf {
    explicit
        .clone()
        .unwrap_or_else(|| manifest_path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf())
}

fn emit_json(value: &impl serde::Serialize, out: &Option<PathBuf>) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{body}"),
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let detections = read_detections(&args.detections)?;
    let manifest = DatasetManifest::read(&args.truth)?;
    let root = manifest_root(&args.root, &args.truth);
    let records = manifest.load_records(&root)?;
    let report = evaluate(&detections, &records)?;
    log::info!(
        "AP50 {:.4}  AP {:.4}  fitness {:.4}  ({} detections, {} truths)",
        report.ap50,
        report.ap,
        report.fitness,
        report.detection_count,
        report.truth_count
    );
    emit_json(&report, &args.out)
}

#[derive(Deserialize)]
struct RowsFile {
    columns: Vec<String>,
    rows: Vec<TableRow>,
}

pub fn report(args: ReportArgs) -> Result<()> {
    let (columns, rows) = if let Some(rows_path) = &args.rows {
        let text = fs::read_to_string(rows_path)
            .with_context(|| format!("reading {}", rows_path.display()))?;
        let file: RowsFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", rows_path.display()))?;
        (file.columns, file.rows)
    } else if !args.aggregate.is_empty() {
        let columns =
            vec!["AP50 (%)".to_string(), "AP (%)".to_string(), "Fitness (%)".to_string()];
        let mut rows = Vec::with_capacity(args.aggregate.len());
        for entry in &args.aggregate {
            let (name, paths) = entry
                .split_once('=')
                .with_context(|| format!("expected name=path,... in \"{entry}\""))?;
            let mut reports = Vec::new();
            for p in paths.split(',') {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading report {p}"))?;
                let report: EvalReport = serde_json::from_str(&text)
                    .with_context(|| format!("parsing report {p}"))?;
                reports.push(report);
            }
            let stats = aggregate_seeds(&reports)?;
            rows.push(TableRow {
                name: name.to_string(),
                cells: vec![stats.ap50, stats.ap, stats.fitness],
            });
        }
        (columns, rows)
    } else {
        anyhow::bail!("one of --rows or --aggregate is required");
    };

    let rendered = match args.format.as_str() {
        "markdown" => fuzzforge_core::metrics::render_table(&columns, &rows),
        "csv" => fuzzforge_core::metrics::render_csv(&columns, &rows),
        other => anyhow::bail!("unknown format {other}"),
    };
    match &args.out {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

pub fn overlay(args: OverlayArgs) -> Result<()> {
    let image = image::open(&args.image)
        .with_context(|| format!("decoding {}", args.image.display()))?
        .to_rgba8();
    let record = read_frame_json(&args.record)?;
    let out = overlay_boxes(&image, &record)?;
    out.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    log::info!("overlaid {} boxes onto {}", record.objects.len(), args.out.display());
    Ok(())
}

pub fn diff(args: DiffArgs) -> Result<()> {
    let quad_manifest = DatasetManifest::read(&args.m1)?;
    let alpha_manifest = DatasetManifest::read(&args.m2)?;
    let quad_records = quad_manifest.load_records(&manifest_root(&args.m1_root, &args.m1))?;
    let alpha_records = alpha_manifest.load_records(&manifest_root(&args.m2_root, &args.m2))?;

    let pairing: Option<Vec<(String, String)>> = match &args.pairing {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        None => None,
    };
    let pairs = pair_records(quad_records, alpha_records, pairing.as_deref())?;
    let stats = diff_annotations(&pairs)?;
    log::info!(
        "{} pairs, {} objects: mean IoU {:.4}, min IoU {:.4}, {} containment violations",
        stats.pairs,
        stats.objects,
        stats.mean_iou,
        stats.min_iou,
        stats.containment_violations
    );
    emit_json(&stats, &args.out)
}
