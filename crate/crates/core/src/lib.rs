//! Core engine for synthetic fire-imagery dataset generation and evaluation.
//!
//! The crate covers the full pipeline:
//!
//! 1. **sprites** – ingest rendered flame frame sequences, trim transparent
//!    margins, and keep a tagged, deterministic sprite catalog.
//! 2. **scene** – place fixed-orientation flame billboards in a 3D volume,
//!    sample camera poses, and derive annotations by perspective projection
//!    (`geometry` holds the camera model, quad clipping, and box arithmetic).
//! 3. **compositor** – overlay trimmed sprites directly onto 2D backgrounds
//!    and compute pixel-exact annotations from each overlay's alpha mask.
//! 4. **dataset** – bit-exact annotation formats (per-frame JSON, YOLO text,
//!    COCO export) plus manifests and detection-result ingestion.
//! 5. **curation** – embedding-based dedup, diversity selection, and
//!    deterministic train/val/test splitting.
//! 6. **mixtures** – real/synthetic training-set combinations and the
//!    cost/time budget frontier.
//! 7. **metrics** – single-class AP/AP50/fitness evaluation with multi-seed
//!    aggregation and report tables.
//!
//! Everything is deterministic given a master seed: per-frame RNG streams are
//! derived from `(master_seed, frame_index)` so batch output is independent of
//! worker count and scheduling order.

pub mod compositor;
pub mod config;
pub mod curation;
pub mod dataset;
pub mod diff;
pub mod frame;
pub mod generate;
pub mod geometry;
pub mod metrics;
pub mod mixtures;
pub mod raster;
pub mod rng;
pub mod scene;
pub mod sprites;
pub mod viz;

pub use frame::{GeneratedFrame, Method, SeedRecord};
pub use geometry::{BBox, Billboard, CameraPose, Orientation};
