//! Dataset curation: embedding-based near-duplicate removal, diversity
//! selection, and deterministic train/val/test splitting.
//!
//! The default embedding provider is a 32x32 mean-subtracted grayscale
//! vector; precomputed vectors (e.g. from an external CNN) can be supplied
//! through the embedding cache file instead.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::RgbaImage;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetManifest, DatasetError};

/// Default near-duplicate distance threshold on unit-normalized vectors.
pub const DEFAULT_TAU: f64 = 0.05;

/// Side length of the default provider's resize target.
const EMBED_SIDE: usize = 32;

/// Embedding dimension of the default provider.
pub const EMBED_DIM: usize = EMBED_SIDE * EMBED_SIDE;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("k = {k} exceeds the population size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("split ratios must be nonnegative and sum to 1 (got {0:?})")]
    InvalidRatios((f64, f64, f64)),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
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
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Unit-normalized feature vector for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub image_name: String,
    pub vector: Vec<f64>,
    /// Set when the source image had zero variance (maps to the zero
    /// vector, which cannot be normalized).
    pub zero_variance: bool,
}

impl Embedding {
    pub fn distance(&self, other: &Embedding) -> f64 {
        debug_assert_eq!(self.vector.len(), other.vector.len());
        self.vector
            .iter()
            .zip(&other.vector)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Default provider: grayscale, bilinear 32x32 resize, flatten, subtract
/// mean, L2-normalize. Brightness rescaling cancels out, so an image and its
/// dimmed copy embed identically.
pub fn embed(image: &RgbaImage, image_name: &str) -> Embedding {
    let (w, h) = image.dimensions();
    let gray = |x: u32, y: u32| -> f64 {
        let p = image.get_pixel(x.min(w - 1), y.min(h - 1)).0;
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };

    // Bilinear resample at pixel centers.
    let mut v = Vec::with_capacity(EMBED_DIM);
    for oy in 0..EMBED_SIDE {
        for ox in 0..EMBED_SIDE {
            let sx = (ox as f64 + 0.5) * w as f64 / EMBED_SIDE as f64 - 0.5;
            let sy = (oy as f64 + 0.5) * h as f64 / EMBED_SIDE as f64 - 0.5;
            let x0 = sx.floor().max(0.0) as u32;
            let y0 = sy.floor().max(0.0) as u32;
            let tx = (sx - x0 as f64).clamp(0.0, 1.0);
            let ty = (sy - y0 as f64).clamp(0.0, 1.0);
            let a = gray(x0, y0) * (1.0 - tx) + gray(x0 + 1, y0) * tx;
            let b = gray(x0, y0 + 1) * (1.0 - tx) + gray(x0 + 1, y0 + 1) * tx;
            v.push(a * (1.0 - ty) + b * ty);
        }
    }

    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return Embedding { image_name: image_name.into(), vector: vec![0.0; EMBED_DIM], zero_variance: true };
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Embedding { image_name: image_name.into(), vector: v, zero_variance: false }
}

/// Greedy near-duplicate removal in input order: an item is kept iff its
/// distance to every already-kept item exceeds `tau`. `tau = 0` removes only
/// exact embedding duplicates.
pub fn dedup(embeddings: &[Embedding], tau: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, e) in embeddings.iter().enumerate() {
        if kept.iter().all(|&k| embeddings[k].distance(e) > tau) {
            kept.push(i);
        }
    }
    kept
}

/// Diversity-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Farthest-point sampling (the default reading of distance ranking).
    #[default]
    FarthestPoint,
    /// Rank by mean distance to all other samples, take the top k.
    MeanDistance,
}

/// Farthest-point sampling: seed with the point of maximal mean distance to
/// all others, then iteratively add the point maximizing the minimum
/// distance to the selected set. Ties break to the lowest index. Returns
/// indices in selection order.
pub fn select_diverse(embeddings: &[Embedding], k: usize) -> Result<Vec<usize>, CurationError> {
    select_diverse_with_rule(embeddings, k, SelectionRule::FarthestPoint)
}

/// [`select_diverse`] with an explicit selection rule.
pub fn select_diverse_with_rule(
    embeddings: &[Embedding],
    k: usize,
    rule: SelectionRule,
) -> Result<Vec<usize>, CurationError> {
    let n = embeddings.len();
    if k > n {
        return Err(CurationError::KTooLarge { k, n });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    for e in embeddings {
        if e.vector.len() != embeddings[0].vector.len() {
            return Err(CurationError::DimensionMismatch(embeddings[0].vector.len(), e.vector.len()));
        }
    }

    let mean_dist = |i: usize| -> f64 {
        embeddings
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| embeddings[i].distance(e))
            .sum::<f64>()
            / (n.max(2) - 1) as f64
    };

    match rule {
        SelectionRule::MeanDistance => {
            let mut ranked: Vec<(usize, f64)> = (0..n).map(|i| (i, mean_dist(i))).collect();
            // Descending by mean distance, ascending index on ties.
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            Ok(ranked.into_iter().take(k).map(|(i, _)| i).collect())
        }
        SelectionRule::FarthestPoint => {
            let mut seed = 0usize;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                let d = mean_dist(i);
                if d > best {
                    best = d;
                    seed = i;
                }
            }
            let mut selected = vec![seed];
            // min_dist[i] = distance from i to the selected set.
            let mut min_dist: Vec<f64> =
                (0..n).map(|i| embeddings[i].distance(&embeddings[seed])).collect();
            while selected.len() < k {
                let mut next = usize::MAX;
                let mut next_d = f64::NEG_INFINITY;
                for (i, &d) in min_dist.iter().enumerate() {
                    if selected.contains(&i) {
                        continue;
                    }
                    if d > next_d {
                        next_d = d;
                        next = i;
                    }
                }
                selected.push(next);
                for i in 0..n {
                    let d = embeddings[i].distance(&embeddings[next]);
                    if d < min_dist[i] {
                        min_dist[i] = d;
                    }
                }
            }
            Ok(selected)
        }
    }
}

/// Split ratios plus shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(ratios: (f64, f64, f64), seed: u64) -> Result<Self, CurationError> {
        let (t, v, s) = ratios;
        let sum = t + v + s;
        if t < 0.0 || v < 0.0 || s < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(CurationError::InvalidRatios(ratios));
        }
        Ok(Self { ratios, seed })
    }

    /// `(train, val, test)` sizes: floor the val/test shares, remainder to
    /// train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let val = (self.ratios.1 * n as f64).floor() as usize;
        let test = (self.ratios.2 * n as f64).floor() as usize;
        (n - val - test, val, test)
    }
}

/// Fisher-Yates shuffle with the spec seed, then partition into
/// train/val/test manifests. Partitions are disjoint and exhaustive.
pub fn split(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<(DatasetManifest, DatasetManifest, DatasetManifest), CurationError> {
    let mut indices: Vec<usize> = (0..manifest.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);

    let (n_train, n_val, _) = spec.sizes(manifest.len());
    let pick = |range: &[usize], split| {
        DatasetManifest::new(
            range.iter().map(|&i| manifest.entries[i].clone()).collect(),
            split,
            manifest.provenance.clone(),
        )
        .expect("unique names preserved by partitioning")
    };
    let train = pick(&indices[..n_train], crate::dataset::Split::Train);
    let val = pick(&indices[n_train..n_train + n_val], crate::dataset::Split::Val);
    let test = pick(&indices[n_train + n_val..], crate::dataset::Split::Test);
    Ok((train, val, test))
}

/// Write an embedding cache: `image_name -> vector` with names sorted for
/// deterministic bytes.
pub fn write_embedding_cache(embeddings: &[Embedding], path: &Path) -> Result<(), CurationError> {
    let map: BTreeMap<&str, &Vec<f64>> =
        embeddings.iter().map(|e| (e.image_name.as_str(), &e.vector)).collect();
    let body = serde_json::to_string(&map).expect("cache serialization");
    fs::write(path, body).map_err(|source| CurationError::Io { path: path.into(), source })
}

/// Read an embedding cache written by [`write_embedding_cache`] (or supplied
/// externally with the same shape). Entries come back in sorted name order.
pub fn read_embedding_cache(path: &Path) -> Result<Vec<Embedding>, CurationError> {
    let text =
        fs::read_to_string(path).map_err(|source| CurationError::Io { path: path.into(), source })?;
    let map: BTreeMap<String, Vec<f64>> = serde_json::from_str(&text)
        .map_err(|source| CurationError::Parse { path: path.into(), source })?;
    let mut out = Vec::with_capacity(map.len());
    for (image_name, vector) in map {
        if let Some(first) = out.first() {
            let first: &Embedding = first;
            if first.vector.len() != vector.len() {
                return Err(CurationError::DimensionMismatch(first.vector.len(), vector.len()));
            }
        }
        let zero_variance = vector.iter().all(|v| *v == 0.0);
        out.push(Embedding { image_name, vector, zero_variance });
    }
    Ok(out)
}
