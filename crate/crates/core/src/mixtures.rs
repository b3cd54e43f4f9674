//! Training-set strategies: pure-real subsets, real/synthetic mixtures at
//! constant total, pure-synthetic subsets, and the cost/time budget frontier.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetManifest, ManifestEntry, Origin, Split};

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("pool of {available} {origin:?} images cannot supply {requested}")]
    PoolTooSmall { origin: Origin, requested: usize, available: usize },
    #[error("real and synthetic pools share image name \"{0}\"")]
    PoolsOverlap(String),
    #[error("no (n_real, n_synth) pair satisfies the budget")]
    InfeasibleBudget,
    #[error("step must be >= 1")]
    InvalidStep,
    #[error("invalid mixture name \"{0}\" (expected R{{m}}_S{{n}})")]
    InvalidName(String),
}

/// One training mixture: `n_real` real plus `n_synth` synthetic images,
/// sampled with `seed`. The name is always the derived `R{m}_S{n}` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub n_real: usize,
    pub n_synth: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(n_real: usize, n_synth: usize, seed: u64) -> Self {
        Self { n_real, n_synth, seed }
    }

    pub fn name(&self) -> String {
        format!("R{}_S{}", self.n_real, self.n_synth)
    }

    /// Parse an `R{m}_S{n}` name.
    pub fn parse(name: &str, seed: u64) -> Result<Self, MixtureError> {
        let invalid = || MixtureError::InvalidName(name.to_string());
        let rest = name.strip_prefix('R').ok_or_else(invalid)?;
        let (m, n) = rest.split_once("_S").ok_or_else(invalid)?;
        Ok(Self {
            n_real: m.parse().map_err(|_| invalid())?,
            n_synth: n.parse().map_err(|_| invalid())?,
            seed,
        })
    }
}

fn sample_entries(
    pool: &DatasetManifest,
    n: usize,
    origin: Origin,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ManifestEntry>, MixtureError> {
    if pool.len() < n {
        return Err(MixtureError::PoolTooSmall { origin, requested: n, available: pool.len() });
    }
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    // Partial Fisher-Yates: after shuffling the prefix, take it.
    indices.partial_shuffle(rng, n);
    Ok(indices[..n]
        .iter()
        .map(|&i| {
            let mut e = pool.entries[i].clone();
            e.origin = origin;
            e
        })
        .collect())
}

/// Sample `spec.n_real` from the real pool and `spec.n_synth` from the
/// synthetic pool without replacement, shuffle the combination, and stamp
/// provenance. Pools must be disjoint by image name.
pub fn build_mixture(
    real_pool: &DatasetManifest,
    synth_pool: &DatasetManifest,
    spec: &MixtureSpec,
) -> Result<DatasetManifest, MixtureError> {
    for e in &real_pool.entries {
        if synth_pool.entries.iter().any(|s| s.image_name == e.image_name) {
            return Err(MixtureError::PoolsOverlap(e.image_name.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut entries = sample_entries(real_pool, spec.n_real, Origin::Real, &mut rng)?;
    entries.extend(sample_entries(synth_pool, spec.n_synth, Origin::Synthetic, &mut rng)?);
    entries.shuffle(&mut rng);

    let mut provenance = real_pool.provenance.clone();
    provenance.master_seed = spec.seed;
    provenance.mixture = Some(spec.name());
    Ok(DatasetManifest::new(entries, Split::Train, provenance)
        .expect("disjoint pools have unique names"))
}

/// The eleven training combinations evaluated in the experiments: four
/// pure-real subset sizes, three constant-total mixtures, four pure-synthetic
/// subset sizes.
pub fn strategy_specs(seed: u64) -> Vec<MixtureSpec> {
    [
        (250, 0),
        (500, 0),
        (750, 0),
        (1000, 0),
        (750, 250),
        (500, 500),
        (250, 750),
        (0, 250),
        (0, 500),
        (0, 750),
        (0, 1000),
    ]
    .into_iter()
    .map(|(r, s)| MixtureSpec::new(r, s, seed))
    .collect()
}

/// Build all eleven combinations for every seed: `11 x seeds.len()`
/// manifests, seeds outermost.
pub fn strategy_suite(
    real_pool: &DatasetManifest,
    synth_pool: &DatasetManifest,
    seeds: &[u64],
) -> Result<Vec<(MixtureSpec, DatasetManifest)>, MixtureError> {
    let mut out = Vec::with_capacity(seeds.len() * 11);
    for &seed in seeds {
        for spec in strategy_specs(seed) {
            let manifest = build_mixture(real_pool, synth_pool, &spec)?;
            out.push((spec, manifest));
        }
    }
    Ok(out)
}

/// Per-image cost/time parameters and total budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetParams {
    pub c_real: f64,
    pub c_synth: f64,
    pub t_real: f64,
    pub t_synth: f64,
    pub c_total: f64,
    pub t_total: f64,
}

impl BudgetParams {
    pub fn validate(&self) -> bool {
        [self.c_real, self.c_synth, self.t_real, self.t_synth, self.c_total, self.t_total]
            .iter()
            .all(|v| *v >= 0.0 && v.is_finite())
    }
}

/// Enumerate `n_real` in `{0, step, 2*step, …}` with, for each, the maximal
/// integer `n_synth` such that both the cost and time budgets hold
/// (`n_R*C_R + n_S*C_S <= C_T` and `n_R*t_R + n_S*t_S <= t_T`).
///
/// `n_synth_max` caps the degenerate zero-cost/zero-time case.
pub fn budget_frontier(
    params: &BudgetParams,
    step: usize,
    n_synth_max: usize,
) -> Result<Vec<(usize, usize)>, MixtureError> {
    if step < 1 {
        return Err(MixtureError::InvalidStep);
    }
    let mut out = Vec::new();
    let mut n_real = 0usize;
    loop {
        let cost_used = n_real as f64 * params.c_real;
        let time_used = n_real as f64 * params.t_real;
        if cost_used > params.c_total || time_used > params.t_total {
            break;
        }
        let by_cost = if params.c_synth > 0.0 {
            ((params.c_total - cost_used) / params.c_synth).floor() as usize
        } else {
            n_synth_max
        };
        let by_time = if params.t_synth > 0.0 {
            ((params.t_total - time_used) / params.t_synth).floor() as usize
        } else {
            n_synth_max
        };
        out.push((n_real, by_cost.min(by_time).min(n_synth_max)));
        n_real += step;
    }
    if out.is_empty() {
        return Err(MixtureError::InfeasibleBudget);
    }
    Ok(out)
}
