//! Scalable k-means++ (k-means||) seeding for several k values at once.
//!
//! One oversampling pass builds a shared candidate pool sized for the
//! largest k. Candidates are then weighted by how many points they attract,
//! and each k draws its own seeds from the pool with weighted k-means++.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use thiserror::Error;

use crate::cluster::nearest;
use crate::color::{lab_distance_sq, Chroma, PointSet};
use crate::engine::{Engine, JobError};
use crate::rng::{substream, Purpose};

#[derive(Debug, Error)]
pub enum InitError {
    #[error("cannot seed from an empty point set")]
    EmptyInput,
    #[error("center set is empty")]
    NoCenters,
    #[error("no k values requested")]
    NoKs,
    #[error("k must be at least 1 (got {0})")]
    InvalidK(usize),
    #[error("k = {k} exceeds the number of points ({n})")]
    KExceedsPoints { k: usize, n: usize },
    #[error("invalid init configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] JobError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    /// Expected candidates drawn per round (`l`). `None` means twice the
    /// largest requested k.
    pub oversampling: Option<f64>,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            oversampling: None,
            rounds: 5,
            seed: 0,
        }
    }
}

impl InitConfig {
    pub fn oversampling_for(&self, max_k: usize) -> f64 {
        self.oversampling.unwrap_or(2.0 * max_k as f64)
    }

    pub fn validate(&self) -> Result<(), InitError> {
        if let Some(l) = self.oversampling {
            if !(l.is_finite() && l > 0.0) {
                return Err(InitError::InvalidConfig(format!(
                    "oversampling factor must be positive, got {l}"
                )));
            }
        }
        if self.rounds == 0 {
            return Err(InitError::InvalidConfig("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Oversampled center pool. Centers are distinct; `sources` holds the index
/// of the point each center was taken from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSet {
    centers: Vec<Chroma>,
    sources: Vec<usize>,
    weights: Vec<u64>,
    seen: HashSet<(u64, u64)>,
}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds point `source` unless its feature is already a center.
    pub fn push(&mut self, points: &PointSet, source: usize) -> bool {
        let center = points.feature(source);
        if !self.seen.insert(center.bits()) {
            return false;
        }
        self.centers.push(center);
        self.sources.push(source);
        self.weights.push(0);
        true
    }

    pub fn from_sources(points: &PointSet, sources: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::new();
        for s in sources {
            set.push(points, s);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Chroma] {
        &self.centers
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Points nearest to each center; all zero until weighed.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn with_weights(mut self, weights: Vec<u64>) -> Self {
        assert_eq!(weights.len(), self.centers.len());
        self.weights = weights;
        self
    }
}

/// A point drawn uniformly at random; returns its index.
pub fn seed_initial<R: Rng>(points: &PointSet, rng: &mut R) -> Result<usize, InitError> {
    if points.is_empty() {
        return Err(InitError::EmptyInput);
    }
    Ok(rng.gen_range(0..points.len()))
}

/// Sums a per-table-entry value over all points, chunk by chunk.
fn sum_over_points(
    engine: &Engine,
    job: &str,
    points: &PointSet,
    per_entry: &[f64],
) -> Result<f64, JobError> {
    let index = points.index();
    let out = engine.run_chunked(
        job,
        points.len(),
        engine.chunks(points.len()),
        |_, range| {
            let partial: f64 = index[range].iter().map(|&t| per_entry[t as usize]).sum();
            Ok::<_, std::convert::Infallible>(vec![((), partial)])
        },
        |_, partials| Ok(partials.into_iter().sum::<f64>()),
    )?;
    Ok(out.into_iter().next().map_or(0.0, |(_, total)| total))
}

fn min_dist_sq_table(
    engine: &Engine,
    points: &PointSet,
    centers: &[Chroma],
) -> Result<Vec<f64>, JobError> {
    points.map_table(engine, "init-distances", |p| nearest(p, centers).1)
}

/// Clustering cost φ: the sum over points of the squared distance to the
/// nearest center.
pub fn cost_phi(engine: &Engine, points: &PointSet, centers: &[Chroma]) -> Result<f64, InitError> {
    if centers.is_empty() {
        return Err(InitError::NoCenters);
    }
    let dist = min_dist_sq_table(engine, points, centers)?;
    Ok(sum_over_points(engine, "init-cost", points, &dist)?)
}

/// One k-means|| round: every point is kept independently with probability
/// `min(1, l·d²(x, C) / φ)`. Returns the indices of kept points in point
/// order.
///
/// Draws come from a per-chunk substream of `(seed, round, chunk)`, so the
/// result depends on the chunk size but not on the worker count.
pub fn oversample_round(
    engine: &Engine,
    points: &PointSet,
    centers: &[Chroma],
    phi: f64,
    l: f64,
    seed: u64,
    round: u64,
) -> Result<Vec<usize>, InitError> {
    if centers.is_empty() {
        return Err(InitError::NoCenters);
    }
    if phi <= 0.0 {
        return Ok(Vec::new());
    }
    let dist = min_dist_sq_table(engine, points, centers)?;
    let index = points.index();
    let scale = l / phi;
    let out = engine.run_chunked(
        "init-oversample",
        points.len(),
        engine.chunks(points.len()),
        |chunk, range| {
            let mut rng = substream(seed, Purpose::Oversample, round, chunk as u64);
            let start = range.start;
            let picked: Vec<usize> = index[range]
                .iter()
                .enumerate()
                .filter_map(|(off, &t)| {
                    let d = dist[t as usize];
                    (d > 0.0 && rng.gen::<f64>() < (scale * d).min(1.0)).then_some(start + off)
                })
                .collect();
            Ok::<_, std::convert::Infallible>(vec![(round, picked)])
        },
        |_, parts| Ok(parts.concat()),
    )?;
    Ok(out.into_iter().next().map(|(_, p)| p).unwrap_or_default())
}

/// Weighs each candidate by the number of points whose nearest candidate it
/// is (ties go to the lower candidate index).
pub fn weigh_candidates(
    engine: &Engine,
    points: &PointSet,
    candidates: CandidateSet,
) -> Result<CandidateSet, InitError> {
    if candidates.is_empty() {
        return Err(InitError::NoCenters);
    }
    let centers = candidates.centers();
    let owner = points.map_table(engine, "init-owner", |p| nearest(p, centers).0 as u32)?;
    let index = points.index();
    let m = centers.len();
    let out = engine.run_chunked(
        "init-weigh",
        points.len(),
        engine.chunks(points.len()),
        |_, range| {
            let mut counts = vec![0u64; m];
            for &t in &index[range] {
                counts[owner[t as usize] as usize] += 1;
            }
            Ok::<_, std::convert::Infallible>(vec![((), counts)])
        },
        |_, parts| {
            Ok(parts.into_iter().fold(vec![0u64; m], |mut acc, c| {
                acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                acc
            }))
        },
    )?;
    let weights = out
        .into_iter()
        .next()
        .map(|(_, w)| w)
        .unwrap_or_else(|| vec![0; m]);
    Ok(candidates.with_weights(weights))
}

/// Index drawn with probability proportional to `weights`, or `None` when
/// nothing has positive weight.
fn pick_weighted<R: Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Picks `k` candidates (as indices into `candidates`) by weighted
/// k-means++: the first in proportion to weight, each further one in
/// proportion to weight × squared distance to the nearest pick so far.
///
/// With `k` or fewer candidates, all of them are returned.
pub fn reduce_to_k<R: Rng>(
    candidates: &CandidateSet,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, InitError> {
    if k == 0 {
        return Err(InitError::InvalidK(k));
    }
    if candidates.is_empty() {
        return Err(InitError::NoCenters);
    }
    let m = candidates.len();
    if m <= k {
        return Ok((0..m).collect());
    }
    let centers = candidates.centers();
    let weights: Vec<f64> = candidates.weights().iter().map(|&w| w as f64).collect();

    let first = pick_weighted(&weights, rng).unwrap_or(0);
    let mut chosen = vec![first];
    let mut min_d: Vec<f64> = centers
        .iter()
        .map(|&c| lab_distance_sq(c, centers[first]))
        .collect();
    while chosen.len() < k {
        let scores: Vec<f64> = weights.iter().zip(&min_d).map(|(w, d)| w * d).collect();
        let next = pick_weighted(&scores, rng)
            .or_else(|| (0..m).find(|i| !chosen.contains(i)))
            .expect("fewer chosen than candidates");
        chosen.push(next);
        for (d, &c) in min_d.iter_mut().zip(centers) {
            *d = d.min(lab_distance_sq(c, centers[next]));
        }
    }
    Ok(chosen)
}

/// Seeds for one k.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCenters {
    /// Index of the point each center was taken from.
    pub sources: Vec<usize>,
    pub centers: Vec<Chroma>,
}

#[derive(Clone, Debug)]
pub struct InitOutcome {
    pub seeds: BTreeMap<usize, InitialCenters>,
    /// The weighed shared pool.
    pub candidates: CandidateSet,
    /// φ against the pool before each round, then after the last one.
    pub phi_history: Vec<f64>,
    pub oversampling: f64,
}

/// Checks `ks` against the data size and returns them sorted and deduplicated.
pub fn validate_ks(ks: &[usize], n: usize) -> Result<Vec<usize>, InitError> {
    if ks.is_empty() {
        return Err(InitError::NoKs);
    }
    let ks: BTreeSet<usize> = ks.iter().copied().collect();
    for &k in &ks {
        if k == 0 {
            return Err(InitError::InvalidK(k));
        }
        if k > n {
            return Err(InitError::KExceedsPoints { k, n });
        }
    }
    Ok(ks.into_iter().collect())
}

/// Runs the shared oversampling pass and derives exactly `k` seeds for
/// every requested k.
///
/// If the pool holds fewer than k distinct centers, the remainder is filled
/// with distinct points drawn uniformly from the data.
pub fn init_multi_k(
    engine: &Engine,
    points: &PointSet,
    ks: &[usize],
    cfg: &InitConfig,
) -> Result<InitOutcome, InitError> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(InitError::EmptyInput);
    }
    let ks = validate_ks(ks, points.len())?;
    let max_k = *ks.last().expect("non-empty");
    let l = cfg.oversampling_for(max_k);

    let first = seed_initial(points, &mut substream(cfg.seed, Purpose::FirstCenter, 0, 0))?;
    let mut pool = CandidateSet::from_sources(points, [first]);
    let mut phi_history = Vec::with_capacity(cfg.rounds + 1);
    for round in 0..cfg.rounds as u64 {
        let phi = cost_phi(engine, points, pool.centers())?;
        phi_history.push(phi);
        for s in oversample_round(engine, points, pool.centers(), phi, l, cfg.seed, round)? {
            pool.push(points, s);
        }
        log::debug!(
            "k-means|| round {round}: phi {phi:.6e}, pool {}",
            pool.len()
        );
    }
    phi_history.push(cost_phi(engine, points, pool.centers())?);
    let pool = weigh_candidates(engine, points, pool)?;

    let pool_ref = &pool;
    let seeds = engine.run_chunked(
        "init-reduce",
        pool.len(),
        vec![()],
        |_, ()| Ok::<_, InitError>(ks.iter().map(|&k| (k, ())).collect()),
        |&k, _| {
            let mut rng = substream(cfg.seed, Purpose::ReduceToK, k as u64, 0);
            let picked = reduce_to_k(pool_ref, k, &mut rng)?;
            let mut sources: Vec<usize> = picked.iter().map(|&i| pool_ref.sources()[i]).collect();
            if sources.len() < k {
                let mut taken: HashSet<usize> = sources.iter().copied().collect();
                while sources.len() < k {
                    let s = rng.gen_range(0..points.len());
                    if taken.insert(s) {
                        sources.push(s);
                    }
                }
            }
            let centers = sources.iter().map(|&s| points.feature(s)).collect();
            Ok(InitialCenters { sources, centers })
        },
    )?;

    Ok(InitOutcome {
        seeds: seeds.into_iter().collect(),
        candidates: pool,
        phi_history,
        oversampling: l,
    })
}
