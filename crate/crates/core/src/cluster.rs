//! Lloyd iterations for several k values inside the same engine passes.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::color::{lab_distance_sq, Chroma, PointSet};
use crate::engine::{Engine, JobError};

/// Largest supported k; labels are stored as `u16` with one value reserved.
pub const MAX_K: usize = u16::MAX as usize;
const UNASSIGNED: u16 = u16::MAX;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("partition {partition}: {reason}")]
    InvalidModel { partition: usize, reason: String },
    #[error("no assignments to recompute centers from")]
    NoAssignments,
    #[error("assignment for pixel {pixel} belongs to partition {found}, expected {expected}")]
    MixedPartitions {
        pixel: usize,
        found: usize,
        expected: usize,
    },
    #[error("cannot cluster an empty point set")]
    EmptyInput,
    #[error("invalid cluster configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] JobError),
}

/// Index and squared distance of the closest center; ties go to the lowest
/// index.
#[inline]
pub fn nearest(p: Chroma, centers: &[Chroma]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centers.iter().enumerate() {
        let d = lab_distance_sq(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// The clustering for one k ("partition"); the partition id is `k` itself.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionModel {
    centers: Vec<Chroma>,
}

impl PartitionModel {
    pub fn new(centers: Vec<Chroma>) -> Result<Self, ClusterError> {
        let k = centers.len();
        let invalid = |reason: String| ClusterError::InvalidModel {
            partition: k,
            reason,
        };
        if k == 0 {
            return Err(invalid("needs at least one center".into()));
        }
        if k > MAX_K {
            return Err(invalid(format!("at most {MAX_K} clusters are supported")));
        }
        if let Some(j) = centers
            .iter()
            .position(|c| !(c.a.is_finite() && c.b.is_finite()))
        {
            return Err(invalid(format!("center {j} is not finite")));
        }
        Ok(Self { centers })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Chroma] {
        &self.centers
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Assignment {
    pub pixel: usize,
    pub partition_id: usize,
    pub cluster_id: usize,
    pub dist_sq: f64,
}

pub fn assign(pixel: usize, feature: Chroma, model: &PartitionModel) -> Assignment {
    let (cluster_id, dist_sq) = nearest(feature, model.centers());
    Assignment {
        pixel,
        partition_id: model.k(),
        cluster_id,
        dist_sq,
    }
}

/// Indices of the `m` points with the largest `dist_sq`, ties to the lower
/// index, skipping points whose feature repeats an earlier pick.
fn farthest_distinct(
    candidates: impl IntoIterator<Item = (f64, usize)>,
    points: &PointSet,
    m: usize,
) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = candidates.into_iter().collect();
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut seen = HashSet::new();
    all.into_iter()
        .filter(|&(_, i)| seen.insert(points.feature(i).bits()))
        .take(m)
        .map(|(_, i)| i)
        .collect()
}

/// Mean of the features assigned to each cluster of partition `k`.
///
/// A cluster left empty is moved onto the point farthest from its own
/// center (the next farthest for a second empty cluster, and so on).
pub fn recompute_centers(
    assignments: &[Assignment],
    points: &PointSet,
    k: usize,
) -> Result<PartitionModel, ClusterError> {
    if assignments.is_empty() {
        return Err(ClusterError::NoAssignments);
    }
    let mut sums = vec![(0.0f64, 0.0f64); k];
    let mut counts = vec![0u64; k];
    for a in assignments {
        if a.partition_id != k {
            return Err(ClusterError::MixedPartitions {
                pixel: a.pixel,
                found: a.partition_id,
                expected: k,
            });
        }
        if a.cluster_id >= k {
            return Err(ClusterError::InvalidModel {
                partition: k,
                reason: format!("pixel {} assigned to cluster {}", a.pixel, a.cluster_id),
            });
        }
        let f = points.feature(a.pixel);
        sums[a.cluster_id].0 += f.a;
        sums[a.cluster_id].1 += f.b;
        counts[a.cluster_id] += 1;
    }
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    let far = farthest_distinct(
        assignments.iter().map(|a| (a.dist_sq, a.pixel)),
        points,
        empty.len(),
    );
    let mut centers: Vec<Chroma> = sums
        .iter()
        .zip(&counts)
        .map(|(&(a, b), &n)| Chroma::new(a / n as f64, b / n as f64))
        .collect();
    for (&c, &p) in empty.iter().zip(&far) {
        centers[c] = points.feature(p);
    }
    PartitionModel::new(centers)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterConfig {
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop once no center moves by this much or more (in a*b* units).
    pub tol: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol: 1e-3,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.max_iters == 0 {
            return Err(ClusterError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(ClusterError::InvalidConfig(format!(
                "tol must be a finite non-negative number, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No point changed cluster.
    Stable,
    /// The largest center shift fell below the tolerance.
    Converged,
    IterationCap,
}

/// Final state of one partition. `labels` and `model` belong together: the
/// labels are the nearest-center assignment against `model`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionRun {
    pub model: PartitionModel,
    pub labels: Vec<u16>,
    /// Σ dist_sq after each assignment pass.
    pub cost_history: Vec<f64>,
    pub stop: StopReason,
    /// Number of empty clusters that had to be moved.
    pub reseeded: usize,
}

impl PartitionRun {
    pub fn iterations(&self) -> usize {
        self.cost_history.len()
    }

    pub fn cost(&self) -> f64 {
        *self.cost_history.last().expect("at least one pass")
    }

    pub fn assignments<'a>(
        &'a self,
        points: &'a PointSet,
    ) -> impl Iterator<Item = Assignment> + 'a {
        let k = self.model.k();
        self.labels.iter().enumerate().map(move |(i, &c)| {
            let c = c as usize;
            Assignment {
                pixel: i,
                partition_id: k,
                cluster_id: c,
                dist_sq: lab_distance_sq(points.feature(i), self.model.centers()[c]),
            }
        })
    }
}

/// Per-chunk aggregate for one partition.
#[derive(Clone, Debug)]
struct PassStats {
    sums: Vec<(f64, f64)>,
    counts: Vec<u64>,
    cost: f64,
    changed: u64,
}

impl PassStats {
    fn new(k: usize) -> Self {
        Self {
            sums: vec![(0.0, 0.0); k],
            counts: vec![0; k],
            cost: 0.0,
            changed: 0,
        }
    }

    fn merge(mut self, other: &PassStats) -> Self {
        for (s, o) in self.sums.iter_mut().zip(&other.sums) {
            s.0 += o.0;
            s.1 += o.1;
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.cost += other.cost;
        self.changed += other.changed;
        self
    }
}

struct State {
    k: usize,
    centers: Vec<Chroma>,
    labels: Vec<u16>,
    history: Vec<f64>,
    stop: Option<StopReason>,
    reseeded: usize,
}

/// Runs Lloyd's algorithm for every model in `initial` (keyed by k) with
/// shared passes over the data. Each partition stops independently when no
/// point changes cluster, when the largest center shift drops below `tol`,
/// or after `max_iters` passes.
pub fn run_multi_k(
    engine: &Engine,
    points: &PointSet,
    initial: &BTreeMap<usize, PartitionModel>,
    cfg: &ClusterConfig,
) -> Result<BTreeMap<usize, PartitionRun>, ClusterError> {
    run_multi_k_observed(engine, points, initial, cfg, |_, _, _| {})
}

/// [`run_multi_k`], calling `observer(k, iteration, centers)` after every
/// pass with the centers the partition carries into the next one (or
/// finishes with).
pub fn run_multi_k_observed<F>(
    engine: &Engine,
    points: &PointSet,
    initial: &BTreeMap<usize, PartitionModel>,
    cfg: &ClusterConfig,
    mut observer: F,
) -> Result<BTreeMap<usize, PartitionRun>, ClusterError>
where
    F: FnMut(usize, usize, &PartitionModel),
{
    cfg.validate()?;
    if points.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let n = points.len();
    let mut states = Vec::with_capacity(initial.len());
    for (&k, model) in initial {
        if model.k() != k {
            return Err(ClusterError::InvalidModel {
                partition: k,
                reason: format!("model has {} centers", model.k()),
            });
        }
        states.push(State {
            k,
            centers: model.centers().to_vec(),
            labels: vec![UNASSIGNED; n],
            history: Vec::new(),
            stop: None,
            reseeded: 0,
        });
    }

    let chunk_size = engine.config().chunk_size;
    let ranges = engine.chunks(n);
    for iter in 1..=cfg.max_iters {
        let active: Vec<usize> = (0..states.len())
            .filter(|&s| states[s].stop.is_none())
            .collect();
        if active.is_empty() {
            break;
        }
        let center_sets: Vec<Vec<Chroma>> =
            active.iter().map(|&s| states[s].centers.clone()).collect();
        let owners: Vec<Vec<u16>> = center_sets
            .iter()
            .map(|c| points.map_table(engine, "cluster-nearest", |p| nearest(p, c).0 as u16))
            .collect::<Result<_, _>>()?;
        let keys: Vec<usize> = active.iter().map(|&s| states[s].k).collect();

        let stats = {
            let mut label_chunks: Vec<_> = states
                .iter_mut()
                .filter(|s| s.stop.is_none())
                .map(|s| s.labels.chunks_mut(chunk_size))
                .collect();
            let inputs: Vec<_> = ranges
                .iter()
                .map(|r| {
                    let labels: Vec<&mut [u16]> = label_chunks
                        .iter_mut()
                        .map(|it| it.next().expect("one label chunk per range"))
                        .collect();
                    (r.clone(), labels)
                })
                .collect();
            let index = points.index();
            let table = points.table();
            engine.run_chunked(
                "cluster-assign",
                n,
                inputs,
                |_, (range, mut labels)| {
                    let mut out = Vec::with_capacity(keys.len());
                    for (p, labels) in labels.iter_mut().enumerate() {
                        let centers = &center_sets[p];
                        let mut st = PassStats::new(centers.len());
                        for (label, &t) in labels.iter_mut().zip(&index[range.clone()]) {
                            let c = owners[p][t as usize];
                            let f = table[t as usize];
                            let ci = c as usize;
                            st.sums[ci].0 += f.a;
                            st.sums[ci].1 += f.b;
                            st.counts[ci] += 1;
                            st.cost += lab_distance_sq(f, centers[ci]);
                            if *label != c {
                                st.changed += 1;
                                *label = c;
                            }
                        }
                        out.push((keys[p], st));
                    }
                    Ok::<_, std::convert::Infallible>(out)
                },
                |&k, parts| Ok(parts.iter().fold(PassStats::new(k), PassStats::merge)),
            )?
        };

        for ((_, st), &s) in stats.into_iter().zip(&active) {
            let state = &mut states[s];
            state.history.push(st.cost);
            if iter > 1 && st.changed == 0 {
                state.stop = Some(StopReason::Stable);
            } else {
                let mut next: Vec<Chroma> = st
                    .sums
                    .iter()
                    .zip(&st.counts)
                    .map(|(&(a, b), &c)| Chroma::new(a / c as f64, b / c as f64))
                    .collect();
                let empty: Vec<usize> = (0..state.k).filter(|&c| st.counts[c] == 0).collect();
                if !empty.is_empty() {
                    let far = farthest_points(
                        engine,
                        points,
                        &state.labels,
                        &state.centers,
                        empty.len(),
                    )?;
                    for (&c, &p) in empty.iter().zip(&far) {
                        next[c] = points.feature(p);
                    }
                }
                let shift = state
                    .centers
                    .iter()
                    .zip(&next)
                    .map(|(&a, &b)| lab_distance_sq(a, b))
                    .fold(0.0, f64::max)
                    .sqrt();
                if shift < cfg.tol {
                    state.stop = Some(StopReason::Converged);
                } else if iter == cfg.max_iters {
                    state.stop = Some(StopReason::IterationCap);
                } else {
                    state.centers = next;
                    state.reseeded += empty.len();
                }
            }
            let model = PartitionModel {
                centers: state.centers.clone(),
            };
            observer(state.k, iter, &model);
        }
    }

    Ok(states
        .into_iter()
        .map(|s| {
            let run = PartitionRun {
                model: PartitionModel { centers: s.centers },
                labels: s.labels,
                cost_history: s.history,
                stop: s.stop.unwrap_or(StopReason::IterationCap),
                reseeded: s.reseeded,
            };
            (s.k, run)
        })
        .collect())
}

/// The `m` points farthest from their assigned centers, with distinct
/// features.
fn farthest_points(
    engine: &Engine,
    points: &PointSet,
    labels: &[u16],
    centers: &[Chroma],
    m: usize,
) -> Result<Vec<usize>, JobError> {
    let out = engine.run_chunked(
        "cluster-farthest",
        points.len(),
        engine.chunks(points.len()),
        |_, range| {
            let start = range.start;
            let local = farthest_distinct(
                labels[range].iter().enumerate().map(|(off, &c)| {
                    let i = start + off;
                    (lab_distance_sq(points.feature(i), centers[c as usize]), i)
                }),
                points,
                m,
            );
            let scored: Vec<(f64, usize)> = local
                .into_iter()
                .map(|i| {
                    (
                        lab_distance_sq(points.feature(i), centers[labels[i] as usize]),
                        i,
                    )
                })
                .collect();
            Ok::<_, std::convert::Infallible>(vec![((), scored)])
        },
        |_, parts| Ok(farthest_distinct(parts.into_iter().flatten(), points, m)),
    )?;
    Ok(out.into_iter().next().map(|(_, v)| v).unwrap_or_default())
}
