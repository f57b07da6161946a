//! Simplified silhouette index (SSI) per partition, and choosing k.
//!
//! For a point with distance `a` to its own center and `b` to the nearest
//! other center, the score is `(b - a) / max(a, b)`. A partition's score is
//! the plain mean over its points; higher is better.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::cluster::PartitionModel;
use crate::color::{lab_distance_sq, PointSet};
use crate::engine::{Engine, JobError};

/// Guards the 0/0 case of a point sitting on two coincident centers.
pub const SSI_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SsiError {
    #[error("SSI undefined for a single cluster")]
    SingleCluster,
    #[error("partition {partition} has {labels} labels for {points} points")]
    LengthMismatch {
        partition: usize,
        labels: usize,
        points: usize,
    },
    #[error("partition {partition}: label {label} out of range")]
    LabelOutOfRange { partition: usize, label: usize },
    #[error("no partitions to choose from")]
    NoReports,
    #[error("partition {0} reported more than once")]
    DuplicatePartition(usize),
    #[error("cannot validate an empty point set")]
    EmptyInput,
    #[error(transparent)]
    Engine(#[from] JobError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsiReport {
    pub partition_id: usize,
    pub mean_ssi: f64,
    pub point_count: usize,
}

impl fmt::Display for SsiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{:.9}", self.partition_id, self.mean_ssi)
    }
}

/// Score of one point: `own` is the (unsquared) distance to its center,
/// `other` the distance to the nearest other center.
pub fn point_ssi(own: f64, other: f64) -> f64 {
    (other - own) / own.max(other).max(SSI_EPSILON)
}

/// One partition to score: its centers and the per-point cluster labels.
#[derive(Clone, Copy, Debug)]
pub struct Labeled<'a> {
    pub model: &'a PartitionModel,
    pub labels: &'a [u16],
}

/// Scores several partitions over the same points in one pass.
///
/// Per-chunk sums are combined in chunk order, so the result is the same for
/// any worker count.
pub fn validate_multi_k(
    engine: &Engine,
    points: &PointSet,
    partitions: &[Labeled<'_>],
) -> Result<Vec<SsiReport>, SsiError> {
    if points.is_empty() {
        return Err(SsiError::EmptyInput);
    }
    for p in partitions {
        let k = p.model.k();
        if k < 2 {
            return Err(SsiError::SingleCluster);
        }
        if p.labels.len() != points.len() {
            return Err(SsiError::LengthMismatch {
                partition: k,
                labels: p.labels.len(),
                points: points.len(),
            });
        }
        if let Some(&bad) = p.labels.iter().find(|&&c| c as usize >= k) {
            return Err(SsiError::LabelOutOfRange {
                partition: k,
                label: bad as usize,
            });
        }
    }
    let out = engine.run_chunked(
        "validate-ssi",
        points.len(),
        engine.chunks(points.len()),
        |_, range| {
            let mut emitted = Vec::with_capacity(partitions.len());
            for (slot, p) in partitions.iter().enumerate() {
                let centers = p.model.centers();
                let mut sum = 0.0;
                for i in range.clone() {
                    let f = points.feature(i);
                    let own_id = p.labels[i] as usize;
                    let own = lab_distance_sq(f, centers[own_id]).sqrt();
                    let other = centers
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != own_id)
                        .map(|(_, &c)| lab_distance_sq(f, c))
                        .fold(f64::INFINITY, f64::min)
                        .sqrt();
                    sum += point_ssi(own, other);
                }
                emitted.push((slot, (sum, range.len())));
            }
            Ok::<_, std::convert::Infallible>(emitted)
        },
        |_, parts| {
            Ok(parts
                .into_iter()
                .fold((0.0, 0usize), |(s, n), (ps, pn)| (s + ps, n + pn)))
        },
    )?;
    Ok(out
        .into_iter()
        .map(|(slot, (sum, count))| SsiReport {
            partition_id: partitions[slot].model.k(),
            mean_ssi: sum / count as f64,
            point_count: count,
        })
        .collect())
}

/// Mean SSI of one partition.
pub fn partition_ssi(
    engine: &Engine,
    points: &PointSet,
    labels: &[u16],
    model: &PartitionModel,
) -> Result<SsiReport, SsiError> {
    let mut reports = validate_multi_k(engine, points, &[Labeled { model, labels }])?;
    Ok(reports.pop().expect("one partition in, one report out"))
}

/// The k with the highest mean SSI; ties go to the smaller k.
pub fn select_k(reports: &[SsiReport]) -> Result<usize, SsiError> {
    let mut seen = std::collections::HashSet::new();
    for r in reports {
        if !seen.insert(r.partition_id) {
            return Err(SsiError::DuplicatePartition(r.partition_id));
        }
    }
    reports
        .iter()
        .min_by(|x, y| {
            y.mean_ssi
                .total_cmp(&x.mean_ssi)
                .then(x.partition_id.cmp(&y.partition_id))
        })
        .map(|r| r.partition_id)
        .ok_or(SsiError::NoReports)
}

/// Writes `partitionId,mean_ssi` lines followed by `BEST,<k>`.
pub fn write_report<W: Write>(mut out: W, reports: &[SsiReport], best: usize) -> io::Result<()> {
    for r in reports {
        writeln!(out, "{r}")?;
    }
    writeln!(out, "BEST,{best}")?;
    out.flush()
}
