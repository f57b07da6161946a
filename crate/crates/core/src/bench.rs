//! Speedup and scaleup measurements for the three clustering phases.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use crate::cluster::{self, ClusterConfig, PartitionModel};
use crate::color::PointSet;
use crate::engine::{Engine, EngineConfig};
use crate::init::{self, InitConfig};
use crate::pipeline::{Phase, PipelineError};
use crate::ssi::{self, Labeled};

pub const CSV_HEADER: &str = "phase,workers,pixels,seconds,metric";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub phase: Phase,
    pub workers: usize,
    pub pixels: usize,
    pub seconds: f64,
    pub metric: f64,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ks: Vec<usize>,
    pub init: InitConfig,
    pub cluster: ClusterConfig,
    pub chunk_size: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ks: vec![5, 6, 7],
            init: InitConfig::default(),
            cluster: ClusterConfig::default(),
            chunk_size: EngineConfig::DEFAULT_CHUNK_SIZE,
            repeats: 3,
        }
    }
}

const PHASES: [Phase; 3] = [Phase::Init, Phase::Cluster, Phase::Validate];

fn bench_err(e: impl std::error::Error + Send + Sync + 'static, phase: Phase) -> PipelineError {
    PipelineError::Phase {
        phase,
        source: Box::new(e),
    }
}

/// Wall-clock seconds of init, cluster and validate for one run.
pub fn time_phases(
    engine: &Engine,
    points: &PointSet,
    cfg: &BenchConfig,
) -> Result<[f64; 3], PipelineError> {
    let t = Instant::now();
    let seeds = init::init_multi_k(engine, points, &cfg.ks, &cfg.init)
        .map_err(|e| bench_err(e, Phase::Init))?;
    let init_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let models: BTreeMap<usize, PartitionModel> = seeds
        .seeds
        .into_iter()
        .map(|(k, s)| PartitionModel::new(s.centers).map(|m| (k, m)))
        .collect::<Result<_, _>>()
        .map_err(|e| bench_err(e, Phase::Init))?;
    let runs = cluster::run_multi_k(engine, points, &models, &cfg.cluster)
        .map_err(|e| bench_err(e, Phase::Cluster))?;
    let cluster_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let labeled: Vec<Labeled<'_>> = runs
        .values()
        .map(|r| Labeled {
            model: &r.model,
            labels: &r.labels,
        })
        .collect();
    ssi::validate_multi_k(engine, points, &labeled).map_err(|e| bench_err(e, Phase::Validate))?;
    let validate_s = t.elapsed().as_secs_f64();
    Ok([init_s, cluster_s, validate_s].map(|s| s.max(1e-9)))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Median phase times over `cfg.repeats` runs.
pub fn median_phases(
    workers: usize,
    points: &PointSet,
    cfg: &BenchConfig,
) -> Result<[f64; 3], PipelineError> {
    if cfg.repeats == 0 {
        return Err(PipelineError::Config("repeats must be at least 1".into()));
    }
    let engine_cfg = EngineConfig::new(workers, cfg.chunk_size)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let engine = Engine::new(engine_cfg).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut samples: [Vec<f64>; 3] = Default::default();
    for _ in 0..cfg.repeats {
        let times = time_phases(&engine, points, cfg)?;
        for (s, t) in samples.iter_mut().zip(times) {
            s.push(t);
        }
    }
    Ok(samples.map(median))
}

/// Fixed data, growing worker count. Metric is T(1 worker) / T(w workers).
pub fn bench_speedup(
    points: &PointSet,
    workers: &[usize],
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>, PipelineError> {
    if !workers.contains(&1) {
        return Err(PipelineError::Config(
            "speedup needs a 1-worker baseline".into(),
        ));
    }
    let mut times = BTreeMap::new();
    for &w in workers {
        times.insert(w, median_phases(w, points, cfg)?);
    }
    let base = times[&1];
    let mut rows = Vec::new();
    for &w in workers {
        for (i, phase) in PHASES.iter().enumerate() {
            rows.push(BenchRow {
                phase: *phase,
                workers: w,
                pixels: points.len(),
                seconds: times[&w][i],
                metric: base[i] / times[&w][i],
            });
        }
    }
    Ok(rows)
}

/// Data and workers grow together: `s` workers run on `s` copies of the
/// base points. Metric is T(1 worker, 1x) / T(s workers, s×).
pub fn bench_scaleup(
    points: &PointSet,
    scales: &[usize],
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>, PipelineError> {
    if !scales.contains(&1) {
        return Err(PipelineError::Config(
            "scaleup needs a 1-worker baseline".into(),
        ));
    }
    let mut times = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    for &s in scales {
        let scaled = points.replicate(s);
        sizes.insert(s, scaled.len());
        times.insert(s, median_phases(s, &scaled, cfg)?);
    }
    let base = times[&1];
    let mut rows = Vec::new();
    for &s in scales {
        for (i, phase) in PHASES.iter().enumerate() {
            rows.push(BenchRow {
                phase: *phase,
                workers: s,
                pixels: sizes[&s],
                seconds: times[&s][i],
                metric: base[i] / times[&s][i],
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.4}",
            r.phase, r.workers, r.pixels, r.seconds, r.metric
        )?;
    }
    out.flush()
}
