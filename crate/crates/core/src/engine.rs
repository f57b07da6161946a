//! Local map/shuffle/reduce executor.
//!
//! Map tasks run on a pool of `workers` threads, one task per input chunk.
//! The shuffle is a barrier that groups emitted values by key in a fixed
//! order, and reducers see keys in ascending order. Nothing in the output
//! depends on how tasks were scheduled, so a job gives bit-identical results
//! for any worker count as long as the chunking is the same.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::error::Error as StdError;
use std::fmt::Debug;
use std::ops::Range;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

pub type BoxError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("job `{job}`: map task for chunk {chunk} failed: {source}")]
    Map {
        job: String,
        chunk: usize,
        source: BoxError,
    },
    #[error("job `{job}`: reduce for key {key} failed: {source}")]
    Reduce {
        job: String,
        key: String,
        source: BoxError,
    },
}

/// Emulated cluster size and map-task granularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub workers: usize,
    /// Records per map task.
    pub chunk_size: usize,
}

impl EngineConfig {
    pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;

    pub fn new(workers: usize, chunk_size: usize) -> Result<Self, EngineError> {
        let cfg = Self {
            workers,
            chunk_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_workers(workers: usize) -> Result<Self, EngineError> {
        Self::new(workers, Self::DEFAULT_CHUNK_SIZE)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.workers == 0 {
            return Err(EngineError::InvalidConfig(
                "workers must be at least 1".into(),
            ));
        }
        if self.chunk_size == 0 {
            return Err(EngineError::InvalidConfig(
                "chunk_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            chunk_size: Self::DEFAULT_CHUNK_SIZE,
        }
    }
}

/// Wall-clock record of one finished job.
#[derive(Clone, Debug, PartialEq)]
pub struct JobTiming {
    pub job: String,
    pub workers: usize,
    pub records: usize,
    pub seconds: f64,
}

pub struct Engine {
    config: EngineConfig,
    pool: rayon::ThreadPool,
    timings: Mutex<Vec<JobTiming>>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .thread_name(|i| format!("mr-worker-{i}"))
            .build()?;
        Ok(Self {
            config,
            pool,
            timings: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn workers(&self) -> usize {
        self.config.workers
    }

    /// Fixed-size chunking of `0..len` by the configured chunk size.
    pub fn chunks(&self, len: usize) -> Vec<Range<usize>> {
        chunk_ranges(len, self.config.chunk_size)
    }

    /// Drains the timings recorded since the last call.
    pub fn take_timings(&self) -> Vec<JobTiming> {
        std::mem::take(&mut *self.timings.lock().expect("timings lock"))
    }

    fn record(&self, job: &str, records: usize, started: Instant) {
        let seconds = started.elapsed().as_secs_f64();
        log::debug!(
            "job {job}: {records} records in {seconds:.3}s on {} workers",
            self.workers()
        );
        self.timings.lock().expect("timings lock").push(JobTiming {
            job: job.to_owned(),
            workers: self.config.workers,
            records,
            seconds,
        });
    }

    /// Mapper-only job: one output per chunk, in chunk order.
    pub fn run_map_only<C, O, E, M>(
        &self,
        job: &str,
        records: usize,
        chunks: Vec<C>,
        map_fn: M,
    ) -> Result<Vec<O>, JobError>
    where
        C: Send,
        O: Send,
        E: Into<BoxError>,
        M: Fn(usize, C) -> Result<O, E> + Sync,
    {
        let started = Instant::now();
        let out = self.map_phase(job, chunks, map_fn)?;
        self.record(job, records, started);
        Ok(out)
    }

    /// Chunk-level map/reduce.
    ///
    /// `map_fn` receives each chunk by value with its index and owns it for
    /// the task's duration. A key's values reach `reduce_fn` in emission
    /// order: by chunk index, then by position within the chunk's output.
    /// The result lists keys in ascending order.
    pub fn run_chunked<C, K, V, O, E, M, R>(
        &self,
        job: &str,
        records: usize,
        chunks: Vec<C>,
        map_fn: M,
        reduce_fn: R,
    ) -> Result<Vec<(K, O)>, JobError>
    where
        C: Send,
        K: Ord + Debug + Send,
        V: Send,
        O: Send,
        E: Into<BoxError>,
        M: Fn(usize, C) -> Result<Vec<(K, V)>, E> + Sync,
        R: Fn(&K, Vec<V>) -> Result<O, E> + Sync,
    {
        let started = Instant::now();
        let mapped = self.map_phase(job, chunks, map_fn)?;
        let groups = shuffle(mapped);
        let out = self.reduce_phase(job, groups, reduce_fn)?;
        self.record(job, records, started);
        Ok(out)
    }

    /// Record-level map/reduce over pre-split input.
    ///
    /// Within a key, values are sorted by `value_order` (stable, starting
    /// from emission order) before `reduce_fn` sees them.
    pub fn run_job<T, K, V, O, E, M, R, S>(
        &self,
        job: &str,
        chunks: &[&[T]],
        map_fn: M,
        reduce_fn: R,
        value_order: S,
    ) -> Result<Vec<(K, O)>, JobError>
    where
        T: Sync,
        K: Ord + Debug + Send,
        V: Send,
        O: Send,
        E: Into<BoxError>,
        M: Fn(&T) -> Result<Vec<(K, V)>, E> + Sync,
        R: Fn(&K, Vec<V>) -> Result<O, E> + Sync,
        S: Fn(&V, &V) -> Ordering + Sync,
    {
        let records = chunks.iter().map(|c| c.len()).sum();
        self.run_chunked(
            job,
            records,
            chunks.to_vec(),
            |_, chunk: &[T]| {
                let mut out = Vec::new();
                for record in chunk {
                    out.extend(map_fn(record)?);
                }
                Ok::<_, E>(out)
            },
            |key, mut values| {
                values.sort_by(&value_order);
                reduce_fn(key, values)
            },
        )
    }

    fn map_phase<C, O, E, M>(
        &self,
        job: &str,
        chunks: Vec<C>,
        map_fn: M,
    ) -> Result<Vec<O>, JobError>
    where
        C: Send,
        O: Send,
        E: Into<BoxError>,
        M: Fn(usize, C) -> Result<O, E> + Sync,
    {
        let results: Vec<Result<O, BoxError>> = self.pool.install(|| {
            chunks
                .into_par_iter()
                .enumerate()
                .map(|(i, chunk)| map_fn(i, chunk).map_err(Into::into))
                .collect()
        });
        results
            .into_iter()
            .enumerate()
            .map(|(chunk, r)| {
                r.map_err(|e| JobError::Map {
                    job: job.to_owned(),
                    chunk,
                    source: e,
                })
            })
            .collect()
    }

    fn reduce_phase<K, V, O, E, R>(
        &self,
        job: &str,
        groups: BTreeMap<K, Vec<V>>,
        reduce_fn: R,
    ) -> Result<Vec<(K, O)>, JobError>
    where
        K: Ord + Debug + Send,
        V: Send,
        O: Send,
        E: Into<BoxError>,
        R: Fn(&K, Vec<V>) -> Result<O, E> + Sync,
    {
        let groups: Vec<(K, Vec<V>)> = groups.into_iter().collect();
        let results: Vec<Result<(K, O), JobError>> = self.pool.install(|| {
            groups
                .into_par_iter()
                .map(|(key, values)| match reduce_fn(&key, values) {
                    Ok(out) => Ok((key, out)),
                    Err(e) => Err(JobError::Reduce {
                        job: job.to_owned(),
                        key: format!("{key:?}"),
                        source: e.into(),
                    }),
                })
                .collect()
        });
        results.into_iter().collect()
    }
}

fn shuffle<K: Ord, V>(mapped: Vec<Vec<(K, V)>>) -> BTreeMap<K, Vec<V>> {
    let mut groups: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (key, value) in mapped.into_iter().flatten() {
        groups.entry(key).or_default().push(value);
    }
    groups
}

/// Splits `0..len` into `n` contiguous ranges whose sizes differ by at most
/// one, larger ranges first.
pub fn split_ranges(len: usize, n: usize) -> Vec<Range<usize>> {
    assert!(n >= 1, "cannot split into zero parts");
    let base = len / n;
    let extra = len % n;
    let mut start = 0;
    (0..n)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let range = start..start + size;
            start += size;
            range
        })
        .collect()
}

/// Splits `records` into `n` balanced, order-preserving chunks.
pub fn partition<T>(records: &[T], n: usize) -> Vec<&[T]> {
    split_ranges(records.len(), n)
        .into_iter()
        .map(|r| &records[r])
        .collect()
}

/// Consecutive ranges of `chunk_size` (the last may be shorter). Empty input
/// gives no chunks.
pub fn chunk_ranges(len: usize, chunk_size: usize) -> Vec<Range<usize>> {
    assert!(chunk_size >= 1, "chunk size must be positive");
    (0..len)
        .step_by(chunk_size)
        .map(|start| start..(start + chunk_size).min(len))
        .collect()
}
