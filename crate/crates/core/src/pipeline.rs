//! End-to-end run: container → pixels → seeds → clusters → SSI, plus the
//! text artifacts each phase leaves in the output directory.
//!
//! Output files:
//!
//! * `centroid_<k>.txt` – `partitionId,clusterId,x,y,r,g,b,a*,b*` per center.
//!   After seeding, `x,y,r,g,b` describe the sampled source pixel; after
//!   clustering they are the rounded mean position and color of the
//!   members. The trailing `a*,b*` hold the exact center.
//! * `points.txt` – `partitionId,clusterId,clusterColor,pointX,pointY,pointColor`
//!   per (partition, pixel), colors as `r:g:b`.
//! * `ssi.txt` – `partitionId,mean_ssi` per partition, then `BEST,<k>`.
//! * `labels_<image>_k<k>.ppm` – optional label maps.
//! * `pixels.txt` – optional `image_id,x,y,r,g,b` dump.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::cluster::{self, ClusterConfig, PartitionModel, PartitionRun, StopReason};
use crate::color::{rgb_to_lab, Chroma, PixelTable, PointSet, RgbColor};
use crate::engine::{BoxError, Engine, EngineConfig};
use crate::init::{self, InitConfig, InitialCenters};
use crate::sequence_store::{
    decode_image, ContainerError, DecodeError, ImageKind, Raster, SequenceEntry, SequenceReader,
};
use crate::ssi::{self, Labeled, SsiReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Extract,
    Init,
    Cluster,
    Validate,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Extract => "extract",
            Phase::Init => "init",
            Phase::Cluster => "cluster",
            Phase::Validate => "validate",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("container {path}: {source}")]
    Container {
        path: PathBuf,
        source: ContainerError,
    },
    #[error("image {key:?}: {source}")]
    Decode { key: String, source: DecodeError },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{phase} phase failed: {source}")]
    Phase { phase: Phase, source: BoxError },
}

impl PipelineError {
    fn phase(phase: Phase) -> impl FnOnce(BoxError) -> Self {
        move |source| PipelineError::Phase { phase, source }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub ks: Vec<usize>,
    pub init: InitConfig,
    pub cluster: ClusterConfig,
    pub engine: EngineConfig,
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub label_maps: bool,
    pub pixel_dump: bool,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, ks: Vec<usize>) -> Self {
        Self {
            ks,
            init: InitConfig::default(),
            cluster: ClusterConfig::default(),
            engine: EngineConfig::default(),
            input: input.into(),
            output_dir: output_dir.into(),
            label_maps: false,
            pixel_dump: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |e: &dyn fmt::Display| PipelineError::Config(e.to_string());
        if self.ks.is_empty() {
            return Err(PipelineError::Config("no k values given".into()));
        }
        if let Some(k) = self.ks.iter().find(|&&k| k < 2) {
            return Err(PipelineError::Config(format!(
                "k = {k}: validation needs at least 2 clusters per partition"
            )));
        }
        if let Some(k) = self.ks.iter().find(|&&k| k > cluster::MAX_K) {
            return Err(PipelineError::Config(format!(
                "k = {k} exceeds the supported maximum {}",
                cluster::MAX_K
            )));
        }
        self.init.validate().map_err(|e| config(&e))?;
        self.cluster.validate().map_err(|e| config(&e))?;
        self.engine.validate().map_err(|e| config(&e))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSummary {
    pub iterations: usize,
    pub stop: StopReason,
    pub cost: f64,
    pub assignments: usize,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub pixels: usize,
    pub distinct_colors: usize,
    pub partitions: BTreeMap<usize, PartitionSummary>,
    pub ssi: Vec<SsiReport>,
    pub best_k: usize,
    pub phase_seconds: Vec<(Phase, f64)>,
}

/// Decodes container entries into a pixel table. Decoding runs as a
/// mapper-only job over the entries; pixels are appended in entry order.
pub fn extract_entries(
    engine: &Engine,
    table: &mut PixelTable,
    entries: Vec<SequenceEntry>,
) -> Result<(), PipelineError> {
    let rasters = engine
        .run_map_only(
            "extract-decode",
            entries.len(),
            entries,
            |_, entry: SequenceEntry| match decode_image(
                &entry.value,
                ImageKind::from_name(&entry.key),
            ) {
                Ok(raster) => Ok((entry.key, raster)),
                Err(source) => Err(PipelineError::Decode {
                    key: entry.key,
                    source,
                }),
            },
        )
        .map_err(|e| match e {
            crate::engine::JobError::Map { source, .. } => match source.downcast::<PipelineError>()
            {
                Ok(inner) => *inner,
                Err(other) => PipelineError::Phase {
                    phase: Phase::Extract,
                    source: other,
                },
            },
            other => PipelineError::Phase {
                phase: Phase::Extract,
                source: other.into(),
            },
        })?;
    for (key, raster) in rasters {
        table.push_raster(&key, &raster);
    }
    Ok(())
}

/// Streams a container file into a pixel table, decoding a few entries at a
/// time.
pub fn load_pixels(engine: &Engine, path: &Path) -> Result<PixelTable, PipelineError> {
    const BATCH_BYTES: usize = 256 << 20;
    let container_err = |source| PipelineError::Container {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let reader = SequenceReader::new(BufReader::new(file)).map_err(container_err)?;
    let mut table = PixelTable::new();
    let mut batch = Vec::new();
    let mut batch_bytes = 0;
    for entry in reader {
        let entry = entry.map_err(container_err)?;
        batch_bytes += entry.value.len();
        batch.push(entry);
        if batch.len() >= 2 * engine.workers() || batch_bytes >= BATCH_BYTES {
            extract_entries(engine, &mut table, std::mem::take(&mut batch))?;
            batch_bytes = 0;
        }
    }
    extract_entries(engine, &mut table, batch)?;
    Ok(table)
}

/// Mean position and color of a cluster's members.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClusterLook {
    pub x: u32,
    pub y: u32,
    pub rgb: RgbColor,
}

#[derive(Clone, Debug, Default)]
struct LookSums {
    xy: Vec<(u64, u64)>,
    rgb: Vec<[u64; 3]>,
    counts: Vec<u64>,
}

impl LookSums {
    fn new(k: usize) -> Self {
        Self {
            xy: vec![(0, 0); k],
            rgb: vec![[0; 3]; k],
            counts: vec![0; k],
        }
    }
}

fn rounded_mean(sum: u64, n: u64) -> u64 {
    (sum + n / 2) / n
}

/// Member means per cluster for each partition; clusters without members
/// keep `fallback`.
fn cluster_looks(
    engine: &Engine,
    table: &PixelTable,
    runs: &BTreeMap<usize, PartitionRun>,
    fallback: &BTreeMap<usize, Vec<ClusterLook>>,
) -> Result<BTreeMap<usize, Vec<ClusterLook>>, PipelineError> {
    let out = engine
        .run_chunked(
            "cluster-summary",
            table.len(),
            engine.chunks(table.len()),
            |_, range| {
                let mut emitted = Vec::with_capacity(runs.len());
                for (&k, run) in runs {
                    let mut sums = LookSums::new(k);
                    for i in range.clone() {
                        let c = run.labels[i] as usize;
                        let (_, x, y) = table.locate(i);
                        let rgb = table.rgb(i);
                        sums.xy[c].0 += x as u64;
                        sums.xy[c].1 += y as u64;
                        sums.rgb[c][0] += rgb.r as u64;
                        sums.rgb[c][1] += rgb.g as u64;
                        sums.rgb[c][2] += rgb.b as u64;
                        sums.counts[c] += 1;
                    }
                    emitted.push((k, sums));
                }
                Ok::<_, std::convert::Infallible>(emitted)
            },
            |&k, parts| {
                let total = parts.into_iter().fold(LookSums::new(k), |mut acc, p| {
                    for c in 0..k {
                        acc.xy[c].0 += p.xy[c].0;
                        acc.xy[c].1 += p.xy[c].1;
                        for ch in 0..3 {
                            acc.rgb[c][ch] += p.rgb[c][ch];
                        }
                        acc.counts[c] += p.counts[c];
                    }
                    acc
                });
                Ok((0..k)
                    .map(|c| {
                        let n = total.counts[c];
                        if n == 0 {
                            return fallback[&k][c];
                        }
                        let ch = |i: usize| rounded_mean(total.rgb[c][i], n) as u8;
                        ClusterLook {
                            x: rounded_mean(total.xy[c].0, n) as u32,
                            y: rounded_mean(total.xy[c].1, n) as u32,
                            rgb: RgbColor::new(ch(0), ch(1), ch(2)),
                        }
                    })
                    .collect::<Vec<_>>())
            },
        )
        .map_err(|e| PipelineError::Phase {
            phase: Phase::Cluster,
            source: e.into(),
        })?;
    Ok(out.into_iter().collect())
}

pub fn centroid_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("centroid_{k}.txt"))
}

pub fn write_centroids(
    dir: &Path,
    k: usize,
    centers: &[Chroma],
    looks: &[ClusterLook],
) -> Result<(), PipelineError> {
    let path = centroid_path(dir, k);
    let mut text = String::new();
    for (c, (center, look)) in centers.iter().zip(looks).enumerate() {
        use std::fmt::Write as _;
        let _ = writeln!(
            text,
            "{k},{c},{},{},{},{},{},{},{}",
            look.x, look.y, look.rgb.r, look.rgb.g, look.rgb.b, center.a, center.b
        );
    }
    fs::write(&path, text).map_err(io_err(&path))
}

/// Reads a centroid file back into (partition id, exact centers).
pub fn read_centroids(path: &Path) -> Result<(usize, Vec<Chroma>), PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut partition = None;
    let mut centers = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let parse_err = |message: String| PipelineError::Parse {
            path: path.to_owned(),
            line: line_no + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(parse_err(format!(
                "expected 9 fields, found {}",
                fields.len()
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_err(format!("{s:?}: {e}")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(format!("{s:?}: {e}")))
        };
        let k = int(fields[0])?;
        if *partition.get_or_insert(k) != k {
            return Err(parse_err(format!(
                "mixed partitions {k} and {}",
                partition.unwrap()
            )));
        }
        if int(fields[1])? != centers.len() {
            return Err(parse_err(format!(
                "cluster ids out of order at {:?}",
                fields[1]
            )));
        }
        centers.push(Chroma::new(real(fields[7])?, real(fields[8])?));
    }
    let k = partition.ok_or_else(|| PipelineError::Parse {
        path: path.to_owned(),
        line: 0,
        message: "empty centroid file".into(),
    })?;
    if k != centers.len() {
        return Err(PipelineError::Parse {
            path: path.to_owned(),
            line: 0,
            message: format!("partition {k} lists {} centers", centers.len()),
        });
    }
    Ok((k, centers))
}

fn push_color(buf: &mut Vec<u8>, c: RgbColor, num: &mut itoa::Buffer) {
    buf.extend_from_slice(num.format(c.r).as_bytes());
    buf.push(b':');
    buf.extend_from_slice(num.format(c.g).as_bytes());
    buf.push(b':');
    buf.extend_from_slice(num.format(c.b).as_bytes());
}

/// Writes `points.txt`: partitions in ascending k, pixels in table order.
/// Chunks are formatted in parallel a batch at a time and written in order.
pub fn write_points(
    engine: &Engine,
    path: &Path,
    table: &PixelTable,
    runs: &BTreeMap<usize, PartitionRun>,
    looks: &BTreeMap<usize, Vec<ClusterLook>>,
) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::with_capacity(1 << 20, file);
    let ranges = engine.chunks(table.len());
    let batch = (4 * engine.workers()).max(1);
    for (&k, run) in runs {
        let colors = &looks[&k];
        for group in ranges.chunks(batch) {
            let buffers = engine
                .run_map_only("points-format", table.len(), group.to_vec(), |_, range| {
                    let mut buf = Vec::with_capacity(range.len() * 40);
                    let mut num = itoa::Buffer::new();
                    for i in range {
                        let c = run.labels[i];
                        let (_, x, y) = table.locate(i);
                        buf.extend_from_slice(num.format(k).as_bytes());
                        buf.push(b',');
                        buf.extend_from_slice(num.format(c).as_bytes());
                        buf.push(b',');
                        push_color(&mut buf, colors[c as usize].rgb, &mut num);
                        buf.push(b',');
                        buf.extend_from_slice(num.format(x).as_bytes());
                        buf.push(b',');
                        buf.extend_from_slice(num.format(y).as_bytes());
                        buf.push(b',');
                        push_color(&mut buf, table.rgb(i), &mut num);
                        buf.push(b'\n');
                    }
                    Ok::<_, std::convert::Infallible>(buf)
                })
                .map_err(|e| PipelineError::Phase {
                    phase: Phase::Cluster,
                    source: e.into(),
                })?;
            for buf in buffers {
                out.write_all(&buf).map_err(io_err(path))?;
            }
        }
    }
    out.flush().map_err(io_err(path))
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_label_maps(
    dir: &Path,
    table: &PixelTable,
    runs: &BTreeMap<usize, PartitionRun>,
    looks: &BTreeMap<usize, Vec<ClusterLook>>,
) -> Result<(), PipelineError> {
    for span in table.images() {
        for (&k, run) in runs {
            let pixels = (span.start..span.start + span.len())
                .map(|i| looks[&k][run.labels[i] as usize].rgb)
                .collect();
            let raster = Raster::new(span.width, span.height, pixels).expect("span dimensions");
            let path = dir.join(format!("labels_{}_k{k}.ppm", sanitize(&span.id)));
            fs::write(&path, raster.to_ppm()).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

/// Runs the whole pipeline and writes every artifact into `output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    cfg.validate()?;
    let engine = Engine::new(cfg.engine).map_err(|e| PipelineError::Config(e.to_string()))?;
    let out_dir = cfg.output_dir.as_path();
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut phase_seconds = Vec::new();

    let started = Instant::now();
    let table = load_pixels(&engine, &cfg.input)?;
    if table.is_empty() {
        return Err(PipelineError::Config(format!(
            "{} holds no pixels",
            cfg.input.display()
        )));
    }
    log::info!(
        "extract: {} pixels ({} distinct colors) from {} images",
        table.len(),
        table.distinct_colors(),
        table.images().len()
    );
    if cfg.pixel_dump {
        let path = out_dir.join("pixels.txt");
        let file = File::create(&path).map_err(io_err(&path))?;
        table
            .write_dump(BufWriter::new(file))
            .map_err(io_err(&path))?;
    }
    phase_seconds.push((Phase::Extract, started.elapsed().as_secs_f64()));

    let report = cluster_and_validate(&engine, &table, cfg, &mut phase_seconds)?;
    Ok(PipelineReport {
        phase_seconds,
        ..report
    })
}

fn cluster_and_validate(
    engine: &Engine,
    table: &PixelTable,
    cfg: &PipelineConfig,
    phase_seconds: &mut Vec<(Phase, f64)>,
) -> Result<PipelineReport, PipelineError> {
    let out_dir = cfg.output_dir.as_path();
    let points = table.points();

    let started = Instant::now();
    let seeds = init::init_multi_k(engine, points, &cfg.ks, &cfg.init)
        .map_err(|e| PipelineError::phase(Phase::Init)(e.into()))?;
    let mut looks: BTreeMap<usize, Vec<ClusterLook>> = BTreeMap::new();
    for (&k, InitialCenters { sources, centers }) in &seeds.seeds {
        let k_looks: Vec<ClusterLook> = sources
            .iter()
            .map(|&s| {
                let (_, x, y) = table.locate(s);
                ClusterLook {
                    x,
                    y,
                    rgb: table.rgb(s),
                }
            })
            .collect();
        write_centroids(out_dir, k, centers, &k_looks)?;
        looks.insert(k, k_looks);
    }
    log::info!(
        "init: pool of {} candidates, l = {}",
        seeds.candidates.len(),
        seeds.oversampling
    );
    phase_seconds.push((Phase::Init, started.elapsed().as_secs_f64()));

    let started = Instant::now();
    let initial: BTreeMap<usize, PartitionModel> = seeds
        .seeds
        .iter()
        .map(|(&k, s)| {
            PartitionModel::new(s.centers.clone())
                .map(|m| (k, m))
                .map_err(|e| PipelineError::phase(Phase::Init)(e.into()))
        })
        .collect::<Result<_, _>>()?;
    let mut write_err = None;
    let runs =
        cluster::run_multi_k_observed(engine, points, &initial, &cfg.cluster, |k, _, model| {
            if write_err.is_none() {
                write_err = write_centroids(out_dir, k, model.centers(), &looks[&k]).err();
            }
        })
        .map_err(|e| PipelineError::phase(Phase::Cluster)(e.into()))?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let looks = cluster_looks(engine, table, &runs, &looks)?;
    for (&k, run) in &runs {
        write_centroids(out_dir, k, run.model.centers(), &looks[&k])?;
        log::info!(
            "cluster k={k}: {} assignments, {} iterations ({:?}), cost {:.6e}",
            run.labels.len(),
            run.iterations(),
            run.stop,
            run.cost()
        );
    }
    write_points(engine, &out_dir.join("points.txt"), table, &runs, &looks)?;
    if cfg.label_maps {
        write_label_maps(out_dir, table, &runs, &looks)?;
    }
    phase_seconds.push((Phase::Cluster, started.elapsed().as_secs_f64()));

    let started = Instant::now();
    let labeled: Vec<Labeled<'_>> = runs
        .values()
        .map(|r| Labeled {
            model: &r.model,
            labels: &r.labels,
        })
        .collect();
    let reports = ssi::validate_multi_k(engine, points, &labeled)
        .map_err(|e| PipelineError::phase(Phase::Validate)(e.into()))?;
    let best_k =
        ssi::select_k(&reports).map_err(|e| PipelineError::phase(Phase::Validate)(e.into()))?;
    for r in &reports {
        log::info!(
            "validate k={}: {} points, mean SSI {:.9}",
            r.partition_id,
            r.point_count,
            r.mean_ssi
        );
    }
    write_ssi(out_dir, &reports, best_k)?;
    phase_seconds.push((Phase::Validate, started.elapsed().as_secs_f64()));

    Ok(PipelineReport {
        pixels: table.len(),
        distinct_colors: table.distinct_colors(),
        partitions: runs
            .iter()
            .map(|(&k, r)| {
                (
                    k,
                    PartitionSummary {
                        iterations: r.iterations(),
                        stop: r.stop,
                        cost: r.cost(),
                        assignments: r.labels.len(),
                    },
                )
            })
            .collect(),
        ssi: reports,
        best_k,
        phase_seconds: Vec::new(),
    })
}

fn write_ssi(dir: &Path, reports: &[SsiReport], best: usize) -> Result<(), PipelineError> {
    let path = dir.join("ssi.txt");
    let file = File::create(&path).map_err(io_err(&path))?;
    ssi::write_report(BufWriter::new(file), reports, best).map_err(io_err(&path))
}

/// Points of one partition as read back from `points.txt`.
struct PartitionPoints {
    table: Vec<Chroma>,
    slots: HashMap<RgbColor, u32>,
    index: Vec<u32>,
    labels: Vec<u16>,
}

/// Recomputes the SSI report from the centroid and points files in `dir`
/// and rewrites `ssi.txt`.
pub fn validate_dir(
    dir: &Path,
    engine_cfg: EngineConfig,
) -> Result<(Vec<SsiReport>, usize), PipelineError> {
    let engine = Engine::new(engine_cfg).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut models = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name.starts_with("centroid_") && name.ends_with(".txt") {
            let (k, centers) = read_centroids(&path)?;
            let model = PartitionModel::new(centers).map_err(|e| PipelineError::Parse {
                path: path.clone(),
                line: 0,
                message: e.to_string(),
            })?;
            models.insert(k, model);
        }
    }
    if models.is_empty() {
        return Err(PipelineError::Config(format!(
            "no centroid files in {}",
            dir.display()
        )));
    }

    let path = dir.join("points.txt");
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut parts: BTreeMap<usize, PartitionPoints> = BTreeMap::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        let parse_err = |message: String| PipelineError::Parse {
            path: path.clone(),
            line: line_no + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(format!(
                "expected 6 fields, found {}",
                fields.len()
            )));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(format!("{:?}: {e}", fields[0])))?;
        let cluster: u16 = fields[1]
            .parse()
            .map_err(|e| parse_err(format!("{:?}: {e}", fields[1])))?;
        let color: RgbColor = fields[5].parse().map_err(|e| parse_err(format!("{e}")))?;
        if !models.contains_key(&k) {
            return Err(parse_err(format!("partition {k} has no centroid file")));
        }
        let part = parts.entry(k).or_insert_with(|| PartitionPoints {
            table: Vec::new(),
            slots: HashMap::new(),
            index: Vec::new(),
            labels: Vec::new(),
        });
        let slot = *part.slots.entry(color).or_insert_with(|| {
            part.table.push(rgb_to_lab(color).chroma());
            (part.table.len() - 1) as u32
        });
        part.index.push(slot);
        part.labels.push(cluster);
    }

    let mut reports = Vec::new();
    for (k, part) in parts {
        let points = PointSet::from_parts(part.table, part.index).expect("slots are in range");
        let report = ssi::partition_ssi(&engine, &points, &part.labels, &models[&k])
            .map_err(|e| PipelineError::phase(Phase::Validate)(e.into()))?;
        reports.push(report);
    }
    let best =
        ssi::select_k(&reports).map_err(|e| PipelineError::phase(Phase::Validate)(e.into()))?;
    write_ssi(dir, &reports, best)?;
    Ok((reports, best))
}

/// Packs image files into a container, keyed by file name.
pub fn pack_files(inputs: &[PathBuf], output: &Path) -> Result<usize, PipelineError> {
    let mut entries = Vec::with_capacity(inputs.len());
    for path in inputs {
        let key = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| {
                PipelineError::Config(format!("{} has no usable file name", path.display()))
            })?
            .to_owned();
        let value = fs::read(path).map_err(io_err(path))?;
        entries.push(SequenceEntry { key, value });
    }
    let container_err = |source| PipelineError::Container {
        path: output.to_owned(),
        source,
    };
    let bytes = crate::sequence_store::pack(&entries).map_err(container_err)?;
    fs::write(output, bytes).map_err(io_err(output))?;
    Ok(entries.len())
}
