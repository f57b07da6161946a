use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mkmeans::bench::{self, BenchConfig};
use mkmeans::cluster::ClusterConfig;
use mkmeans::engine::{Engine, EngineConfig};
use mkmeans::init::InitConfig;
use mkmeans::pipeline::{self, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "mkmeans",
    version,
    about = "Multi-k color clustering of raster images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack image files into a container.
    Pack {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Seed, cluster and validate every k, writing artifacts to a directory.
    Cluster {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        label_maps: bool,
        #[arg(long)]
        pixel_dump: bool,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Recompute SSI from the centroid and points files in a directory.
    Validate {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long, default_value_t = EngineConfig::DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
    },
    /// Time the init, cluster and validate phases across worker counts.
    Bench {
        mode: BenchMode,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Worker counts; for scaleup also the data multipliers.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchMode {
    Speedup,
    Scaleup,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated k values.
    #[arg(short, long, value_delimiter = ',', default_value = "5,6,7")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    /// Oversampling factor l; defaults to twice the largest k.
    #[arg(long)]
    oversample: Option<f64>,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = EngineConfig::DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
}

impl RunArgs {
    fn init(&self) -> InitConfig {
        InitConfig {
            oversampling: self.oversample,
            rounds: self.rounds,
            seed: self.seed,
        }
    }

    fn cluster(&self) -> ClusterConfig {
        ClusterConfig {
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

fn default_workers() -> usize {
    EngineConfig::default().workers
}

fn engine_config(workers: usize, chunk_size: usize) -> Result<EngineConfig> {
    EngineConfig::new(workers, chunk_size).context("invalid engine configuration")
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Pack { images, output } => {
            let n = pipeline::pack_files(&images, &output)?;
            writeln!(out, "packed {n} images into {}", output.display())?;
        }
        Command::Cluster {
            input,
            output,
            label_maps,
            pixel_dump,
            workers,
            run,
        } => {
            let cfg = PipelineConfig {
                ks: run.k.clone(),
                init: run.init(),
                cluster: run.cluster(),
                engine: engine_config(workers, run.chunk_size)?,
                input,
                output_dir: output,
                label_maps,
                pixel_dump,
            };
            let report = pipeline::run_pipeline(&cfg)?;
            for r in &report.ssi {
                writeln!(out, "k={} ssi={:.9}", r.partition_id, r.mean_ssi)?;
            }
            writeln!(out, "BEST,{}", report.best_k)?;
        }
        Command::Validate {
            output,
            workers,
            chunk_size,
        } => {
            let (reports, best) =
                pipeline::validate_dir(&output, engine_config(workers, chunk_size)?)?;
            for r in &reports {
                writeln!(out, "k={} ssi={:.9}", r.partition_id, r.mean_ssi)?;
            }
            writeln!(out, "BEST,{best}")?;
        }
        Command::Bench {
            mode,
            input,
            output,
            workers,
            repeats,
            run,
        } => {
            if workers.is_empty() {
                bail!("--workers needs at least one value");
            }
            let loader = Engine::new(engine_config(default_workers(), run.chunk_size)?)?;
            let table = pipeline::load_pixels(&loader, &input)?;
            let cfg = BenchConfig {
                ks: run.k.clone(),
                init: run.init(),
                cluster: run.cluster(),
                chunk_size: run.chunk_size,
                repeats,
            };
            let rows = match mode {
                BenchMode::Speedup => bench::bench_speedup(table.points(), &workers, &cfg)?,
                BenchMode::Scaleup => bench::bench_scaleup(table.points(), &workers, &cfg)?,
            };
            let file =
                File::create(&output).with_context(|| format!("creating {}", output.display()))?;
            bench::write_csv(BufWriter::new(file), &rows)
                .with_context(|| format!("writing {}", output.display()))?;
            bench::write_csv(&mut out, &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
