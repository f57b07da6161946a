//! Multi-k clustering of raster imagery.
//!
//! The pipeline mirrors a chain of map/reduce jobs executed on a local
//! worker pool:
//!
//! 1. [`sequence_store`] unpacks a binary key/value container of encoded
//!    images and decodes them to rasters.
//! 2. [`color`] extracts pixels and projects every color onto the CIELAB
//!    (a*, b*) plane.
//! 3. [`init`] runs scalable k-means++ (k-means||) once and derives a seed
//!    set for every requested k from the shared candidate pool.
//! 4. [`cluster`] runs Lloyd iterations for all k values in the same passes.
//! 5. [`ssi`] scores every partition with the simplified silhouette index
//!    and picks the best k.
//!
//! [`engine`] provides the deterministic map/shuffle/reduce executor used by
//! every phase; its worker count stands in for the number of cluster nodes,
//! which is what [`bench`] varies for speedup and scaleup sweeps.

pub mod bench;
pub mod cluster;
pub mod color;
pub mod engine;
pub mod init;
pub mod pipeline;
pub mod rng;
pub mod sequence_store;
pub mod ssi;

pub use cluster::{ClusterConfig, PartitionModel};
pub use color::{Chroma, LabColor, PixelRecord, PixelTable, PointSet, RgbColor};
pub use engine::{Engine, EngineConfig};
pub use init::{CandidateSet, InitConfig};
pub use pipeline::{PipelineConfig, PipelineReport};
pub use sequence_store::{Raster, SequenceEntry};
pub use ssi::SsiReport;
