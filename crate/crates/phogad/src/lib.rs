//! File formats, dataset parsers and the pipeline drivers behind the
//! `phogad` command line. The algorithms themselves live in `phogad-core`.

pub mod artifacts;
pub mod diagram;
pub mod error;
pub mod fmt;
pub mod graph_dir;
pub mod ingest;
pub mod manifest;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
pub use manifest::{Dataset, RunManifest};
