//! Input and output formats: the sparse text dataset format, JSON and CSV
//! exports of an explored path, and SVG pictures of it.

mod export;
mod svg;
mod text;

use thiserror::Error;

use crate::dataset::Class;
use crate::graph::GraphError;

pub use export::{event_polylines, export_json, import_json, write_event_csv, EventPolyline, PathDocument, FORMAT};
pub use svg::{render_svg, EventSelection, RenderOptions};
pub use text::{load_dataset, parse_dataset, write_dataset};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no {0:?} samples")]
    EmptyClass(Class),
    #[error("unsupported document format {0:?}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("inconsistent graph: {0}")]
    Graph(#[from] GraphError),
}
