//! Model and event-log I/O plus synthetic workload generation: PNML models,
//! XES/CSV/lines logs, JSON/TSV alignment output, and seeded trace
//! generation with noise.

mod alignment_io;
mod logs;
mod pnml;
mod synth;

pub use alignment_io::{
    read_alignment_json, write_alignment, AlignmentJson, MoveJson, OutputFormat, WindowJson,
};
pub use logs::{read_log, EventLog, LogCase, LogFormat};
pub use pnml::{read_pnml, read_pnml_file, write_pnml};
pub use synth::{generate_log, generate_trace, GenError, NoiseSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("xml error at byte {pos}: {source}")]
    Xml {
        pos: u64,
        source: quick_xml::Error,
    },
    #[error("{0}")]
    Malformed(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Invalid(#[from] crate::petri::ValidationError),
    #[error("invalid event: {0}")]
    Event(#[from] crate::petri::PetriError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
