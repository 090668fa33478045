//! File formats, reports, and the command-line driver around
//! `perioscope-core`.

pub mod cli;
pub mod io;
pub mod pipeline;
pub mod report;
