//! Periodicity detection over symbolic time-series.
//!
//! The crate models a measurement stream (traceroute paths, BGP reachability
//! states) as a regularly sampled sequence of interned symbols and finds the
//! intervals over which that sequence repeats a fixed pattern. Detection runs
//! in four stages: a match-count autocorrelation, peak picking, peak
//! clustering, and a window-gluing characterization that turns candidate
//! periods into [`Periodicity`] values.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the `perioscope` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bgp;
pub mod detector;
mod error;
mod model;
mod rng;
mod stats;
pub mod traceroute;
pub mod validation;

pub use detector::{detect, ExactMatch, MatchOperator};
pub use error::{Error, Result};
pub use model::{
    series_from_records, DetectorConfig, IngestReport, Periodicity, Slot, Symbol, SymbolSeries,
    SymbolTable, ToleranceRule,
};
pub use rng::child_seed;
