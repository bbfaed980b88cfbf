//! Corpus handling, batch extraction, tables, plots and the command line
//! for expressive range analysis of audio corpora. Signal processing and
//! statistics live in [`erakit_core`].

pub mod cli;
pub mod corpus;
mod error;
pub mod extract;
pub mod plot;
pub mod spectrogram;
pub mod tables;

pub use error::{Error, Result};
