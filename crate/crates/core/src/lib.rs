//! Signal processing and statistics kernels for expressive range analysis
//! of audio corpora.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a
//! pure function of its inputs: WAV parsing and resampling, STFT-based
//! spectral features, A-weighted loudness, a pYIN-style pitch tracker,
//! per-clip summary vectors, and the PCA machinery used to draw expressive
//! range diagrams and compare corpus variance. File walking, tables, plots
//! and the command line live in the `erakit` crate.
//!
//! Pipeline for one clip:
//!
//! ```
//! use erakit_core::audio::{resample, AudioClip};
//! use erakit_core::features::{assemble_feature_vectors, FeatureConfig};
//!
//! let sr = 22050;
//! let samples: Vec<f64> = (0..sr)
//!     .map(|i| 0.5 * libm::sin(2.0 * core::f64::consts::PI * 440.0 * i as f64 / sr as f64))
//!     .collect();
//! let clip = AudioClip::new(samples, sr).unwrap();
//! let set = assemble_feature_vectors(&clip, &FeatureConfig::default()).unwrap();
//! assert_eq!(set.timbre.values.len(), 156);
//! assert_eq!(set.loudness.values.len(), 12);
//! assert!(set.pitch.is_some());
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod audio;
pub mod dsp;
pub mod era;
mod error;
pub mod features;
pub mod fft;
pub mod linalg;
pub mod pitch;

pub use error::{Error, Result};

/// Working sample rate every clip is converted to before analysis.
pub const CANONICAL_SAMPLE_RATE: u32 = 22050;
