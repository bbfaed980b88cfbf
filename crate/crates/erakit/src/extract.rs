//! Clip loading and per-entry parallel batch work.

use std::fs;
use std::path::Path;

use erakit_core::audio::{decode_wav, mixdown, to_canonical, AudioClip};
use erakit_core::features::{
    assemble_feature_vectors, clip_peak_metrics, ClipRef, FeatureConfig, FeatureRow, PeakMetrics,
};
use rayon::prelude::*;

use crate::corpus::{is_supported_audio, CorpusEntry};
use crate::error::{Error, Result};

/// Reads a WAV file as a mono clip at `sample_rate`.
pub fn load_clip(path: &Path, sample_rate: u32) -> Result<AudioClip> {
    if !is_supported_audio(path) {
        return Err(Error::Data(format!(
            "{}: unsupported audio format",
            path.display()
        )));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let clip_err = |source| Error::Clip {
        path: path.to_path_buf(),
        source,
    };
    let raw = decode_wav(&bytes).map_err(clip_err)?;
    to_canonical(mixdown(raw).map_err(clip_err)?, sample_rate).map_err(clip_err)
}

/// Runs `job` on a dedicated pool of `threads` workers, or on the global
/// pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::Usage(format!("cannot start {n} threads: {e}"))),
    }
}

pub fn clip_ref(entry: &CorpusEntry) -> ClipRef {
    ClipRef::new(&entry.label, &entry.source, &entry.sample_id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Sorted by clip, then kind name.
    pub rows: Vec<FeatureRow>,
    /// Clips with no voiced frame, hence no pitch row.
    pub pitch_excluded: Vec<ClipRef>,
}

pub fn extract_features(
    entries: &[CorpusEntry],
    sample_rate: u32,
    config: &FeatureConfig,
    threads: Option<usize>,
) -> Result<Extraction> {
    let sets = with_threads(threads, || {
        entries
            .par_iter()
            .map(|e| {
                let clip = load_clip(&e.file_path, sample_rate)?;
                assemble_feature_vectors(&clip, config).map_err(|source| Error::Clip {
                    path: e.file_path.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows = Vec::new();
    let mut pitch_excluded = Vec::new();
    for (entry, set) in entries.iter().zip(sets) {
        let clip = clip_ref(entry);
        if set.pitch.is_none() {
            pitch_excluded.push(clip.clone());
        }
        for vector in set.vectors() {
            rows.push(FeatureRow {
                clip: clip.clone(),
                vector: vector.clone(),
            });
        }
    }
    sort_rows(&mut rows);
    pitch_excluded.sort();
    Ok(Extraction {
        rows,
        pitch_excluded,
    })
}

/// Orders rows by `(label, source, sample_id, kind name)`.
pub fn sort_rows(rows: &mut [FeatureRow]) {
    rows.sort_by(|a, b| {
        a.clip
            .cmp(&b.clip)
            .then_with(|| a.vector.kind.as_str().cmp(b.vector.kind.as_str()))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakRow {
    pub clip: ClipRef,
    pub metrics: PeakMetrics,
}

pub fn compute_peaks(
    entries: &[CorpusEntry],
    sample_rate: u32,
    frame_length: usize,
    hop: usize,
    weighted: bool,
    threads: Option<usize>,
) -> Result<Vec<PeakRow>> {
    let mut rows = with_threads(threads, || {
        entries
            .par_iter()
            .map(|e| {
                let clip = load_clip(&e.file_path, sample_rate)?;
                let metrics =
                    clip_peak_metrics(&clip, frame_length, hop, weighted).map_err(|source| {
                        Error::Clip {
                            path: e.file_path.clone(),
                            source,
                        }
                    })?;
                Ok(PeakRow {
                    clip: clip_ref(e),
                    metrics,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    rows.sort_by(|a, b| a.clip.cmp(&b.clip));
    Ok(rows)
}
