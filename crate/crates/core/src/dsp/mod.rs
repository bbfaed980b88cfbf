//! Framewise spectral and energy kernels.
//!
//! All framing uses the centered convention: the signal is reflect-padded by
//! half a window on both sides, frame `t` is centered on sample `t·hop`, and a
//! clip of `n` samples yields `1 + n / hop` frames for even window lengths.

mod loudness;
mod mel;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::audio::AudioClip;
use crate::error::invalid;
use crate::fft::Fft;
use crate::linalg::Matrix;
use crate::Result;

pub use loudness::{a_weight_gain, a_weighted_rms, rms_series};
pub use mel::{dct_ortho, hz_to_mel, mel_filterbank, mel_to_hz, mfcc, MelFilterbank, MfccParams};

pub const DEFAULT_FRAME_LENGTH: usize = 2048;
pub const DEFAULT_HOP: usize = 512;

/// A `K × T` matrix of per-frame values with its time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    /// Rows are channels or bins, columns are frames.
    pub values: Matrix,
    pub hop: usize,
    pub frame_length: usize,
    pub sample_rate: u32,
}

impl FrameSeries {
    pub fn n_frames(&self) -> usize {
        self.values.cols()
    }

    /// Time of frame `t`'s center in seconds.
    pub fn frame_time(&self, t: usize) -> f64 {
        (t * self.hop) as f64 / self.sample_rate as f64
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|t| self.frame_time(t)).collect()
    }
}

/// Power spectrogram: `frame_length / 2 + 1` rows of `|X_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub frames: FrameSeries,
    /// FFT size. Equals `frames.frame_length` unless the window was zero-padded.
    pub n_fft: usize,
}

impl PowerSpectrogram {
    pub fn n_bins(&self) -> usize {
        self.frames.values.rows()
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.frames.sample_rate as f64 / self.n_fft as f64
    }

    /// Σ over the full two-sided spectrum of frame `t`, divided by the FFT
    /// size. By Parseval this is the energy of the windowed frame.
    pub fn frame_energy(&self, t: usize) -> f64 {
        let k_last = self.n_fft / 2;
        let sum: f64 = (0..self.n_bins())
            .map(|k| {
                let s = self.frames.values[(k, t)];
                if k == 0 || k == k_last {
                    s
                } else {
                    2.0 * s
                }
            })
            .sum();
        sum / self.n_fft as f64
    }
}

/// Number of centered frames for a signal of `len` samples.
pub fn frame_count(len: usize, frame_length: usize, hop: usize) -> usize {
    let pad = frame_length / 2;
    1 + (len + 2 * pad - frame_length) / hop
}

/// Maps an index into the reflect-padded signal back onto `0..len`
/// (edge sample not repeated, as in `numpy.pad(mode="reflect")`).
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Copies centered frame `t` into `out` (length `frame_length`).
pub(crate) fn centered_frame(samples: &[f64], t: usize, hop: usize, out: &mut [f64]) {
    let start = (t * hop) as isize - (out.len() / 2) as isize;
    let len = samples.len();
    for (j, o) in out.iter_mut().enumerate() {
        let i = start + j as isize;
        *o = if i >= 0 && (i as usize) < len {
            samples[i as usize]
        } else {
            samples[reflect_index(i, len)]
        };
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64))
        .collect()
}

pub(crate) fn check_framing(clip: &AudioClip, frame_length: usize, hop: usize) -> Result<()> {
    if clip.is_empty() {
        return Err(invalid!("clip is empty"));
    }
    if frame_length < 2 {
        return Err(invalid!("frame length {frame_length} is too short"));
    }
    if hop == 0 || hop > frame_length {
        return Err(invalid!("hop {hop} must be in 1..={frame_length}"));
    }
    Ok(())
}

/// Hann-windowed STFT power with window `win_length` zero-padded to `n_fft`.
pub(crate) fn stft_power_padded(
    clip: &AudioClip,
    win_length: usize,
    n_fft: usize,
    hop: usize,
) -> Result<PowerSpectrogram> {
    check_framing(clip, win_length, hop)?;
    let fft = Fft::new(n_fft)?;
    let window = hann(win_length);
    let n_frames = frame_count(clip.len(), win_length, hop);
    let n_bins = n_fft / 2 + 1;
    let mut values = Matrix::zeros(n_bins, n_frames);
    let mut frame = vec![0.0; win_length];
    let mut scratch = Vec::with_capacity(n_fft);
    let mut column = vec![0.0; n_bins];
    for t in 0..n_frames {
        centered_frame(clip.samples(), t, hop, &mut frame);
        for (x, w) in frame.iter_mut().zip(&window) {
            *x *= w;
        }
        fft.power_spectrum(&frame, &mut scratch, &mut column);
        for (k, &p) in column.iter().enumerate() {
            values[(k, t)] = p;
        }
    }
    Ok(PowerSpectrogram {
        frames: FrameSeries {
            values,
            hop,
            frame_length: win_length,
            sample_rate: clip.sample_rate(),
        },
        n_fft,
    })
}

/// Centered, periodic-Hann STFT power spectrogram.
///
/// `frame_length` must be a power of two and `hop ≤ frame_length`.
pub fn stft_power(clip: &AudioClip, frame_length: usize, hop: usize) -> Result<PowerSpectrogram> {
    if !frame_length.is_power_of_two() {
        return Err(invalid!(
            "frame length {frame_length} is not a power of two"
        ));
    }
    stft_power_padded(clip, frame_length, frame_length, hop)
}
