use alloc::vec;
use alloc::vec::Vec;

use super::{centered_frame, check_framing, frame_count, hann, stft_power_padded, FrameSeries};
use crate::audio::AudioClip;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// A-weighting gain in dB (IEC 61672 analog curve, normalized to 0 dB at 1 kHz).
pub fn a_weight_gain(f: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Domain(alloc::format!(
            "A-weighting needs a positive finite frequency, got {f}"
        )));
    }
    let f2 = f * f;
    let num = 12194.0f64 * 12194.0 * f2 * f2;
    let den = (f2 + 20.6 * 20.6)
        * libm::sqrt((f2 + 107.7 * 107.7) * (f2 + 737.9 * 737.9))
        * (f2 + 12194.0 * 12194.0);
    Ok(20.0 * libm::log10(num / den) + 2.00)
}

/// Framewise A-weighted RMS.
///
/// Weighted bin powers are summed over the two-sided spectrum and divided by
/// `n_fft · Σ w²`, so with unit weights the result is the RMS of the
/// unwindowed frame for stationary input. Frame lengths that are not a power
/// of two are zero-padded to the next one.
pub fn a_weighted_rms(clip: &AudioClip, frame_length: usize, hop: usize) -> Result<FrameSeries> {
    check_framing(clip, frame_length, hop)?;
    let n_fft = frame_length.next_power_of_two();
    let spec = stft_power_padded(clip, frame_length, n_fft, hop)?;
    let window_energy: f64 = hann(frame_length).iter().map(|w| w * w).sum();
    let k_last = n_fft / 2;
    let weights: Vec<f64> = (0..spec.n_bins())
        .map(|k| {
            if k == 0 {
                return Ok(0.0);
            }
            let gain_db = a_weight_gain(spec.bin_frequency(k))?;
            let g2 = libm::pow(10.0, gain_db / 10.0);
            Ok(if k == k_last { g2 } else { 2.0 * g2 })
        })
        .collect::<Result<_>>()?;
    let norm = n_fft as f64 * window_energy;
    let values = &spec.frames.values;
    let n_frames = values.cols();
    let mut power = vec![0.0; n_frames];
    for (k, w) in weights.iter().enumerate() {
        for (p, s) in power.iter_mut().zip(values.row(k)) {
            *p += w * s;
        }
    }
    let rms: Vec<f64> = power.iter().map(|p| libm::sqrt(p / norm)).collect();
    Ok(FrameSeries {
        values: Matrix::from_vec(1, n_frames, rms)?,
        hop,
        frame_length,
        sample_rate: clip.sample_rate(),
    })
}

/// Time-domain RMS of each centered, reflect-padded frame.
pub fn rms_series(clip: &AudioClip, frame_length: usize, hop: usize) -> Result<FrameSeries> {
    check_framing(clip, frame_length, hop)?;
    let n_frames = frame_count(clip.len(), frame_length, hop);
    let mut frame = vec![0.0; frame_length];
    let rms: Vec<f64> = (0..n_frames)
        .map(|t| {
            centered_frame(clip.samples(), t, hop, &mut frame);
            libm::sqrt(frame.iter().map(|x| x * x).sum::<f64>() / frame_length as f64)
        })
        .collect();
    Ok(FrameSeries {
        values: Matrix::from_vec(1, n_frames, rms)?,
        hop,
        frame_length,
        sample_rate: clip.sample_rate(),
    })
}
