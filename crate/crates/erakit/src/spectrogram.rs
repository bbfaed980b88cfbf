//! Grayscale spectrogram images written as binary PGM.

use erakit_core::audio::AudioClip;
use erakit_core::dsp::stft_power;

use crate::error::Result;

/// Displayed dynamic range below the loudest cell.
pub const DYNAMIC_RANGE_DB: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Binary (P5) portable graymap.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// One column per frame, one row per bin with the highest frequency at the
/// top. Power in dB is clipped to `[max − 80, max]` and mapped linearly to
/// 0..=255. A clip with no energy renders uniformly at 0.
pub fn render_spectrogram(clip: &AudioClip, frame_length: usize, hop: usize) -> Result<GrayImage> {
    let spec = stft_power(clip, frame_length, hop)?;
    let values = &spec.frames.values;
    let (height, width) = (values.rows(), values.cols());
    let max_power = values.as_slice().iter().copied().fold(0.0, f64::max);
    let mut pixels = vec![0u8; width * height];
    if max_power > 0.0 {
        let top = 10.0 * max_power.log10();
        let floor = top - DYNAMIC_RANGE_DB;
        for k in 0..height {
            let y = height - 1 - k;
            for t in 0..width {
                let p = values[(k, t)];
                let db = if p > 0.0 {
                    (10.0 * p.log10()).max(floor)
                } else {
                    floor
                };
                pixels[y * width + t] = (255.0 * (db - floor) / DYNAMIC_RANGE_DB).round() as u8;
            }
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}
