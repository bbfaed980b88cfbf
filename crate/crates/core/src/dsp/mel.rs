use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{stft_power, FrameSeries, PowerSpectrogram};
use crate::audio::AudioClip;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * libm::log10(1.0 + f / 700.0)
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (libm::pow(10.0, m / 2595.0) - 1.0)
}

/// Triangular mel filters with area normalization.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_mels × (n_fft/2 + 1)`.
    pub weights: Matrix,
    /// Half-open nonzero bin range of each filter.
    ranges: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn new(
        n_mels: usize,
        sample_rate: u32,
        n_fft: usize,
        f_lo: f64,
        f_hi: f64,
    ) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if n_mels < 2 {
            return Err(Error::Config(alloc::format!(
                "need at least 2 mel bands, got {n_mels}"
            )));
        }
        if !(f_lo >= 0.0 && f_lo < f_hi && f_hi <= nyquist) {
            return Err(Error::Config(alloc::format!(
                "mel range must satisfy 0 <= f_lo < f_hi <= {nyquist}, got {f_lo}..{f_hi}"
            )));
        }
        let n_bins = n_fft / 2 + 1;
        let (m_lo, m_hi) = (hz_to_mel(f_lo), hz_to_mel(f_hi));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / n_fft as f64;

        let mut weights = Matrix::zeros(n_mels, n_bins);
        let mut ranges = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (lower, center, upper) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (upper - lower);
            let mut range: Option<(usize, usize)> = None;
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let rising = (f - lower) / (center - lower);
                let falling = (upper - f) / (upper - center);
                let w = rising.min(falling).max(0.0);
                if w > 0.0 {
                    weights[(m, k)] = w * norm;
                    range = Some(range.map_or((k, k + 1), |(s, _)| (s, k + 1)));
                }
            }
            match range {
                Some(r) => ranges.push(r),
                None => {
                    return Err(Error::Config(alloc::format!(
                        "mel band {m} ({lower:.1}-{upper:.1} Hz) covers no FFT bin; \
                         use fewer mel bands or a larger FFT"
                    )))
                }
            }
        }
        Ok(MelFilterbank { weights, ranges })
    }

    pub fn n_mels(&self) -> usize {
        self.weights.rows()
    }

    /// Mel power `filterbank · spectrogram`, exploiting filter sparsity.
    pub fn apply(&self, spec: &PowerSpectrogram) -> Result<Matrix> {
        let values = &spec.frames.values;
        if values.rows() != self.weights.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.cols(),
                found: values.rows(),
            });
        }
        let n_frames = values.cols();
        let mut out = Matrix::zeros(self.n_mels(), n_frames);
        for (m, &(start, end)) in self.ranges.iter().enumerate() {
            let row = out.row_mut(m);
            for k in start..end {
                let w = self.weights[(m, k)];
                for (o, s) in row.iter_mut().zip(values.row(k)) {
                    *o += w * s;
                }
            }
        }
        Ok(out)
    }
}

/// `n_mels × (n_fft/2 + 1)` triangular filterbank with peaks equally spaced
/// on the HTK mel scale, each filter scaled by `2 / (f_upper - f_lower)`.
pub fn mel_filterbank(
    n_mels: usize,
    sample_rate: u32,
    n_fft: usize,
    f_lo: f64,
    f_hi: f64,
) -> Result<Matrix> {
    MelFilterbank::new(n_mels, sample_rate, n_fft, f_lo, f_hi).map(|fb| fb.weights)
}

/// First `n_out` coefficients of the orthonormal DCT-II of `input`.
pub fn dct_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                libm::sqrt(1.0 / n)
            } else {
                libm::sqrt(2.0 / n)
            };
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, x)| x * libm::cos(PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)))
                    .sum::<f64>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccParams {
    pub n_mfcc: usize,
    pub n_mels: usize,
    pub frame_length: usize,
    pub hop: usize,
}

impl Default for MfccParams {
    fn default() -> Self {
        MfccParams {
            n_mfcc: 13,
            n_mels: 128,
            frame_length: super::DEFAULT_FRAME_LENGTH,
            hop: super::DEFAULT_HOP,
        }
    }
}

const LOG_FLOOR: f64 = 1e-10;

/// MFCCs: orthonormal DCT-II of `10·log10(max(mel power, 1e-10))`, keeping
/// coefficients `0..n_mfcc` (c0 included).
pub fn mfcc(clip: &AudioClip, params: &MfccParams) -> Result<FrameSeries> {
    let spec = stft_power(clip, params.frame_length, params.hop)?;
    let sr = clip.sample_rate();
    let fb = MelFilterbank::new(params.n_mels, sr, params.frame_length, 0.0, sr as f64 / 2.0)?;
    if params.n_mfcc == 0 || params.n_mfcc > params.n_mels {
        return Err(Error::Config(alloc::format!(
            "n_mfcc must be in 1..={}, got {}",
            params.n_mels,
            params.n_mfcc
        )));
    }
    let mel = fb.apply(&spec)?;
    let n_mels = params.n_mels;
    let basis: Vec<f64> = (0..params.n_mfcc)
        .flat_map(|k| {
            let scale = if k == 0 {
                libm::sqrt(1.0 / n_mels as f64)
            } else {
                libm::sqrt(2.0 / n_mels as f64)
            };
            (0..n_mels).map(move |i| {
                scale * libm::cos(PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n_mels as f64))
            })
        })
        .collect();

    let n_frames = mel.cols();
    let mut out = Matrix::zeros(params.n_mfcc, n_frames);
    let mut log_mel = vec![0.0; n_mels];
    for t in 0..n_frames {
        for (m, l) in log_mel.iter_mut().enumerate() {
            *l = 10.0 * libm::log10(mel[(m, t)].max(LOG_FLOOR));
        }
        for k in 0..params.n_mfcc {
            let b = &basis[k * n_mels..(k + 1) * n_mels];
            out[(k, t)] = b.iter().zip(&log_mel).map(|(b, l)| b * l).sum();
        }
    }
    Ok(FrameSeries {
        values: out,
        hop: params.hop,
        frame_length: params.frame_length,
        sample_rate: sr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mel_scale_values() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        // 2595·log10(2)
        assert!((hz_to_mel(700.0) - 781.172_838_748_031_2).abs() < 1e-9);
        assert!((mel_to_hz(hz_to_mel(4321.0)) - 4321.0).abs() < 1e-9);
    }

    #[test]
    fn default_filterbank_shape_and_positivity() {
        let fb = mel_filterbank(128, 22050, 2048, 0.0, 11025.0).unwrap();
        assert_eq!((fb.rows(), fb.cols()), (128, 1025));
        assert!(fb.as_slice().iter().all(|&w| w >= 0.0));
        for r in 0..128 {
            let row = fb.row(r);
            assert!(row.iter().sum::<f64>() > 0.0);
            // contiguous support
            let nz: Vec<usize> = (0..row.len()).filter(|&k| row[k] > 0.0).collect();
            assert_eq!(nz.last().unwrap() - nz[0] + 1, nz.len());
        }
    }

    #[test]
    fn filter_peaks_increase() {
        let fb = mel_filterbank(40, 16000, 512, 0.0, 8000.0).unwrap();
        let peaks: Vec<usize> = (0..40)
            .map(|r| {
                let row = fb.row(r);
                (0..row.len())
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                    .unwrap()
            })
            .collect();
        assert!(peaks.windows(2).all(|w| w[0] <= w[1]));
        assert!(peaks[0] < peaks[39]);
    }

    #[test]
    fn too_many_bands_is_config_error() {
        assert!(matches!(
            mel_filterbank(128, 22050, 256, 0.0, 11025.0),
            Err(Error::Config(_))
        ));
        assert!(mel_filterbank(1, 22050, 2048, 0.0, 11025.0).is_err());
        assert!(mel_filterbank(10, 22050, 2048, 500.0, 400.0).is_err());
        assert!(mel_filterbank(10, 22050, 2048, 0.0, 12000.0).is_err());
    }

    #[test]
    fn dct_of_constant_only_has_c0() {
        let c = dct_ortho(&[3.0; 16], 5);
        assert!((c[0] - 3.0 * 4.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn silent_clip_mfcc_is_floor_constant() {
        let clip = AudioClip::new(vec![0.0; 22050], 22050).unwrap();
        let m = mfcc(&clip, &MfccParams::default()).unwrap();
        assert_eq!(m.values.rows(), 13);
        let c0 = -100.0 * libm::sqrt(128.0);
        for t in 0..m.n_frames() {
            assert!((m.values[(0, t)] - c0).abs() < 1e-9);
            for k in 1..13 {
                assert!(m.values[(k, t)].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ten_second_shape() {
        let clip = AudioClip::new(vec![0.01; 220500], 22050).unwrap();
        let m = mfcc(&clip, &MfccParams::default()).unwrap();
        assert_eq!((m.values.rows(), m.n_frames()), (13, 431));
    }

    #[test]
    fn doubling_gain_shifts_only_c0() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..22050).map(|_| rng.random_range(-0.4..0.4)).collect();
        let loud: Vec<f64> = noise.iter().map(|x| 2.0 * x).collect();
        let a = mfcc(
            &AudioClip::new(noise, 22050).unwrap(),
            &MfccParams::default(),
        )
        .unwrap();
        let b = mfcc(
            &AudioClip::new(loud, 22050).unwrap(),
            &MfccParams::default(),
        )
        .unwrap();
        let shift = 10.0 * libm::log10(4.0) * libm::sqrt(128.0);
        for t in 0..a.n_frames() {
            assert!((b.values[(0, t)] - a.values[(0, t)] - shift).abs() < 1e-6);
            for k in 1..13 {
                assert!((b.values[(k, t)] - a.values[(k, t)]).abs() < 1e-6);
            }
        }
    }
}
