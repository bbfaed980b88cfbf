//! Decoded audio and the conversions into the canonical analysis form
//! (mono, [`CANONICAL_SAMPLE_RATE`](crate::CANONICAL_SAMPLE_RATE), `f64`).

mod resample;
mod wav;

use alloc::vec::Vec;

use crate::error::invalid;
use crate::Result;

pub use resample::resample;
pub use wav::{decode_wav, encode_wav_f32, encode_wav_pcm16, WavEncoding};

/// Multichannel audio at its native rate, as it came out of the container.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAudio {
    /// One sample vector per channel, all the same length.
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

impl RawAudio {
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        RawAudio {
            channels: alloc::vec![samples],
            sample_rate,
        }
    }

    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

/// Mono audio ready for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting non-finite samples and clamping the rest to
    /// `[-1, 1]`.
    pub fn new(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid!("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid!("non-finite sample at index {i}"));
        }
        for s in &mut samples {
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Averages all channels into one. Mono input is returned unchanged.
pub fn mixdown(raw: RawAudio) -> Result<RawAudio> {
    match raw.channels.len() {
        0 => Err(invalid!("audio has zero channels")),
        1 => Ok(raw),
        n => {
            let len = raw.frames();
            if raw.channels.iter().any(|c| c.len() != len) {
                return Err(invalid!("channels have unequal lengths"));
            }
            let scale = 1.0 / n as f64;
            let mono = (0..len)
                .map(|i| raw.channels.iter().map(|c| c[i]).sum::<f64>() * scale)
                .collect();
            Ok(RawAudio::mono(mono, raw.sample_rate))
        }
    }
}

/// Mixdown followed by resampling to `target_rate`.
pub fn to_canonical(raw: RawAudio, target_rate: u32) -> Result<AudioClip> {
    resample(&mixdown(raw)?, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn constant(values: &[f64], len: usize) -> RawAudio {
        RawAudio {
            channels: values.iter().map(|&v| vec![v; len]).collect(),
            sample_rate: 44100,
        }
    }

    #[test]
    fn mixdown_of_identical_channels_is_identity() {
        let x: Vec<f64> = (0..100).map(|i| libm::sin(i as f64 * 0.1) * 0.8).collect();
        let raw = RawAudio {
            channels: vec![x.clone(), x.clone()],
            sample_rate: 8000,
        };
        assert_eq!(mixdown(raw).unwrap().channels, vec![x]);
    }

    #[test]
    fn mixdown_cancels_opposite_channels() {
        let mono = mixdown(constant(&[0.5, -0.5], 64)).unwrap();
        assert!(mono.channels[0].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn mixdown_is_arithmetic_mean() {
        let mono = mixdown(constant(&[0.3, 0.0, 0.6], 10)).unwrap();
        assert!(mono.channels[0].iter().all(|&s| (s - 0.3).abs() < 1e-15));
    }

    #[test]
    fn mixdown_rejects_zero_channels() {
        let raw = RawAudio {
            channels: vec![],
            sample_rate: 8000,
        };
        assert!(matches!(mixdown(raw), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn clip_clamps_and_rejects_nan() {
        let clip = AudioClip::new(vec![1.0000005, -2.0, 0.25], 22050).unwrap();
        assert_eq!(clip.samples(), &[1.0, -1.0, 0.25]);
        assert!(AudioClip::new(vec![f64::NAN], 22050).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
    }
}
