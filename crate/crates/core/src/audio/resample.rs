//! Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
//!
//! The conversion ratio is reduced to `up/down`, so output sample `n` sits at
//! input position `n·down/up` and only `up` distinct fractional phases occur.
//! For moderate `up` the per-phase taps are tabulated once.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{AudioClip, RawAudio};
use crate::error::invalid;
use crate::Result;

/// Zero crossings of the kernel on each side when not decimating.
const HALF_LOBES: usize = 32;
const KAISER_BETA: f64 = 8.6;
/// Passband edge as a fraction of the output Nyquist frequency.
const ROLLOFF: f64 = 0.95;
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half_sq = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= half_sq / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    cutoff: f64,
    half: usize,
    i0_beta: f64,
}

impl Kernel {
    fn eval(&self, t: f64) -> f64 {
        let half = self.half as f64;
        if t.abs() >= half {
            return 0.0;
        }
        let x = 2.0 * self.cutoff * t;
        let sinc = if x == 0.0 {
            1.0
        } else {
            libm::sin(PI * x) / (PI * x)
        };
        let r = t / half;
        let window = bessel_i0(KAISER_BETA * libm::sqrt(1.0 - r * r)) / self.i0_beta;
        2.0 * self.cutoff * sinc * window
    }

    /// Taps for an output point `frac` input samples past input index `i`,
    /// applied to inputs `i - half + 1 ..= i + half`. Normalized to unit DC gain.
    fn taps(&self, frac: f64, out: &mut Vec<f64>) {
        out.clear();
        let taps = 2 * self.half;
        out.extend((0..taps).map(|j| self.eval(frac + (self.half - 1) as f64 - j as f64)));
        let sum: f64 = out.iter().sum();
        if sum != 0.0 {
            for w in out.iter_mut() {
                *w /= sum;
            }
        }
    }
}

/// Converts mono audio to `target_rate`.
///
/// Output length is `round(len · target / native)`. Input at the target rate
/// is passed through untouched. Results are clamped to `[-1, 1]`.
pub fn resample(raw: &RawAudio, target_rate: u32) -> Result<AudioClip> {
    if raw.channels.len() != 1 {
        return Err(invalid!(
            "resampling needs mono input, got {} channels",
            raw.channels.len()
        ));
    }
    if target_rate == 0 || raw.sample_rate == 0 {
        return Err(invalid!("sample rates must be positive"));
    }
    let input = &raw.channels[0];
    if raw.sample_rate == target_rate {
        return AudioClip::new(input.clone(), target_rate);
    }

    let native = raw.sample_rate as u64;
    let target = target_rate as u64;
    let g = gcd(native, target);
    let (up, down) = (target / g, native / g);
    let out_len =
        ((input.len() as u128 * target as u128 + native as u128 / 2) / native as u128) as usize;

    let ratio = (target as f64 / native as f64).min(1.0);
    let half = libm::ceil(HALF_LOBES as f64 / ratio) as usize;
    let kernel = Kernel {
        cutoff: 0.5 * ratio * ROLLOFF,
        half,
        i0_beta: bessel_i0(KAISER_BETA),
    };
    let taps = 2 * half;

    let table: Option<Vec<f64>> = (up <= MAX_TABLE_PHASES).then(|| {
        let mut flat = Vec::with_capacity(up as usize * taps);
        let mut row = Vec::with_capacity(taps);
        for p in 0..up {
            kernel.taps(p as f64 / up as f64, &mut row);
            flat.extend_from_slice(&row);
        }
        flat
    });

    let mut scratch = Vec::with_capacity(taps);
    let mut output = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let pos = n * down;
        let i = (pos / up) as i64;
        let phase = (pos % up) as usize;
        let weights: &[f64] = match &table {
            Some(t) => &t[phase * taps..(phase + 1) * taps],
            None => {
                kernel.taps(phase as f64 / up as f64, &mut scratch);
                &scratch
            }
        };
        let first = i - half as i64 + 1;
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            let k = first + j as i64;
            if k >= 0 && (k as usize) < input.len() {
                acc += w * input[k as usize];
            }
        }
        output.push(acc);
    }
    AudioClip::new(output, target_rate)
}
