//! Probabilistic YIN pitch tracking.
//!
//! Each frame's cumulative-mean-normalized difference function is scanned
//! for troughs under a family of thresholds whose prior is a Beta
//! distribution. Troughs collect probability mass (earlier troughs favoured
//! by a Boltzmann prior), are mapped onto a fine log-frequency grid, and a
//! Viterbi pass over pitch states plus a mirrored unvoiced layer picks a
//! smooth contour and the voicing decisions.

mod hmm;
mod yin;

use alloc::vec;
use alloc::vec::Vec;

use crate::audio::AudioClip;
use crate::dsp::{centered_frame, frame_count};
use crate::error::invalid;
use crate::{Error, Result};

use hmm::PitchHmm;
pub use yin::cmnd;
use yin::{parabolic_shifts, troughs, DifferenceKernel};

/// Pitch tracker settings. Defaults span C2–C7.
#[derive(Debug, Clone, PartialEq)]
pub struct PyinParams {
    pub fmin: f64,
    pub fmax: f64,
    pub frame_length: usize,
    pub hop: usize,
    pub n_thresholds: usize,
    /// Integer shape parameters `(a, b)` of the threshold prior.
    pub beta_shape: (u32, u32),
    pub boltzmann: f64,
    /// Mass given to the global minimum for thresholds no trough falls under.
    pub no_trough_prob: f64,
    pub bins_per_semitone: usize,
    /// Largest pitch move per frame the transition model allows.
    pub max_transition_cents: f64,
    pub switch_prob: f64,
}

impl Default for PyinParams {
    fn default() -> Self {
        PyinParams {
            fmin: 65.4,
            fmax: 2093.0,
            frame_length: crate::dsp::DEFAULT_FRAME_LENGTH,
            hop: crate::dsp::DEFAULT_HOP,
            n_thresholds: 100,
            beta_shape: (2, 18),
            boltzmann: 2.0,
            no_trough_prob: 0.01,
            bins_per_semitone: 20,
            max_transition_cents: 35.0,
            switch_prob: 0.01,
        }
    }
}

/// Per-frame pitch estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    /// Hz on voiced frames, NaN on unvoiced ones.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub voiced_prob: Vec<f64>,
    pub hop: usize,
    pub frame_length: usize,
    pub sample_rate: u32,
}

impl F0Track {
    pub fn n_frames(&self) -> usize {
        self.voiced.len()
    }

    pub fn n_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            0.0
        } else {
            self.n_voiced() as f64 / self.voiced.len() as f64
        }
    }

    /// f0 of voiced frames only, in frame order.
    pub fn voiced_f0(&self) -> Vec<f64> {
        self.f0_hz
            .iter()
            .zip(&self.voiced)
            .filter(|(_, &v)| v)
            .map(|(&f, _)| f)
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Regularized incomplete beta `I_x(a, b)` for positive integer shapes.
fn beta_cdf_integer(x: f64, a: u32, b: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let n = a + b - 1;
    (a..=n)
        .map(|j| binomial(n, j) * libm::pow(x, j as f64) * libm::pow(1.0 - x, (n - j) as f64))
        .sum()
}

/// Probability of each of `n_thresholds` equal-width threshold bins on (0, 1].
fn threshold_prior(n_thresholds: usize, (a, b): (u32, u32)) -> Vec<f64> {
    let cdf: Vec<f64> = (0..=n_thresholds)
        .map(|i| beta_cdf_integer(i as f64 / n_thresholds as f64, a, b))
        .collect();
    cdf.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Truncated geometric (Boltzmann) pmf of rank `k` among `n`.
fn boltzmann_pmf(k: usize, lambda: f64, n: usize) -> f64 {
    (1.0 - libm::exp(-lambda)) * libm::exp(-lambda * k as f64)
        / (1.0 - libm::exp(-lambda * n as f64))
}

struct Grid {
    tau_min: usize,
    tau_max: usize,
    n_bins: usize,
    bins_per_octave: f64,
}

impl Grid {
    fn new(p: &PyinParams, sample_rate: u32) -> Result<Self> {
        let sr = sample_rate as f64;
        if !(p.fmin > 0.0 && p.fmin < p.fmax) {
            return Err(Error::Config(alloc::format!(
                "pitch range must satisfy 0 < fmin < fmax, got {}..{}",
                p.fmin,
                p.fmax
            )));
        }
        if p.fmax > sr / 2.0 {
            return Err(Error::Config(alloc::format!(
                "fmax {} exceeds Nyquist {}",
                p.fmax,
                sr / 2.0
            )));
        }
        if p.hop == 0 || p.n_thresholds == 0 || p.bins_per_semitone == 0 {
            return Err(Error::Config(
                "hop, thresholds and bins per semitone must be positive".into(),
            ));
        }
        if p.beta_shape.0 == 0 || p.beta_shape.1 == 0 {
            return Err(Error::Config(
                "beta shape parameters must be positive".into(),
            ));
        }
        let tau_min = (libm::floor(sr / p.fmax) as usize).max(1);
        let tau_max = libm::ceil(sr / p.fmin) as usize;
        if 2 * tau_max > p.frame_length {
            return Err(Error::Config(alloc::format!(
                "frame length {} cannot hold two periods of fmin {} Hz ({} samples each)",
                p.frame_length,
                p.fmin,
                tau_max
            )));
        }
        if tau_min + 2 > tau_max {
            return Err(Error::Config(
                "pitch range too narrow for this sample rate".into(),
            ));
        }
        let bins_per_octave = 12.0 * p.bins_per_semitone as f64;
        let n_bins = libm::floor(bins_per_octave * libm::log2(p.fmax / p.fmin)) as usize + 1;
        Ok(Grid {
            tau_min,
            tau_max,
            n_bins,
            bins_per_octave,
        })
    }

    fn bin_of(&self, f0: f64, fmin: f64) -> usize {
        let b = libm::round(self.bins_per_octave * libm::log2(f0 / fmin));
        b.clamp(0.0, (self.n_bins - 1) as f64) as usize
    }

    fn freq_of(&self, bin: usize, fmin: f64) -> f64 {
        fmin * libm::exp2(bin as f64 / self.bins_per_octave)
    }
}

/// Trough probabilities for one frame's `d′` restricted to the lag range.
/// Returns `(index into yin, probability)` pairs.
fn trough_probabilities(yin: &[f64], prior: &[f64], p: &PyinParams) -> Vec<(usize, f64)> {
    let idx = troughs(yin);
    if idx.is_empty() {
        return Vec::new();
    }
    let n_thr = prior.len();
    let mut probs = vec![0.0; idx.len()];
    for (j, &beta) in prior.iter().enumerate() {
        let threshold = (j + 1) as f64 / n_thr as f64;
        let below: Vec<usize> = (0..idx.len())
            .filter(|&i| yin[idx[i]] < threshold)
            .collect();
        for (rank, &i) in below.iter().enumerate() {
            probs[i] += boltzmann_pmf(rank, p.boltzmann, below.len()) * beta;
        }
    }
    let global_min = (0..idx.len())
        .min_by(|&a, &b| yin[idx[a]].total_cmp(&yin[idx[b]]))
        .expect("non-empty");
    let min_height = yin[idx[global_min]];
    let unreached: f64 = prior
        .iter()
        .enumerate()
        .filter(|(j, _)| min_height >= (j + 1) as f64 / n_thr as f64)
        .map(|(_, &b)| b)
        .sum();
    probs[global_min] += p.no_trough_prob * unreached;
    idx.into_iter()
        .zip(probs)
        .filter(|&(_, pr)| pr > 0.0)
        .collect()
}

/// Tracks f0 over a clip.
///
/// Frames are centered and reflect-padded like the spectral features, so
/// the track has `1 + len / hop` frames. Decoding is deterministic.
pub fn pyin_track(clip: &AudioClip, params: &PyinParams) -> Result<F0Track> {
    if clip.len() < params.frame_length {
        return Err(invalid!(
            "clip of {} samples is shorter than one {}-sample frame",
            clip.len(),
            params.frame_length
        ));
    }
    let sr = clip.sample_rate();
    let grid = Grid::new(params, sr)?;
    if params.hop > params.frame_length {
        return Err(invalid!(
            "hop {} exceeds frame length {}",
            params.hop,
            params.frame_length
        ));
    }
    let prior = threshold_prior(params.n_thresholds, params.beta_shape);
    let n_frames = frame_count(clip.len(), params.frame_length, params.hop);
    let n_bins = grid.n_bins;

    let mut kernel = DifferenceKernel::new(params.frame_length)?;
    let mut frame = vec![0.0; params.frame_length];
    let mut d = Vec::with_capacity(grid.tau_max + 1);
    let mut emissions = Vec::with_capacity(n_frames);
    let mut voiced_prob = Vec::with_capacity(n_frames);

    for t in 0..n_frames {
        centered_frame(clip.samples(), t, params.hop, &mut frame);
        kernel.cmnd(&frame, grid.tau_max, &mut d)?;
        let yin = &d[grid.tau_min..=grid.tau_max];
        let shifts = parabolic_shifts(yin);
        let mut column = vec![0.0; 2 * n_bins];
        for (i, prob) in trough_probabilities(yin, &prior, params) {
            let period = (grid.tau_min + i) as f64 + shifts[i];
            column[grid.bin_of(sr as f64 / period, params.fmin)] += prob;
        }
        let vp = column[..n_bins].iter().sum::<f64>().clamp(0.0, 1.0);
        let unvoiced = (1.0 - vp) / n_bins as f64;
        for u in &mut column[n_bins..] {
            *u = unvoiced;
        }
        emissions.push(column);
        voiced_prob.push(vp);
    }

    let cents_per_bin = 100.0 / params.bins_per_semitone as f64;
    let half_width = libm::round(params.max_transition_cents / cents_per_bin).max(0.0) as usize;
    let hmm = PitchHmm::new(n_bins, half_width, params.switch_prob);
    let path = hmm.decode(&emissions);

    let voiced: Vec<bool> = path.iter().map(|&s| s < n_bins).collect();
    let f0_hz = path
        .iter()
        .map(|&s| {
            if s < n_bins {
                grid.freq_of(s, params.fmin)
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(F0Track {
        f0_hz,
        voiced,
        voiced_prob,
        hop: params.hop,
        frame_length: params.frame_length,
        sample_rate: sr,
    })
}
