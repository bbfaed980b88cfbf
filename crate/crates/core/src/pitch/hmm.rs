//! Banded two-layer HMM (voiced pitch bins + mirrored unvoiced bins) and
//! its Viterbi decoder.

use alloc::vec;
use alloc::vec::Vec;

const TINY: f64 = f64::MIN_POSITIVE;

fn ln(p: f64) -> f64 {
    libm::log(p + TINY)
}

/// Transition model over `2 · n_bins` states. A state's pitch bin may move by
/// at most `half_width` bins per frame with triangular preference; the voicing
/// layer flips with probability `switch_prob`.
pub(crate) struct PitchHmm {
    n_bins: usize,
    half_width: usize,
    /// `ln T[b][b + d]` at index `b * (2h+1) + (d + h)`.
    log_local: Vec<f64>,
    log_stay: f64,
    log_switch: f64,
}

impl PitchHmm {
    pub(crate) fn new(n_bins: usize, half_width: usize, switch_prob: f64) -> Self {
        let width = 2 * half_width + 1;
        let tri: Vec<f64> = (0..width)
            .map(|i| {
                let d = (i as f64 - half_width as f64).abs();
                1.0 - d / (half_width as f64 + 1.0)
            })
            .collect();
        let mut log_local = vec![f64::NEG_INFINITY; n_bins * width];
        for b in 0..n_bins {
            let valid = |i: usize| {
                let target = b as isize + i as isize - half_width as isize;
                target >= 0 && (target as usize) < n_bins
            };
            let total: f64 = (0..width).filter(|&i| valid(i)).map(|i| tri[i]).sum();
            for i in (0..width).filter(|&i| valid(i)) {
                log_local[b * width + i] = ln(tri[i] / total);
            }
        }
        PitchHmm {
            n_bins,
            half_width,
            log_local,
            log_stay: ln(1.0 - switch_prob),
            log_switch: ln(switch_prob),
        }
    }

    pub(crate) fn n_states(&self) -> usize {
        2 * self.n_bins
    }

    /// Most likely state sequence. `emissions` holds one `n_states` column of
    /// probabilities per frame; the initial distribution is uniform. Ties go
    /// to the lowest state index.
    pub(crate) fn decode(&self, emissions: &[Vec<f64>]) -> Vec<usize> {
        let n_states = self.n_states();
        let n_frames = emissions.len();
        if n_frames == 0 {
            return Vec::new();
        }
        let width = 2 * self.half_width + 1;
        let h = self.half_width as isize;
        let init = ln(1.0 / n_states as f64);

        let mut score: Vec<f64> = emissions[0].iter().map(|&p| init + ln(p)).collect();
        let mut next = vec![0.0; n_states];
        let mut back = vec![0u32; n_frames * n_states];

        for (t, column) in emissions.iter().enumerate().skip(1) {
            for to in 0..n_states {
                let (to_layer, to_bin) = (to / self.n_bins, to % self.n_bins);
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0usize;
                for from_layer in 0..2 {
                    let layer_cost = if from_layer == to_layer {
                        self.log_stay
                    } else {
                        self.log_switch
                    };
                    let lo = (to_bin as isize - h).max(0) as usize;
                    let hi = (to_bin as isize + h).min(self.n_bins as isize - 1) as usize;
                    for from_bin in lo..=hi {
                        let offset = (to_bin as isize - from_bin as isize + h) as usize;
                        let from = from_layer * self.n_bins + from_bin;
                        let s =
                            score[from] + layer_cost + self.log_local[from_bin * width + offset];
                        if s > best {
                            best = s;
                            arg = from;
                        }
                    }
                }
                next[to] = best + ln(column[to]);
                back[t * n_states + to] = arg as u32;
            }
            core::mem::swap(&mut score, &mut next);
        }

        let mut state = (0..n_states)
            .fold((0usize, f64::NEG_INFINITY), |(bi, bs), i| {
                if score[i] > bs {
                    (i, score[i])
                } else {
                    (bi, bs)
                }
            })
            .0;
        let mut path = vec![0usize; n_frames];
        for t in (0..n_frames).rev() {
            path[t] = state;
            if t > 0 {
                state = back[t * n_states + state] as usize;
            }
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_normalized() {
        let hmm = PitchHmm::new(10, 2, 0.01);
        for b in 0..10 {
            let total: f64 = hmm.log_local[b * 5..(b + 1) * 5]
                .iter()
                .filter(|v| v.is_finite())
                .map(|&v| libm::exp(v))
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn follows_observations_and_smooths_glitch() {
        let hmm = PitchHmm::new(20, 3, 0.01);
        let mut frames = Vec::new();
        for t in 0..12 {
            let mut col = vec![0.0; 40];
            // steady bin 8 with a one-frame outlier far away
            let bin = if t == 6 { 18 } else { 8 };
            col[bin] = 0.9;
            col[20..].fill(0.1 / 20.0);
            frames.push(col);
        }
        let path = hmm.decode(&frames);
        // the outlier is out of reach in one frame, so the path detours
        // through the unvoiced layer instead of jumping
        assert!(
            path.iter().enumerate().all(|(t, &s)| t == 6 || s == 8),
            "{path:?}"
        );
        assert!(path[6] >= 20);
    }

    #[test]
    fn silence_decodes_unvoiced() {
        let hmm = PitchHmm::new(5, 1, 0.01);
        let frames = vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.2, 0.2, 0.2, 0.2]; 6];
        assert!(hmm.decode(&frames).iter().all(|&s| s >= 5));
    }
}
