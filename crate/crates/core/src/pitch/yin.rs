//! Cumulative-mean-normalized difference function and trough refinement.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::fft::{Complex, Fft};
use crate::Result;

/// Difference values below this fraction of the compared energies are
/// treated as exact zeros (FFT round-off).
const ZERO_TOLERANCE: f64 = 1e-11;

/// Reusable FFT plan and buffers for one frame length.
pub(crate) struct DifferenceKernel {
    fft: Fft,
    head: Vec<Complex>,
    full: Vec<Complex>,
    prefix: Vec<f64>,
}

impl DifferenceKernel {
    pub(crate) fn new(frame_length: usize) -> Result<Self> {
        let size = frame_length.next_power_of_two();
        Ok(DifferenceKernel {
            fft: Fft::new(size)?,
            head: Vec::with_capacity(size),
            full: Vec::with_capacity(size),
            prefix: Vec::with_capacity(frame_length + 1),
        })
    }

    /// Writes `d′(τ)` for `τ = 0..=tau_max` into `out`, with `d′(0) = 1`.
    pub(crate) fn cmnd(&mut self, frame: &[f64], tau_max: usize, out: &mut Vec<f64>) -> Result<()> {
        if tau_max == 0 || frame.len() < 2 * tau_max {
            return Err(invalid!(
                "frame of {} samples is too short for lag {tau_max}",
                frame.len()
            ));
        }
        if frame.len() > self.fft.size() {
            return Err(invalid!("frame longer than the planned FFT"));
        }
        let width = frame.len() - tau_max;
        let size = self.fft.size();

        // c(τ) = Σ_{j<W} x_j x_{j+τ} via circular correlation; no wrap because
        // j + τ < len ≤ size.
        self.head.clear();
        self.head
            .extend(frame[..width].iter().map(|&x| Complex::new(x, 0.0)));
        self.head.resize(size, Complex::ZERO);
        self.full.clear();
        self.full
            .extend(frame.iter().map(|&x| Complex::new(x, 0.0)));
        self.full.resize(size, Complex::ZERO);
        self.fft.forward(&mut self.head);
        self.fft.forward(&mut self.full);
        for (h, f) in self.head.iter_mut().zip(&self.full) {
            *h = h.conj() * *f;
        }
        self.fft.inverse(&mut self.head);

        self.prefix.clear();
        self.prefix.push(0.0);
        let mut acc = 0.0;
        for &x in frame {
            acc += x * x;
            self.prefix.push(acc);
        }
        let e0 = self.prefix[width];

        out.clear();
        out.push(1.0);
        let mut running = 0.0;
        for tau in 1..=tau_max {
            let e_tau = self.prefix[tau + width] - self.prefix[tau];
            let mut d = e0 + e_tau - 2.0 * self.head[tau].re;
            if d <= ZERO_TOLERANCE * (e0 + e_tau) {
                d = 0.0;
            }
            running += d;
            out.push(if running > 0.0 {
                d * tau as f64 / running
            } else {
                1.0
            });
        }
        Ok(())
    }
}

/// Cumulative-mean-normalized difference function of one frame.
///
/// Uses the first `frame.len() - tau_max` samples as the comparison window
/// and returns `tau_max + 1` values indexed by lag, where index 0 holds the
/// conventional `d′(0) = 1`. Lags whose running difference sum is zero (a
/// constant or silent frame) also give 1.
pub fn cmnd(frame: &[f64], tau_max: usize) -> Result<Vec<f64>> {
    let mut kernel = DifferenceKernel::new(frame.len().max(1))?;
    let mut out = vec![];
    kernel.cmnd(frame, tau_max, &mut out)?;
    Ok(out)
}

/// Parabolic-vertex offset at each interior index; zero at the ends and
/// wherever the fitted vertex would land outside `(-1, 1)`.
pub(crate) fn parabolic_shifts(x: &[f64]) -> Vec<f64> {
    let mut shifts = vec![0.0; x.len()];
    for i in 1..x.len().saturating_sub(1) {
        let a = x[i + 1] + x[i - 1] - 2.0 * x[i];
        let b = 0.5 * (x[i + 1] - x[i - 1]);
        if b.abs() < a.abs() {
            shifts[i] = -b / a;
        }
    }
    shifts
}

/// Local minima: strictly below the left neighbour and not above the right.
/// The first point counts when it is below the second; the last point when
/// it is below the one before it.
pub(crate) fn troughs(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    (0..n)
        .filter(|&i| match (i, n) {
            (_, 1) => false,
            (0, _) => x[0] < x[1],
            (i, n) if i == n - 1 => x[i] < x[i - 1],
            (i, _) => x[i] < x[i - 1] && x[i] <= x[i + 1],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(W·τ) evaluation of the same definition.
    fn brute_force_cmnd(frame: &[f64], tau_max: usize) -> Vec<f64> {
        let w = frame.len() - tau_max;
        let d: Vec<f64> = (0..=tau_max)
            .map(|tau| {
                (0..w)
                    .map(|j| {
                        let e = frame[j] - frame[j + tau];
                        e * e
                    })
                    .sum()
            })
            .collect();
        let mut out = vec![1.0];
        let mut running = 0.0;
        for (tau, &dt) in d.iter().enumerate().skip(1) {
            running += dt;
            out.push(if running > 0.0 {
                dt * tau as f64 / running
            } else {
                1.0
            });
        }
        out
    }

    fn sine(freq: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| libm::sin(2.0 * PI * freq * i as f64 / 22050.0))
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frame: Vec<f64> = sine(310.0, 700)
            .iter()
            .map(|s| 0.6 * s + rng.random_range(-0.1..0.1))
            .collect();
        let fast = cmnd(&frame, 300).unwrap();
        let slow = brute_force_cmnd(&frame, 300);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn hundred_hz_minimum_at_period() {
        let frame = sine(100.0, 2048);
        let d = cmnd(&frame, 400).unwrap();
        let oracle = brute_force_cmnd(&frame, 400);
        let argmin = |v: &[f64]| (1..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        // Restrict to one period's worth of lags so the 2× period trough is excluded.
        assert!([220, 221].contains(&argmin(&d[..300])));
        assert!([220, 221].contains(&argmin(&oracle[..300])));
    }

    #[test]
    fn constant_frame_is_all_ones() {
        let d = cmnd(&[0.3; 1024], 400).unwrap();
        assert_eq!(d.len(), 401);
        assert!(d.iter().all(|&v| v == 1.0));
        assert!(cmnd(&[0.0; 1024], 400).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn white_noise_has_no_deep_trough() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let frame: Vec<f64> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = cmnd(&frame, 337).unwrap();
            let min = d[1..].iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min > 0.3, "min {min}");
        }
    }

    #[test]
    fn rejects_short_frame() {
        assert!(cmnd(&[0.0; 100], 51).is_err());
        assert!(cmnd(&[0.0; 100], 0).is_err());
    }

    #[test]
    fn parabola_vertex_recovered() {
        let x: Vec<f64> = (0..5)
            .map(|i| (i as f64 - 2.3) * (i as f64 - 2.3))
            .collect();
        let s = parabolic_shifts(&x);
        assert!((s[2] - 0.3).abs() < 1e-12);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[4], 0.0);
    }

    #[test]
    fn trough_detection_edges() {
        assert_eq!(troughs(&[0.5, 0.6, 0.2, 0.2, 0.9, 0.1]), vec![0, 2, 5]);
        assert_eq!(troughs(&[1.0]), Vec::<usize>::new());
    }
}
