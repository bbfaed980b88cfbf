//! Radix-2 complex FFT.
//!
//! Only power-of-two sizes are supported. Callers that need another length
//! zero-pad up to the next power of two.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::error::invalid;
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Precomputed twiddles and bit-reversal permutation for one FFT size.
#[derive(Debug, Clone)]
pub struct Fft {
    size: usize,
    twiddles: Vec<Complex>,
    reversed: Vec<usize>,
}

impl Fft {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(invalid!("FFT size {size} is not a power of two"));
        }
        let twiddles = (0..size / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / size as f64;
                Complex::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = size.trailing_zeros();
        let reversed = (0..size)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Ok(Fft {
            size,
            twiddles,
            reversed,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// In-place forward transform, `X_k = Σ x_n e^{-2πikn/N}` (unscaled).
    pub fn forward(&self, buf: &mut [Complex]) {
        assert_eq!(buf.len(), self.size, "buffer length must equal FFT size");
        for i in 0..self.size {
            let j = self.reversed[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.size {
            let half = len / 2;
            let stride = self.size / len;
            for start in (0..self.size).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// In-place inverse transform, scaled by `1/N`.
    pub fn inverse(&self, buf: &mut [Complex]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.size as f64;
        for z in buf.iter_mut() {
            *z = Complex::new(z.re * scale, -z.im * scale);
        }
    }

    /// Transforms real input (zero-padded to the FFT size) and returns the
    /// `N/2 + 1` non-negative-frequency bin powers `|X_k|²`.
    pub fn power_spectrum(&self, input: &[f64], scratch: &mut Vec<Complex>, out: &mut [f64]) {
        assert!(input.len() <= self.size);
        assert_eq!(out.len(), self.size / 2 + 1);
        scratch.clear();
        scratch.extend(input.iter().map(|&x| Complex::new(x, 0.0)));
        scratch.resize(self.size, Complex::ZERO);
        self.forward(scratch);
        for (o, z) in out.iter_mut().zip(scratch.iter()) {
            *o = z.norm_sqr();
        }
    }
}
