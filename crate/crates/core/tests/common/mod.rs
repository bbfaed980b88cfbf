#![allow(dead_code)]

use std::f64::consts::PI;

use erakit_core::audio::AudioClip;

pub const SR: u32 = 22050;

pub fn sine(freq: f64, amp: f64, secs: f64) -> Vec<f64> {
    let n = (SR as f64 * secs).round() as usize;
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / SR as f64).sin())
        .collect()
}

pub fn clip(samples: Vec<f64>) -> AudioClip {
    AudioClip::new(samples, SR).unwrap()
}

pub fn cents(f: f64, reference: f64) -> f64 {
    1200.0 * (f / reference).log2()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
