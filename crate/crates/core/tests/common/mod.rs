//! Brute-force reference implementations, independent of the library's
//! separable and vectorized paths.
#![allow(dead_code)]

use dif_core::FloatImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize, lo: f64, hi: f64) -> FloatImage {
    FloatImage::from_fn(w, h, c, |_, _, _| rng.random_range(lo..hi)).unwrap()
}

/// Symmetric reflection written as an explicit bounce loop.
pub fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// 1-D Gaussian taps evaluated directly.
pub fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Dense 2-D convolution with the outer-product kernel, O(W·H·K²).
pub fn dense_convolve(img: &FloatImage, sigma: f64, radius: usize) -> FloatImage {
    let taps = gaussian_taps(sigma, radius);
    let r = radius as isize;
    let (w, h, c) = img.shape();
    FloatImage::from_fn(w, h, c, |ch, x, y| {
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let k = taps[(dy + r) as usize] * taps[(dx + r) as usize];
                let sx = reflect(x as isize + dx, w);
                let sy = reflect(y as isize + dy, h);
                acc += k * img.get(ch, sx, sy);
            }
        }
        acc
    })
    .unwrap()
}

/// Element-wise positive/negative amplification with gains from global extrema.
pub fn amplify_oracle(d: &FloatImage) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let mut max_pos: f64 = 0.0;
    let mut min_neg: f64 = 0.0;
    for &v in d.samples() {
        if v > max_pos {
            max_pos = v;
        }
        if v < min_neg {
            min_neg = v;
        }
    }
    let a_plus = 1.0 / max_pos;
    let a_minus = 1.0 / -min_neg;
    let plus = d.samples().iter().map(|&v| a_plus * v.max(0.0)).collect();
    let minus = d.samples().iter().map(|&v| -(a_minus * v.min(0.0))).collect();
    (plus, minus, a_plus, a_minus)
}

pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
