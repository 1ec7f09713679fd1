//! Separable Gaussian filtering with symmetric (mirror) boundaries.
//!
//! Both passes compute every output sample as a sum over kernel taps taken
//! in a fixed order, so results are bit-identical whatever the number of
//! rayon workers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{FloatImage, Mask};
use crate::params::AnalysisParams;

/// A truncated, normalized 1-D Gaussian applied along both image axes.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "gaussian sigma must be > 0, got {sigma}"
            )));
        }
        if radius == 0 {
            return Err(Error::Parameter("kernel radius must be >= 1".into()));
        }
        let r = radius as isize;
        let mut weights: Vec<f64> = (-r..=r)
            .map(|j| (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            sigma,
            radius,
            weights,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// The `2 * radius + 1` taps, index `radius` being the center.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w²` over the full 2-D kernel (the outer product of the taps).
    ///
    /// Filtering i.i.d. noise of standard deviation `s` leaves noise of
    /// standard deviation `s * sqrt(squared_norm_2d())`.
    pub fn squared_norm_2d(&self) -> f64 {
        let s: f64 = self.weights.iter().map(|w| w * w).sum();
        s * s
    }
}

/// Builds the kernel described by `params`.
pub fn build_kernel(params: &AnalysisParams) -> Result<GaussianKernel> {
    if !(params.sigma > 0.0) {
        return Err(Error::Parameter(format!(
            "gaussian sigma must be > 0, got {}",
            params.sigma
        )));
    }
    GaussianKernel::new(params.sigma, params.radius())
}

/// Maps a possibly out-of-range coordinate into `[0, n)` by symmetric
/// reflection about the edges (`-1 -> 0`, `-2 -> 1`, `n -> n - 1`).
pub fn mirror_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Convolves every channel with the Gaussian kernel.
///
/// Output dimensions equal input dimensions; samples beyond the borders are
/// taken from the mirror-reflected image.
pub fn spatial_filter(image: &FloatImage, kernel: &GaussianKernel) -> FloatImage {
    let (w, h, c) = image.shape();
    let mut out = FloatImage::zeros(w, h, c).expect("shape already validated");
    for ch in 0..c {
        filter_plane(image.plane(ch), out.plane_mut(ch), w, h, kernel);
    }
    out
}

/// Mask-aware Gaussian filtering by weight renormalization.
///
/// Each output sample is `conv(image · mask) / conv(mask)`, so invalid
/// pixels never contribute. Where no valid pixel falls inside the kernel
/// support the output is 0. Returns the filtered image together with the
/// per-pixel normalization weight `conv(mask)`.
pub fn masked_spatial_filter(
    image: &FloatImage,
    valid: &Mask,
    kernel: &GaussianKernel,
) -> Result<(FloatImage, Vec<f64>)> {
    if !valid.matches(image) {
        return Err(Error::Shape(format!(
            "mask is {}x{}, image is {}x{}",
            valid.width(),
            valid.height(),
            image.width(),
            image.height()
        )));
    }
    let (w, h, c) = image.shape();
    let mask_plane: Vec<f64> = valid.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    let mut support = vec![0.0; w * h];
    filter_plane(&mask_plane, &mut support, w, h, kernel);

    let mut out = FloatImage::zeros(w, h, c)?;
    let mut masked = vec![0.0; w * h];
    for ch in 0..c {
        for ((m, &v), &b) in masked.iter_mut().zip(image.plane(ch)).zip(valid.bits()) {
            *m = if b { v } else { 0.0 };
        }
        let plane = out.plane_mut(ch);
        filter_plane(&masked, plane, w, h, kernel);
        for (o, &s) in plane.iter_mut().zip(&support) {
            *o = if s > 0.0 { *o / s } else { 0.0 };
        }
    }
    Ok((out, support))
}

fn filter_plane(src: &[f64], dst: &mut [f64], w: usize, h: usize, kernel: &GaussianKernel) {
    let taps = kernel.weights();
    let r = kernel.radius();

    // Horizontal pass into a scratch plane.
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let row = &src[y * w..(y + 1) * w];
        let padded: Vec<f64> = (0..w + 2 * r)
            .map(|i| row[mirror_index(i as isize - r as isize, w)])
            .collect();
        for (t, &wt) in taps.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(&padded[t..t + w]) {
                *o += wt * v;
            }
        }
    });

    // Vertical pass, one output row at a time.
    dst.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        out.fill(0.0);
        for (t, &wt) in taps.iter().enumerate() {
            let sy = mirror_index(y as isize + t as isize - r as isize, h);
            for (o, &v) in out.iter_mut().zip(&tmp[sy * w..(sy + 1) * w]) {
                *o += wt * v;
            }
        }
    });
}
