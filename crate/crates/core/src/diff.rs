//! Signed contrast amplification of filtered difference images and the
//! one-call scene/reference analysis.

use crate::error::{Error, Result};
use crate::filter::{build_kernel, spatial_filter};
use crate::image::{subtract, FloatImage, Mask};
use crate::params::AnalysisParams;

/// The positive and negative parts of a filtered difference image, each
/// rescaled so its largest sample is exactly 1.
///
/// `d_minus` holds magnitudes: its samples are `|min(D, 0)|` times the gain,
/// so both images lie in `[0, 1]`. A side whose extreme is at or below the
/// zero floor is *degenerate*: its image is all zeros and its gain is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplifiedPair {
    pub d_plus: FloatImage,
    pub d_minus: FloatImage,
    pub gain_plus: f64,
    pub gain_minus: f64,
    pub degenerate_plus: bool,
    pub degenerate_minus: bool,
}

impl AmplifiedPair {
    /// Location `(channel, x, y)` of the brightest `d_plus` sample, or `None`
    /// when the positive side is degenerate.
    pub fn argmax_plus(&self) -> Option<(usize, usize, usize)> {
        (!self.degenerate_plus).then(|| self.d_plus.argmax().1)
    }

    pub fn argmax_minus(&self) -> Option<(usize, usize, usize)> {
        (!self.degenerate_minus).then(|| self.d_minus.argmax().1)
    }
}

/// Splits `filtered` into gain-normalized positive and negative parts.
///
/// A single gain per side is computed jointly over all channels so the
/// relative color balance of the difference survives amplification.
pub fn amplify_split(filtered: &FloatImage, zero_floor: f64) -> Result<AmplifiedPair> {
    amplify_split_masked(filtered, None, zero_floor)
}

/// As [`amplify_split`], restricted to pixels where `valid` is set. Invalid
/// pixels do not take part in the extrema and are zero in both outputs.
pub fn amplify_split_masked(
    filtered: &FloatImage,
    valid: Option<&Mask>,
    zero_floor: f64,
) -> Result<AmplifiedPair> {
    if !filtered.is_finite() {
        return Err(Error::Data(
            "difference image contains non-finite samples".into(),
        ));
    }
    if let Some(m) = valid {
        if !m.matches(filtered) {
            return Err(Error::Shape("validity mask does not match image".into()));
        }
    }
    let plane = filtered.plane_len();
    let is_valid = |i: usize| valid.is_none_or(|m| m.bits()[i % plane]);

    let mut max_pos = 0.0f64;
    let mut max_neg = 0.0f64;
    for (i, &v) in filtered.samples().iter().enumerate() {
        if is_valid(i) {
            max_pos = max_pos.max(v);
            max_neg = max_neg.max(-v);
        }
    }

    let (w, h, c) = filtered.shape();
    let side = |extreme: f64, sign: f64| -> Result<(FloatImage, f64, bool)> {
        if extreme <= zero_floor {
            return Ok((FloatImage::zeros(w, h, c)?, 0.0, true));
        }
        let data = filtered
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = sign * v;
                // dividing by the extreme itself makes the peak exactly 1
                if is_valid(i) && v > 0.0 {
                    v / extreme
                } else {
                    0.0
                }
            })
            .collect();
        Ok((FloatImage::new(w, h, c, data)?, 1.0 / extreme, false))
    };

    let (d_plus, gain_plus, degenerate_plus) = side(max_pos, 1.0)?;
    let (d_minus, gain_minus, degenerate_minus) = side(max_neg, -1.0)?;
    Ok(AmplifiedPair {
        d_plus,
        d_minus,
        gain_plus,
        gain_minus,
        degenerate_plus,
        degenerate_minus,
    })
}

/// The spatially filtered difference `D = (p - p_r) ⋆ G_σ`, or the raw
/// difference when `params.sigma` is 0.
pub fn filtered_difference(
    p: &FloatImage,
    p_r: &FloatImage,
    params: &AnalysisParams,
) -> Result<FloatImage> {
    params.validate()?;
    let d = subtract(p, p_r)?;
    if !d.is_finite() {
        return Err(Error::Data("input images contain non-finite samples".into()));
    }
    if params.filters_spatially() {
        Ok(spatial_filter(&d, &build_kernel(params)?))
    } else {
        Ok(d)
    }
}

/// Full pair analysis: subtract, filter, amplify.
pub fn analyze_pair(
    p: &FloatImage,
    p_r: &FloatImage,
    params: &AnalysisParams,
) -> Result<AmplifiedPair> {
    let filtered = filtered_difference(p, p_r, params)?;
    amplify_split(&filtered, params.zero_floor)
}
