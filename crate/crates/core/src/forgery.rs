//! Split-based consistency check for suspected forgeries.
//!
//! The suspect region (`p''`) is cut out of the scene and everything else
//! (`p'`) is analyzed against the reference with mask-aware filtering, so
//! the forged pixels can neither dominate the amplification nor leak into
//! the filtered evidence. The chromaticity of the recovered positive
//! evidence is then compared with the chromaticity of the suspect region.

use std::fmt;

use crate::color::{mean_chroma, Chroma};
use crate::diff::{amplify_split_masked, AmplifiedPair};
use crate::error::{Error, Result};
use crate::filter::{build_kernel, masked_spatial_filter, spatial_filter};
use crate::image::{subtract, FloatImage, Mask};
use crate::params::AnalysisParams;

/// The suspect region of an image.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionSpec {
    Rect {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
    },
    Mask(Mask),
}

impl RegionSpec {
    /// The region as a pixel mask over a `width × height` image.
    pub fn to_mask(&self, width: usize, height: usize) -> Result<Mask> {
        let mask = match self {
            RegionSpec::Rect { x, y, w, h } => {
                if *w == 0 || *h == 0 {
                    return Err(Error::Parameter("query rectangle is empty".into()));
                }
                if x + w > width || y + h > height {
                    return Err(Error::Parameter(format!(
                        "query rectangle {w}x{h}+{x}+{y} exceeds {width}x{height} image"
                    )));
                }
                Mask::from_fn(width, height, |px, py| {
                    (*x..x + w).contains(&px) && (*y..y + h).contains(&py)
                })?
            }
            RegionSpec::Mask(m) => {
                if m.width() != width || m.height() != height {
                    return Err(Error::Shape(format!(
                        "query mask is {}x{}, image is {width}x{height}",
                        m.width(),
                        m.height()
                    )));
                }
                if m.is_empty() {
                    return Err(Error::Parameter("query mask is empty".into()));
                }
                m.clone()
            }
        };
        if mask.is_full() {
            return Err(Error::Parameter(
                "query region covers the entire image; nothing is left to analyze".into(),
            ));
        }
        Ok(mask)
    }
}

/// An image split into an analysis part and a query part.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitImage {
    /// Pixels of `p'`; the complement of the region.
    pub valid: Mask,
    /// Pixels of `p''`.
    pub region: Mask,
    /// Bounding box `(x, y, w, h)` of the region.
    pub bbox: (usize, usize, usize, usize),
    /// The region's bounding-box crop.
    pub query: FloatImage,
}

pub fn split(p: &FloatImage, region: &RegionSpec) -> Result<SplitImage> {
    let region = region.to_mask(p.width(), p.height())?;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..region.height() {
        for x in 0..region.width() {
            if region.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    let bbox = (x0, y0, x1 - x0 + 1, y1 - y0 + 1);
    let query = p.crop(bbox.0, bbox.1, bbox.2, bbox.3)?;
    Ok(SplitImage {
        valid: region.complement(),
        region,
        bbox,
        query,
    })
}

/// Filtered difference restricted to the `valid` pixels.
///
/// With an all-valid mask this is exactly the unmasked filtered difference.
pub fn masked_filtered_difference(
    p: &FloatImage,
    p_r: &FloatImage,
    valid: &Mask,
    params: &AnalysisParams,
) -> Result<FloatImage> {
    params.validate()?;
    if !valid.matches(p) {
        return Err(Error::Shape("validity mask does not match image".into()));
    }
    let d = subtract(p, p_r)?;
    if !d.is_finite() {
        return Err(Error::Data("input images contain non-finite samples".into()));
    }
    if !params.filters_spatially() {
        return Ok(d);
    }
    let kernel = build_kernel(params)?;
    if valid.is_full() {
        Ok(spatial_filter(&d, &kernel))
    } else {
        Ok(masked_spatial_filter(&d, valid, &kernel)?.0)
    }
}

/// Decision thresholds for [`forgery_score`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyParams {
    /// Minimum channel-max of `D'+` for a pixel to count as evidence.
    pub evidence_threshold: f64,
    /// Chromaticity distance above which the verdict is inconsistent.
    pub tau: f64,
    /// Minimum fraction of analyzed pixels that must be evidence.
    pub min_support: f64,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        Self {
            evidence_threshold: 0.5,
            tau: 0.15,
            min_support: 1e-4,
        }
    }
}

impl ConsistencyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.evidence_threshold > 0.0 && self.evidence_threshold <= 1.0) {
            return Err(Error::Parameter(format!(
                "evidence threshold must lie in (0, 1], got {}",
                self.evidence_threshold
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.min_support) {
            return Err(Error::Parameter(format!(
                "min support must lie in [0, 1], got {}",
                self.min_support
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    InsufficientEvidence,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
            Verdict::InsufficientEvidence => "insufficient-evidence",
        })
    }
}

/// Applies the decision rule to a measured distance and support.
pub fn decide(distance: Option<f64>, support: f64, params: &ConsistencyParams) -> Verdict {
    match distance {
        Some(d) if support >= params.min_support && support > 0.0 => {
            if d > params.tau {
                Verdict::Inconsistent
            } else {
                Verdict::Consistent
            }
        }
        _ => Verdict::InsufficientEvidence,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// Chromaticity of `D'+` over the evidence mask; `None` without evidence.
    pub evidence_chroma: Option<Chroma>,
    pub query_chroma: Chroma,
    pub chroma_distance: Option<f64>,
    /// Fraction of `p'` pixels in the evidence mask.
    pub evidence_mask_fraction: f64,
    pub verdict: Verdict,
}

/// Everything produced by a forgery check.
#[derive(Clone, Debug, PartialEq)]
pub struct ForgeryOutcome {
    pub report: ConsistencyReport,
    /// Amplified `D'` over the analysis part; zero inside the region.
    pub pair: AmplifiedPair,
    pub evidence_mask: Mask,
    pub split: SplitImage,
}

/// Recovers latent evidence from `p'` and scores its color against `p''`.
///
/// A degenerate `D'+` is reported as insufficient evidence, not an error.
pub fn forgery_score(
    p: &FloatImage,
    p_r: &FloatImage,
    region: &RegionSpec,
    params: &AnalysisParams,
    consistency: &ConsistencyParams,
) -> Result<ForgeryOutcome> {
    consistency.validate()?;
    p.ensure_same_shape(p_r, "scene and reference differ")?;
    let split = split(p, region)?;
    let filtered = masked_filtered_difference(p, p_r, &split.valid, params)?;
    let pair = amplify_split_masked(&filtered, Some(&split.valid), params.zero_floor)?;

    let cmax = pair.d_plus.channel_max();
    let evidence_mask = Mask::new(
        p.width(),
        p.height(),
        cmax.iter()
            .zip(split.valid.bits())
            .map(|(&v, &ok)| ok && !pair.degenerate_plus && v >= consistency.evidence_threshold)
            .collect(),
    )?;
    let evidence_mask_fraction = evidence_mask.count() as f64 / split.valid.count() as f64;
    let evidence_chroma = (!evidence_mask.is_empty())
        .then(|| mean_chroma(&pair.d_plus, |k| evidence_mask.bits()[k]));
    let query_chroma = mean_chroma(p, |k| split.region.bits()[k]);
    let chroma_distance = evidence_chroma.map(|e| e.distance(&query_chroma));
    let verdict = decide(chroma_distance, evidence_mask_fraction, consistency);

    Ok(ForgeryOutcome {
        report: ConsistencyReport {
            evidence_chroma,
            query_chroma,
            chroma_distance,
            evidence_mask_fraction,
            verdict,
        },
        pair,
        evidence_mask,
        split,
    })
}
