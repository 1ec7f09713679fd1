//! Frame-sequence analysis against a temporal baseline.
//!
//! Each analyzed frame is differenced against a reference, the difference
//! sequence is box-filtered over time, and every filtered frame then goes
//! through the spatial filter and signed amplification of the pair
//! pipeline. Differences are produced lazily, so at most `window + 1` of
//! them are held in memory at once.

use std::borrow::Cow;
use std::collections::VecDeque;

use crate::diff::{amplify_split, AmplifiedPair};
use crate::error::{Error, Result};
use crate::filter::{build_kernel, spatial_filter};
use crate::image::{subtract, FloatImage};
use crate::params::AnalysisParams;

/// An ordered, random-access sequence of equally shaped frames.
pub trait FrameSource {
    /// Number of frames.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frame index (label) of the frame at position `pos`.
    fn frame_index(&self, pos: usize) -> i64;

    /// Loads the frame at position `pos`.
    fn load(&self, pos: usize) -> Result<Cow<'_, FloatImage>>;
}

/// A single indexed frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub index: i64,
    pub image: FloatImage,
}

/// In-memory frames with strictly increasing indices and a shared shape.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStream {
    frames: Vec<Frame>,
    fps: Option<f64>,
}

impl FrameStream {
    pub fn new(frames: Vec<Frame>, fps: Option<f64>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Parameter("frame stream is empty".into()))?;
        for pair in frames.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::Parameter(format!(
                    "frame indices must increase strictly ({} then {})",
                    pair[0].index, pair[1].index
                )));
            }
        }
        for f in &frames {
            first
                .image
                .ensure_same_shape(&f.image, &format!("frame {}", f.index))?;
        }
        Ok(Self { frames, fps })
    }

    /// Frames numbered `0, 1, 2, ...`.
    pub fn from_images(images: Vec<FloatImage>) -> Result<Self> {
        let frames = images
            .into_iter()
            .enumerate()
            .map(|(i, image)| Frame {
                index: i as i64,
                image,
            })
            .collect();
        Self::new(frames, None)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.frames[0].image.shape()
    }
}

impl FrameSource for FrameStream {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn frame_index(&self, pos: usize) -> i64 {
        self.frames[pos].index
    }

    fn load(&self, pos: usize) -> Result<Cow<'_, FloatImage>> {
        Ok(Cow::Borrowed(&self.frames[pos].image))
    }
}

/// How the baseline for each analyzed frame is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceSpec {
    /// Per-sample mean of the frames whose indices lie in `[start, end]`.
    FrameRangeAverage { start: i64, end: i64 },
    /// A separately acquired baseline image.
    ExternalImage(FloatImage),
    /// The frame `lag` positions earlier in the stream.
    AdjacentFrame { lag: usize },
}

/// Per-frame output of the video pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub index: i64,
    pub pair: AmplifiedPair,
    /// Mean of `max(D, 0)` over all samples of the filtered, unamplified
    /// difference.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoResult {
    pub frame_indices: Vec<i64>,
    pub per_frame: Vec<AmplifiedPair>,
    pub energy: Vec<f64>,
    /// The fixed baseline; `None` in adjacent-frame mode.
    pub reference_used: Option<FloatImage>,
}

impl VideoResult {
    /// Index of the frame following the largest increase in energy.
    pub fn change_point(&self) -> Option<i64> {
        largest_rise(&self.energy).map(|i| self.frame_indices[i])
    }
}

/// Position `i` maximizing `energy[i] - energy[i - 1]`.
pub fn largest_rise(energy: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 1..energy.len() {
        let rise = energy[i] - energy[i - 1];
        if best.is_none_or(|(_, b)| rise > b) {
            best = Some((i, rise));
        }
    }
    best.map(|(i, _)| i)
}

/// Positions of the frames whose indices lie in `[start, end]`.
fn positions_in<S: FrameSource + ?Sized>(
    source: &S,
    start: i64,
    end: i64,
    what: &str,
) -> Result<std::ops::Range<usize>> {
    if end < start {
        return Err(Error::Parameter(format!(
            "{what} range {start}:{end} is empty"
        )));
    }
    let n = source.len();
    if n == 0 {
        return Err(Error::Parameter("frame stream is empty".into()));
    }
    let (first, last) = (source.frame_index(0), source.frame_index(n - 1));
    if start < first || end > last {
        return Err(Error::Parameter(format!(
            "{what} range {start}:{end} outside stream frames {first}:{last}"
        )));
    }
    let lo = (0..n).find(|&p| source.frame_index(p) >= start).unwrap_or(n);
    let hi = (0..n).rfind(|&p| source.frame_index(p) <= end).map_or(0, |p| p + 1);
    if lo >= hi {
        return Err(Error::Parameter(format!(
            "{what} range {start}:{end} contains no frames"
        )));
    }
    Ok(lo..hi)
}

/// Per-sample mean of the frames with indices in `[start, end]` (inclusive).
pub fn temporal_average<S: FrameSource + ?Sized>(
    source: &S,
    start: i64,
    end: i64,
) -> Result<FloatImage> {
    let positions = positions_in(source, start, end, "reference")?;
    let count = positions.len() as f64;
    let mut sum: Option<FloatImage> = None;
    for pos in positions {
        let frame = source.load(pos)?;
        match sum.as_mut() {
            None => sum = Some(frame.into_owned()),
            Some(acc) => {
                acc.ensure_same_shape(&frame, "frame shapes differ")?;
                for (a, &v) in acc.samples_mut().iter_mut().zip(frame.samples()) {
                    *a += v;
                }
            }
        }
    }
    let mut mean = sum.expect("range is nonempty");
    for v in mean.samples_mut() {
        *v /= count;
    }
    Ok(mean)
}

fn box_mean(images: &[&FloatImage]) -> FloatImage {
    let mut acc = images[0].clone();
    for img in &images[1..] {
        for (a, &v) in acc.samples_mut().iter_mut().zip(img.samples()) {
            *a += v;
        }
    }
    let n = images.len() as f64;
    for v in acc.samples_mut() {
        *v /= n;
    }
    acc
}

fn check_window(window: usize, len: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "temporal window must be odd and >= 1, got {window}"
        )));
    }
    if window > len {
        return Err(Error::Parameter(format!(
            "temporal window {window} exceeds sequence length {len}"
        )));
    }
    Ok(())
}

/// Half-width of the centered window at position `i` of `n`, shrunk
/// symmetrically so it never leaves the sequence.
fn half_width(i: usize, n: usize, window: usize) -> usize {
    (window / 2).min(i).min(n - 1 - i)
}

/// Centered uniform (box) mean over time.
///
/// Near either end the window shrinks symmetrically rather than padding, so
/// the first and last outputs equal their inputs.
pub fn temporal_filter(sequence: &[FloatImage], window: usize) -> Result<Vec<FloatImage>> {
    check_window(window, sequence.len())?;
    for img in sequence {
        sequence[0].ensure_same_shape(img, "sequence shapes differ")?;
    }
    let n = sequence.len();
    Ok((0..n)
        .map(|i| {
            let h = half_width(i, n, window);
            let group: Vec<&FloatImage> = sequence[i - h..=i + h].iter().collect();
            box_mean(&group)
        })
        .collect())
}

/// Mean of the positive part of `filtered`, summed in storage order.
pub fn positive_energy(filtered: &FloatImage) -> f64 {
    let sum: f64 = filtered.samples().iter().map(|&v| v.max(0.0)).sum();
    sum / filtered.samples().len() as f64
}

/// Streams the video analysis, handing each frame's result to `sink` in
/// index order. Returns the fixed reference, if one was used.
///
/// `analyze` restricts processing to frames whose indices lie in the given
/// inclusive range; `None` analyzes every frame.
pub fn analyze_video_with<S, F>(
    source: &S,
    reference: &ReferenceSpec,
    params: &AnalysisParams,
    analyze: Option<(i64, i64)>,
    mut sink: F,
) -> Result<Option<FloatImage>>
where
    S: FrameSource + ?Sized,
    F: FnMut(FrameResult) -> Result<()>,
{
    params.validate()?;
    if source.is_empty() {
        return Err(Error::Parameter("frame stream is empty".into()));
    }
    let positions = match analyze {
        Some((a, b)) => positions_in(source, a, b, "analysis")?,
        None => 0..source.len(),
    };
    let n = positions.len();
    check_window(params.temporal_window, n)?;

    let fixed_ref = match reference {
        ReferenceSpec::FrameRangeAverage { start, end } => {
            Some(temporal_average(source, *start, *end)?)
        }
        ReferenceSpec::ExternalImage(img) => Some(img.clone()),
        ReferenceSpec::AdjacentFrame { lag } => {
            if *lag == 0 {
                return Err(Error::Parameter("adjacent-frame lag must be >= 1".into()));
            }
            if positions.start < *lag {
                return Err(Error::Parameter(format!(
                    "frame {} has no predecessor {lag} frames earlier",
                    source.frame_index(positions.start)
                )));
            }
            None
        }
    };
    let lag = match reference {
        ReferenceSpec::AdjacentFrame { lag } => *lag,
        _ => 0,
    };
    let kernel = if params.filters_spatially() {
        Some(build_kernel(params)?)
    } else {
        None
    };

    let difference = |j: usize| -> Result<FloatImage> {
        let pos = positions.start + j;
        let frame = source.load(pos)?;
        let d = match &fixed_ref {
            Some(r) => subtract(&frame, r)?,
            None => subtract(&frame, &*source.load(pos - lag)?)?,
        };
        if !d.is_finite() {
            return Err(Error::Data(format!(
                "frame {} contains non-finite samples",
                source.frame_index(pos)
            )));
        }
        Ok(d)
    };

    // Holds the differences for sequence positions [base, next). Both ends
    // of the shrinking centered window are nondecreasing in i.
    let mut window: VecDeque<FloatImage> = VecDeque::new();
    let (mut base, mut next) = (0usize, 0usize);
    for i in 0..n {
        let h = half_width(i, n, params.temporal_window);
        while next <= i + h {
            window.push_back(difference(next)?);
            next += 1;
        }
        while base < i - h {
            window.pop_front();
            base += 1;
        }
        let group: Vec<&FloatImage> = (i - h..=i + h).map(|j| &window[j - base]).collect();
        let temporal = box_mean(&group);
        let filtered = match &kernel {
            Some(k) => spatial_filter(&temporal, k),
            None => temporal,
        };
        let energy = positive_energy(&filtered);
        let pair = amplify_split(&filtered, params.zero_floor)?;
        sink(FrameResult {
            index: source.frame_index(positions.start + i),
            pair,
            energy,
        })?;
    }
    Ok(fixed_ref)
}

/// Runs the video analysis and collects every frame's result.
pub fn analyze_video<S: FrameSource + ?Sized>(
    source: &S,
    reference: &ReferenceSpec,
    params: &AnalysisParams,
    analyze: Option<(i64, i64)>,
) -> Result<VideoResult> {
    let mut frame_indices = Vec::new();
    let mut per_frame = Vec::new();
    let mut energy = Vec::new();
    let reference_used = analyze_video_with(source, reference, params, analyze, |r| {
        frame_indices.push(r.index);
        per_frame.push(r.pair);
        energy.push(r.energy);
        Ok(())
    })?;
    Ok(VideoResult {
        frame_indices,
        per_frame,
        energy,
        reference_used,
    })
}
