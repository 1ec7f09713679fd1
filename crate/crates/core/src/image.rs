//! Floating-point planar images, binary masks, and the per-pixel arithmetic
//! shared by every pipeline.

use crate::error::{Error, Result};

/// A `width × height × channels` image of real-valued samples.
///
/// Samples are stored planar: channel 0 occupies the first `width * height`
/// entries in row-major order, followed by channel 1, and so on. Decoded
/// images live in `[0, 1]`; difference images may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FloatImage {
    /// Builds an image from planar samples.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{} samples supplied for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        check_dims(width, height, channels)?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0.0)
    }

    /// Builds an image by evaluating `f(channel, x, y)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height, channels)?;
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image from channel-interleaved samples (`RGBRGB...`).
    pub fn from_interleaved(
        width: usize,
        height: usize,
        channels: usize,
        samples: &[f64],
    ) -> Result<Self> {
        check_dims(width, height, channels)?;
        let plane = width * height;
        if samples.len() != plane * channels {
            return Err(Error::Shape(format!(
                "{} samples supplied for a {width}x{height}x{channels} image",
                samples.len()
            )));
        }
        let mut data = vec![0.0; samples.len()];
        for (k, px) in samples.chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * plane + k] = v;
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        let plane = self.plane_len();
        let mut out = Vec::with_capacity(self.data.len());
        for k in 0..plane {
            for c in 0..self.channels {
                out.push(self.data[c * plane + k]);
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    /// All samples, planar.
    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, channel: usize, x: usize, y: usize, value: f64) {
        self.data[(channel * self.height + y) * self.width + x] = value;
    }

    /// Returns a new image with `f` applied to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &FloatImage) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn ensure_same_shape(&self, other: &FloatImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            let (w0, h0, c0) = self.shape();
            let (w1, h1, c1) = other.shape();
            Err(Error::Shape(format!(
                "{what}: {w0}x{h0}x{c0} vs {w1}x{h1}x{c1}"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Whether every sample lies in `[0, 1]`.
    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Largest sample and the `(channel, x, y)` where it first occurs.
    pub fn argmax(&self) -> (f64, (usize, usize, usize)) {
        let mut best = f64::NEG_INFINITY;
        let mut at = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > best {
                best = v;
                at = i;
            }
        }
        let plane = self.plane_len();
        let (c, k) = (at / plane, at % plane);
        (best, (c, k % self.width, k / self.width))
    }

    /// Per-pixel maximum over channels, as a single-plane vector.
    pub fn channel_max(&self) -> Vec<f64> {
        let mut out = self.plane(0).to_vec();
        for c in 1..self.channels {
            for (o, &v) in out.iter_mut().zip(self.plane(c)) {
                if v > *o {
                    *o = v;
                }
            }
        }
        out
    }

    /// Arithmetic mean over all samples, summed sequentially.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Copies the `w × h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<FloatImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::Parameter(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{} image",
                self.width, self.height
            )));
        }
        FloatImage::from_fn(w, h, self.channels, |c, i, j| self.get(c, x + i, y + j))
    }
}

fn check_dims(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::Shape(format!(
            "channel count must be 1 or 3, got {channels}"
        )));
    }
    Ok(())
}

/// A binary `width × height` pixel mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::Shape(format!(
                "{} mask entries supplied for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn matches(&self, image: &FloatImage) -> bool {
        self.width == image.width() && self.height == image.height()
    }

    /// Intersection-over-union against another mask; 0 when both are empty.
    pub fn iou(&self, other: &Mask) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// An integer raster as produced by an image decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Bits per stored sample.
    pub bit_depth: u8,
    /// Channel-interleaved samples.
    pub samples: Vec<u16>,
}

/// Maps stored integers `v` to `v / (2^bits - 1)`.
pub fn decode_to_float(raw: &RawImage) -> Result<FloatImage> {
    let full_scale = match raw.bit_depth {
        8 => u8::MAX as f64,
        16 => u16::MAX as f64,
        d => return Err(Error::Format(format!("unsupported bit depth {d}"))),
    };
    if raw.channels != 1 && raw.channels != 3 {
        return Err(Error::Format(format!(
            "unsupported channel count {}",
            raw.channels
        )));
    }
    if raw.bit_depth == 8 {
        if let Some(v) = raw.samples.iter().find(|&&v| v > u8::MAX as u16) {
            return Err(Error::Format(format!("sample {v} exceeds 8-bit range")));
        }
    }
    let samples: Vec<f64> = raw.samples.iter().map(|&v| v as f64 / full_scale).collect();
    FloatImage::from_interleaved(raw.width, raw.height, raw.channels, &samples)
        .map_err(|e| Error::Format(e.to_string()))
}

/// Channel-wise, pixel-wise difference `p - p_r`.
///
/// No resizing or registration is attempted: the two images must share
/// their width, height and channel count.
pub fn subtract(p: &FloatImage, p_r: &FloatImage) -> Result<FloatImage> {
    p.ensure_same_shape(p_r, "scene and reference differ")?;
    Ok(FloatImage {
        width: p.width,
        height: p.height,
        channels: p.channels,
        data: p.data.iter().zip(&p_r.data).map(|(a, b)| a - b).collect(),
    })
}
