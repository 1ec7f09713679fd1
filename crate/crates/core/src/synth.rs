//! Synthetic scenes with known, sub-perceptual evidence.
//!
//! A scene is a smooth base image plus a set of evidence fields: reflections
//! that add light and occlusions that remove it. Each field has a
//! cosine-tapered profile over an elliptical or rectangular support, and its
//! brightest channel reaches `peak_amplitude` at the center. Independent
//! Gaussian sensor noise is added to every generated image from a seeded
//! ChaCha stream, so a `(spec, seed)` pair always produces the same bits.
//!
//! Scene specs are read from `key: value` text:
//!
//! ```text
//! width: 128
//! height: 96
//! channels: 3
//! base: textured 0.35 0.1 16      # or: constant 0.3 | gradient 0.2 0.6
//! noise_std: 1/255
//! seed: 7
//! evidence: reflection ellipse 64 40 24 18 2/255 0.2 0.6 0.2
//! evidence: occlusion rect 20 70 10 8 3/255 1 1 1 taper=0.3
//! ```
//!
//! An evidence line lists kind, shape, center `cx cy`, semi-axes `rx ry`,
//! peak amplitude, an RGB chroma direction, and an optional `taper=`
//! fraction (default 0.5). Numbers may be written as fractions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::color::{mean_chroma, Chroma};
use crate::diff::AmplifiedPair;
use crate::error::{Error, Result};
use crate::image::{FloatImage, Mask};
use crate::video::{Frame, FrameStream};

/// Largest allowed evidence peak, keeping fields in the sub-perceptual regime.
pub const MAX_PEAK_AMPLITUDE: f64 = 8.0 / 255.0;
pub const DEFAULT_TAPER: f64 = 0.5;

const TEXTURE_STREAM: u64 = 0;
const REFERENCE_NOISE_STREAM: u64 = 1;
const SCENE_NOISE_STREAM: u64 = 2;
const GEOMETRY_STREAM: u64 = 3;
const FRAME_NOISE_STREAM_BASE: u64 = 1 << 32;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub enum Base {
    Constant(f64),
    /// Horizontal ramp from `from` at the left edge to `to` at the right.
    Gradient { from: f64, to: f64 },
    /// Bilinearly interpolated value noise on a lattice of `cell` pixels,
    /// spanning `mean ± amplitude`.
    Textured { mean: f64, amplitude: f64, cell: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Added light; the field is nonnegative.
    Reflection,
    /// Removed light; the field is nonpositive.
    Occlusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportShape {
    Ellipse,
    Rect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceField {
    pub kind: FieldKind,
    pub shape: SupportShape,
    pub center: (f64, f64),
    /// Semi-axes (half-widths for rectangles).
    pub radii: (f64, f64),
    pub peak_amplitude: f64,
    /// RGB direction, normalized to unit sum.
    pub chroma: [f64; 3],
    /// Fraction of the normalized radius over which the profile falls from
    /// 1 to 0.
    pub taper: f64,
}

impl EvidenceField {
    pub fn new(
        kind: FieldKind,
        shape: SupportShape,
        center: (f64, f64),
        radii: (f64, f64),
        peak_amplitude: f64,
        chroma: [f64; 3],
    ) -> Result<Self> {
        let sum: f64 = chroma.iter().sum();
        if chroma.iter().any(|&c| !(c >= 0.0)) || !(sum > 0.0) {
            return Err(Error::Parameter(format!(
                "chroma must be nonnegative with positive sum, got {chroma:?}"
            )));
        }
        let field = Self {
            kind,
            shape,
            center,
            radii,
            peak_amplitude,
            chroma: chroma.map(|c| c / sum),
            taper: DEFAULT_TAPER,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn with_taper(mut self, taper: f64) -> Result<Self> {
        self.taper = taper;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radii.0 > 0.0 && self.radii.1 > 0.0) {
            return Err(Error::Parameter("evidence radii must be positive".into()));
        }
        if !(self.peak_amplitude >= 0.0 && self.peak_amplitude <= MAX_PEAK_AMPLITUDE + 1e-15) {
            return Err(Error::Parameter(format!(
                "peak amplitude {} outside [0, 8/255]",
                self.peak_amplitude
            )));
        }
        if !(self.taper > 0.0 && self.taper <= 1.0) {
            return Err(Error::Parameter(format!(
                "taper must lie in (0, 1], got {}",
                self.taper
            )));
        }
        if !self.center.0.is_finite() || !self.center.1.is_finite() {
            return Err(Error::Parameter("evidence center must be finite".into()));
        }
        Ok(())
    }

    /// Normalized radial coordinate: < 1 inside the support.
    fn rho(&self, x: usize, y: usize) -> f64 {
        let dx = (x as f64 - self.center.0) / self.radii.0;
        let dy = (y as f64 - self.center.1) / self.radii.1;
        match self.shape {
            SupportShape::Ellipse => dx.hypot(dy),
            SupportShape::Rect => dx.abs().max(dy.abs()),
        }
    }

    /// Profile in `[0, 1]`: flat at 1 inside `1 - taper`, raised-cosine
    /// fall-off to 0 at the support boundary.
    pub fn profile(&self, x: usize, y: usize) -> f64 {
        let rho = self.rho(x, y);
        let inner = 1.0 - self.taper;
        if rho >= 1.0 {
            0.0
        } else if rho <= inner {
            1.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (rho - inner) / self.taper).cos())
        }
    }

    /// Per-channel amplitude scale; the largest channel gets 1.
    fn channel_scale(&self, channel: usize, channels: usize) -> f64 {
        if channels == 1 {
            return 1.0;
        }
        let max = self.chroma.iter().cloned().fold(0.0, f64::max);
        self.chroma[channel] / max
    }

    /// Signed contribution of the field to one sample.
    pub fn sample(&self, channel: usize, channels: usize, x: usize, y: usize) -> f64 {
        let sign = match self.kind {
            FieldKind::Reflection => 1.0,
            FieldKind::Occlusion => -1.0,
        };
        sign * self.peak_amplitude * self.channel_scale(channel, channels) * self.profile(x, y)
    }

    /// Pixels where the profile is nonzero.
    pub fn support_mask(&self, width: usize, height: usize) -> Result<Mask> {
        Mask::from_fn(width, height, |x, y| self.rho(x, y) < 1.0)
    }

    pub fn chroma(&self) -> Chroma {
        Chroma::from_array(self.chroma)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub base: Base,
    pub evidence: Vec<EvidenceField>,
    /// Per-sample Gaussian noise standard deviation in `[0, 1]` units.
    pub noise_std: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, base: Base) -> Self {
        Self {
            width,
            height,
            channels: 3,
            base,
            evidence: Vec::new(),
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Parameter("scene dimensions must be positive".into()));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Parameter(format!(
                "scene channel count must be 1 or 3, got {}",
                self.channels
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise_std must be finite and >= 0, got {}",
                self.noise_std
            )));
        }
        if let Base::Textured { cell: 0, .. } = self.base {
            return Err(Error::Parameter("texture cell size must be >= 1".into()));
        }
        for f in &self.evidence {
            f.validate()?;
        }
        Ok(())
    }

    /// The noise-free base image.
    pub fn base_image(&self) -> Result<FloatImage> {
        let (w, h) = (self.width, self.height);
        match self.base {
            Base::Constant(v) => FloatImage::filled(w, h, self.channels, v),
            Base::Gradient { from, to } => {
                let span = (w.max(2) - 1) as f64;
                FloatImage::from_fn(w, h, self.channels, |_, x, _| {
                    from + (to - from) * x as f64 / span
                })
            }
            Base::Textured {
                mean,
                amplitude,
                cell,
            } => {
                let (gw, gh) = (w / cell + 2, h / cell + 2);
                let mut rng = rng_for(self.seed, TEXTURE_STREAM);
                let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
                FloatImage::from_fn(w, h, self.channels, |_, x, y| {
                    let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
                    let (ix, iy) = (fx as usize, fy as usize);
                    let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
                    let at = |i: usize, j: usize| lattice[j * gw + i];
                    let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
                    let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
                    mean + amplitude * (top * (1.0 - ty) + bottom * ty)
                })
            }
        }
    }

    /// Sum of all evidence fields (the exact noise-free difference).
    pub fn evidence_image(&self) -> Result<FloatImage> {
        FloatImage::from_fn(self.width, self.height, self.channels, |c, x, y| {
            self.evidence
                .iter()
                .map(|f| f.sample(c, self.channels, x, y))
                .sum()
        })
    }

    pub fn truth_masks(&self) -> Result<Vec<Mask>> {
        self.evidence
            .iter()
            .map(|f| f.support_mask(self.width, self.height))
            .collect()
    }

    /// Union of all evidence supports.
    pub fn truth_union(&self) -> Result<Mask> {
        Mask::from_fn(self.width, self.height, |x, y| {
            self.evidence.iter().any(|f| f.rho(x, y) < 1.0)
        })
    }

    /// Base and base-plus-evidence images, both checked to lie in `[0, 1]`.
    fn clean_images(&self) -> Result<(FloatImage, FloatImage)> {
        self.validate()?;
        let base = self.base_image()?;
        let evidence = self.evidence_image()?;
        let mut with = base.clone();
        for (v, &e) in with.samples_mut().iter_mut().zip(evidence.samples()) {
            *v += e;
        }
        if !base.is_unit_range() || !with.is_unit_range() {
            return Err(Error::Parameter(
                "scene base plus evidence leaves the [0, 1] range".into(),
            ));
        }
        Ok((base, with))
    }

    fn add_noise(&self, image: &mut FloatImage, stream: u64) -> Result<()> {
        if self.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.noise_std)
                .map_err(|e| Error::Parameter(e.to_string()))?;
            let mut rng = rng_for(self.seed, stream);
            for v in image.samples_mut() {
                *v += normal.sample(&mut rng);
            }
            if !image.is_unit_range() {
                return Err(Error::Parameter(
                    "noise pushes scene samples outside [0, 1]; lower noise_std or move the base away from 0 and 1"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

/// A generated scene/reference pair with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub p: FloatImage,
    pub p_r: FloatImage,
    /// Support mask of each evidence field, in declaration order.
    pub truth: Vec<Mask>,
}

/// Renders `p = base + evidence + noise` and `p_r = base + noise` with
/// independent noise draws.
pub fn generate_pair(spec: &SceneSpec) -> Result<SyntheticScene> {
    let (mut p_r, mut p) = spec.clean_images()?;
    spec.add_noise(&mut p_r, REFERENCE_NOISE_STREAM)?;
    spec.add_noise(&mut p, SCENE_NOISE_STREAM)?;
    Ok(SyntheticScene {
        p,
        p_r,
        truth: spec.truth_masks()?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticStream {
    pub stream: FrameStream,
    pub truth: Vec<Mask>,
    pub entry_frame: usize,
}

/// Renders frames `0..frames`; frames at or after `entry_frame` carry the
/// evidence fields. Every frame gets its own noise draw.
pub fn generate_stream(spec: &SceneSpec, frames: usize, entry_frame: usize) -> Result<SyntheticStream> {
    if frames == 0 {
        return Err(Error::Parameter("stream needs at least one frame".into()));
    }
    if entry_frame > frames {
        return Err(Error::Parameter(format!(
            "entry frame {entry_frame} beyond stream length {frames}"
        )));
    }
    let (base, with) = spec.clean_images()?;
    let images = (0..frames)
        .map(|f| {
            let mut img = if f >= entry_frame { with.clone() } else { base.clone() };
            spec.add_noise(&mut img, FRAME_NOISE_STREAM_BASE + f as u64)?;
            Ok(Frame {
                index: f as i64,
                image: img,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticStream {
        stream: FrameStream::new(images, None)?,
        truth: spec.truth_masks()?,
        entry_frame,
    })
}

/// A single-field scene with seeded random geometry, base and chroma.
///
/// The field center lies in the middle half of the frame and its semi-axes
/// span 12–22 % of the shorter side. Bases stay inside `[0.25, 0.55]`
/// so noise and evidence never reach the range limits.
pub fn random_single_field_scene(
    width: usize,
    height: usize,
    kind: FieldKind,
    peak_amplitude: f64,
    noise_std: f64,
    seed: u64,
) -> Result<SceneSpec> {
    let mut rng = rng_for(seed, GEOMETRY_STREAM);
    let (wf, hf) = (width as f64, height as f64);
    let short = wf.min(hf);
    let center = (
        rng.random_range(0.25 * wf..0.75 * wf),
        rng.random_range(0.25 * hf..0.75 * hf),
    );
    let radii = (
        rng.random_range(0.12 * short..0.22 * short),
        rng.random_range(0.12 * short..0.22 * short),
    );
    let shape = if rng.random_bool(0.5) {
        SupportShape::Ellipse
    } else {
        SupportShape::Rect
    };
    let chroma = [
        rng.random_range(0.1..1.0),
        rng.random_range(0.1..1.0),
        rng.random_range(0.1..1.0),
    ];
    let base = match rng.random_range(0..3) {
        0 => Base::Constant(rng.random_range(0.3..0.5)),
        1 => Base::Gradient {
            from: rng.random_range(0.3..0.4),
            to: rng.random_range(0.4..0.5),
        },
        _ => Base::Textured {
            mean: rng.random_range(0.35..0.45),
            amplitude: 0.1,
            cell: rng.random_range(8..24),
        },
    };
    let field = EvidenceField::new(kind, shape, center, radii, peak_amplitude, chroma)?;
    Ok(SceneSpec {
        width,
        height,
        channels: 3,
        base,
        evidence: vec![field],
        noise_std,
        seed,
    })
}

/// A scene for the split-based forgery check: an optional reflection in the
/// left part of the frame and a suspect rectangle in the right part whose
/// pixels were repainted after acquisition.
#[derive(Clone, Debug, PartialEq)]
pub struct ForgeryScene {
    pub scene: SyntheticScene,
    pub spec: SceneSpec,
    /// `(x, y, w, h)` of the repainted region.
    pub region: (usize, usize, usize, usize),
}

/// Builds a [`ForgeryScene`]. `reflection` is the chroma direction of the
/// latent reflection (`None` for a scene without evidence) and
/// `query_color` the RGB color painted over the suspect region, shaded by a
/// smooth texture so the region is not flat.
pub fn forgery_scene(
    width: usize,
    height: usize,
    reflection: Option<[f64; 3]>,
    query_color: [f64; 3],
    peak_amplitude: f64,
    noise_std: f64,
    seed: u64,
) -> Result<ForgeryScene> {
    let mut rng = rng_for(seed, GEOMETRY_STREAM);
    let (wf, hf) = (width as f64, height as f64);
    let short = wf.min(hf);
    let mut spec = SceneSpec {
        width,
        height,
        channels: 3,
        base: Base::Textured {
            mean: 0.4,
            amplitude: 0.1,
            cell: rng.random_range(8..24),
        },
        evidence: Vec::new(),
        noise_std,
        seed,
    };
    if let Some(chroma) = reflection {
        let center = (
            rng.random_range(0.2 * wf..0.4 * wf),
            rng.random_range(0.3 * hf..0.7 * hf),
        );
        let radii = (
            rng.random_range(0.12 * short..0.18 * short),
            rng.random_range(0.12 * short..0.18 * short),
        );
        spec.evidence.push(EvidenceField::new(
            FieldKind::Reflection,
            SupportShape::Ellipse,
            center,
            radii,
            peak_amplitude,
            chroma,
        )?);
    }
    let region = (
        (0.65 * wf) as usize,
        (0.25 * hf) as usize,
        ((0.25 * wf) as usize).max(1),
        ((0.5 * hf) as usize).max(1),
    );
    let mut scene = generate_pair(&spec)?;
    let (rx, ry, rw, rh) = region;
    for y in ry..ry + rh {
        for x in rx..rx + rw {
            let shade = 0.7 + 0.3 * ((x as f64 * 0.37).sin() * (y as f64 * 0.23).cos());
            for (c, &v) in query_color.iter().enumerate() {
                let painted = (v * shade).clamp(0.0, 1.0);
                scene.p.set(c, x, y, painted);
            }
        }
    }
    Ok(ForgeryScene {
        scene,
        spec,
        region,
    })
}

/// How well an amplified pair recovers a known evidence support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryMetrics {
    /// IoU of `{channel-max(D+) >= threshold}` against the truth mask.
    pub iou: f64,
    /// Whether the global `D+` maximum falls inside the truth mask.
    pub argmax_hit: bool,
    /// Distance between the mean `D+` chromaticity over the truth mask and
    /// the injected chroma, when one is given.
    pub chroma_error: Option<f64>,
}

pub fn evaluate_recovery(
    pair: &AmplifiedPair,
    truth: &Mask,
    threshold: f64,
    field_chroma: Option<Chroma>,
) -> Result<RecoveryMetrics> {
    if !truth.matches(&pair.d_plus) {
        return Err(Error::Shape("truth mask does not match the result".into()));
    }
    if truth.is_empty() {
        return Err(Error::Parameter("truth mask is empty".into()));
    }
    let cmax = pair.d_plus.channel_max();
    let detected = Mask::new(
        truth.width(),
        truth.height(),
        cmax.iter()
            .map(|&v| !pair.degenerate_plus && v >= threshold)
            .collect(),
    )?;
    let argmax_hit = match pair.argmax_plus() {
        Some((_, x, y)) => truth.get(x, y),
        None => false,
    };
    let chroma_error = field_chroma.map(|expected| {
        mean_chroma(&pair.d_plus, |k| truth.bits()[k]).distance(&expected)
    });
    Ok(RecoveryMetrics {
        iou: detected.iou(truth),
        argmax_hit,
        chroma_error,
    })
}

fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Parameter(format!("bad number {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn parse_evidence(value: &str) -> Result<EvidenceField> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let (plain, options): (Vec<&str>, Vec<&str>) = tokens.iter().partition(|t| !t.contains('='));
    if plain.len() != 10 {
        return Err(Error::Parameter(format!(
            "evidence needs: kind shape cx cy rx ry peak r g b, got {value:?}"
        )));
    }
    let kind = match plain[0] {
        "reflection" => FieldKind::Reflection,
        "occlusion" => FieldKind::Occlusion,
        k => return Err(Error::Parameter(format!("unknown evidence kind {k:?}"))),
    };
    let shape = match plain[1] {
        "ellipse" => SupportShape::Ellipse,
        "rect" => SupportShape::Rect,
        s => return Err(Error::Parameter(format!("unknown support shape {s:?}"))),
    };
    let n: Vec<f64> = plain[2..].iter().map(|t| parse_number(t)).collect::<Result<_>>()?;
    let mut field = EvidenceField::new(kind, shape, (n[0], n[1]), (n[2], n[3]), n[4], [n[5], n[6], n[7]])?;
    for opt in options {
        match opt.split_once('=') {
            Some(("taper", v)) => field = field.with_taper(parse_number(v)?)?,
            _ => return Err(Error::Parameter(format!("unknown evidence option {opt:?}"))),
        }
    }
    Ok(field)
}

fn parse_base(value: &str) -> Result<Base> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let nums = |n: usize| -> Result<Vec<f64>> {
        if tokens.len() != n + 1 {
            return Err(Error::Parameter(format!("base {:?} expects {n} values", tokens[0])));
        }
        tokens[1..].iter().map(|t| parse_number(t)).collect()
    };
    match tokens.first().copied() {
        Some("constant") => Ok(Base::Constant(nums(1)?[0])),
        Some("gradient") => {
            let v = nums(2)?;
            Ok(Base::Gradient { from: v[0], to: v[1] })
        }
        Some("textured") => {
            let v = nums(3)?;
            if v[2] < 1.0 || v[2].fract() != 0.0 {
                return Err(Error::Parameter("texture cell must be a positive integer".into()));
            }
            Ok(Base::Textured {
                mean: v[0],
                amplitude: v[1],
                cell: v[2] as usize,
            })
        }
        _ => Err(Error::Parameter(format!("unknown base {value:?}"))),
    }
}

impl FromStr for SceneSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut spec = SceneSpec::new(1, 1, Base::Constant(0.5));
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                Error::Parameter(format!("scene line {}: expected key: value", n + 1))
            })?;
            let value = value.trim();
            let int = |v: &str| -> Result<u64> {
                v.parse()
                    .map_err(|_| Error::Parameter(format!("scene line {}: bad integer {v:?}", n + 1)))
            };
            match key.trim() {
                "width" => width = Some(int(value)? as usize),
                "height" => height = Some(int(value)? as usize),
                "channels" => spec.channels = int(value)? as usize,
                "base" => spec.base = parse_base(value)?,
                "noise_std" => spec.noise_std = parse_number(value)?,
                "seed" => spec.seed = int(value)?,
                "evidence" => spec.evidence.push(parse_evidence(value)?),
                k => {
                    return Err(Error::Parameter(format!(
                        "scene line {}: unknown key {k:?}",
                        n + 1
                    )))
                }
            }
        }
        spec.width = width.ok_or_else(|| Error::Parameter("scene spec lacks width".into()))?;
        spec.height = height.ok_or_else(|| Error::Parameter("scene spec lacks height".into()))?;
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width: {}", self.width)?;
        writeln!(f, "height: {}", self.height)?;
        writeln!(f, "channels: {}", self.channels)?;
        match &self.base {
            Base::Constant(v) => writeln!(f, "base: constant {v}")?,
            Base::Gradient { from, to } => writeln!(f, "base: gradient {from} {to}")?,
            Base::Textured {
                mean,
                amplitude,
                cell,
            } => writeln!(f, "base: textured {mean} {amplitude} {cell}")?,
        }
        writeln!(f, "noise_std: {}", self.noise_std)?;
        writeln!(f, "seed: {}", self.seed)?;
        for e in &self.evidence {
            let kind = match e.kind {
                FieldKind::Reflection => "reflection",
                FieldKind::Occlusion => "occlusion",
            };
            let shape = match e.shape {
                SupportShape::Ellipse => "ellipse",
                SupportShape::Rect => "rect",
            };
            writeln!(
                f,
                "evidence: {kind} {shape} {} {} {} {} {} {} {} {} taper={}",
                e.center.0,
                e.center.1,
                e.radii.0,
                e.radii.1,
                e.peak_amplitude,
                e.chroma[0],
                e.chroma[1],
                e.chroma[2],
                e.taper
            )?;
        }
        Ok(())
    }
}
