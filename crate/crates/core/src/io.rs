//! Reading and writing images, lossless float dumps, frame manifests and
//! key/value reports.
//!
//! Raster images are PNG or binary PGM/PPM at 8 or 16 bits per sample.
//! Float dumps carry an ASCII header `DIFD <W> <H> <C>\n` followed by
//! `W·H·C` little-endian `f32` samples in row-major, channel-interleaved
//! order.

use std::borrow::Cow;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::image::{decode_to_float, FloatImage, Mask, RawImage};
use crate::video::FrameSource;

/// Bits per sample when writing raster images.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            b => Err(Error::Parameter(format!("unsupported bit depth {b}"))),
        }
    }

    fn full_scale(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RasterFormat {
    Png,
    Pnm,
}

fn format_for(path: &Path) -> Result<RasterFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(RasterFormat::Png),
        Some("pgm" | "ppm" | "pnm") => Ok(RasterFormat::Pnm),
        _ => Err(Error::Format(format!(
            "{}: unknown image extension (expected .png, .pgm, .ppm or .pnm)",
            path.display()
        ))),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Decodes a PNG or binary PGM/PPM file, recognized by its signature.
pub fn read_image(path: impl AsRef<Path>) -> Result<FloatImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let raw = decode_raw(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        e => e,
    })?;
    decode_to_float(&raw)
}

/// Decodes an in-memory PNG or binary PGM/PPM into its integer raster.
pub fn decode_raw(bytes: &[u8]) -> Result<RawImage> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return decode_pnm(bytes);
    }
    if !bytes.starts_with(b"\x89PNG") {
        return Err(Error::Format("not a PNG or binary PGM/PPM file".into()));
    }
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let (channels, bit_depth, samples): (usize, u8, Vec<u16>) = match img {
        DynamicImage::ImageLuma8(b) => (1, 8, b.into_raw().into_iter().map(u16::from).collect()),
        DynamicImage::ImageRgb8(b) => (3, 8, b.into_raw().into_iter().map(u16::from).collect()),
        DynamicImage::ImageLuma16(b) => (1, 16, b.into_raw()),
        DynamicImage::ImageRgb16(b) => (3, 16, b.into_raw()),
        other => {
            return Err(Error::Format(format!(
                "unsupported PNG color type {:?} (expected gray or RGB without alpha)",
                other.color()
            )))
        }
    };
    Ok(RawImage {
        width,
        height,
        channels,
        bit_depth,
        samples,
    })
}

fn decode_pnm(bytes: &[u8]) -> Result<RawImage> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    // magic, width, height, maxval, each separated by whitespace; comments
    // run from '#' to end of line
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed PNM header".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("malformed PNM header".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    let bit_depth = match maxval {
        255 => 8,
        65535 => 16,
        m => return Err(Error::Format(format!("unsupported PNM maxval {m}"))),
    };
    let count = width * height * channels;
    let body = &bytes[pos..];
    let samples: Vec<u16> = if bit_depth == 8 {
        if body.len() != count {
            return Err(Error::Format(format!(
                "PNM payload is {} bytes, expected {count}",
                body.len()
            )));
        }
        body.iter().map(|&b| u16::from(b)).collect()
    } else {
        if body.len() != 2 * count {
            return Err(Error::Format(format!(
                "PNM payload is {} bytes, expected {}",
                body.len(),
                2 * count
            )));
        }
        body.chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    };
    Ok(RawImage {
        width,
        height,
        channels,
        bit_depth,
        samples,
    })
}

/// Quantizes samples to integers with `round(v · (2^bits − 1))`.
pub fn quantize(image: &FloatImage, depth: BitDepth) -> Result<RawImage> {
    if !image.is_unit_range() {
        return Err(Error::Data(
            "image samples outside [0, 1] cannot be written as a raster".into(),
        ));
    }
    let scale = depth.full_scale();
    Ok(RawImage {
        width: image.width(),
        height: image.height(),
        channels: image.channels(),
        bit_depth: depth.bits(),
        samples: image
            .to_interleaved()
            .into_iter()
            .map(|v| (v * scale).round() as u16)
            .collect(),
    })
}

/// Encodes an integer raster as PNG or binary PGM/PPM.
pub fn encode_raw(raw: &RawImage, png: bool) -> Result<Vec<u8>> {
    if png {
        encode_png(raw)
    } else {
        Ok(encode_pnm(raw))
    }
}

fn encode_png(raw: &RawImage) -> Result<Vec<u8>> {
    let (w, h) = (raw.width as u32, raw.height as u32);
    let shape_err = || Error::Shape("raster buffer does not match its dimensions".into());
    let img = match (raw.channels, raw.bit_depth) {
        (1, 8) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw.samples.iter().map(|&v| v as u8).collect())
                .ok_or_else(shape_err)?,
        ),
        (3, 8) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw.samples.iter().map(|&v| v as u8).collect())
                .ok_or_else(shape_err)?,
        ),
        (1, 16) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw.samples.clone()).ok_or_else(shape_err)?,
        ),
        (3, 16) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, raw.samples.clone()).ok_or_else(shape_err)?,
        ),
        (c, d) => {
            return Err(Error::Format(format!(
                "cannot encode {c}-channel {d}-bit raster"
            )))
        }
    };
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(out.into_inner())
}

fn encode_pnm(raw: &RawImage) -> Vec<u8> {
    let magic = if raw.channels == 1 { "P5" } else { "P6" };
    let maxval = if raw.bit_depth == 8 { 255 } else { 65535 };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", raw.width, raw.height).into_bytes();
    if raw.bit_depth == 8 {
        out.extend(raw.samples.iter().map(|&v| v as u8));
    } else {
        out.extend(raw.samples.iter().flat_map(|v| v.to_be_bytes()));
    }
    out
}

/// Writes a `[0, 1]` image as PNG or binary PGM/PPM, chosen by extension.
pub fn write_image(image: &FloatImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let raw = quantize(image, depth)?;
    let bytes = encode_raw(&raw, format == RasterFormat::Png)?;
    write_bytes(path, &bytes)
}

/// Encodes a float dump in memory.
pub fn encode_float_dump(image: &FloatImage) -> Vec<u8> {
    let (w, h, c) = image.shape();
    let mut out = format!("DIFD {w} {h} {c}\n").into_bytes();
    out.reserve(4 * w * h * c);
    for v in image.to_interleaved() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Decodes a float dump; the payload must be exactly `4·W·H·C` bytes.
pub fn decode_float_dump(bytes: &[u8]) -> Result<FloatImage> {
    let newline = bytes
        .iter()
        .take(64)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing float dump header".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Format("float dump header is not ASCII".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some("DIFD") {
        return Err(Error::Format(format!("bad float dump magic in {header:?}")));
    }
    let dims: Vec<usize> = parts
        .map(|p| p.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("bad float dump header {header:?}")))?;
    let [w, h, c] = dims[..] else {
        return Err(Error::Format(format!("bad float dump header {header:?}")));
    };
    let payload = &bytes[newline + 1..];
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("float dump dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "float dump payload is {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let samples: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    FloatImage::from_interleaved(w, h, c, &samples).map_err(|e| Error::Format(e.to_string()))
}

/// Writes a float dump. Samples are stored as `f32`.
pub fn write_float_dump(image: &FloatImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_float_dump(image))
}

pub fn read_float_dump(path: impl AsRef<Path>) -> Result<FloatImage> {
    let path = path.as_ref();
    decode_float_dump(&read_bytes(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// Reads either a float dump (`.difd`) or a raster image.
pub fn read_any(path: impl AsRef<Path>) -> Result<FloatImage> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("difd")) {
        read_float_dump(path)
    } else {
        read_image(path)
    }
}

/// Reads a mask image: any pixel with a nonzero sample in any channel is set.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = read_image(path)?;
    let cmax = img.channel_max();
    Mask::new(img.width(), img.height(), cmax.iter().map(|&v| v > 0.0).collect())
}

/// Writes a mask as an 8-bit grayscale image with values 0 and 255.
pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let img = FloatImage::new(
        mask.width(),
        mask.height(),
        1,
        mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )?;
    write_image(&img, path, BitDepth::Eight)
}

/// A list of frame files, one `index<TAB>path` record per line.
///
/// Blank lines and lines starting with `#` are ignored. A record whose
/// first field is `fps` sets the frame rate. Relative paths are resolved
/// against the manifest's directory when loaded from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameManifest {
    pub entries: Vec<(i64, PathBuf)>,
    pub fps: Option<f64>,
}

impl FrameManifest {
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut entries: Vec<(i64, PathBuf)> = Vec::new();
        let mut fps = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("manifest line {}: expected index<TAB>path", n + 1))
            })?;
            if key == "fps" {
                let v: f64 = value.trim().parse().map_err(|_| {
                    Error::Format(format!("manifest line {}: bad fps {value:?}", n + 1))
                })?;
                fps = Some(v);
                continue;
            }
            let index: i64 = key.trim().parse().map_err(|_| {
                Error::Format(format!("manifest line {}: bad frame index {key:?}", n + 1))
            })?;
            if let Some(&(prev, _)) = entries.last() {
                if index <= prev {
                    return Err(Error::Format(format!(
                        "manifest line {}: frame index {index} does not follow {prev}",
                        n + 1
                    )));
                }
            }
            let mut path = PathBuf::from(value);
            if let (Some(base), true) = (base_dir, path.is_relative()) {
                path = base.join(path);
            }
            entries.push((index, path));
        }
        if entries.is_empty() {
            return Err(Error::Format("manifest lists no frames".into()));
        }
        Ok(Self { entries, fps })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }
}

impl fmt::Display for FrameManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(fps) = self.fps {
            writeln!(f, "fps\t{fps}")?;
        }
        for (index, path) in &self.entries {
            writeln!(f, "{index}\t{}", path.display())?;
        }
        Ok(())
    }
}

/// Frames decoded from disk on demand, all checked against the first
/// frame's shape.
pub struct ManifestSource {
    manifest: FrameManifest,
    shape: (usize, usize, usize),
}

impl ManifestSource {
    pub fn open(manifest: FrameManifest) -> Result<Self> {
        let first = read_any(&manifest.entries[0].1)?;
        Ok(Self {
            shape: first.shape(),
            manifest,
        })
    }

    pub fn manifest(&self) -> &FrameManifest {
        &self.manifest
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }
}

impl FrameSource for ManifestSource {
    fn len(&self) -> usize {
        self.manifest.entries.len()
    }

    fn frame_index(&self, pos: usize) -> i64 {
        self.manifest.entries[pos].0
    }

    fn load(&self, pos: usize) -> Result<Cow<'_, FloatImage>> {
        let (index, path) = &self.manifest.entries[pos];
        let img = read_any(path)?;
        if img.shape() != self.shape {
            let (w, h, c) = img.shape();
            let (w0, h0, c0) = self.shape;
            return Err(Error::Shape(format!(
                "frame {index} is {w}x{h}x{c}, stream is {w0}x{h0}x{c0}"
            )));
        }
        Ok(Cow::Owned(img))
    }
}

/// An ordered list of `key: value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Parses `key: value` lines, skipping blanks and `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("line {}: expected key: value", n + 1)))?;
            report.push(k.trim(), v.trim());
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), self.to_string().as_bytes())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_full_scale_pixel() {
        let raw = decode_raw(b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
        assert_eq!(decode_to_float(&raw).unwrap().samples(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn pgm_16bit_zero() {
        let raw = decode_raw(b"P5 1 1 65535\n\x00\x00").unwrap();
        assert_eq!(raw.bit_depth, 16);
        assert_eq!(decode_to_float(&raw).unwrap().samples(), &[0.0]);
    }

    #[test]
    fn pgm_header_comments() {
        let raw = decode_raw(b"P5\n# made by hand\n2 1\n# max\n255\n\x00\x80").unwrap();
        assert_eq!(raw.samples, vec![0, 128]);
    }

    #[test]
    fn pnm_rejects_bad_payload_and_maxval() {
        assert!(matches!(decode_raw(b"P5\n2 1\n255\n\x00"), Err(Error::Format(_))));
        assert!(matches!(decode_raw(b"P5\n1 1\n1023\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(decode_raw(b"GIF89a"), Err(Error::Format(_))));
    }

    #[test]
    fn quantization_rounds() {
        let img = FloatImage::new(3, 1, 1, vec![0.5, 1.0, 0.0]).unwrap();
        assert_eq!(quantize(&img, BitDepth::Eight).unwrap().samples, vec![128, 255, 0]);
        assert_eq!(quantize(&img, BitDepth::Sixteen).unwrap().samples, vec![32768, 65535, 0]);
        let bad = FloatImage::new(1, 1, 1, vec![-0.1]).unwrap();
        assert!(matches!(quantize(&bad, BitDepth::Eight), Err(Error::Data(_))));
    }

    #[test]
    fn float_dump_header_errors() {
        assert!(matches!(decode_float_dump(b"DIFX 1 1 1\n\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(decode_float_dump(b"DIFD 1 1 1\n\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(decode_float_dump(b"DIFD 1 1\n\0\0\0\0"), Err(Error::Format(_))));
        // zero-area images violate the image invariant
        assert!(matches!(decode_float_dump(b"DIFD 0 4 1\n"), Err(Error::Format(_))));
    }

    #[test]
    fn float_dump_layout() {
        let img = FloatImage::from_interleaved(2, 1, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let bytes = encode_float_dump(&img);
        assert!(bytes.starts_with(b"DIFD 2 1 3\n"));
        assert_eq!(&bytes[11..15], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[15..19], &2.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 11 + 24);
    }

    #[test]
    fn manifest_parsing() {
        let m = FrameManifest::parse("# clip\nfps\t30\n1100\ta.png\n1101\t/x/b.png\n", Some(Path::new("/data"))).unwrap();
        assert_eq!(m.fps, Some(30.0));
        assert_eq!(m.entries[0], (1100, PathBuf::from("/data/a.png")));
        assert_eq!(m.entries[1], (1101, PathBuf::from("/x/b.png")));
        assert!(FrameManifest::parse("2\ta\n1\tb\n", None).is_err());
        assert!(FrameManifest::parse("1 a\n", None).is_err());
        assert!(FrameManifest::parse("# empty\n", None).is_err());
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::new();
        r.push("sigma", 9).push("gain_plus", 50.5);
        let parsed = Report::parse(&r.to_string()).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(parsed.get("sigma"), Some("9"));
    }
}
