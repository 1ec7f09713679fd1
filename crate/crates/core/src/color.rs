//! Brightness-normalized color coordinates.

use crate::image::FloatImage;

/// Chromaticity `(r, g) = (R, G) / (R + G + B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chroma {
    pub r: f64,
    pub g: f64,
}

impl Chroma {
    /// The achromatic point, also used for black and for single-channel data.
    pub const NEUTRAL: Chroma = Chroma {
        r: 1.0 / 3.0,
        g: 1.0 / 3.0,
    };

    pub fn from_rgb(r: f64, g: f64, b: f64) -> Chroma {
        let sum = r + g + b;
        if sum > 0.0 {
            Chroma {
                r: r / sum,
                g: g / sum,
            }
        } else {
            Chroma::NEUTRAL
        }
    }

    pub fn from_array(rgb: [f64; 3]) -> Chroma {
        Chroma::from_rgb(rgb[0], rgb[1], rgb[2])
    }

    pub fn distance(&self, other: &Chroma) -> f64 {
        (self.r - other.r).hypot(self.g - other.g)
    }
}

/// Chromaticity of the mean color over the pixels selected by `select`.
///
/// Using the mean color rather than the mean of per-pixel ratios keeps dim
/// pixels from dominating; both are invariant to brightness scaling.
pub fn mean_chroma(image: &FloatImage, select: impl Fn(usize) -> bool) -> Chroma {
    if image.channels() != 3 {
        return Chroma::NEUTRAL;
    }
    let mut sums = [0.0; 3];
    for (c, sum) in sums.iter_mut().enumerate() {
        *sum = image
            .plane(c)
            .iter()
            .enumerate()
            .filter(|(k, _)| select(*k))
            .map(|(_, &v)| v)
            .sum();
    }
    Chroma::from_array(sums)
}
