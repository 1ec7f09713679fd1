use crate::error::{Error, Result};

/// Gaussian standard deviation used when none is given, in pixels.
pub const DEFAULT_SIGMA: f64 = 9.0;
/// Temporal box-filter length used when none is given, in frames.
pub const DEFAULT_TEMPORAL_WINDOW: usize = 11;
/// Difference extremes at or below this magnitude are treated as zero.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-9;

/// Parameters shared by the image, video and forgery pipelines.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisParams {
    /// Gaussian standard deviation in pixels; `0` disables spatial filtering.
    pub sigma: f64,
    /// Kernel half-width; `None` means `ceil(3 * sigma)`.
    pub truncation_radius: Option<usize>,
    /// Temporal box-filter length in frames (odd).
    pub temporal_window: usize,
    pub zero_floor: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            truncation_radius: None,
            temporal_window: DEFAULT_TEMPORAL_WINDOW,
            zero_floor: DEFAULT_ZERO_FLOOR,
        }
    }
}

impl AnalysisParams {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.truncation_radius = Some(radius);
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.temporal_window = window;
        self
    }

    pub fn with_zero_floor(mut self, zero_floor: f64) -> Self {
        self.zero_floor = zero_floor;
        self
    }

    /// Kernel half-width actually used.
    pub fn radius(&self) -> usize {
        self.truncation_radius
            .unwrap_or_else(|| (3.0 * self.sigma).ceil() as usize)
    }

    /// Whether the spatial Gaussian stage runs at all.
    pub fn filters_spatially(&self) -> bool {
        self.sigma > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::Parameter(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.sigma > 0.0 && self.radius() < 1 {
            return Err(Error::Parameter(
                "truncation radius must be >= 1 when sigma > 0".into(),
            ));
        }
        if self.temporal_window == 0 || self.temporal_window.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "temporal window must be odd and >= 1, got {}",
                self.temporal_window
            )));
        }
        if !self.zero_floor.is_finite() || self.zero_floor < 0.0 {
            return Err(Error::Parameter(format!(
                "zero floor must be finite and >= 0, got {}",
                self.zero_floor
            )));
        }
        Ok(())
    }
}
