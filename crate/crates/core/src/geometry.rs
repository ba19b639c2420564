use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps degrees of visual angle onto the pixel grid of a square image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGeometry {
    pub fov_deg: f64,
    pub resolution_px: usize,
}

impl FieldGeometry {
    pub fn new(fov_deg: f64, resolution_px: usize) -> Result<Self> {
        let geom = Self {
            fov_deg,
            resolution_px,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg.is_finite() && self.fov_deg > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "field of view must be positive, got {} deg",
                self.fov_deg
            )));
        }
        if self.resolution_px == 0 {
            return Err(Error::InvalidGeometry("resolution must be at least 1 px".into()));
        }
        Ok(())
    }

    pub fn px_per_deg(&self) -> f64 {
        self.resolution_px as f64 / self.fov_deg
    }

    /// Nyquist frequency of the pixel grid in cycles per degree.
    pub fn nyquist_cpd(&self) -> f64 {
        self.px_per_deg() / 2.0
    }

    pub fn deg_to_px(&self, deg: f64) -> f64 {
        deg * self.px_per_deg()
    }

    /// Index of the pixel treated as the image centre (`floor(n / 2)`).
    pub fn center_px(&self) -> usize {
        self.resolution_px / 2
    }
}

impl Default for FieldGeometry {
    fn default() -> Self {
        Self {
            fov_deg: 2.0,
            resolution_px: 64,
        }
    }
}

/// Shorthand for [`FieldGeometry::new`].
pub fn make_field(fov_deg: f64, resolution_px: usize) -> Result<FieldGeometry> {
    FieldGeometry::new(fov_deg, resolution_px)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_imagenet_field() {
        let g = make_field(2.0, 64).unwrap();
        assert_eq!(g.px_per_deg(), 32.0);
        assert_eq!(g.nyquist_cpd(), 16.0);
        assert_eq!(g.center_px(), 32);
    }

    #[test]
    fn imagenet_field() {
        assert_eq!(make_field(8.0, 224).unwrap().px_per_deg(), 28.0);
    }

    #[test]
    fn rejects_degenerate_fields() {
        assert!(matches!(make_field(2.0, 0), Err(Error::InvalidGeometry(_))));
        assert!(matches!(make_field(0.0, 64), Err(Error::InvalidGeometry(_))));
        assert!(matches!(make_field(-1.0, 64), Err(Error::InvalidGeometry(_))));
        assert!(matches!(make_field(f64::NAN, 64), Err(Error::InvalidGeometry(_))));
    }
}
