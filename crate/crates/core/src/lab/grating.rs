use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FieldGeometry;
use crate::tensor::ImageTensor;

/// Drifting sine-wave grating shown as `n_frames` phase-stepped frames.
///
/// `orientation` is the bar orientation in radians (0 = horizontal bars, so
/// luminance varies along the vertical axis). `diameter_deg = None` fills the
/// whole field; otherwise a hard circular aperture centred on the image
/// centre pixel is used and the surround is held at `mean_luminance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GratingSpec {
    pub sf_cpd: f64,
    pub contrast: f64,
    pub orientation: f64,
    pub diameter_deg: Option<f64>,
    pub n_frames: usize,
    pub phase_step_deg: f64,
    pub mean_luminance: f64,
    /// Per-channel modulation depth; `[1, 1, 1]` is achromatic.
    pub chromatic_weights: [f64; 3],
}

impl Default for GratingSpec {
    fn default() -> Self {
        Self {
            sf_cpd: 1.0,
            contrast: 1.0,
            orientation: 0.0,
            diameter_deg: Some(1.0),
            n_frames: 12,
            phase_step_deg: 30.0,
            mean_luminance: 0.5,
            chromatic_weights: [1.0; 3],
        }
    }
}

/// Hard-edged circular window, or none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aperture {
    Circle { radius_px: f64 },
    FullField,
}

impl Aperture {
    pub fn of(spec: &GratingSpec, geom: &FieldGeometry) -> Self {
        match spec.diameter_deg {
            Some(d) => Aperture::Circle {
                radius_px: geom.deg_to_px(d) / 2.0,
            },
            None => Aperture::FullField,
        }
    }

    /// Whether the pixel at offset `(dy, dx)` from the centre pixel is inside.
    pub fn contains(&self, dy: f64, dx: f64) -> bool {
        match *self {
            Aperture::Circle { radius_px } => dy * dy + dx * dx <= radius_px * radius_px,
            Aperture::FullField => true,
        }
    }
}

impl GratingSpec {
    pub fn validate(&self, geom: &FieldGeometry) -> Result<()> {
        geom.validate()?;
        if !(self.sf_cpd > 0.0 && self.sf_cpd.is_finite()) {
            return Err(Error::Stimulus(format!("SF must be positive, got {}", self.sf_cpd)));
        }
        if self.sf_cpd >= geom.nyquist_cpd() {
            return Err(Error::Stimulus(format!(
                "{} cpd is at or above the {} cpd Nyquist limit",
                self.sf_cpd,
                geom.nyquist_cpd()
            )));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::Stimulus(format!("contrast {} outside [0, 1]", self.contrast)));
        }
        if self.n_frames == 0 || ((self.n_frames as f64) * self.phase_step_deg - 360.0).abs() > 1e-9 {
            return Err(Error::Stimulus(format!(
                "{} frames of {} deg do not cover one cycle",
                self.n_frames, self.phase_step_deg
            )));
        }
        if let Some(d) = self.diameter_deg {
            if !(d > 0.0 && d <= geom.fov_deg) {
                return Err(Error::Stimulus(format!(
                    "aperture {d} deg must be positive and within the {} deg field",
                    geom.fov_deg
                )));
            }
        }
        let depth = self.chromatic_weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if self.chromatic_weights.iter().any(|w| !w.is_finite()) || depth > 1.0 {
            return Err(Error::Stimulus("chromatic weights must lie in [-1, 1]".into()));
        }
        let m = self.mean_luminance;
        if !(m > 0.0 && m * (1.0 + self.contrast * depth) <= 1.0 + 1e-12) {
            return Err(Error::Stimulus(format!(
                "mean luminance {m} at contrast {} leaves the [0, 1] range",
                self.contrast
            )));
        }
        Ok(())
    }

    /// The same grating with a full-field aperture.
    pub fn full_field(self) -> Self {
        Self {
            diameter_deg: None,
            ..self
        }
    }
}

/// Renders the drifting grating; frame `k` is advanced by `k * phase_step`.
pub fn grating_frames(spec: &GratingSpec, geom: &FieldGeometry) -> Result<Vec<ImageTensor>> {
    spec.validate(geom)?;
    let n = geom.resolution_px;
    let c = geom.center_px() as f64;
    let ppd = geom.px_per_deg();
    let (sin_t, cos_t) = spec.orientation.sin_cos();
    let aperture = Aperture::of(spec, geom);
    let omega = 2.0 * PI * spec.sf_cpd;

    // sin(a + p) = sin(a)cos(p) + cos(a)sin(p): one sin_cos per pixel, not per frame
    let carrier: Vec<Option<(f64, f64)>> = (0..n * n)
        .map(|i| {
            let (dy, dx) = ((i / n) as f64 - c, (i % n) as f64 - c);
            aperture
                .contains(dy, dx)
                .then(|| (omega * (-dx * sin_t + dy * cos_t) / ppd).sin_cos())
        })
        .collect();
    let m = spec.mean_luminance;

    (0..spec.n_frames)
        .map(|k| {
            let (sp, cp) = (k as f64 * spec.phase_step_deg).to_radians().sin_cos();
            let mut data = Vec::with_capacity(3 * n * n);
            for &w in &spec.chromatic_weights {
                let depth = w * spec.contrast;
                data.extend(carrier.iter().map(|px| match px {
                    Some((sa, ca)) => m * (1.0 + depth * (sa * cp + ca * sp)),
                    None => m,
                }));
            }
            ImageTensor::new(3, n, n, data)
        })
        .collect()
}

/// `(Lmax - Lmin) / (Lmax + Lmin)` of the channel-mean luminance over all
/// in-aperture pixels of all frames.
pub fn measured_contrast(frames: &[ImageTensor], spec: &GratingSpec, geom: &FieldGeometry) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Empty("no frames to measure"));
    }
    let c = geom.center_px() as f64;
    let aperture = Aperture::of(spec, geom);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for f in frames {
        let lum = f.channel_mean();
        for y in 0..lum.height() {
            for x in 0..lum.width() {
                if aperture.contains(y as f64 - c, x as f64 - c) {
                    let v = lum.get(y, x);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
    }
    Ok((hi - lo) / (hi + lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> FieldGeometry {
        FieldGeometry::default()
    }

    #[test]
    fn zero_contrast_is_uniform_gray() {
        let spec = GratingSpec {
            contrast: 0.0,
            sf_cpd: 2.0,
            ..Default::default()
        };
        for f in grating_frames(&spec, &geom()).unwrap() {
            assert!(f.data().iter().all(|v| *v == 0.5));
        }
    }

    #[test]
    fn full_contrast_spans_black_to_white() {
        let spec = GratingSpec {
            sf_cpd: 3.0,
            ..Default::default()
        };
        let frames = grating_frames(&spec, &geom()).unwrap();
        assert_eq!(frames.len(), 12);
        let lo = frames.iter().flat_map(|f| f.data()).cloned().fold(f64::MAX, f64::min);
        let hi = frames.iter().flat_map(|f| f.data()).cloned().fold(f64::MIN, f64::max);
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!((measured_contrast(&frames, &spec, &geom()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_cycle_apart_frames_are_in_antiphase() {
        let spec = GratingSpec {
            sf_cpd: 1.7,
            contrast: 0.6,
            orientation: 0.4,
            ..Default::default()
        };
        let frames = grating_frames(&spec, &geom()).unwrap();
        for k in 0..6 {
            for (a, b) in frames[k].data().iter().zip(frames[k + 6].data()) {
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn surround_is_mean_gray() {
        let spec = GratingSpec {
            sf_cpd: 2.0,
            ..Default::default()
        };
        let f = &grating_frames(&spec, &geom()).unwrap()[3];
        assert_eq!(f.get(0, 0, 0), 0.5);
        assert_eq!(f.get(1, 32, 32 + 17), 0.5);
        // centre pixel at phase 90 degrees is at the crest
        assert!((f.get(0, 32, 32) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stimulus_errors() {
        let g = geom();
        let bad = [
            GratingSpec { sf_cpd: 16.0, ..Default::default() },
            GratingSpec { contrast: 1.2, ..Default::default() },
            GratingSpec { n_frames: 10, ..Default::default() },
            GratingSpec { diameter_deg: Some(3.0), ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(grating_frames(&spec, &g), Err(Error::Stimulus(_))));
        }
    }
}
