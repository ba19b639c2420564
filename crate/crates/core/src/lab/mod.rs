//! In-silico electrophysiology: drifting gratings, centre-cell recording,
//! Fourier metrics, tuning curves and contrast-response fits.

pub mod fit;
pub mod fourier;
pub mod grating;
pub mod population;
pub mod probe;
pub mod tuning;

pub use fit::{fit_log_saturation, ContrastFit};
pub use fourier::{fourier_metrics, FourierMetrics, Metric, ResponseSeries};
pub use grating::{grating_frames, measured_contrast, Aperture, GratingSpec};
pub use population::{population_sf_stats, PopulationStats};
pub use probe::{record_center, DogLayerProbe, Probe, RetinaProbe, V1Probe};
pub use tuning::{
    contrast_curve, contrast_grid, optimal_sf, sf_bandwidth, sf_grid, sf_tuning, Axis, Bandwidth,
    TuningCurve, TuningPoint,
};
