use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FieldGeometry;
use crate::lab::fourier::{fourier_metrics, Metric};
use crate::lab::grating::{grating_frames, GratingSpec};
use crate::lab::probe::Probe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SfCpd,
    Contrast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub stimulus: f64,
    pub f0: f64,
    pub f1: f64,
    /// The metric the unit is summarised by (F0 or F1).
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub axis: Axis,
    pub unit_id: String,
    pub metric: Metric,
    /// Contrast of an SF curve, or SF of a contrast curve.
    pub fixed_value: f64,
    pub points: Vec<TuningPoint>,
}

impl TuningCurve {
    pub fn stimuli(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stimulus).collect()
    }

    pub fn responses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.response).collect()
    }
}

/// `n` log-spaced values from `min` to `max`, both endpoints exact.
pub fn sf_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min) || n < 2 {
        return Err(Error::Config(format!("bad SF grid [{min}, {max}] x {n}")));
    }
    let (a, b) = (min.ln(), max.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = min;
    g[n - 1] = max;
    Ok(g)
}

/// `n` evenly spaced contrasts from 0 to 1 inclusive.
pub fn contrast_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Config("contrast grid needs at least two points".into()));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("stimulus grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("stimulus grid must be strictly increasing".into()));
    }
    Ok(())
}

fn measure(probe: &dyn Probe, spec: &GratingSpec, geom: &FieldGeometry, stimulus: f64) -> Result<TuningPoint> {
    let frames = grating_frames(spec, geom)?;
    let m = fourier_metrics(&probe.record(&frames)?)?;
    Ok(TuningPoint {
        stimulus,
        f0: m.f0,
        f1: m.f1,
        response: m.get(probe.metric()),
    })
}

fn oriented(probe: &dyn Probe, base: &GratingSpec) -> GratingSpec {
    GratingSpec {
        orientation: probe.preferred_orientation().unwrap_or(base.orientation),
        ..*base
    }
}

/// Response versus grating SF at the contrast of `base`.
pub fn sf_tuning(probe: &dyn Probe, geom: &FieldGeometry, base: &GratingSpec, grid: &[f64]) -> Result<TuningCurve> {
    check_grid(grid)?;
    let base = oriented(probe, base);
    let points = grid
        .iter()
        .map(|&sf| measure(probe, &GratingSpec { sf_cpd: sf, ..base }, geom, sf))
        .collect::<Result<_>>()?;
    Ok(TuningCurve {
        axis: Axis::SfCpd,
        unit_id: probe.label(),
        metric: probe.metric(),
        fixed_value: base.contrast,
        points,
    })
}

/// Response versus grating contrast at the SF of `base`.
pub fn contrast_curve(probe: &dyn Probe, geom: &FieldGeometry, base: &GratingSpec, grid: &[f64]) -> Result<TuningCurve> {
    check_grid(grid)?;
    let base = oriented(probe, base);
    let points = grid
        .iter()
        .map(|&c| measure(probe, &GratingSpec { contrast: c, ..base }, geom, c))
        .collect::<Result<_>>()?;
    Ok(TuningCurve {
        axis: Axis::Contrast,
        unit_id: probe.label(),
        metric: probe.metric(),
        fixed_value: base.sf_cpd,
        points,
    })
}

/// SF with the largest response; the lowest SF wins ties.
pub fn optimal_sf(curve: &TuningCurve) -> Result<f64> {
    if curve.axis != Axis::SfCpd {
        return Err(Error::Config("optimal SF needs an SF tuning curve".into()));
    }
    let mut best: Option<&TuningPoint> = None;
    for p in &curve.points {
        if best.map_or(true, |b| p.response > b.response) {
            best = Some(p);
        }
    }
    best.map(|p| p.stimulus).ok_or(Error::Empty("tuning curve has no points"))
}

/// Half-amplitude SF bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub octaves: f64,
    pub f_low: f64,
    pub f_high: f64,
    /// The curve never fell to half maximum below the peak.
    pub open_low: bool,
    /// The curve never fell to half maximum above the peak.
    pub open_high: bool,
}

impl Bandwidth {
    pub fn is_open_ended(&self) -> bool {
        self.open_low || self.open_high
    }
}

fn log_crossing(f_a: f64, r_a: f64, f_b: f64, r_b: f64, level: f64) -> f64 {
    let t = (level - r_a) / (r_b - r_a);
    (f_a.ln() + t * (f_b.ln() - f_a.ln())).exp()
}

pub fn sf_bandwidth(curve: &TuningCurve) -> Result<Bandwidth> {
    if curve.axis != Axis::SfCpd {
        return Err(Error::Config("bandwidth needs an SF tuning curve".into()));
    }
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::Empty("tuning curve has no points"));
    }
    let (peak_i, peak) = pts
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, p)| {
            if p.response > bv {
                (i, p.response)
            } else {
                (bi, bv)
            }
        });
    let floor = pts.iter().map(|p| p.response).fold(f64::INFINITY, f64::min);
    if !(peak > 0.0) || peak == floor {
        return Err(Error::UndefinedBandwidth(format!(
            "{} has a flat or non-positive response",
            curve.unit_id
        )));
    }
    let half = peak / 2.0;

    let mut f_low = pts[0].stimulus;
    let mut open_low = true;
    for i in (0..peak_i).rev() {
        if pts[i].response < half {
            f_low = log_crossing(pts[i].stimulus, pts[i].response, pts[i + 1].stimulus, pts[i + 1].response, half);
            open_low = false;
            break;
        }
    }
    let mut f_high = pts[pts.len() - 1].stimulus;
    let mut open_high = true;
    for i in peak_i + 1..pts.len() {
        if pts[i].response < half {
            f_high = log_crossing(pts[i - 1].stimulus, pts[i - 1].response, pts[i].stimulus, pts[i].response, half);
            open_high = false;
            break;
        }
    }
    Ok(Bandwidth {
        octaves: (f_high / f_low).log2(),
        f_low,
        f_high,
        open_low,
        open_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, f64)]) -> TuningCurve {
        TuningCurve {
            axis: Axis::SfCpd,
            unit_id: "test".into(),
            metric: Metric::F1,
            fixed_value: 1.0,
            points: points
                .iter()
                .map(|&(s, r)| TuningPoint {
                    stimulus: s,
                    f0: 0.0,
                    f1: r,
                    response: r,
                })
                .collect(),
        }
    }

    #[test]
    fn grids_match_protocol() {
        let g = sf_grid(0.1, 9.3, 24).unwrap();
        assert_eq!(g.len(), 24);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[23], 9.3);
        assert!((g[19] - 4.228).abs() < 1e-3);
        assert!((g[12] - 1.064).abs() < 1e-3);
        let c = contrast_grid(24).unwrap();
        assert_eq!((c[0], c[23]), (0.0, 1.0));
        assert_eq!(c.len(), 24);
    }

    #[test]
    fn optimal_sf_prefers_lower_on_ties() {
        let c = curve(&[(1.0, 3.0), (2.0, 2.0), (4.0, 1.0)]);
        assert_eq!(optimal_sf(&c).unwrap(), 1.0);
        let c = curve(&[(1.0, 1.0), (2.0, 5.0), (4.0, 5.0)]);
        assert_eq!(optimal_sf(&c).unwrap(), 2.0);
        assert!(optimal_sf(&curve(&[])).is_err());
    }

    #[test]
    fn triangular_curve_bandwidth() {
        // linear in log2(sf): peak 1 at 2 cpd, 0.5 at 1 and 4 cpd, 0 at 0.5 and 8
        let pts: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&f: &f64| (f, 1.0 - ((f / 2.0) as f64).log2().abs() / 2.0))
            .collect();
        let bw = sf_bandwidth(&curve(&pts)).unwrap();
        assert!((bw.octaves - 2.0).abs() < 1e-12);
        assert!(!bw.is_open_ended());
    }

    #[test]
    fn open_ended_and_flat_bandwidth() {
        let bw = sf_bandwidth(&curve(&[(1.0, 1.0), (2.0, 0.9), (4.0, 0.4)])).unwrap();
        assert!(bw.open_low && !bw.open_high);
        let err = sf_bandwidth(&curve(&[(1.0, 1.0), (2.0, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::UndefinedBandwidth(_)));
    }
}
