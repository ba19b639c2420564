//! Linear-then-logarithmic contrast response fit.
//!
//! `R(c) = s*c` for `c <= c0` and `R(c) = s*c0*(1 + ln(c/c0))` above, which is
//! continuous with a continuous slope at `c0`. For fixed `c0` the model is
//! linear in `s`, so only `c0` needs a search: a sweep over the stimulus
//! contrasts followed by golden-section refinement around the best one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::tuning::{Axis, TuningCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastFit {
    pub saturation_onset_c0: f64,
    pub linear_slope: f64,
    /// Coefficient of the `ln(c/c0)` term, `s*c0`.
    pub log_gain: f64,
    /// Root-mean-square error of the fit.
    pub residual: f64,
}

impl ContrastFit {
    pub fn predict(&self, c: f64) -> f64 {
        self.linear_slope * basis(c, self.saturation_onset_c0)
    }
}

fn basis(c: f64, c0: f64) -> f64 {
    if c <= c0 {
        c
    } else {
        c0 * (1.0 + (c / c0).ln())
    }
}

/// Least-squares slope and SSE for a fixed onset.
fn solve(c: &[f64], r: &[f64], c0: f64) -> (f64, f64) {
    let (mut br, mut bb) = (0.0, 0.0);
    for (&ci, &ri) in c.iter().zip(r) {
        let b = basis(ci, c0);
        br += b * ri;
        bb += b * b;
    }
    let s = if bb > 0.0 { br / bb } else { 0.0 };
    let sse = c.iter().zip(r).map(|(&ci, &ri)| (ri - s * basis(ci, c0)).powi(2)).sum();
    (s, sse)
}

fn golden_section(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a) <= 1e-12 * b.abs().max(1e-12) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

pub fn fit_log_saturation(curve: &TuningCurve) -> Result<ContrastFit> {
    if curve.axis != Axis::Contrast {
        return Err(Error::Config("saturation fit needs a contrast-response curve".into()));
    }
    if curve.points.len() < 6 {
        return Err(Error::Config(format!(
            "saturation fit needs at least 6 points, got {}",
            curve.points.len()
        )));
    }
    let c = curve.stimuli();
    let r = curve.responses();
    if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config("saturation fit needs non-negative responses".into()));
    }
    if c.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) {
        return Err(Error::Config("contrasts must lie in [0, 1]".into()));
    }

    let candidates: Vec<f64> = c.iter().cloned().filter(|v| *v > 0.0).collect();
    if candidates.is_empty() {
        return Err(Error::Config("no positive contrast to anchor the fit".into()));
    }
    let (best_i, best_sse) = candidates
        .iter()
        .enumerate()
        .map(|(i, &c0)| (i, solve(&c, &r, c0).1))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });

    let lo = if best_i > 0 { candidates[best_i - 1] } else { candidates[0] * 0.5 };
    let hi = candidates.get(best_i + 1).copied().unwrap_or(candidates[best_i]);
    let refined = golden_section(lo, hi, |c0| solve(&c, &r, c0).1);
    let refined_sse = solve(&c, &r, refined).1;

    // keep the grid point unless refinement is a real improvement
    let scale: f64 = r.iter().map(|v| v * v).sum();
    let c0 = if best_sse - refined_sse > 1e-12 * scale {
        refined
    } else {
        candidates[best_i]
    };
    let (s, sse) = solve(&c, &r, c0);
    Ok(ContrastFit {
        saturation_onset_c0: c0,
        linear_slope: s,
        log_gain: s * c0,
        residual: (sse / c.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::fourier::Metric;
    use crate::lab::tuning::{contrast_grid, TuningPoint};

    fn curve(f: impl Fn(f64) -> f64) -> TuningCurve {
        TuningCurve {
            axis: Axis::Contrast,
            unit_id: "synthetic".into(),
            metric: Metric::F1,
            fixed_value: 1.0,
            points: contrast_grid(24)
                .unwrap()
                .into_iter()
                .map(|c| TuningPoint {
                    stimulus: c,
                    f0: 0.0,
                    f1: f(c),
                    response: f(c),
                })
                .collect(),
        }
    }

    #[test]
    fn linear_data_pins_onset_at_top() {
        let fit = fit_log_saturation(&curve(|c| 1.7 * c)).unwrap();
        assert_eq!(fit.saturation_onset_c0, 1.0);
        assert!((fit.linear_slope - 1.7).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn recovers_generated_onset() {
        let truth = ContrastFit {
            saturation_onset_c0: 0.3,
            linear_slope: 2.5,
            log_gain: 0.75,
            residual: 0.0,
        };
        let fit = fit_log_saturation(&curve(|c| truth.predict(c))).unwrap();
        assert!((fit.saturation_onset_c0 - 0.3).abs() < 0.02);
        assert!((fit.linear_slope - 2.5).abs() < 0.05);
    }

    #[test]
    fn degenerate_inputs_report_instead_of_failing() {
        let fit = fit_log_saturation(&curve(|_| 0.0)).unwrap();
        assert_eq!(fit.linear_slope, 0.0);
        let noisy = fit_log_saturation(&curve(|c| if (c * 23.0).round() as i32 % 2 == 0 { 1.0 } else { 0.2 }))
            .unwrap();
        assert!(noisy.residual > 0.1);
    }

    #[test]
    fn rejects_bad_curves() {
        let mut c = curve(|c| c);
        c.points.truncate(5);
        assert!(fit_log_saturation(&c).is_err());
        let mut c = curve(|c| c);
        c.points[3].response = -1.0;
        assert!(fit_log_saturation(&c).is_err());
    }
}
