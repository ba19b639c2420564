use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    F0,
    F1,
}

/// Activations of one recorded unit, one value per stimulus frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSeries {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMetrics {
    /// Mean response.
    pub f0: f64,
    /// Amplitude of the fundamental; a unit-amplitude sinusoid gives 1.
    pub f1: f64,
}

impl FourierMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F0 => self.f0,
            Metric::F1 => self.f1,
        }
    }
}

pub fn fourier_metrics(series: &ResponseSeries) -> Result<FourierMetrics> {
    let v = &series.values;
    if v.len() < 2 {
        return Err(Error::Empty("response series needs at least two frames"));
    }
    let n = v.len() as f64;
    let f0 = v.iter().sum::<f64>() / n;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, x) in v.iter().enumerate() {
        let (s, c) = (2.0 * PI * k as f64 / n).sin_cos();
        re += x * c;
        im -= x * s;
    }
    Ok(FourierMetrics {
        f0,
        f1: 2.0 / n * re.hypot(im),
    })
}
