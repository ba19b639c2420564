//! Fixed-weight filter synthesis: Gaussians, difference-of-Gaussians and
//! Gabor quadrature pairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FieldGeometry;

/// Peak spatial-frequency range admitted for Gabor units, in cycles/deg.
pub const GABOR_SF_BOUNDS_CPD: (f64, f64) = (0.5, 11.3);

/// A Gabor kernel must span at least this fraction of the envelope's
/// narrower standard deviation on each side of its centre.
pub const GABOR_MIN_ENVELOPE_COVERAGE: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Dog,
    GaborEven,
    GaborOdd,
}

/// Square, odd-sized filter tape.
///
/// Gaussian and DoG kernels also carry a low-rank factorisation
/// `sum_k coef_k * outer(v_k, v_k)`, which the convolution engine uses to run
/// two 1-D passes instead of a dense 2-D sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
    kind: KernelKind,
    sum: f64,
    factors: Vec<(f64, Vec<f64>)>,
}

impl Kernel {
    fn dense(size: usize, weights: Vec<f64>, kind: KernelKind) -> Self {
        debug_assert_eq!(weights.len(), size * size);
        let sum = weights.iter().sum();
        Self {
            size,
            weights,
            kind,
            sum,
            factors: Vec::new(),
        }
    }

    fn factored(size: usize, factors: Vec<(f64, Vec<f64>)>, kind: KernelKind) -> Self {
        let mut weights = vec![0.0; size * size];
        for (coef, v) in &factors {
            for (i, vi) in v.iter().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    weights[i * size + j] += coef * vi * vj;
                }
            }
        }
        let sum = weights.iter().sum();
        Self {
            size,
            weights,
            kind,
            sum,
            factors,
        }
    }

    pub fn height(&self) -> usize {
        self.size
    }

    pub fn width(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn weight(&self, y: usize, x: usize) -> f64 {
        self.weights[y * self.size + x]
    }

    pub fn center_weight(&self) -> f64 {
        let h = self.size / 2;
        self.weight(h, h)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub(crate) fn factors(&self) -> &[(f64, Vec<f64>)] {
        &self.factors
    }

    /// Complex response `sum w(x) exp(-2 pi i f.x)` at a frequency vector in
    /// cycles/px, with `x` measured from the kernel centre (column, row).
    pub fn frequency_response(&self, fx: f64, fy: f64) -> (f64, f64) {
        let h = (self.size / 2) as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..self.size {
            let dy = i as f64 - h;
            for j in 0..self.size {
                let dx = j as f64 - h;
                let arg = -2.0 * PI * (fx * dx + fy * dy);
                let w = self.weight(i, j);
                re += w * arg.cos();
                im += w * arg.sin();
            }
        }
        (re, im)
    }
}

fn check_kernel_px(kernel_px: usize, geom: &FieldGeometry) -> Result<()> {
    if kernel_px == 0 || kernel_px % 2 == 0 {
        return Err(Error::Config(format!(
            "kernel size must be odd and positive, got {kernel_px} px"
        )));
    }
    if kernel_px > 4 * geom.resolution_px {
        return Err(Error::Config(format!(
            "kernel of {kernel_px} px exceeds four times the {} px resolution",
            geom.resolution_px
        )));
    }
    Ok(())
}

/// Unity-sum 1-D Gaussian tap `exp(-(x/r)^2)` sampled at integer offsets.
fn gaussian_taps(radius_px: f64, kernel_px: usize) -> Vec<f64> {
    let h = (kernel_px / 2) as f64;
    let mut taps: Vec<f64> = (0..kernel_px)
        .map(|i| {
            let x = i as f64 - h;
            (-(x / radius_px).powi(2)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Unity-sum isotropic Gaussian `exp(-(x^2 + y^2) / r^2)`, where `r` is the
/// 1/e radius.
pub fn gaussian_kernel(radius_deg: f64, kernel_px: usize, geom: &FieldGeometry) -> Result<Kernel> {
    geom.validate()?;
    if !(radius_deg.is_finite() && radius_deg > 0.0) {
        return Err(Error::Config(format!(
            "Gaussian radius must be positive, got {radius_deg} deg"
        )));
    }
    check_kernel_px(kernel_px, geom)?;
    let taps = gaussian_taps(geom.deg_to_px(radius_deg), kernel_px);
    Ok(Kernel::factored(kernel_px, vec![(1.0, taps)], KernelKind::Gaussian))
}

/// Centre-surround receptive field parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DogParams {
    /// Centre Gaussian 1/e radius.
    pub rc_deg: f64,
    /// Surround Gaussian 1/e radius.
    pub rs_deg: f64,
    /// Integrated surround strength over integrated centre strength.
    pub surround_to_center_ratio: f64,
    pub kernel_px: usize,
}

impl DogParams {
    /// Midget (parvocellular) defaults.
    pub fn midget() -> Self {
        Self {
            rc_deg: 0.03,
            rs_deg: 0.14,
            surround_to_center_ratio: 0.55,
            kernel_px: 21,
        }
    }

    /// Parasol (magnocellular) defaults.
    pub fn parasol() -> Self {
        Self {
            rc_deg: 0.10,
            rs_deg: 0.72,
            surround_to_center_ratio: 0.55,
            kernel_px: 65,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rc_deg.is_finite() && self.rc_deg > 0.0) {
            return Err(Error::InvalidDog(format!(
                "centre radius must be positive, got {}",
                self.rc_deg
            )));
        }
        if !(self.rs_deg.is_finite() && self.rs_deg > self.rc_deg) {
            return Err(Error::InvalidDog(format!(
                "surround radius {} must exceed centre radius {}",
                self.rs_deg, self.rc_deg
            )));
        }
        let r = self.surround_to_center_ratio;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidDog(format!(
                "surround/centre ratio must lie in (0, 1), got {r}"
            )));
        }
        if self.kernel_px < 3 || self.kernel_px % 2 == 0 {
            return Err(Error::Config(format!(
                "DoG kernel size must be odd and at least 3, got {}",
                self.kernel_px
            )));
        }
        Ok(())
    }

    /// Gain applied to the centre term so the whole kernel sums to one.
    pub fn center_gain(&self) -> f64 {
        1.0 / (1.0 - self.surround_to_center_ratio)
    }

    pub fn surround_gain(&self) -> f64 {
        self.surround_to_center_ratio / (1.0 - self.surround_to_center_ratio)
    }
}

/// `(Gc - ratio * Gs) / (1 - ratio)` with unity-sum Gaussian components.
pub fn dog_kernel(params: &DogParams, geom: &FieldGeometry) -> Result<Kernel> {
    params.validate()?;
    let center = gaussian_kernel(params.rc_deg, params.kernel_px, geom)?;
    let surround = gaussian_kernel(params.rs_deg, params.kernel_px, geom)?;
    let factors = vec![
        (params.center_gain(), center.factors[0].1.clone()),
        (-params.surround_gain(), surround.factors[0].1.clone()),
    ];
    Ok(Kernel::factored(params.kernel_px, factors, KernelKind::Dog))
}

/// Gabor receptive field. `theta` is the orientation of the bars (0 =
/// horizontal), so the carrier runs along the normal `u = -x sin + y cos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaborParams {
    pub theta: f64,
    pub sf_cpd: f64,
    pub phase: f64,
    /// Envelope s.d. across the bars, in carrier cycles.
    pub nx: f64,
    /// Envelope s.d. along the bars, in carrier cycles.
    pub ny: f64,
    pub kernel_px: usize,
}

impl GaborParams {
    /// Smallest odd size holding +-3 s.d. of the wider envelope axis, capped.
    pub fn auto_kernel_px(sf_cpd: f64, nx: f64, ny: f64, geom: &FieldGeometry, cap_px: usize) -> usize {
        let sigma_px = geom.deg_to_px(nx.max(ny) / sf_cpd);
        let full = 2 * (3.0 * sigma_px).ceil() as usize + 1;
        let cap = if cap_px % 2 == 0 { cap_px.saturating_sub(1) } else { cap_px };
        full.min(cap.max(3))
    }

    pub fn sigma_px(&self, geom: &FieldGeometry) -> (f64, f64) {
        (
            geom.deg_to_px(self.nx / self.sf_cpd),
            geom.deg_to_px(self.ny / self.sf_cpd),
        )
    }

    pub fn validate(&self, geom: &FieldGeometry) -> Result<()> {
        geom.validate()?;
        let (lo, hi) = GABOR_SF_BOUNDS_CPD;
        if !(self.sf_cpd >= lo && self.sf_cpd <= hi) {
            return Err(Error::Config(format!(
                "Gabor SF {} cpd outside [{lo}, {hi}]",
                self.sf_cpd
            )));
        }
        if !(self.nx > 0.0 && self.ny > 0.0 && self.nx.is_finite() && self.ny.is_finite()) {
            return Err(Error::Config(format!(
                "envelope widths must be positive, got nx={} ny={}",
                self.nx, self.ny
            )));
        }
        if !(self.theta.is_finite() && self.phase.is_finite()) {
            return Err(Error::Config("orientation and phase must be finite".into()));
        }
        check_kernel_px(self.kernel_px, geom)?;
        if self.kernel_px < 3 {
            return Err(Error::Config("Gabor kernel must be at least 3 px".into()));
        }
        let period_px = geom.px_per_deg() / self.sf_cpd;
        if period_px <= 2.0 {
            return Err(Error::Config(format!(
                "carrier period {period_px:.3} px is at or beyond the Nyquist limit"
            )));
        }
        let half = (self.kernel_px / 2) as f64;
        let (sx, sy) = self.sigma_px(geom);
        if half < GABOR_MIN_ENVELOPE_COVERAGE * sx.min(sy) {
            return Err(Error::Config(format!(
                "{} px kernel cannot contain an envelope of s.d. {:.1} px",
                self.kernel_px,
                sx.min(sy)
            )));
        }
        Ok(())
    }
}

/// Builds the (even, odd) quadrature pair for a Gabor unit.
///
/// Both phase-0 components are scaled to unit gain at their own carrier and
/// then rotated by `phase`, so the pair answers a matched grating with equal
/// amplitude and a 90 degree phase lag regardless of how narrow the envelope
/// is.
pub fn gabor_pair(params: &GaborParams, geom: &FieldGeometry) -> Result<(Kernel, Kernel)> {
    params.validate(geom)?;
    let n = params.kernel_px;
    let h = (n / 2) as f64;
    let (sx, sy) = params.sigma_px(geom);
    let f = params.sf_cpd / geom.px_per_deg();
    let (sin_t, cos_t) = params.theta.sin_cos();

    let mut even = Vec::with_capacity(n * n);
    let mut odd = Vec::with_capacity(n * n);
    let (mut ge_re, mut ge_im, mut go_re, mut go_im) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let dy = i as f64 - h;
        for j in 0..n {
            let dx = j as f64 - h;
            let u = -dx * sin_t + dy * cos_t;
            let v = dx * cos_t + dy * sin_t;
            let env = (-0.5 * ((u / sx).powi(2) + (v / sy).powi(2))).exp();
            let (s, c) = (2.0 * PI * f * u).sin_cos();
            let (e, o) = (env * c, env * s);
            // gain against exp(-2 pi i f u)
            ge_re += e * c;
            ge_im -= e * s;
            go_re += o * c;
            go_im -= o * s;
            even.push(e);
            odd.push(o);
        }
    }
    let ge = ge_re.hypot(ge_im);
    let go = go_re.hypot(go_im);
    if !(ge > 1e-12 && go > 1e-12) {
        return Err(Error::Config(format!(
            "degenerate Gabor pair at {} cpd (carrier gain {ge:.3e}/{go:.3e})",
            params.sf_cpd
        )));
    }
    let (sp, cp) = params.phase.sin_cos();
    let (even, odd): (Vec<f64>, Vec<f64>) = even
        .iter()
        .zip(&odd)
        .map(|(&e, &o)| {
            let (e, o) = (e / ge, o / go);
            (cp * e - sp * o, sp * e + cp * o)
        })
        .unzip();
    Ok((
        Kernel::dense(n, even, KernelKind::GaborEven),
        Kernel::dense(n, odd, KernelKind::GaborOdd),
    ))
}
