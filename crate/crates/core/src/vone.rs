//! Noise-free V1 block: a seeded Gabor filter bank with simple (rectified)
//! and complex (quadrature energy) units, applied at stride 2.

use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::{conv2d, conv2d_at, output_dim};
use crate::error::{Error, Result};
use crate::geometry::FieldGeometry;
use crate::kernel::{gabor_pair, GaborParams, Kernel, GABOR_SF_BOUNDS_CPD};
use crate::retina::{RetinaBlock, RETINA_CHANNELS};
use crate::tensor::{ImageTensor, Plane};

/// Preferred orientation: a weighted choice of bin centre, then uniform
/// jitter of `half_width_deg` either side. Angles are bar orientations in
/// degrees, folded into [0, 180).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationTable {
    pub centers_deg: Vec<f64>,
    pub weights: Vec<f64>,
    pub half_width_deg: f64,
}

impl Default for OrientationTable {
    fn default() -> Self {
        Self {
            centers_deg: vec![0.0, 45.0, 90.0, 135.0],
            weights: vec![66.0, 49.0, 77.0, 54.0],
            half_width_deg: 22.5,
        }
    }
}

/// Peak spatial frequency: a weighted choice of bin, log-uniform within it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfTable {
    pub edges_cpd: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for SfTable {
    fn default() -> Self {
        Self {
            edges_cpd: vec![0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 5.6, 8.0, 11.3],
            weights: vec![4.0, 4.0, 8.0, 25.0, 32.0, 26.0, 28.0, 12.0, 2.0],
        }
    }
}

/// Envelope widths in carrier cycles: `nx` log-uniform, `ny = nx * U(ratio)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeTable {
    pub nx_min: f64,
    pub nx_max: f64,
    pub ny_ratio_min: f64,
    pub ny_ratio_max: f64,
}

impl Default for EnvelopeTable {
    fn default() -> Self {
        Self {
            nx_min: 0.1,
            nx_max: 0.7,
            ny_ratio_min: 1.0,
            ny_ratio_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfbConfig {
    pub n_units: usize,
    pub n_simple: usize,
    pub n_complex: usize,
    pub sf_bounds_cpd: [f64; 2],
    pub orientation: OrientationTable,
    pub sf: SfTable,
    pub envelope: EnvelopeTable,
    pub stride: usize,
    pub kernel_cap_px: usize,
    /// Supplied by the run configuration, not by the `[gfb]` table.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GfbConfig {
    fn default() -> Self {
        Self {
            n_units: 512,
            n_simple: 256,
            n_complex: 256,
            sf_bounds_cpd: [GABOR_SF_BOUNDS_CPD.0, GABOR_SF_BOUNDS_CPD.1],
            orientation: OrientationTable::default(),
            sf: SfTable::default(),
            envelope: EnvelopeTable::default(),
            stride: 2,
            kernel_cap_px: 31,
            seed: 0,
        }
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config(format!("{name} weights must be finite and non-negative")));
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::Config(format!("{name} weights sum to zero")));
    }
    Ok(())
}

impl GfbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::Config("the bank needs at least one unit".into()));
        }
        if self.n_simple + self.n_complex != self.n_units {
            return Err(Error::Config(format!(
                "{} simple + {} complex units do not make {}",
                self.n_simple, self.n_complex, self.n_units
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        let [lo, hi] = self.sf_bounds_cpd;
        let (min, max) = GABOR_SF_BOUNDS_CPD;
        if !(lo >= min && hi <= max && lo < hi) {
            return Err(Error::Config(format!(
                "SF bounds [{lo}, {hi}] must be an interval inside [{min}, {max}]"
            )));
        }

        let o = &self.orientation;
        check_weights("orientation", &o.weights)?;
        if o.centers_deg.len() != o.weights.len() {
            return Err(Error::Config("orientation centres and weights differ in length".into()));
        }
        if !(o.half_width_deg >= 0.0 && o.half_width_deg.is_finite())
            || o.centers_deg.iter().any(|c| !c.is_finite())
        {
            return Err(Error::Config("orientation table has non-finite entries".into()));
        }

        let s = &self.sf;
        check_weights("SF", &s.weights)?;
        if s.edges_cpd.len() != s.weights.len() + 1 {
            return Err(Error::Config("SF table needs one more edge than weights".into()));
        }
        if s.edges_cpd[0] <= 0.0 || s.edges_cpd.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("SF edges must be positive and increasing".into()));
        }
        let reachable = s
            .weights
            .iter()
            .zip(s.edges_cpd.windows(2))
            .any(|(w, e)| *w > 0.0 && e[1] > lo && e[0] < hi);
        if !reachable {
            return Err(Error::Config("no weighted SF bin overlaps the SF bounds".into()));
        }

        let e = &self.envelope;
        if !(e.nx_min > 0.0 && e.nx_max >= e.nx_min && e.ny_ratio_min > 0.0 && e.ny_ratio_max >= e.ny_ratio_min)
        {
            return Err(Error::Config("envelope ranges must be positive and ordered".into()));
        }
        if self.kernel_cap_px < 3 {
            return Err(Error::Config("kernel cap must be at least 3 px".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellType {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaborUnit {
    pub params: GaborParams,
    pub cell_type: CellType,
    pub input_channel: usize,
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

const MAX_SF_DRAWS: usize = 10_000;

/// Draws unit parameters. Gabor parameters come from one ChaCha stream and
/// input channels from a second, so banks for 3- and 4-channel inputs share
/// the same filters.
pub fn sample_units(cfg: &GfbConfig, geom: &FieldGeometry, input_channels: usize) -> Result<Vec<GaborUnit>> {
    cfg.validate()?;
    geom.validate()?;
    if input_channels == 0 {
        return Err(Error::Config("input must have at least one channel".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut channel_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    channel_rng.set_stream(1);

    let ori_bins = WeightedIndex::new(&cfg.orientation.weights)
        .map_err(|e| Error::Config(format!("orientation table: {e}")))?;
    let sf_bins =
        WeightedIndex::new(&cfg.sf.weights).map_err(|e| Error::Config(format!("SF table: {e}")))?;
    let [sf_lo, sf_hi] = cfg.sf_bounds_cpd;
    let env = &cfg.envelope;

    let mut units = Vec::with_capacity(cfg.n_units);
    for i in 0..cfg.n_units {
        let b = ori_bins.sample(&mut rng);
        let hw = cfg.orientation.half_width_deg;
        let jitter = if hw > 0.0 { rng.gen_range(-hw..hw) } else { 0.0 };
        let theta = (cfg.orientation.centers_deg[b] + jitter).rem_euclid(180.0).to_radians();

        let mut sf = None;
        for _ in 0..MAX_SF_DRAWS {
            let b = sf_bins.sample(&mut rng);
            let s = log_uniform(&mut rng, cfg.sf.edges_cpd[b], cfg.sf.edges_cpd[b + 1]);
            if (sf_lo..=sf_hi).contains(&s) {
                sf = Some(s);
                break;
            }
        }
        let sf_cpd = sf.ok_or_else(|| Error::Config("SF table rarely lands inside the SF bounds".into()))?;

        let nx = log_uniform(&mut rng, env.nx_min, env.nx_max);
        let ny = nx * rng.gen_range(env.ny_ratio_min..=env.ny_ratio_max);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let params = GaborParams {
            theta,
            sf_cpd,
            phase,
            nx,
            ny,
            kernel_px: GaborParams::auto_kernel_px(sf_cpd, nx, ny, geom, cfg.kernel_cap_px),
        };
        let cell_type = if i < cfg.n_simple {
            CellType::Simple
        } else {
            CellType::Complex
        };
        units.push(GaborUnit {
            params,
            cell_type,
            input_channel: channel_rng.gen_range(0..input_channels),
        });
    }
    Ok(units)
}

/// A sampled filter bank with its quadrature kernels built.
#[derive(Debug, Clone)]
pub struct GaborBank {
    units: Vec<GaborUnit>,
    kernels: Vec<(Kernel, Kernel)>,
    geometry: FieldGeometry,
    stride: usize,
    seed: u64,
    input_channels: usize,
}

impl GaborBank {
    /// Builds kernels for an explicit list of units.
    pub fn from_units(
        units: Vec<GaborUnit>,
        geometry: FieldGeometry,
        stride: usize,
        seed: u64,
        input_channels: usize,
    ) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if let Some(u) = units.iter().find(|u| u.input_channel >= input_channels) {
            return Err(Error::Shape(format!(
                "unit reads channel {} of a {input_channels}-channel input",
                u.input_channel
            )));
        }
        let kernels = units
            .iter()
            .map(|u| gabor_pair(&u.params, &geometry))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            units,
            kernels,
            geometry,
            stride,
            seed,
            input_channels,
        })
    }

    pub fn units(&self) -> &[GaborUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn kernels(&self, i: usize) -> &(Kernel, Kernel) {
        &self.kernels[i]
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.geometry
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    /// Same bank with units reordered so unit `i` becomes `self[order[i]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config("not a permutation of the bank".into()));
            }
        }
        if order.len() != self.len() {
            return Err(Error::Config("not a permutation of the bank".into()));
        }
        Ok(Self {
            units: order.iter().map(|&i| self.units[i]).collect(),
            kernels: order.iter().map(|&i| self.kernels[i].clone()).collect(),
            ..self.clone()
        })
    }

    fn input_plane(&self, i: usize, input: &ImageTensor) -> Result<Plane> {
        input.plane(self.units[i].input_channel)
    }

    pub fn unit_response(&self, i: usize, input: &ImageTensor) -> Result<Plane> {
        let plane = self.input_plane(i, input)?;
        let (even, odd) = &self.kernels[i];
        let e = conv2d(&plane, even, self.stride)?;
        match self.units[i].cell_type {
            CellType::Simple => Ok(e.map(|v| v.max(0.0))),
            CellType::Complex => {
                let o = conv2d(&plane, odd, self.stride)?;
                Ok(e.zip_map(&o, f64::hypot))
            }
        }
    }

    /// Response of unit `i` at one output location, reading `plane` directly.
    pub fn unit_response_at(&self, i: usize, plane: &Plane, oy: usize, ox: usize) -> Result<f64> {
        let (even, odd) = &self.kernels[i];
        let e = conv2d_at(plane, even, self.stride, oy, ox)?;
        Ok(match self.units[i].cell_type {
            CellType::Simple => e.max(0.0),
            CellType::Complex => e.hypot(conv2d_at(plane, odd, self.stride, oy, ox)?),
        })
    }

    /// Output index whose receptive-field centre is nearest the image centre.
    pub fn probe_index(&self) -> usize {
        let n = self.geometry.resolution_px;
        let out = output_dim(n, self.stride);
        let target = (n / 2) as f64 / self.stride as f64;
        (target.round() as usize).min(out - 1)
    }
}

/// Samples a bank for an input with `input_channels` channels.
pub fn sample_gfb(cfg: &GfbConfig, geom: &FieldGeometry, input_channels: usize) -> Result<GaborBank> {
    let units = sample_units(cfg, geom, input_channels)?;
    GaborBank::from_units(units, *geom, cfg.stride, cfg.seed, input_channels)
}

/// Response of a single unit, building its kernels on the fly.
pub fn unit_response(unit: &GaborUnit, geom: &FieldGeometry, stride: usize, input: &ImageTensor) -> Result<Plane> {
    let bank = GaborBank::from_units(vec![*unit], *geom, stride, 0, input.channels().max(unit.input_channel + 1))?;
    bank.unit_response(0, input)
}

/// Applies every unit of the bank; channel `i` of the output is unit `i`.
pub fn voneblock_forward(input: &ImageTensor, bank: &GaborBank) -> Result<ImageTensor> {
    let n = bank.geometry.resolution_px;
    if input.height() != n || input.width() != n {
        return Err(Error::Config(format!(
            "input is {}x{} but the bank expects {n}x{n}",
            input.height(),
            input.width()
        )));
    }
    if input.channels() != bank.input_channels {
        return Err(Error::Config(format!(
            "bank was sampled for {} input channels, input has {}",
            bank.input_channels,
            input.channels()
        )));
    }
    let planes = (0..bank.len())
        .into_par_iter()
        .map(|i| bank.unit_response(i, input))
        .collect::<Result<Vec<_>>>()?;
    ImageTensor::from_planes(planes)
}

/// Maps [0, 1] pixel values to [-1, 1], the input scaling used when the V1
/// block sees raw images.
pub fn standardize(image: &ImageTensor) -> ImageTensor {
    image.map(|v| (v - 0.5) / 0.5)
}

/// V1 block on a raw RGB image (no retina block in front).
pub fn vone_front(image: &ImageTensor, bank: &GaborBank) -> Result<ImageTensor> {
    voneblock_forward(&standardize(image), bank)
}

/// Retina block followed by the V1 block.
pub fn evfront_forward(image: &ImageTensor, retina: &RetinaBlock, bank: &GaborBank) -> Result<ImageTensor> {
    if bank.input_channels != RETINA_CHANNELS {
        return Err(Error::Config(format!(
            "bank samples {} channels but the retina block emits {RETINA_CHANNELS}",
            bank.input_channels
        )));
    }
    if retina.geometry() != bank.geometry() {
        return Err(Error::Config("retina and bank geometries differ".into()));
    }
    voneblock_forward(&retina.forward(image)?, bank)
}
