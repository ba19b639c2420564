//! Retina/LGN block: light adaptation, colour-opponent DoG pathways and
//! contrast normalisation on the parasol pathway.
//!
//! Output channels are `[midget_rg, midget_gr, midget_by, parasol]`. All
//! stages run at stride 1 so spatial dimensions are preserved, and outputs
//! are signed (on and off polarities share one channel).

use serde::{Deserialize, Serialize};

use crate::conv::conv2d;
use crate::error::{Error, Result};
use crate::geometry::FieldGeometry;
use crate::kernel::{gaussian_kernel, DogParams, Kernel};
use crate::tensor::{ImageTensor, Plane};

pub const RETINA_CHANNELS: usize = 4;
pub const MIDGET_RG: usize = 0;
pub const MIDGET_GR: usize = 1;
pub const MIDGET_BY: usize = 2;
pub const PARASOL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightAdaptParams {
    pub pool_radius_deg: f64,
    pub kernel_px: usize,
    /// Floor on the pooled luminance used as divisor.
    pub epsilon: f64,
}

impl Default for LightAdaptParams {
    fn default() -> Self {
        Self {
            pool_radius_deg: 2.625,
            kernel_px: 85,
            epsilon: 1e-6,
        }
    }
}

impl LightAdaptParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pool_radius_deg > 0.0 && self.pool_radius_deg.is_finite()) {
            return Err(Error::Config("light-adaptation pool radius must be positive".into()));
        }
        if self.kernel_px % 2 == 0 {
            return Err(Error::Config("light-adaptation kernel must be odd".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("light-adaptation epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Opponency {
    RedGreen,
    GreenRed,
    BlueYellow,
    Achromatic,
}

impl Opponency {
    pub const ORDER: [Opponency; RETINA_CHANNELS] = [
        Opponency::RedGreen,
        Opponency::GreenRed,
        Opponency::BlueYellow,
        Opponency::Achromatic,
    ];
}

/// Cone (RGB) weighting of the centre and surround signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpponencySpec {
    pub name: Opponency,
    pub center_weights: [f64; 3],
    pub surround_weights: [f64; 3],
}

impl OpponencySpec {
    pub fn standard(name: Opponency) -> Self {
        let third = 1.0 / 3.0;
        let (center_weights, surround_weights) = match name {
            Opponency::RedGreen => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            Opponency::GreenRed => ([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]),
            Opponency::BlueYellow => ([0.0, 0.0, 1.0], [0.5, 0.5, 0.0]),
            Opponency::Achromatic => ([third; 3], [third; 3]),
        };
        Self {
            name,
            center_weights,
            surround_weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, w) in [("centre", self.center_weights), ("surround", self.surround_weights)] {
            if w.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Config(format!(
                    "{:?} {label} weights must be non-negative",
                    self.name
                )));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{:?} {label} weights sum to {total}, expected 1",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastNormParams {
    /// Half-response contrast.
    pub c50: f64,
    pub pool_radius_deg: f64,
    pub kernel_px: usize,
}

impl Default for ContrastNormParams {
    fn default() -> Self {
        Self {
            c50: 0.3,
            pool_radius_deg: 0.72,
            kernel_px: 65,
        }
    }
}

impl ContrastNormParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c50 > 0.0 && self.c50.is_finite()) {
            return Err(Error::Config("c50 must be positive".into()));
        }
        if !(self.pool_radius_deg > 0.0 && self.pool_radius_deg.is_finite()) {
            return Err(Error::Config("contrast pool radius must be positive".into()));
        }
        if self.kernel_px % 2 == 0 {
            return Err(Error::Config("contrast pool kernel must be odd".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetinaBlockConfig {
    pub geometry: FieldGeometry,
    pub light_adapt: LightAdaptParams,
    pub midget_dog: DogParams,
    pub parasol_dog: DogParams,
    pub contrast_norm: ContrastNormParams,
    /// One entry per output channel, in channel order.
    pub opponency: Vec<OpponencySpec>,
}

impl Default for RetinaBlockConfig {
    fn default() -> Self {
        Self {
            geometry: FieldGeometry::default(),
            light_adapt: LightAdaptParams::default(),
            midget_dog: DogParams::midget(),
            parasol_dog: DogParams::parasol(),
            contrast_norm: ContrastNormParams::default(),
            opponency: Opponency::ORDER.iter().map(|&n| OpponencySpec::standard(n)).collect(),
        }
    }
}

impl RetinaBlockConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.light_adapt.validate()?;
        self.midget_dog.validate()?;
        self.parasol_dog.validate()?;
        self.contrast_norm.validate()?;
        if self.opponency.len() != RETINA_CHANNELS {
            return Err(Error::Config(format!(
                "expected {RETINA_CHANNELS} opponency entries, got {}",
                self.opponency.len()
            )));
        }
        for (spec, want) in self.opponency.iter().zip(Opponency::ORDER) {
            if spec.name != want {
                return Err(Error::Config(format!(
                    "opponency entries must be ordered {:?}",
                    Opponency::ORDER
                )));
            }
            spec.validate()?;
        }
        if (self.parasol_dog.rs_deg - self.contrast_norm.pool_radius_deg).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "contrast pool radius {} must equal the parasol surround radius {}",
                self.contrast_norm.pool_radius_deg, self.parasol_dog.rs_deg
            )));
        }
        Ok(())
    }
}

fn check_rgb(image: &ImageTensor) -> Result<()> {
    if image.channels() != 3 {
        return Err(Error::Shape(format!(
            "expected a 3-channel RGB image, got {} channels",
            image.channels()
        )));
    }
    Ok(())
}

fn weighted_sum(image: &ImageTensor, w: &[f64; 3]) -> Plane {
    let n = image.height() * image.width();
    let mut out = vec![0.0; n];
    for (c, &wc) in w.iter().enumerate() {
        if wc == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(image.channel_slice(c)) {
            *o += wc * v;
        }
    }
    Plane::from_raw(image.height(), image.width(), out)
}

fn adapt_with(image: &ImageTensor, pool: &Kernel, epsilon: f64) -> Result<(ImageTensor, Plane)> {
    check_rgb(image)?;
    // pool deviations from a reference so a constant image pools to itself exactly
    let lum = image.channel_mean();
    let reference = lum.data().first().copied().unwrap_or(0.0);
    let mean_lum = conv2d(&lum.map(|v| v - reference), pool, 1)?.map(|v| v + reference);
    let planes = (0..3)
        .map(|c| {
            let x = Plane::from_raw(image.height(), image.width(), image.channel_slice(c).to_vec());
            x.zip_map(&mean_lum, |v, m| (v - m) / m.max(epsilon))
        })
        .collect();
    Ok((ImageTensor::from_planes(planes)?, mean_lum))
}

/// Subtracts and divides each channel by the Gaussian-pooled mean luminance.
/// Returns the adapted image and the pooled luminance plane.
pub fn light_adapt(
    image: &ImageTensor,
    p: &LightAdaptParams,
    geom: &FieldGeometry,
) -> Result<(ImageTensor, Plane)> {
    p.validate()?;
    let pool = gaussian_kernel(p.pool_radius_deg, p.kernel_px, geom)?;
    adapt_with(image, &pool, p.epsilon)
}

/// Pre-built centre and surround Gaussians of one DoG pathway.
#[derive(Debug, Clone)]
struct DogStage {
    center: Kernel,
    surround: Kernel,
    center_gain: f64,
    surround_gain: f64,
}

impl DogStage {
    fn new(p: &DogParams, geom: &FieldGeometry) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            center: gaussian_kernel(p.rc_deg, p.kernel_px, geom)?,
            surround: gaussian_kernel(p.rs_deg, p.kernel_px, geom)?,
            center_gain: p.center_gain(),
            surround_gain: p.surround_gain(),
        })
    }

    fn apply(&self, adapted: &ImageTensor, spec: &OpponencySpec) -> Result<Plane> {
        check_rgb(adapted)?;
        let c = conv2d(&weighted_sum(adapted, &spec.center_weights), &self.center, 1)?;
        let s = conv2d(&weighted_sum(adapted, &spec.surround_weights), &self.surround, 1)?;
        let (gc, gs) = (self.center_gain, self.surround_gain);
        Ok(c.zip_map(&s, |a, b| gc * a - gs * b))
    }
}

/// Colour-opponent centre-surround response of a light-adapted image.
pub fn opponent_dog(
    adapted: &ImageTensor,
    spec: &OpponencySpec,
    dog: &DogParams,
    geom: &FieldGeometry,
) -> Result<Plane> {
    spec.validate()?;
    DogStage::new(dog, geom)?.apply(adapted, spec)
}

fn normalize_with(x_dog: &Plane, pool: &Kernel, c50: f64) -> Result<Plane> {
    let energy = conv2d(&x_dog.map(|v| v * v), pool, 1)?;
    // pooled energy of a non-negative signal can round slightly below zero
    Ok(x_dog.zip_map(&energy, |x, e| x / (c50 + e.max(0.0).sqrt())))
}

/// Divides a DoG response by its Gaussian-pooled local contrast plus `c50`.
pub fn contrast_normalize(x_dog: &Plane, p: &ContrastNormParams, geom: &FieldGeometry) -> Result<Plane> {
    p.validate()?;
    let pool = gaussian_kernel(p.pool_radius_deg, p.kernel_px, geom)?;
    normalize_with(x_dog, &pool, p.c50)
}

/// Retina block with all kernels built once.
#[derive(Debug, Clone)]
pub struct RetinaBlock {
    config: RetinaBlockConfig,
    la_pool: Kernel,
    midget: DogStage,
    parasol: DogStage,
    cn_pool: Kernel,
}

impl RetinaBlock {
    pub fn new(config: RetinaBlockConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.geometry;
        Ok(Self {
            la_pool: gaussian_kernel(config.light_adapt.pool_radius_deg, config.light_adapt.kernel_px, g)?,
            midget: DogStage::new(&config.midget_dog, g)?,
            parasol: DogStage::new(&config.parasol_dog, g)?,
            cn_pool: gaussian_kernel(config.contrast_norm.pool_radius_deg, config.contrast_norm.kernel_px, g)?,
            config,
        })
    }

    pub fn config(&self) -> &RetinaBlockConfig {
        &self.config
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.config.geometry
    }

    /// The unity-sum Gaussians the block convolves with, by name.
    pub fn kernels(&self) -> Vec<(&'static str, &Kernel)> {
        vec![
            ("light_adapt_pool", &self.la_pool),
            ("midget_center", &self.midget.center),
            ("midget_surround", &self.midget.surround),
            ("parasol_center", &self.parasol.center),
            ("parasol_surround", &self.parasol.surround),
            ("contrast_pool", &self.cn_pool),
        ]
    }

    fn check_geometry(&self, image: &ImageTensor) -> Result<()> {
        let n = self.config.geometry.resolution_px;
        if image.height() != n || image.width() != n {
            return Err(Error::Config(format!(
                "image is {}x{} but the field geometry expects {n}x{n}",
                image.height(),
                image.width()
            )));
        }
        Ok(())
    }

    pub fn light_adapt(&self, image: &ImageTensor) -> Result<(ImageTensor, Plane)> {
        self.check_geometry(image)?;
        adapt_with(image, &self.la_pool, self.config.light_adapt.epsilon)
    }

    /// Runs the post-adaptation stages for one output channel.
    pub fn channel_from_adapted(&self, adapted: &ImageTensor, channel: usize) -> Result<Plane> {
        let spec = self.config.opponency.get(channel).ok_or_else(|| {
            Error::Shape(format!("retina channel {channel} out of range"))
        })?;
        if channel == PARASOL {
            let x_dog = self.parasol.apply(adapted, spec)?;
            normalize_with(&x_dog, &self.cn_pool, self.config.contrast_norm.c50)
        } else {
            self.midget.apply(adapted, spec)
        }
    }

    pub fn forward_adapted(&self, adapted: &ImageTensor) -> Result<ImageTensor> {
        let planes = (0..RETINA_CHANNELS)
            .map(|c| self.channel_from_adapted(adapted, c))
            .collect::<Result<Vec<_>>>()?;
        ImageTensor::from_planes(planes)
    }

    pub fn forward(&self, image: &ImageTensor) -> Result<ImageTensor> {
        let (adapted, _) = self.light_adapt(image)?;
        self.forward_adapted(&adapted)
    }

    /// Computes a single output channel, skipping the other pathways.
    pub fn forward_channel(&self, image: &ImageTensor, channel: usize) -> Result<Plane> {
        let (adapted, _) = self.light_adapt(image)?;
        self.channel_from_adapted(&adapted, channel)
    }
}

/// Full retina block: 3-channel RGB in, 4 signed channels out.
pub fn retinablock_forward(image: &ImageTensor, cfg: &RetinaBlockConfig) -> Result<ImageTensor> {
    RetinaBlock::new(cfg.clone())?.forward(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> FieldGeometry {
        FieldGeometry::default()
    }

    fn rgb(f: impl Fn(usize, usize, usize) -> f64) -> ImageTensor {
        let planes = (0..3).map(|c| Plane::from_fn(64, 64, |y, x| f(c, y, x))).collect();
        ImageTensor::from_planes(planes).unwrap()
    }

    #[test]
    fn gray_adapts_to_zero() {
        let img = ImageTensor::filled(3, 64, 64, 0.5);
        let (a, m) = light_adapt(&img, &LightAdaptParams::default(), &geom()).unwrap();
        assert!(a.data().iter().all(|v| v.abs() < 1e-12));
        assert!(m.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn black_adapts_to_zero() {
        let img = ImageTensor::zeros(3, 64, 64);
        let (a, _) = light_adapt(&img, &LightAdaptParams::default(), &geom()).unwrap();
        assert!(a.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn light_adapt_requires_rgb() {
        let img = ImageTensor::zeros(4, 64, 64);
        let err = light_adapt(&img, &LightAdaptParams::default(), &geom()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn bright_channel_far_from_edges() {
        // One channel at 0.75, the others at 0.5, everywhere: pooled luminance
        // is the channel mean 0.5833.., so the adapted bright channel is
        // (0.75 - m) / m.
        let img = rgb(|c, _, _| if c == 0 { 0.75 } else { 0.5 });
        let (a, m) = light_adapt(&img, &LightAdaptParams::default(), &geom()).unwrap();
        let mean = (0.75 + 0.5 + 0.5) / 3.0;
        assert!((m.get(32, 32) - mean).abs() < 1e-12);
        assert!((a.get(0, 32, 32) - (0.75 - mean) / mean).abs() < 1e-12);
    }

    #[test]
    fn identical_red_green_reduces_to_plain_dog() {
        let g = geom();
        let img = rgb(|c, y, x| {
            if c == 2 {
                0.2
            } else {
                0.5 + 0.3 * ((y as f64) * 0.4).sin() * ((x as f64) * 0.25).cos()
            }
        });
        let rg = opponent_dog(&img, &OpponencySpec::standard(Opponency::RedGreen), &DogParams::midget(), &g)
            .unwrap();
        let red = img.plane(0).unwrap();
        let k = crate::kernel::dog_kernel(&DogParams::midget(), &g).unwrap();
        let direct = conv2d(&red, &k, 1).unwrap();
        for (a, b) in rg.data().iter().zip(direct.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast_normalize_zero_and_constant() {
        let g = geom();
        let p = ContrastNormParams::default();
        let z = contrast_normalize(&Plane::zeros(64, 64), &p, &g).unwrap();
        assert!(z.data().iter().all(|v| *v == 0.0));
        let v = 0.8;
        let c = contrast_normalize(&Plane::filled(64, 64, v), &p, &g).unwrap();
        assert!((c.get(32, 32) - v / (0.3 + v)).abs() < 1e-12);
    }

    #[test]
    fn config_rejects_decoupled_suppressive_field() {
        let mut cfg = RetinaBlockConfig::default();
        cfg.contrast_norm.pool_radius_deg = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = RetinaBlockConfig::default();
        cfg.opponency.swap(0, 1);
        assert!(cfg.validate().is_err());
        let mut cfg = RetinaBlockConfig::default();
        cfg.opponency[2].surround_weights = [0.6, 0.6, 0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn forward_rejects_wrong_resolution() {
        let block = RetinaBlock::new(RetinaBlockConfig::default()).unwrap();
        let img = ImageTensor::filled(3, 32, 32, 0.5);
        assert!(matches!(block.forward(&img), Err(Error::Config(_))));
    }
}
