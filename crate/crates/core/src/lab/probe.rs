//! Recording sites: what gets measured at the image centre for a frame.

use crate::conv::conv2d_at;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::lab::fourier::{Metric, ResponseSeries};
use crate::retina::{RetinaBlock, PARASOL};
use crate::tensor::{ImageTensor, Plane};
use crate::vone::{standardize, CellType, GaborBank};

/// Runs `forward` on every frame and reads `channel` at the centre pixel
/// `(floor(H/2), floor(W/2))` of its output.
pub fn record_center<F>(frames: &[ImageTensor], mut forward: F, channel: usize) -> Result<ResponseSeries>
where
    F: FnMut(&ImageTensor) -> Result<ImageTensor>,
{
    let values = frames
        .iter()
        .map(|f| {
            let out = forward(f)?;
            if channel >= out.channels() {
                return Err(Error::Shape(format!(
                    "channel {channel} out of range for a {}-channel output",
                    out.channels()
                )));
            }
            if out.height() == 0 || out.width() == 0 {
                return Err(Error::Shape("model output has no pixels".into()));
            }
            Ok(out.get(channel, out.height() / 2, out.width() / 2))
        })
        .collect::<Result<_>>()?;
    Ok(ResponseSeries { values })
}

/// A single recorded unit.
pub trait Probe: Sync {
    /// Activation of the unit for one frame.
    fn respond(&self, frame: &ImageTensor) -> Result<f64>;

    /// Which Fourier component summarises the unit's response.
    fn metric(&self) -> Metric;

    /// Grating orientation that drives the unit best, if it has one.
    fn preferred_orientation(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String;

    fn record(&self, frames: &[ImageTensor]) -> Result<ResponseSeries> {
        let values = frames.iter().map(|f| self.respond(f)).collect::<Result<_>>()?;
        Ok(ResponseSeries { values })
    }
}

fn center(plane: &Plane) -> f64 {
    plane.get(plane.height() / 2, plane.width() / 2)
}

/// Centre cell of one retina-block channel.
pub struct RetinaProbe<'a> {
    pub block: &'a RetinaBlock,
    pub channel: usize,
    /// Read the parasol pathway before contrast normalisation.
    pub skip_contrast_norm: bool,
}

impl<'a> RetinaProbe<'a> {
    pub fn new(block: &'a RetinaBlock, channel: usize) -> Self {
        Self {
            block,
            channel,
            skip_contrast_norm: false,
        }
    }
}

impl Probe for RetinaProbe<'_> {
    fn respond(&self, frame: &ImageTensor) -> Result<f64> {
        if self.skip_contrast_norm && self.channel == PARASOL {
            let (adapted, _) = self.block.light_adapt(frame)?;
            let cfg = self.block.config();
            let dog = crate::retina::opponent_dog(
                &adapted,
                &cfg.opponency[PARASOL],
                &cfg.parasol_dog,
                &cfg.geometry,
            )?;
            return Ok(center(&dog));
        }
        Ok(center(&self.block.forward_channel(frame, self.channel)?))
    }

    fn metric(&self) -> Metric {
        Metric::F1
    }

    fn label(&self) -> String {
        format!("retina:{}", self.channel)
    }
}

/// A bare DoG kernel applied to the luminance contrast signal
/// `(L - mean) / mean`, bypassing light adaptation.
pub struct DogLayerProbe {
    pub kernel: Kernel,
    pub mean_luminance: f64,
}

impl Probe for DogLayerProbe {
    fn respond(&self, frame: &ImageTensor) -> Result<f64> {
        let m = self.mean_luminance;
        let signal = frame.channel_mean().map(|v| (v - m) / m);
        conv2d_at(&signal, &self.kernel, 1, signal.height() / 2, signal.width() / 2)
    }

    fn metric(&self) -> Metric {
        Metric::F1
    }

    fn label(&self) -> String {
        "dog".into()
    }
}

/// Centre unit of one V1 filter, optionally behind the retina block.
///
/// Without a retina block the frame is mapped to [-1, 1] first. Simple cells
/// are summarised by F1, complex cells by F0.
pub struct V1Probe<'a> {
    pub bank: &'a GaborBank,
    pub unit: usize,
    pub retina: Option<&'a RetinaBlock>,
}

impl Probe for V1Probe<'_> {
    fn respond(&self, frame: &ImageTensor) -> Result<f64> {
        let unit = self
            .bank
            .units()
            .get(self.unit)
            .ok_or_else(|| Error::Shape(format!("unit {} out of range", self.unit)))?;
        let plane = match self.retina {
            Some(block) => block.forward_channel(frame, unit.input_channel)?,
            None => standardize(frame).plane(unit.input_channel)?,
        };
        let p = self.bank.probe_index();
        self.bank.unit_response_at(self.unit, &plane, p, p)
    }

    fn metric(&self) -> Metric {
        match self.bank.units()[self.unit].cell_type {
            CellType::Simple => Metric::F1,
            CellType::Complex => Metric::F0,
        }
    }

    fn preferred_orientation(&self) -> Option<f64> {
        Some(self.bank.units()[self.unit].params.theta)
    }

    fn label(&self) -> String {
        format!("unit:{}", self.unit)
    }
}
