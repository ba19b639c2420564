//! Serialised filter bank: a JSON manifest plus a flat f32 weight blob.
//!
//! The blob holds, in order, the even and odd kernel of every V1 unit and
//! then the retina kernels, each row-major. Offsets in the manifest are in
//! f32 elements. The manifest alone is enough to rebuild the blob.

use evfront_core::retina::{RetinaBlock, RetinaBlockConfig};
use evfront_core::vone::{sample_units, CellType, GaborBank, GaborUnit};
use evfront_core::{FieldGeometry, GaborParams, Kernel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "evfront-bank/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitRecord {
    pub index: usize,
    pub cell_type: CellType,
    pub theta_rad: f64,
    pub sf_cpd: f64,
    pub phase_rad: f64,
    pub nx_cycles: f64,
    pub ny_cycles: f64,
    pub kernel_px: usize,
    /// Input channel when the bank reads an RGB image.
    pub channel_rgb: usize,
    /// Input channel when the bank reads the retina output.
    pub channel_retina: usize,
    pub even_offset: usize,
    pub odd_offset: usize,
}

impl UnitRecord {
    fn params(&self) -> GaborParams {
        GaborParams {
            theta: self.theta_rad,
            sf_cpd: self.sf_cpd,
            phase: self.phase_rad,
            nx: self.nx_cycles,
            ny: self.ny_cycles,
            kernel_px: self.kernel_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRecord {
    pub name: String,
    pub size_px: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankManifest {
    pub format: String,
    pub seed: u64,
    pub config_sha256: String,
    pub geometry: FieldGeometry,
    pub stride: usize,
    pub sf_bounds_cpd: [f64; 2],
    pub n_units: usize,
    pub n_simple: usize,
    pub n_complex: usize,
    pub retina: RetinaBlockConfig,
    pub units: Vec<UnitRecord>,
    pub retina_kernels: Vec<KernelRecord>,
    pub weights_len: usize,
    pub weights_sha256: String,
}

/// Banks for both input kinds, sharing Gabor parameters.
pub struct Banks {
    pub rgb: GaborBank,
    pub retina: GaborBank,
}

pub fn sample_banks(cfg: &RunConfig) -> CliResult<Banks> {
    let rgb = sample_units(&cfg.gfb, &cfg.geometry, 3)?;
    let ret = sample_units(&cfg.gfb, &cfg.geometry, 4)?;
    if rgb.iter().zip(&ret).any(|(a, b)| a.params != b.params) {
        return Err(CliError::Compute("RGB and retina banks drew different filters".into()));
    }
    let stride = cfg.gfb.stride;
    Ok(Banks {
        rgb: GaborBank::from_units(rgb, cfg.geometry, stride, cfg.seed, 3)?,
        retina: GaborBank::from_units(ret, cfg.geometry, stride, cfg.seed, 4)?,
    })
}

fn push_kernel(blob: &mut Vec<f32>, k: &Kernel) -> usize {
    let offset = blob.len();
    blob.extend(k.weights().iter().map(|&w| w as f32));
    offset
}

fn to_bytes(blob: &[f32]) -> Vec<u8> {
    blob.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes).as_slice())
}

fn lay_out(banks: &Banks, retina: &RetinaBlock) -> (Vec<UnitRecord>, Vec<KernelRecord>, Vec<f32>) {
    let mut blob = Vec::new();
    let units = (0..banks.rgb.len())
        .map(|i| {
            let u = banks.rgb.units()[i];
            let (even, odd) = banks.rgb.kernels(i);
            UnitRecord {
                index: i,
                cell_type: u.cell_type,
                theta_rad: u.params.theta,
                sf_cpd: u.params.sf_cpd,
                phase_rad: u.params.phase,
                nx_cycles: u.params.nx,
                ny_cycles: u.params.ny,
                kernel_px: u.params.kernel_px,
                channel_rgb: u.input_channel,
                channel_retina: banks.retina.units()[i].input_channel,
                even_offset: push_kernel(&mut blob, even),
                odd_offset: push_kernel(&mut blob, odd),
            }
        })
        .collect();
    let kernels = retina
        .kernels()
        .into_iter()
        .map(|(name, k)| KernelRecord {
            name: name.to_string(),
            size_px: k.height(),
            offset: push_kernel(&mut blob, k),
        })
        .collect();
    (units, kernels, blob)
}

/// Samples the bank described by `cfg` and lays out manifest and blob.
pub fn build_bank(cfg: &RunConfig) -> CliResult<(BankManifest, Vec<u8>)> {
    let banks = sample_banks(cfg)?;
    let retina_cfg = cfg.retina_config();
    let retina = RetinaBlock::new(retina_cfg.clone())?;
    let (units, retina_kernels, blob) = lay_out(&banks, &retina);
    let bytes = to_bytes(&blob);
    let manifest = BankManifest {
        format: FORMAT.into(),
        seed: cfg.seed,
        config_sha256: cfg.sha256(),
        geometry: cfg.geometry,
        stride: cfg.gfb.stride,
        sf_bounds_cpd: cfg.gfb.sf_bounds_cpd,
        n_units: cfg.gfb.n_units,
        n_simple: cfg.gfb.n_simple,
        n_complex: cfg.gfb.n_complex,
        retina: retina_cfg,
        units,
        retina_kernels,
        weights_len: blob.len(),
        weights_sha256: sha256(&bytes),
    };
    Ok((manifest, bytes))
}

/// Rebuilds the weight blob from the manifest's unit list and retina
/// parameters, without consulting the sampler.
pub fn rebuild_weights(m: &BankManifest) -> CliResult<Vec<u8>> {
    if m.format != FORMAT {
        return Err(CliError::Config(format!("unknown bank format {:?}", m.format)));
    }
    let banks = banks_from_manifest(m)?;
    let retina = RetinaBlock::new(m.retina.clone())?;
    let (units, kernels, blob) = lay_out(&banks, &retina);
    if units != m.units || kernels != m.retina_kernels || blob.len() != m.weights_len {
        return Err(CliError::Compute("manifest layout is inconsistent with its parameters".into()));
    }
    Ok(to_bytes(&blob))
}

/// Loads the V1 banks back from a manifest.
pub fn banks_from_manifest(m: &BankManifest) -> CliResult<Banks> {
    let mk = |channels: usize, pick: fn(&UnitRecord) -> usize| -> CliResult<GaborBank> {
        let units = m
            .units
            .iter()
            .map(|r| GaborUnit {
                params: r.params(),
                cell_type: r.cell_type,
                input_channel: pick(r),
            })
            .collect();
        Ok(GaborBank::from_units(units, m.geometry, m.stride, m.seed, channels)?)
    };
    Ok(Banks {
        rgb: mk(3, |r| r.channel_rgb)?,
        retina: mk(4, |r| r.channel_retina)?,
    })
}
