//! Run configuration: one TOML file, every table optional.

use std::path::{Path, PathBuf};

use evfront_core::lab::{contrast_grid, sf_grid, GratingSpec};
use evfront_core::retina::{
    ContrastNormParams, LightAdaptParams, OpponencySpec, RetinaBlockConfig,
};
use evfront_core::vone::GfbConfig;
use evfront_core::{DogParams, FieldGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Retina parameters; the field geometry comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetinaSection {
    pub light_adapt: LightAdaptParams,
    pub midget_dog: DogParams,
    pub parasol_dog: DogParams,
    pub contrast_norm: ContrastNormParams,
    pub opponency: Vec<OpponencySpec>,
}

impl Default for RetinaSection {
    fn default() -> Self {
        let d = RetinaBlockConfig::default();
        Self {
            light_adapt: d.light_adapt,
            midget_dog: d.midget_dog,
            parasol_dog: d.parasol_dog,
            contrast_norm: d.contrast_norm,
            opponency: d.opponency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// SF sweeps of the midget and parasol centre cells.
    RetinaSf,
    /// Contrast sweeps of the same cells at their optimal SF.
    RetinaContrast,
    /// Optimal SF of every V1 unit.
    Population,
}

/// Drifting-grating stimulus shared by all probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusSection {
    pub mean_luminance: f64,
    pub n_frames: usize,
    pub phase_step_deg: f64,
    pub aperture_diameter_deg: f64,
    /// Ignore the aperture and fill the field.
    pub full_field: bool,
    /// Contrast used for SF sweeps.
    pub sf_sweep_contrast: f64,
}

impl Default for StimulusSection {
    fn default() -> Self {
        let g = GratingSpec::default();
        Self {
            mean_luminance: g.mean_luminance,
            n_frames: g.n_frames,
            phase_step_deg: g.phase_step_deg,
            aperture_diameter_deg: g.diameter_deg.unwrap_or(1.0),
            full_field: false,
            sf_sweep_contrast: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub run: Vec<Experiment>,
    /// Also run the population through the retina block and report the shift.
    pub population_with_retina: bool,
    pub sf_grid_min_cpd: f64,
    pub sf_grid_max_cpd: f64,
    pub sf_grid_points: usize,
    pub contrast_grid_points: usize,
    pub stimulus: StimulusSection,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            run: vec![Experiment::RetinaSf, Experiment::RetinaContrast, Experiment::Population],
            population_with_retina: true,
            sf_grid_min_cpd: 0.1,
            sf_grid_max_cpd: 9.3,
            sf_grid_points: 24,
            contrast_grid_points: 24,
            stimulus: StimulusSection::default(),
        }
    }
}

impl ExperimentSection {
    pub fn sf_grid(&self) -> CliResult<Vec<f64>> {
        Ok(sf_grid(self.sf_grid_min_cpd, self.sf_grid_max_cpd, self.sf_grid_points)?)
    }

    pub fn contrast_grid(&self) -> CliResult<Vec<f64>> {
        Ok(contrast_grid(self.contrast_grid_points)?)
    }

    /// Base grating for SF sweeps.
    pub fn grating(&self) -> GratingSpec {
        let s = &self.stimulus;
        GratingSpec {
            contrast: s.sf_sweep_contrast,
            diameter_deg: (!s.full_field).then_some(s.aperture_diameter_deg),
            n_frames: s.n_frames,
            phase_step_deg: s.phase_step_deg,
            mean_luminance: s.mean_luminance,
            ..GratingSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub geometry: FieldGeometry,
    pub retina: RetinaSection,
    pub gfb: GfbConfig,
    pub experiment: ExperimentSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            geometry: FieldGeometry::default(),
            retina: RetinaSection::default(),
            gfb: GfbConfig::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
            None => {
                let cfg = Self::default();
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.gfb.seed = seed;
    }

    pub fn retina_config(&self) -> RetinaBlockConfig {
        let r = self.retina.clone();
        RetinaBlockConfig {
            geometry: self.geometry,
            light_adapt: r.light_adapt,
            midget_dog: r.midget_dog,
            parasol_dog: r.parasol_dog,
            contrast_norm: r.contrast_norm,
            opponency: r.opponency,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.geometry.validate()?;
        self.retina_config().validate()?;
        self.gfb.validate()?;
        if self.gfb.seed != self.seed {
            return Err(CliError::Config("bank seed differs from run seed".into()));
        }
        let e = &self.experiment;
        let grid = e.sf_grid()?;
        e.contrast_grid()?;
        if e.contrast_grid_points < 6 {
            return Err(CliError::Config("contrast grid needs at least 6 points for the fit".into()));
        }
        for sf in [grid[0], grid[grid.len() - 1]] {
            GratingSpec { sf_cpd: sf, ..e.grating() }.validate(&self.geometry)?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn sha256(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(&json).as_slice())
    }
}
