//! Subcommand implementations. Every output goes under `cfg.out_dir`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use evfront_core::lab::{
    contrast_curve, fit_log_saturation, optimal_sf, population_sf_stats, sf_bandwidth, sf_tuning, Bandwidth,
    ContrastFit, Metric, PopulationStats, Probe, RetinaProbe, TuningCurve, TuningPoint, V1Probe,
};
use evfront_core::retina::{RetinaBlock, MIDGET_RG, PARASOL};
use evfront_core::vone::{evfront_forward, vone_front, CellType};
use evfront_core::{FieldGeometry, ImageTensor};
use serde::{Deserialize, Serialize};

use crate::bank::{build_bank, sample_banks, sha256, Banks};
use crate::bundle::{ActivationBundle, Provenance};
use crate::config::{Experiment, RunConfig};
use crate::error::{CliError, CliResult};
use crate::svg::LinePlot;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let perms = std::fs::Permissions::from_mode(0o644);
        tmp.as_file().set_permissions(perms).map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Front {
    Retina,
    Vone,
    Ev,
}

impl Front {
    pub fn name(self) -> &'static str {
        match self {
            Front::Retina => "retina",
            Front::Vone => "vone",
            Front::Ev => "ev",
        }
    }
}

impl FromStr for Front {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "retina" => Ok(Front::Retina),
            "vone" => Ok(Front::Vone),
            "ev" => Ok(Front::Ev),
            _ => Err(format!("unknown front {s:?}; expected retina, vone or ev")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Midget,
    Parasol,
    Unit(usize),
}

impl Target {
    pub fn name(self) -> String {
        match self {
            Target::Midget => "midget".into(),
            Target::Parasol => "parasol".into(),
            Target::Unit(i) => format!("unit{i}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "midget" => Ok(Target::Midget),
            "parasol" => Ok(Target::Parasol),
            _ => s
                .strip_prefix("unit:")
                .and_then(|i| i.parse().ok())
                .map(Target::Unit)
                .ok_or_else(|| format!("unknown target {s:?}; expected midget, parasol or unit:<i>")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeAxis {
    Sf,
    Contrast,
}

impl FromStr for ProbeAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sf" => Ok(ProbeAxis::Sf),
            "contrast" => Ok(ProbeAxis::Contrast),
            _ => Err(format!("unknown axis {s:?}; expected sf or contrast")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub manifest: PathBuf,
    pub weights: PathBuf,
    pub n_units: usize,
}

pub fn cmd_build(cfg: &RunConfig) -> CliResult<BuildOutput> {
    let (manifest, weights) = build_bank(cfg)?;
    let out = BuildOutput {
        manifest: cfg.out_dir.join("bank.json"),
        weights: cfg.out_dir.join("weights.bin"),
        n_units: manifest.units.len(),
    };
    write_atomic(&out.weights, &weights)?;
    write_json(&out.manifest, &manifest)?;
    Ok(out)
}

/// Decodes a PNG into a 3-channel image in [0, 1]. The image must already
/// be square at the configured resolution.
pub fn load_png(path: &Path, geom: &FieldGeometry) -> CliResult<(ImageTensor, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| CliError::io(path, format!("PNG decode failed: {e}")))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let n = geom.resolution_px;
    if w != h || w != n {
        return Err(CliError::Config(format!(
            "{} is {w}x{h} but the geometry expects {n}x{n}",
            path.display()
        )));
    }
    let mut data = vec![0.0; 3 * n * n];
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            data[(c * n + y as usize) * n + x as usize] = px[c] as f64 / 255.0;
        }
    }
    Ok((ImageTensor::new(3, n, n, data)?, sha256(&bytes)))
}

pub fn cmd_apply(cfg: &RunConfig, image: &Path, front: Front) -> CliResult<PathBuf> {
    let (img, source_sha256) = load_png(image, &cfg.geometry)?;
    let out = match front {
        Front::Retina => RetinaBlock::new(cfg.retina_config())?.forward(&img)?,
        Front::Vone => vone_front(&img, &sample_banks(cfg)?.rgb)?,
        Front::Ev => {
            let retina = RetinaBlock::new(cfg.retina_config())?;
            evfront_forward(&img, &retina, &sample_banks(cfg)?.retina)?
        }
    };
    let bundle = ActivationBundle::from_tensor(
        &out,
        Provenance {
            config_sha256: cfg.sha256(),
            seed: cfg.seed,
            source_sha256,
            front: front.name().into(),
        },
    );
    let path = cfg.out_dir.join(format!("activations_{}.evf", front.name()));
    write_atomic(&path, &bundle.to_bytes()?)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub target: String,
    pub axis: ProbeAxis,
    pub with_retina: bool,
    pub metric: Metric,
    /// Contrast of an SF sweep, SF of a contrast sweep.
    pub fixed_value: f64,
    pub optimal_sf_cpd: f64,
    pub bandwidth: Option<Bandwidth>,
    pub fit: Option<ContrastFit>,
    pub points: Vec<TuningPoint>,
}

struct Models {
    retina: RetinaBlock,
    banks: Option<Banks>,
}

impl Models {
    fn new(cfg: &RunConfig, need_banks: bool) -> CliResult<Self> {
        Ok(Self {
            retina: RetinaBlock::new(cfg.retina_config())?,
            banks: if need_banks { Some(sample_banks(cfg)?) } else { None },
        })
    }

    fn probe(&self, target: Target, with_retina: bool) -> CliResult<Box<dyn Probe + '_>> {
        Ok(match target {
            Target::Midget => Box::new(RetinaProbe::new(&self.retina, MIDGET_RG)),
            Target::Parasol => Box::new(RetinaProbe::new(&self.retina, PARASOL)),
            Target::Unit(unit) => {
                let banks = self.banks.as_ref().expect("banks sampled for unit targets");
                let bank = if with_retina { &banks.retina } else { &banks.rgb };
                if unit >= bank.len() {
                    return Err(CliError::Config(format!("unit {unit} out of range for {} units", bank.len())));
                }
                Box::new(V1Probe {
                    bank,
                    unit,
                    retina: with_retina.then_some(&self.retina),
                })
            }
        })
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::F0 => "F0",
        Metric::F1 => "F1",
    }
}

fn curve_csv(curve: &TuningCurve) -> String {
    let mut s = String::from("stimulus,F0,F1,metric_used\n");
    for p in &curve.points {
        let _ = writeln!(s, "{},{},{},{}", p.stimulus, p.f0, p.f1, metric_name(curve.metric));
    }
    s
}

fn run_probe(cfg: &RunConfig, models: &Models, target: Target, axis: ProbeAxis, with_retina: bool) -> CliResult<ProbeReport> {
    let probe = models.probe(target, with_retina)?;
    let e = &cfg.experiment;
    let base = e.grating();
    let sf_curve = sf_tuning(probe.as_ref(), &cfg.geometry, &base, &e.sf_grid()?)?;
    let best = optimal_sf(&sf_curve)?;
    let (curve, bandwidth, fit) = match axis {
        ProbeAxis::Sf => {
            let bw = sf_bandwidth(&sf_curve).ok();
            (sf_curve, bw, None)
        }
        ProbeAxis::Contrast => {
            let spec = evfront_core::lab::GratingSpec { sf_cpd: best, ..base };
            let curve = contrast_curve(probe.as_ref(), &cfg.geometry, &spec, &e.contrast_grid()?)?;
            let fit = fit_log_saturation(&curve)?;
            (curve, None, Some(fit))
        }
    };
    let report = ProbeReport {
        target: target.name(),
        axis,
        with_retina: with_retina || !matches!(target, Target::Unit(_)),
        metric: curve.metric,
        fixed_value: curve.fixed_value,
        optimal_sf_cpd: best,
        bandwidth,
        fit,
        points: curve.points.clone(),
    };
    write_probe_files(cfg, &report, &curve)?;
    Ok(report)
}

fn write_probe_files(cfg: &RunConfig, report: &ProbeReport, curve: &TuningCurve) -> CliResult<()> {
    let axis = match report.axis {
        ProbeAxis::Sf => "sf",
        ProbeAxis::Contrast => "contrast",
    };
    let stem = cfg.out_dir.join(format!("probe_{}_{axis}", report.target));
    write_atomic(&stem.with_extension("csv"), curve_csv(curve).as_bytes())?;
    write_json(&stem.with_extension("json"), report)?;
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.stimulus, p.response)).collect();
    let title = format!("{} {} tuning", report.target, axis);
    let svg = LinePlot {
        title: &title,
        x_label: if report.axis == ProbeAxis::Sf { "spatial frequency (cpd)" } else { "contrast" },
        y_label: metric_name(report.metric),
        log_x: report.axis == ProbeAxis::Sf,
        points: &pts,
    }
    .render();
    write_atomic(&stem.with_extension("svg"), svg.as_bytes())
}

pub fn cmd_probe(cfg: &RunConfig, target: Target, axis: ProbeAxis, with_retina: bool) -> CliResult<ProbeReport> {
    let models = Models::new(cfg, matches!(target, Target::Unit(_)))?;
    run_probe(cfg, &models, target, axis, with_retina)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfSummary {
    pub mean_cpd: f64,
    pub median_cpd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationReport {
    pub n_units: usize,
    pub without_retina: SfSummary,
    pub with_retina: Option<SfSummary>,
    /// Mean without minus mean with the retina block.
    pub shift_cpd: Option<f64>,
}

fn summary(s: &PopulationStats) -> SfSummary {
    SfSummary {
        mean_cpd: s.mean,
        median_cpd: s.median,
    }
}

fn unit_csv(banks: &Banks, stats: &PopulationStats, retina: bool) -> String {
    let bank = if retina { &banks.retina } else { &banks.rgb };
    let mut s = String::from("unit,cell_type,theta_deg,sf_cpd,input_channel,optimal_sf_cpd\n");
    for (i, (u, opt)) in bank.units().iter().zip(&stats.optimal_sf).enumerate() {
        let kind = match u.cell_type {
            CellType::Simple => "simple",
            CellType::Complex => "complex",
        };
        let _ = writeln!(
            s,
            "{i},{kind},{},{},{},{opt}",
            u.params.theta.to_degrees(),
            u.params.sf_cpd,
            u.input_channel
        );
    }
    s
}

pub fn cmd_population(cfg: &RunConfig, with_retina: bool) -> CliResult<PopulationReport> {
    let banks = sample_banks(cfg)?;
    let e = &cfg.experiment;
    let grid = e.sf_grid()?;
    let base = e.grating();
    let geom = &cfg.geometry;
    let dir = &cfg.out_dir;

    let plain = population_sf_stats(&banks.rgb, None, geom, &base, &grid)?;
    write_atomic(&dir.join("population_without_retina.csv"), unit_csv(&banks, &plain, false).as_bytes())?;
    let paired = if with_retina {
        let retina = RetinaBlock::new(cfg.retina_config())?;
        let s = population_sf_stats(&banks.retina, Some(&retina), geom, &base, &grid)?;
        write_atomic(&dir.join("population_with_retina.csv"), unit_csv(&banks, &s, true).as_bytes())?;
        Some(s)
    } else {
        None
    };

    let mut hist = String::from(if paired.is_some() {
        "sf_cpd,count_without_retina,count_with_retina\n"
    } else {
        "sf_cpd,count_without_retina\n"
    });
    for (i, bin) in plain.histogram.iter().enumerate() {
        match &paired {
            Some(p) => writeln!(hist, "{},{},{}", bin.sf_cpd, bin.count, p.histogram[i].count),
            None => writeln!(hist, "{},{}", bin.sf_cpd, bin.count),
        }
        .expect("write to string");
    }
    write_atomic(&dir.join("population_histogram.csv"), hist.as_bytes())?;
    let pts: Vec<(f64, f64)> = plain.histogram.iter().map(|b| (b.sf_cpd, b.count as f64)).collect();
    let svg = LinePlot {
        title: "optimal SF of V1 units",
        x_label: "spatial frequency (cpd)",
        y_label: "units",
        log_x: true,
        points: &pts,
    }
    .render();
    write_atomic(&dir.join("population_histogram.svg"), svg.as_bytes())?;

    let report = PopulationReport {
        n_units: plain.optimal_sf.len(),
        without_retina: summary(&plain),
        with_retina: paired.as_ref().map(summary),
        shift_cpd: paired.as_ref().map(|p| plain.mean - p.mean),
    };
    write_json(&dir.join("population_summary.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub config_sha256: String,
    pub n_units: usize,
    pub activations: Vec<String>,
    pub probes: Vec<ProbeReport>,
    pub population: Option<PopulationReport>,
}

/// Builds the bank, optionally applies every front to `image`, then runs
/// the experiments listed in the configuration.
pub fn cmd_report(cfg: &RunConfig, image: Option<&Path>) -> CliResult<Report> {
    let built = cmd_build(cfg)?;
    let mut activations = Vec::new();
    if let Some(img) = image {
        for front in [Front::Retina, Front::Vone, Front::Ev] {
            let p = cmd_apply(cfg, img, front)?;
            activations.push(p.file_name().unwrap_or_default().to_string_lossy().into_owned());
        }
    }
    let models = Models::new(cfg, false)?;
    let mut probes = Vec::new();
    let run = &cfg.experiment.run;
    for (exp, axis) in [(Experiment::RetinaSf, ProbeAxis::Sf), (Experiment::RetinaContrast, ProbeAxis::Contrast)] {
        if run.contains(&exp) {
            for target in [Target::Midget, Target::Parasol] {
                probes.push(run_probe(cfg, &models, target, axis, true)?);
            }
        }
    }
    let population = if run.contains(&Experiment::Population) {
        Some(cmd_population(cfg, cfg.experiment.population_with_retina)?)
    } else {
        None
    };
    let report = Report {
        seed: cfg.seed,
        config_sha256: cfg.sha256(),
        n_units: built.n_units,
        activations,
        probes,
        population,
    };
    write_json(&cfg.out_dir.join("report.json"), &report)?;
    Ok(report)
}
