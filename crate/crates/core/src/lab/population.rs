use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::FieldGeometry;
use crate::lab::grating::GratingSpec;
use crate::lab::probe::V1Probe;
use crate::lab::tuning::{optimal_sf, sf_tuning};
use crate::retina::RetinaBlock;
use crate::vone::{CellType, GaborBank};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub sf_cpd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    /// Optimal SF per unit, in bank order.
    pub optimal_sf: Vec<f64>,
    pub cell_types: Vec<CellType>,
    pub mean: f64,
    pub median: f64,
    /// Count of units per SF grid point.
    pub histogram: Vec<HistogramBin>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// SF-tunes every unit of the bank at its preferred orientation and
/// summarises the optimal SFs. Units are probed in parallel and collected in
/// bank order.
pub fn population_sf_stats(
    bank: &GaborBank,
    retina: Option<&RetinaBlock>,
    geom: &FieldGeometry,
    base: &GratingSpec,
    grid: &[f64],
) -> Result<PopulationStats> {
    let optimal: Vec<f64> = (0..bank.len())
        .into_par_iter()
        .map(|unit| {
            let probe = V1Probe { bank, unit, retina };
            optimal_sf(&sf_tuning(&probe, geom, base, grid)?)
        })
        .collect::<Result<_>>()?;

    let histogram = grid
        .iter()
        .map(|&sf| HistogramBin {
            sf_cpd: sf,
            count: optimal.iter().filter(|&&o| o == sf).count(),
        })
        .collect();
    let mean = optimal.iter().sum::<f64>() / optimal.len().max(1) as f64;
    Ok(PopulationStats {
        median: if optimal.is_empty() { f64::NAN } else { median(&optimal) },
        mean,
        cell_types: bank.units().iter().map(|u| u.cell_type).collect(),
        optimal_sf: optimal,
        histogram,
    })
}
