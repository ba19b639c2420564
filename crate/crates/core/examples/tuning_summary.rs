//! Prints retinal SF peaks, contrast fits and V1 population optimal SF.
//!
//! `cargo run --release -p evfront-core --example tuning_summary [seed]`

use std::time::Instant;

use evfront_core::lab::{
    contrast_curve, contrast_grid, fit_log_saturation, optimal_sf, population_sf_stats, sf_grid, sf_tuning,
    GratingSpec, RetinaProbe,
};
use evfront_core::retina::{RetinaBlock, RetinaBlockConfig, MIDGET_RG, PARASOL};
use evfront_core::vone::{sample_gfb, GfbConfig};

fn main() -> evfront_core::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let block = RetinaBlock::new(RetinaBlockConfig::default())?;
    let geom = *block.geometry();
    let grid = sf_grid(0.1, 9.3, 24)?;
    let base = GratingSpec::default();

    for (name, ch) in [("midget", MIDGET_RG), ("parasol", PARASOL)] {
        let probe = RetinaProbe::new(&block, ch);
        let sf = optimal_sf(&sf_tuning(&probe, &geom, &base, &grid)?)?;
        let cc = contrast_curve(&probe, &geom, &GratingSpec { sf_cpd: sf, ..base }, &contrast_grid(24)?)?;
        let fit = fit_log_saturation(&cc)?;
        println!("{name}: optimal {sf:.3} cpd, c0 {:.3}, slope {:.3}", fit.saturation_onset_c0, fit.linear_slope);
    }

    let cfg = GfbConfig { seed, ..GfbConfig::default() };
    let t = Instant::now();
    let plain = population_sf_stats(&sample_gfb(&cfg, &geom, 3)?, None, &geom, &base, &grid)?;
    println!("without retina: mean {:.3} median {:.3} ({:?})", plain.mean, plain.median, t.elapsed());
    let t = Instant::now();
    let with = population_sf_stats(&sample_gfb(&cfg, &geom, 4)?, Some(&block), &geom, &base, &grid)?;
    println!("with retina:    mean {:.3} median {:.3} ({:?})", with.mean, with.median, t.elapsed());
    Ok(())
}
