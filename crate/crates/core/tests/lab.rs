use std::f64::consts::PI;

use evfront_core::lab::{
    contrast_grid, fit_log_saturation, fourier_metrics, grating_frames, measured_contrast, optimal_sf,
    sf_bandwidth, sf_grid, sf_tuning, Axis, DogLayerProbe, GratingSpec, Metric, Probe, ResponseSeries,
    TuningCurve, TuningPoint,
};
use evfront_core::{dog_kernel, make_field, DogParams};
use proptest::prelude::*;

fn series(f: impl Fn(f64) -> f64, n: usize) -> ResponseSeries {
    ResponseSeries {
        values: (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect(),
    }
}

#[test]
fn tone_cases() {
    let m = fourier_metrics(&series(|t| 2.0 + 3.0 * t.cos(), 12)).unwrap();
    assert!((m.f0 - 2.0).abs() < 1e-9 && (m.f1 - 3.0).abs() < 1e-9);
    let m = fourier_metrics(&series(|t| (2.0 * t).cos(), 12)).unwrap();
    assert!(m.f1.abs() < 1e-9 && m.f0.abs() < 1e-9);
    assert!(fourier_metrics(&ResponseSeries { values: vec![1.0] }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_recovers_offset_and_amplitude(a in -5.0f64..5.0, b in -5.0f64..5.0, phi in 0.0f64..(2.0 * PI), h2 in -2.0f64..2.0, shift in 0usize..12) {
        let mut s = series(|t| a + b * (t + phi).cos() + h2 * (2.0 * t).sin(), 12);
        let m = fourier_metrics(&s).unwrap();
        prop_assert!((m.f0 - a).abs() < 1e-9);
        prop_assert!((m.f1 - b.abs()).abs() < 1e-9);
        s.values.rotate_left(shift);
        let r = fourier_metrics(&s).unwrap();
        prop_assert!((r.f0 - m.f0).abs() < 1e-9 && (r.f1 - m.f1).abs() < 1e-9);
    }

    #[test]
    fn log_saturation_fit_recovers_onset(c0 in 0.08f64..0.8, slope in 0.5f64..5.0) {
        let grid = contrast_grid(24).unwrap();
        let points = grid
            .iter()
            .map(|&c| {
                let r = if c <= c0 { slope * c } else { slope * c0 * (1.0 + (c / c0).ln()) };
                TuningPoint { stimulus: c, f0: 0.0, f1: r, response: r }
            })
            .collect();
        let curve = TuningCurve { axis: Axis::Contrast, unit_id: "synthetic".into(), metric: Metric::F1, fixed_value: 1.0, points };
        let fit = fit_log_saturation(&curve).unwrap();
        prop_assert!((fit.saturation_onset_c0 - c0).abs() < 0.01, "c0 {} vs {c0}", fit.saturation_onset_c0);
        prop_assert!((fit.linear_slope - slope).abs() / slope < 0.01);
        prop_assert!(fit.residual < 1e-3 * slope);
    }

    #[test]
    fn log_gaussian_bandwidth(peak in 0.5f64..4.0, sigma_oct in 0.3f64..1.2) {
        let grid = sf_grid(0.05, 20.0, 400).unwrap();
        let points = grid
            .iter()
            .map(|&f| {
                let d = (f / peak).log2() / sigma_oct;
                let r = (-0.5 * d * d).exp();
                TuningPoint { stimulus: f, f0: 0.0, f1: r, response: r }
            })
            .collect();
        let curve = TuningCurve { axis: Axis::SfCpd, unit_id: "synthetic".into(), metric: Metric::F1, fixed_value: 1.0, points };
        let bw = sf_bandwidth(&curve).unwrap();
        let expect = 2.0 * sigma_oct * (2.0 * 2f64.ln()).sqrt();
        prop_assert!(!bw.is_open_ended());
        prop_assert!((bw.octaves - expect).abs() / expect < 0.01, "{} vs {expect}", bw.octaves);
    }
}

#[test]
fn open_ended_bandwidth_is_flagged() {
    let grid = sf_grid(0.1, 9.3, 24).unwrap();
    let points = grid
        .iter()
        .map(|&f| TuningPoint { stimulus: f, f0: 0.0, f1: 1.0 / f, response: 1.0 / f })
        .collect();
    let curve = TuningCurve { axis: Axis::SfCpd, unit_id: "lowpass".into(), metric: Metric::F1, fixed_value: 1.0, points };
    let bw = sf_bandwidth(&curve).unwrap();
    assert!(bw.open_low && !bw.open_high);
}

#[test]
fn grids() {
    let g = sf_grid(0.1, 9.3, 24).unwrap();
    assert_eq!(g.len(), 24);
    assert_eq!((g[0], g[23]), (0.1, 9.3));
    let ratio = g[1] / g[0];
    for w in g.windows(2) {
        assert!((w[1] / w[0] - ratio).abs() < 1e-12);
    }
    let c = contrast_grid(24).unwrap();
    assert_eq!((c[0], c[23]), (0.0, 1.0));
    assert!(sf_grid(0.0, 9.3, 24).is_err());
}

#[test]
fn requested_contrast_is_delivered() {
    let g = make_field(2.0, 64).unwrap();
    let sfs = sf_grid(0.1, 9.3, 10).unwrap();
    for &sf in &sfs {
        for i in 1..=10 {
            let c = i as f64 / 10.0;
            for diameter in [Some(1.0), None] {
                let spec = GratingSpec { sf_cpd: sf, contrast: c, diameter_deg: diameter, ..GratingSpec::default() };
                let frames = grating_frames(&spec, &g).unwrap();
                let measured = measured_contrast(&frames, &spec, &g).unwrap();
                assert!((measured - c).abs() < 1e-6, "sf {sf} c {c}: {measured}");
            }
        }
    }
}

#[test]
fn grating_frames_layout() {
    let g = make_field(2.0, 64).unwrap();
    let spec = GratingSpec { sf_cpd: 2.0, ..GratingSpec::default() };
    let frames = grating_frames(&spec, &g).unwrap();
    assert_eq!(frames.len(), 12);
    for f in &frames {
        assert_eq!(f.shape(), (3, 64, 64));
        // outside the 1 deg aperture the field sits at the mean
        assert_eq!(f.get(0, 0, 0), 0.5);
        assert!(f.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    // half a cycle of drift inverts the modulation
    for (a, b) in frames[0].data().iter().zip(frames[6].data()) {
        assert!((a + b - 1.0).abs() < 1e-12);
    }
    let bad = GratingSpec { sf_cpd: 16.0, ..GratingSpec::default() };
    assert!(grating_frames(&bad, &g).is_err());
    let bad = GratingSpec { contrast: 1.5, ..GratingSpec::default() };
    assert!(grating_frames(&bad, &g).is_err());
}

#[test]
fn dog_response_is_linear_in_contrast() {
    let g = make_field(2.0, 64).unwrap();
    let probe = DogLayerProbe { kernel: dog_kernel(&DogParams::midget(), &g).unwrap(), mean_luminance: 0.5 };
    let f1 = |c: f64| {
        let spec = GratingSpec { sf_cpd: 3.0, contrast: c, ..GratingSpec::default() }.full_field();
        fourier_metrics(&probe.record(&grating_frames(&spec, &g).unwrap()).unwrap()).unwrap().f1
    };
    let unit = f1(1.0);
    for c in [0.1, 0.25, 0.5, 0.8] {
        assert!((f1(c) - c * unit).abs() < 1e-9);
    }
}

/// Continuous spectrum of a unity-volume DoG with 1/e radii.
fn analytic_dog(p: &DogParams, f: f64) -> f64 {
    let g = |r: f64| (-(PI * r * f).powi(2)).exp();
    (g(p.rc_deg) - p.surround_to_center_ratio * g(p.rs_deg)) / (1.0 - p.surround_to_center_ratio)
}

#[test]
fn midget_dog_layer_matches_analytic_spectrum() {
    let g = make_field(2.0, 64).unwrap();
    let p = DogParams::midget();
    let probe = DogLayerProbe { kernel: dog_kernel(&p, &g).unwrap(), mean_luminance: 0.5 };
    let grid = sf_grid(0.1, 9.3, 24).unwrap();
    let curve = sf_tuning(&probe, &g, &GratingSpec::default().full_field(), &grid).unwrap();
    for pt in curve.points.iter().filter(|pt| pt.stimulus < 0.8 * g.nyquist_cpd()) {
        let a = analytic_dog(&p, pt.stimulus);
        assert!((pt.response - a).abs() / a < 0.05, "at {}: {} vs {a}", pt.stimulus, pt.response);
    }
    // analytic peak, located on a dense grid, lands on the measured grid point
    let dense = sf_grid(0.1, 9.3, 4000).unwrap();
    let peak = dense.iter().copied().fold(0.1, |b, f| if analytic_dog(&p, f) > analytic_dog(&p, b) { f } else { b });
    let nearest = grid.iter().copied().fold(grid[0], |b, f| if (f / peak).ln().abs() < (b / peak).ln().abs() { f } else { b });
    assert_eq!(optimal_sf(&curve).unwrap(), nearest);
}

/// The parasol surround is truncated by its kernel, so compare against the
/// kernel's own discrete spectrum instead of the continuous one. The kernel
/// reaches the image border, where reflection bends the grating slightly.
#[test]
fn parasol_dog_layer_matches_kernel_spectrum() {
    let g = make_field(2.0, 64).unwrap();
    let kernel = dog_kernel(&DogParams::parasol(), &g).unwrap();
    let probe = DogLayerProbe { kernel: kernel.clone(), mean_luminance: 0.5 };
    let grid = sf_grid(0.1, 9.3, 24).unwrap();
    let curve = sf_tuning(&probe, &g, &GratingSpec::default().full_field(), &grid).unwrap();
    for pt in &curve.points {
        let (re, im) = kernel.frequency_response(0.0, pt.stimulus / g.px_per_deg());
        let a = re.hypot(im);
        assert!((pt.response - a).abs() < 0.01, "at {}: {} vs {a}", pt.stimulus, pt.response);
    }
}
