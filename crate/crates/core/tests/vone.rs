use evfront_core::lab::{contrast_grid, fourier_metrics, grating_frames, GratingSpec, Probe, V1Probe};
use evfront_core::retina::{RetinaBlock, RetinaBlockConfig};
use evfront_core::vone::{
    evfront_forward, sample_gfb, unit_response, vone_front, voneblock_forward, CellType, GfbConfig,
};
use evfront_core::{make_field, ImageTensor, Plane};
use proptest::prelude::*;

fn cfg(seed: u64) -> GfbConfig {
    GfbConfig { seed, ..GfbConfig::default() }
}

fn noise(c: usize, n: usize, seed: u64) -> ImageTensor {
    let mut s = seed ^ 0xdead_beef;
    let data = (0..c * n * n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    ImageTensor::new(c, n, n, data).unwrap()
}

#[test]
fn output_shapes() {
    let g = make_field(2.0, 64).unwrap();
    let rgb = sample_gfb(&cfg(0), &g, 3).unwrap();
    let four = sample_gfb(&cfg(0), &g, 4).unwrap();
    let retina = RetinaBlock::new(RetinaBlockConfig::default()).unwrap();
    let img = noise(3, 64, 1);
    assert_eq!(retina.forward(&img).unwrap().shape(), (4, 64, 64));
    assert_eq!(vone_front(&img, &rgb).unwrap().shape(), (512, 32, 32));
    assert_eq!(evfront_forward(&img, &retina, &four).unwrap().shape(), (512, 32, 32));
    // odd sizes round up
    let g = make_field(2.0, 33).unwrap();
    let small = GfbConfig { n_units: 4, n_simple: 2, n_complex: 2, ..cfg(0) };
    let bank = sample_gfb(&small, &g, 3).unwrap();
    assert_eq!(voneblock_forward(&noise(3, 33, 2), &bank).unwrap().shape(), (4, 17, 17));
}

#[test]
fn mismatches_are_config_errors() {
    let g = make_field(2.0, 64).unwrap();
    let rgb = sample_gfb(&cfg(0), &g, 3).unwrap();
    let retina = RetinaBlock::new(RetinaBlockConfig::default()).unwrap();
    assert!(voneblock_forward(&noise(3, 32, 0), &rgb).is_err());
    assert!(voneblock_forward(&noise(4, 64, 0), &rgb).is_err());
    assert!(evfront_forward(&noise(3, 64, 0), &retina, &rgb).is_err());
}

#[test]
fn bank_is_seed_deterministic() {
    let g = make_field(2.0, 64).unwrap();
    let a = sample_gfb(&cfg(11), &g, 4).unwrap();
    let b = sample_gfb(&cfg(11), &g, 4).unwrap();
    assert_eq!(a.units(), b.units());
    for i in 0..a.len() {
        assert_eq!(a.kernels(i).0.weights(), b.kernels(i).0.weights());
        assert_eq!(a.kernels(i).1.weights(), b.kernels(i).1.weights());
    }
    let img = noise(3, 64, 5);
    let retina = RetinaBlock::new(RetinaBlockConfig::default()).unwrap();
    let x = evfront_forward(&img, &retina, &a).unwrap();
    let y = evfront_forward(&img, &retina, &b).unwrap();
    assert_eq!(x.data(), y.data());
    assert_ne!(a.units(), sample_gfb(&cfg(12), &g, 4).unwrap().units());
}

#[test]
fn sampling_statistics() {
    let g = make_field(2.0, 64).unwrap();
    let bank = sample_gfb(&cfg(0), &g, 4).unwrap();
    let units = bank.units();
    assert_eq!(units.iter().filter(|u| u.cell_type == CellType::Simple).count(), 256);
    assert_eq!(units.iter().filter(|u| u.cell_type == CellType::Complex).count(), 256);
    assert!(units.iter().all(|u| (0.5..=11.3).contains(&u.params.sf_cpd)));
    for c in 0..4 {
        let n = units.iter().filter(|u| u.input_channel == c).count();
        assert!((88..=168).contains(&n), "channel {c} drawn {n} times");
    }
    let rgb = sample_gfb(&cfg(0), &g, 3).unwrap();
    for (a, b) in units.iter().zip(rgb.units()) {
        assert_eq!(a.params, b.params);
    }
}

#[test]
fn uniform_gray_silences_the_ev_front() {
    let g = make_field(2.0, 64).unwrap();
    let bank = sample_gfb(&cfg(0), &g, 4).unwrap();
    let retina = RetinaBlock::new(RetinaBlockConfig::default()).unwrap();
    let out = evfront_forward(&ImageTensor::filled(3, 64, 64, 0.5), &retina, &bank).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
    // mid-gray also maps to zero on the raw front
    let rgb = sample_gfb(&cfg(0), &g, 3).unwrap();
    let out = vone_front(&ImageTensor::filled(3, 64, 64, 0.5), &rgb).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
}

#[test]
fn single_unit_response_agrees_with_the_bank() {
    let g = make_field(2.0, 64).unwrap();
    let bank = sample_gfb(&cfg(3), &g, 3).unwrap();
    let img = noise(3, 64, 9);
    let all = voneblock_forward(&img, &bank).unwrap();
    for i in [0, 100, 255, 256, 400, 511] {
        let p = unit_response(&bank.units()[i], &g, 2, &img).unwrap();
        assert_eq!(p.data(), all.channel_slice(i));
    }
}

#[test]
fn complex_energy_grows_with_contrast() {
    let g = make_field(2.0, 64).unwrap();
    let bank = sample_gfb(&cfg(0), &g, 3).unwrap();
    let grid = contrast_grid(24).unwrap();
    for unit in (256..512).step_by(37) {
        let probe = V1Probe { bank: &bank, unit, retina: None };
        let p = bank.units()[unit].params;
        let mut last = -1.0;
        for &c in &grid {
            let spec = GratingSpec { sf_cpd: p.sf_cpd, orientation: p.theta, contrast: c, ..GratingSpec::default() }
                .full_field();
            let f0 = fourier_metrics(&probe.record(&grating_frames(&spec, &g).unwrap()).unwrap()).unwrap().f0;
            assert!(f0 >= last - 1e-12, "unit {unit} at c {c}: {f0} < {last}");
            last = f0;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn outputs_are_non_negative(seed in any::<u64>(), bank_seed in 0u64..4) {
        let g = make_field(2.0, 64).unwrap();
        let bank = sample_gfb(&cfg(bank_seed), &g, 3).unwrap();
        let out = voneblock_forward(&noise(3, 64, seed).map(|v| 2.0 * v - 1.0), &bank).unwrap();
        prop_assert!(out.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn permuting_units_permutes_channels(seed in any::<u64>(), rot in 0usize..512) {
        let g = make_field(2.0, 64).unwrap();
        let bank = sample_gfb(&cfg(seed % 3), &g, 3).unwrap();
        let order: Vec<usize> = (0..512).map(|i| (i * 211 + rot) % 512).collect();
        let permuted = bank.permuted(&order).unwrap();
        let img = noise(3, 64, seed);
        let a = voneblock_forward(&img, &bank).unwrap();
        let b = voneblock_forward(&img, &permuted).unwrap();
        for (i, &j) in order.iter().enumerate() {
            prop_assert_eq!(b.channel_slice(i), a.channel_slice(j));
        }
    }

    #[test]
    fn stride_two_is_shift_covariant(seed in any::<u64>(), dy in 0usize..3, dx in 0usize..3) {
        let g = make_field(2.0, 64).unwrap();
        let small = GfbConfig { n_units: 8, n_simple: 4, n_complex: 4, kernel_cap_px: 15, ..cfg(seed % 5) };
        let bank = sample_gfb(&small, &g, 1).unwrap();
        let base = noise(1, 64, seed).plane(0).unwrap();
        let shifted = Plane::from_fn(64, 64, |y, x| base.get(y.saturating_sub(2 * dy), x.saturating_sub(2 * dx)));
        let a = voneblock_forward(&ImageTensor::from_planes(vec![base]).unwrap(), &bank).unwrap();
        let b = voneblock_forward(&ImageTensor::from_planes(vec![shifted]).unwrap(), &bank).unwrap();
        // interior only: kernels are at most 15 px, so 4 output px clear the border
        for c in 0..8 {
            for y in 4 + dy..28 {
                for x in 4 + dx..28 {
                    prop_assert!((b.get(c, y, x) - a.get(c, y - dy, x - dx)).abs() < 1e-12);
                }
            }
        }
    }
}
