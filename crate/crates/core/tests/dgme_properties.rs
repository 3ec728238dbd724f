use dgme_core::dgme::{
    apply_zscore, compute_dgme, compute_dgme_with, descriptor_from_polar, fit_stats, grid_histograms, DgmeConfig,
    DgmeDescriptor, STD_FLOOR,
};
use dgme_core::flow::{polar, FarnebackConfig, FlowMethod, PolarFlow};
use dgme_core::synth::{make_clip, MotionClass, SynthSpec};
use dgme_core::videoio::FrameSequence;
use proptest::prelude::*;

const K: usize = 13;

fn polar_field(max_side: usize) -> impl Strategy<Value = PolarFlow> {
    (3..=max_side, 3..=max_side).prop_flat_map(|(w, h)| {
        (prop::collection::vec(0.0f32..6.0, w * h), prop::collection::vec(0u32..(360 * 64), w * h)).prop_map(
            move |(m, t)| PolarFlow {
                width: w,
                height: h,
                m,
                // multiples of 1/64 degree so a 30 degree shift is exact in f32
                theta: t.into_iter().map(|q| q as f32 / 64.0).collect(),
            },
        )
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unit_norm_and_nonnegative(fields in prop::collection::vec(polar_field(20), 1..4), thr in 0.05f64..3.0) {
        let (w, h) = (fields[0].width, fields[0].height);
        let fields: Vec<_> = fields.into_iter().filter(|f| f.width == w && f.height == h).collect();
        let cfg = DgmeConfig { magnitude_threshold: thr, ..DgmeConfig::default() };
        let d = descriptor_from_polar(&fields, &cfg, "c", "h");
        prop_assert_eq!(d.values.len(), 117);
        prop_assert!(d.values.iter().all(|&v| v >= 0.0));
        prop_assert!((norm(&d.values) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rotating_every_angle_by_one_bin_shifts_bins(field in polar_field(24)) {
        let cfg = DgmeConfig::default();
        let mut moving = field.clone();
        moving.m.iter_mut().for_each(|m| *m += 0.5);
        let mut rotated = moving.clone();
        rotated.theta.iter_mut().for_each(|t| *t = (*t + 30.0) % 360.0);
        let a = grid_histograms(&moving, &cfg);
        let b = grid_histograms(&rotated, &cfg);
        for c in 0..9 {
            for k in 0..12 {
                prop_assert_eq!(b[c * K + (k + 1) % 12], a[c * K + k]);
            }
            prop_assert_eq!(b[c * K + 12], a[c * K + 12]);
        }
    }

    #[test]
    fn raising_threshold_moves_mass_to_static(field in polar_field(24), lo in 0.0f64..3.0, step in 0.0f64..3.0) {
        let low = DgmeConfig { magnitude_threshold: lo, ..DgmeConfig::default() };
        let high = DgmeConfig { magnitude_threshold: lo + step, ..DgmeConfig::default() };
        let a = grid_histograms(&field, &low);
        let b = grid_histograms(&field, &high);
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            if i % K == 12 {
                prop_assert!(y >= x);
            } else {
                prop_assert!(y <= x);
            }
        }
    }

    #[test]
    fn zero_flow_fills_static_bins_only(w in 16usize..40, h in 16usize..40, frames in 2usize..5, seed: u64) {
        let frame: Vec<u8> = (0..w * h)
            .map(|i| (seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 56) as u8)
            .collect();
        let seq = FrameSequence::new("z", w, h, vec![frame; frames]).unwrap();
        let d = compute_dgme(&seq, &DgmeConfig::default(), &FarnebackConfig::default()).unwrap();
        for (i, v) in d.values.iter().enumerate() {
            if i % K == 12 {
                prop_assert!(*v > 0.0);
            } else {
                prop_assert_eq!(*v, 0.0);
            }
        }
        prop_assert!((norm(&d.values) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stationary_pairs_do_not_depend_on_count(field in polar_field(20), n in 2usize..12) {
        let cfg = DgmeConfig::default();
        let one = descriptor_from_polar([&field], &cfg, "c", "h");
        let many = descriptor_from_polar(std::iter::repeat_n(&field, n), &cfg, "c", "h");
        for (a, b) in one.values.iter().zip(&many.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn self_calibration_gives_zero_mean_unit_std(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 117), 2..30)
    ) {
        let descs: Vec<DgmeDescriptor> = rows
            .into_iter()
            .map(|values| DgmeDescriptor { clip_id: "c".into(), config_hash: "h".into(), values })
            .collect();
        let stats = fit_stats(&descs).unwrap();
        let z: Vec<Vec<f64>> = descs.iter().map(|d| apply_zscore(d, &stats).unwrap()).collect();
        let n = z.len() as f64;
        for j in 0..117 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
            let std = (z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            if stats.std[j] > STD_FLOOR {
                prop_assert!((std - 1.0).abs() < 1e-6);
            }
        }
    }
}

fn block_matching() -> FlowMethod {
    FlowMethod::BlockMatch { block: 8, search_radius: 6 }
}

#[test]
fn pan_right_argmax_is_bin_zero_in_every_cell() {
    let spec = SynthSpec::new(MotionClass::Pan, 3.0, 1, 5);
    let d = compute_dgme_with(&make_clip(&spec).unwrap(), &DgmeConfig::default(), &block_matching()).unwrap();
    for c in 0..9 {
        let h = &d.values[c * K..c * K + 12];
        let arg = (0..12).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
        assert_eq!(arg, 0, "cell {c}: {h:?}");
    }
}

#[test]
fn block_matching_puts_integer_shift_mass_in_the_true_bin() {
    let cfg = DgmeConfig::default();
    for class in [MotionClass::Pan, MotionClass::Tilt] {
        for seed in 0..8u64 {
            let sign = if seed % 2 == 0 { 1 } else { -1 };
            let spec = SynthSpec::new(class, 1.0 + (seed / 2) as f64, sign, seed);
            let d = compute_dgme_with(&make_clip(&spec).unwrap(), &cfg, &block_matching()).unwrap();
            let (u, v) = spec.true_flow(0.0, 0.0);
            let bin = cfg.direction_bin(polar(u, v).1);
            let (mut hit, mut total) = (0.0, 0.0);
            for c in 0..9 {
                total += d.values[c * K..c * K + 12].iter().sum::<f64>();
                hit += d.values[c * K + bin];
            }
            assert!(hit / total >= 0.99, "{class} seed {seed}: {:.4}", hit / total);
        }
    }
}

#[test]
fn farneback_descriptor_matches_expected_cells_on_zoom() {
    let cfg = DgmeConfig::default();
    for sign in [1, -1] {
        let spec = SynthSpec::new(MotionClass::Zoom, 2.0 / 48.0, sign, 3);
        let d = compute_dgme(&make_clip(&spec).unwrap(), &cfg, &FarnebackConfig::default()).unwrap();
        for (c, expected) in spec.expected_cell_bins(&cfg).iter().enumerate() {
            if expected.is_empty() {
                assert_eq!(c, 4, "only the centre cell lacks a direction");
                continue;
            }
            let h = &d.values[c * K..c * K + 12];
            let arg = (0..12).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
            assert!(expected.contains(&arg), "sign {sign} cell {c}: {arg} not in {expected:?}");
        }
    }
}
