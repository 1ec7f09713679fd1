mod common;

use common::*;
use dif_core::diff::{amplify_split, analyze_pair, filtered_difference};
use dif_core::filter::{masked_spatial_filter, spatial_filter, GaussianKernel};
use dif_core::image::{decode_to_float, subtract, FloatImage, Mask, RawImage};
use dif_core::AnalysisParams;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn subtract_matches_loop() {
    let mut rng = rng(1);
    for _ in 0..20 {
        let p = random_image(&mut rng, 16, 16, 3, 0.0, 1.0);
        let r = random_image(&mut rng, 16, 16, 3, 0.0, 1.0);
        let d = subtract(&p, &r).unwrap();
        for c in 0..3 {
            for y in 0..16 {
                for x in 0..16 {
                    assert_eq!(d.get(c, x, y), p.get(c, x, y) - r.get(c, x, y));
                }
            }
        }
    }
}

#[test]
fn amplify_matches_oracle() {
    let mut rng = rng(2);
    for _ in 0..20 {
        let d = random_image(&mut rng, 16, 16, 3, -0.05, 0.05);
        let pair = amplify_split(&d, 1e-9).unwrap();
        let (plus, minus, a_plus, a_minus) = amplify_oracle(&d);
        assert!(max_abs_diff(pair.d_plus.samples(), &plus) <= 1e-9);
        assert!(max_abs_diff(pair.d_minus.samples(), &minus) <= 1e-9);
        assert!((pair.gain_plus - a_plus).abs() <= 1e-9 * a_plus);
        assert!((pair.gain_minus - a_minus).abs() <= 1e-9 * a_minus);
        assert_eq!(pair.d_plus.argmax().0, 1.0);
        assert_eq!(pair.d_minus.argmax().0, 1.0);
    }
}

#[test]
fn separable_matches_dense() {
    let mut rng = rng(3);
    let img = random_image(&mut rng, 32, 32, 3, -1.0, 1.0);
    let fast = spatial_filter(&img, &GaussianKernel::new(2.0, 6).unwrap());
    let slow = dense_convolve(&img, 2.0, 6);
    assert!(max_abs_diff(fast.samples(), slow.samples()) <= 1e-6);
}

#[test]
fn kernel_wider_than_image() {
    // radius 27 on a 5x4 image reflects several times
    let mut rng = rng(4);
    let img = random_image(&mut rng, 5, 4, 1, 0.0, 1.0);
    let fast = spatial_filter(&img, &GaussianKernel::new(9.0, 27).unwrap());
    let slow = dense_convolve(&img, 9.0, 27);
    assert!(max_abs_diff(fast.samples(), slow.samples()) <= 1e-9);
}

#[test]
fn masked_filter_matches_renormalized_oracle() {
    let mut rng = rng(5);
    for trial in 0..5 {
        let (w, h) = (24 + trial, 19);
        let img = random_image(&mut rng, w, h, 3, -0.5, 0.5);
        let valid = Mask::from_fn(w, h, |_, _| rng.random_bool(0.7)).unwrap();
        let (sigma, radius) = (1.5, 5);
        let (out, _) = masked_spatial_filter(&img, &valid, &GaussianKernel::new(sigma, radius).unwrap()).unwrap();

        let mask_img = FloatImage::from_fn(w, h, 1, |_, x, y| f64::from(u8::from(valid.get(x, y)))).unwrap();
        let masked = FloatImage::from_fn(w, h, 3, |c, x, y| if valid.get(x, y) { img.get(c, x, y) } else { 0.0 }).unwrap();
        let num = dense_convolve(&masked, sigma, radius);
        let den = dense_convolve(&mask_img, sigma, radius);
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    let s = den.get(0, x, y);
                    let expected = if s > 0.0 { num.get(c, x, y) / s } else { 0.0 };
                    assert!((out.get(c, x, y) - expected).abs() <= 1e-6, "({c},{x},{y})");
                }
            }
        }
    }
}

#[test]
fn sigma_zero_skips_filtering() {
    let mut rng = rng(6);
    let p = random_image(&mut rng, 12, 9, 3, 0.0, 1.0);
    let r = random_image(&mut rng, 12, 9, 3, 0.0, 1.0);
    let params = AnalysisParams::default().with_sigma(0.0);
    let pair = analyze_pair(&p, &r, &params).unwrap();
    assert_eq!(pair, amplify_split(&subtract(&p, &r).unwrap(), params.zero_floor).unwrap());
}

#[test]
fn bump_is_located() {
    // p = p_r + Gaussian bump of peak 3/255, no noise
    let mut rng = rng(7);
    let (w, h) = (96, 80);
    let p_r = random_image(&mut rng, w, h, 3, 0.2, 0.7);
    let (cx, cy, s) = (61.0, 27.0, 6.0);
    let bump = |x: usize, y: usize| {
        let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        3.0 / 255.0 * (-r2 / (2.0 * s * s)).exp()
    };
    let p = FloatImage::from_fn(w, h, 3, |c, x, y| p_r.get(c, x, y) + bump(x, y)).unwrap();
    let pair = analyze_pair(&p, &p_r, &AnalysisParams::default()).unwrap();
    let (_, x, y) = pair.argmax_plus().unwrap();
    // support: where the bump exceeds 1% of its peak
    assert!(bump(x, y) >= 0.01 * 3.0 / 255.0, "argmax at ({x}, {y})");
    assert!(pair.degenerate_minus || pair.gain_minus > 1e6);
}

#[test]
fn filtered_noise_std_follows_kernel_norm() {
    let mut rng = rng(8);
    let s = 0.01;
    let normal = rand_distr::Normal::new(0.0, s).unwrap();
    let noise = FloatImage::from_fn(256, 256, 1, |_, _, _| rand_distr::Distribution::sample(&normal, &mut rng)).unwrap();
    let k = GaussianKernel::new(3.0, 9).unwrap();
    let out = spatial_filter(&noise, &k);
    let measured = std_dev(out.samples());
    let expected = s * k.squared_norm_2d().sqrt();
    assert!((measured / expected - 1.0).abs() < 0.05, "{measured} vs {expected}");
}

#[test]
fn deterministic_across_thread_counts() {
    let mut rng = rng(9);
    let p = random_image(&mut rng, 70, 45, 3, 0.0, 1.0);
    let r = random_image(&mut rng, 70, 45, 3, 0.0, 1.0);
    let params = AnalysisParams::default().with_sigma(4.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| filtered_difference(&p, &r, &params).unwrap())
    };
    let one = run(1);
    for t in [2, 3, 8] {
        assert_eq!(one.samples(), run(t).samples());
    }
}

fn image_strategy() -> impl Strategy<Value = FloatImage> {
    (1usize..12, 1usize..12, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(w, h, c)| {
        prop::collection::vec(-1.0f64..1.0, w * h * c)
            .prop_map(move |data| FloatImage::new(w, h, c, data).unwrap())
    })
}

fn image_pair_strategy() -> impl Strategy<Value = (FloatImage, FloatImage)> {
    (1usize..12, 1usize..12, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(w, h, c)| {
        (
            prop::collection::vec(-1.0f64..1.0, w * h * c),
            prop::collection::vec(-1.0f64..1.0, w * h * c),
        )
            .prop_map(move |(a, b)| (FloatImage::new(w, h, c, a).unwrap(), FloatImage::new(w, h, c, b).unwrap()))
    })
}

proptest! {
    #[test]
    fn self_subtraction_is_zero(p in image_strategy()) {
        prop_assert!(subtract(&p, &p).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn subtraction_antisymmetric((a, b) in image_pair_strategy()) {
        let ab = subtract(&a, &b).unwrap();
        let ba = subtract(&b, &a).unwrap();
        for (x, y) in ab.samples().iter().zip(ba.samples()) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn decode_monotone(a in 0u16..=255, b in 0u16..=255) {
        let raw = RawImage { width: 2, height: 1, channels: 1, bit_depth: 8, samples: vec![a, b] };
        let img = decode_to_float(&raw).unwrap();
        prop_assert_eq!(a.cmp(&b), img.samples()[0].partial_cmp(&img.samples()[1]).unwrap());
    }

    #[test]
    fn filter_is_linear((a, b) in image_pair_strategy(), scale in -4.0f64..4.0, sigma in 0.5f64..4.0) {
        let k = GaussianKernel::new(sigma, (3.0 * sigma).ceil() as usize).unwrap();
        let fa = spatial_filter(&a, &k);
        let fb = spatial_filter(&b, &k);
        let sum = FloatImage::new(a.width(), a.height(), a.channels(),
            a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect()).unwrap();
        let fsum = spatial_filter(&sum, &k);
        let scaled = spatial_filter(&a.map(|v| scale * v), &k);
        for i in 0..fa.samples().len() {
            prop_assert!((fsum.samples()[i] - fa.samples()[i] - fb.samples()[i]).abs() <= 1e-6);
            prop_assert!((scaled.samples()[i] - scale * fa.samples()[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn separable_equals_dense(img in image_strategy(), sigma in 0.5f64..3.0) {
        let r = (3.0 * sigma).ceil() as usize;
        let fast = spatial_filter(&img, &GaussianKernel::new(sigma, r).unwrap());
        let slow = dense_convolve(&img, sigma, r);
        prop_assert!(max_abs_diff(fast.samples(), slow.samples()) <= 1e-6);
    }

    #[test]
    fn filter_preserves_constants(w in 1usize..20, h in 1usize..20, v in -1.0f64..1.0, sigma in 0.5f64..9.0) {
        let img = FloatImage::filled(w, h, 3, v).unwrap();
        let out = spatial_filter(&img, &GaussianKernel::new(sigma, (3.0 * sigma).ceil() as usize).unwrap());
        prop_assert!(out.samples().iter().all(|&x| (x - v).abs() <= 1e-9));
    }

    #[test]
    fn amplification_scale_invariant(d in image_strategy(), scale in 0.01f64..100.0) {
        let a = amplify_split(&d, 0.0).unwrap();
        let b = amplify_split(&d.map(|v| v * scale), 0.0).unwrap();
        prop_assert!(max_abs_diff(a.d_plus.samples(), b.d_plus.samples()) <= 1e-12);
        prop_assert!(max_abs_diff(a.d_minus.samples(), b.d_minus.samples()) <= 1e-12);
        prop_assert_eq!(a.degenerate_plus, b.degenerate_plus);
        if !a.degenerate_plus {
            prop_assert!((b.gain_plus * scale / a.gain_plus - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn amplified_pair_invariants(d in image_strategy()) {
        let pair = amplify_split(&d, 1e-9).unwrap();
        for (side, degenerate, gain) in [(&pair.d_plus, pair.degenerate_plus, pair.gain_plus), (&pair.d_minus, pair.degenerate_minus, pair.gain_minus)] {
            prop_assert!(side.is_unit_range());
            prop_assert!(gain.is_finite() && gain >= 0.0);
            if degenerate {
                prop_assert_eq!(gain, 0.0);
                prop_assert!(side.samples().iter().all(|&v| v == 0.0));
            } else {
                prop_assert_eq!(side.argmax().0, 1.0);
            }
        }
    }
}
