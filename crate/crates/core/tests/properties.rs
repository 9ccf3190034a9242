use proptest::prelude::*;
use refmatte::augment::{self, ColorJitter, Sample, SampleMeta};
use refmatte::graycode::{extract_matte, generate_pattern_stack, CaptureStack, DecodeConfig};
use refmatte::metrics::{self, CoarseTerms, CoarseWeights};
use refmatte::render::{trace_ray, Camera, Pose, Scene, Shape, TransparentObject};
use refmatte::{bilinear_sample, composite_refractive, FlowField, ImageBuffer, Matte};

fn image(w: usize, h: usize, ch: usize) -> impl Strategy<Value = ImageBuffer> {
    prop::collection::vec(0.0f32..=1.0, w * h * ch)
        .prop_map(move |d| ImageBuffer::from_vec(w, h, ch, d).unwrap())
}

fn matte(w: usize, h: usize) -> impl Strategy<Value = Matte> {
    (
        prop::collection::vec(prop_oneof![Just(0.0f32), Just(1.0f32), 0.0f32..=1.0], w * h),
        prop::collection::vec(0.0f32..=1.0, w * h),
        prop::collection::vec((-4.0f32..4.0, -4.0f32..4.0), w * h),
        prop::collection::vec(prop::bool::weighted(0.9), w * h),
    )
        .prop_map(move |(m, a, f, v)| {
            let flow = FlowField::from_parts(w, h, f.into_iter().map(|(x, y)| [x, y]).collect(), v)
                .unwrap();
            Matte::new(
                ImageBuffer::from_vec(w, h, 1, m).unwrap(),
                ImageBuffer::from_vec(w, h, 1, a).unwrap(),
                flow,
            )
            .unwrap()
        })
}

fn sample(w: usize, h: usize) -> impl Strategy<Value = Sample> {
    (image(w, h, 3), matte(w, h), any::<u64>()).prop_map(|(bg, m, seed)| {
        let input = composite_refractive(&m, &bg).unwrap();
        Sample::new(
            input,
            bg,
            m,
            SampleMeta {
                seed,
                scene_id: "p".into(),
            },
        )
        .unwrap()
    })
}

fn max_abs_diff(a: &ImageBuffer, b: &ImageBuffer) -> f32 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bilinear_is_lipschitz_and_bounded(
        img in image(6, 5, 1),
        x in -1.0f64..7.0, y in -1.0f64..6.0,
        dx in -0.5f64..0.5, dy in -0.5f64..0.5,
    ) {
        let a = bilinear_sample(&img, x, y).unwrap()[0];
        let b = bilinear_sample(&img, x + dx, y + dy).unwrap()[0];
        prop_assert!((a - b).abs() <= dx.abs() + dy.abs() + 1e-6);
        let lo = img.data().iter().cloned().fold(f32::INFINITY, f32::min) as f64;
        let hi = img.data().iter().cloned().fold(0.0f32, f32::max) as f64;
        prop_assert!(a >= lo - 1e-7 && a <= hi + 1e-7);
    }

    #[test]
    fn bilinear_interpolates_pixel_centers(img in image(6, 5, 3), x in 0usize..6, y in 0usize..5) {
        let v = bilinear_sample(&img, x as f64, y as f64).unwrap();
        for (c, value) in v.iter().enumerate() {
            prop_assert_eq!(*value, img.get(x, y, c) as f64);
        }
    }

    #[test]
    fn composite_stays_in_range(m in matte(8, 7), bg in image(8, 7, 3)) {
        let out = composite_refractive(&m, &bg).unwrap();
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn composite_is_linear_in_background(
        m in matte(8, 7), b1 in image(8, 7, 3), b2 in image(8, 7, 3), t in 0.0f32..=1.0,
    ) {
        let mix = ImageBuffer::from_vec(8, 7, 3,
            b1.data().iter().zip(b2.data()).map(|(a, b)| t * a + (1.0 - t) * b).collect()).unwrap();
        let c1 = composite_refractive(&m, &b1).unwrap();
        let c2 = composite_refractive(&m, &b2).unwrap();
        let cm = composite_refractive(&m, &mix).unwrap();
        for i in 0..cm.data().len() {
            let lin = t * c1.data()[i] + (1.0 - t) * c2.data()[i];
            prop_assert!((cm.data()[i] - lin).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_mask_leaves_background(bg in image(8, 7, 3)) {
        prop_assert_eq!(composite_refractive(&Matte::empty(8, 7), &bg).unwrap(), bg.clone());
        prop_assert_eq!(composite_refractive(&Matte::identity(8, 7), &bg).unwrap(), bg);
    }

    #[test]
    fn composite_commutes_with_flips(m in matte(9, 8), bg in image(9, 8, 3)) {
        let c = composite_refractive(&m, &bg).unwrap();
        let h = composite_refractive(&m.flip_horizontal(), &bg.flip_horizontal()).unwrap();
        let v = composite_refractive(&m.flip_vertical(), &bg.flip_vertical()).unwrap();
        prop_assert!(max_abs_diff(&h, &c.flip_horizontal()) < 1e-5);
        prop_assert!(max_abs_diff(&v, &c.flip_vertical()) < 1e-5);
    }

    #[test]
    fn augment_transforms_keep_matte_invariants(s in sample(20, 18), seed in any::<u64>(),
        b in -0.2f64..=0.2, r in 0.0f64..3.0, f in 0.875f64..=1.05) {
        let j = ColorJitter { brightness: b, contrast: -b / 2.0, saturation: b };
        for out in [
            augment::flip_horizontal(&s),
            augment::flip_vertical(&s),
            augment::jitter_color(&s, &j).unwrap(),
            augment::add_noise(&s, 0.05, seed).unwrap(),
            augment::scale_sample(&s, f, 0).unwrap(),
            augment::blur_boundary(&s, r).unwrap(),
            augment::random_crop(&s, 12, seed).unwrap(),
        ] {
            out.validate().unwrap();
            prop_assert!(out.input.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn flips_and_crops_commute_with_color(s in sample(16, 14), seed in any::<u64>(), b in -0.2f64..=0.2, c in -0.2f64..=0.2) {
        let j = ColorJitter { brightness: b, contrast: c, saturation: -c };
        let jc = |x: &Sample| augment::jitter_color(x, &j).unwrap();
        prop_assert_eq!(jc(&augment::flip_horizontal(&s)), augment::flip_horizontal(&jc(&s)));
        prop_assert_eq!(jc(&augment::flip_vertical(&s)), augment::flip_vertical(&jc(&s)));
        let crop = |x: &Sample| augment::random_crop(x, 10, seed).unwrap();
        prop_assert_eq!(jc(&crop(&s)), crop(&jc(&s)));
    }

    #[test]
    fn metrics_are_symmetric(a in image(16, 16, 3), b in image(16, 16, 3), m1 in matte(12, 12), m2 in matte(12, 12), m3 in matte(12, 12)) {
        prop_assert_eq!(metrics::mse(&a, &b).unwrap(), metrics::mse(&b, &a).unwrap());
        prop_assert!((metrics::ssim(&a, &b).unwrap() - metrics::ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((metrics::ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let epe = |x: &Matte, y: &Matte| metrics::loss_flow_epe(&x.flow, &y.flow, None).unwrap().value;
        prop_assert!((epe(&m1, &m2) - epe(&m2, &m1)).abs() < 1e-12);
        prop_assert!(epe(&m1, &m3) <= epe(&m1, &m2) + epe(&m2, &m3) + 1e-9);
        let rmse = |x: &ImageBuffer, y: &ImageBuffer| metrics::mse(x, y).unwrap().sqrt();
        let c = ImageBuffer::from_vec(16, 16, 3, a.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        prop_assert!(rmse(&a, &c) <= rmse(&a, &b) + rmse(&b, &c) + 1e-9);
        prop_assert_eq!(metrics::mask_iou(&m1.mask, &m2.mask).unwrap(), metrics::mask_iou(&m2.mask, &m1.mask).unwrap());
    }

    #[test]
    fn psnr_decreases_with_mse(e1 in 1e-8f64..1.0, e2 in 1e-8f64..1.0) {
        prop_assume!((e1 - e2).abs() > 1e-12);
        let img = |e: f64| ImageBuffer::filled(4, 4, 1, e.sqrt() as f32);
        let zero = ImageBuffer::filled(4, 4, 1, 0.0);
        let (p1, p2) = (metrics::psnr(&img(e1), &zero).unwrap(), metrics::psnr(&img(e2), &zero).unwrap());
        let (m1, m2) = (metrics::mse(&img(e1), &zero).unwrap(), metrics::mse(&img(e2), &zero).unwrap());
        if m1 < m2 { prop_assert!(p1 > p2) } else if m1 > m2 { prop_assert!(p1 < p2) }
    }

    #[test]
    fn weighted_losses_are_linear(t in prop::array::uniform4(0.0f64..10.0), u in prop::array::uniform4(0.0f64..10.0), k in 0.0f64..5.0) {
        let w = CoarseWeights::default();
        let terms = |v: [f64; 4]| CoarseTerms { mask: v[0], attenuation: v[1], flow: v[2], reconstruction: v[3] };
        let sum: [f64; 4] = std::array::from_fn(|i| t[i] + k * u[i]);
        let lhs = metrics::coarse_loss(&terms(sum), &w).unwrap();
        let rhs = metrics::coarse_loss(&terms(t), &w).unwrap() + k * metrics::coarse_loss(&terms(u), &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        let s = [0.125, 0.25, 0.5, 1.0];
        let lhs = metrics::multiscale_loss(&sum, &s).unwrap();
        let rhs = metrics::multiscale_loss(&t, &s).unwrap() + k * metrics::multiscale_loss(&u, &s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gray_code_recovers_integer_flow(
        w in 8usize..40, h in 8usize..40,
        shifts in prop::collection::vec((-6i32..=6, -6i32..=6), 4),
        complements in any::<bool>(),
    ) {
        let mut m = Matte::identity(w, h);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = shifts[(x * 2 / w) + 2 * (y * 2 / h)];
                m.flow.set(x, y, [dx as f32, dy as f32]);
            }
        }
        let stack = CaptureStack::from_matte(&m, &generate_pattern_stack(w, h, complements).unwrap()).unwrap();
        let got = extract_matte(&stack, &DecodeConfig::default()).unwrap();
        for y in 0..h {
            for x in 0..w {
                let [dx, dy] = m.flow.offset(x, y);
                let tx = (x as f32 + dx).clamp(0.0, (w - 1) as f32) - x as f32;
                let ty = (y as f32 + dy).clamp(0.0, (h - 1) as f32) - y as f32;
                prop_assert_eq!(got.flow.get(x, y), Some([tx, ty]), "pixel ({}, {})", x, y);
            }
        }
    }
}

fn object_scene(shape: Shape, n: f64, rotation: [f64; 3], lateral: [f64; 2]) -> Scene {
    Scene {
        camera: Camera::centered(41, 41, 60.0),
        background_distance: 12.0,
        object: Some(TransparentObject {
            shape,
            pose: Pose {
                position: [lateral[0], lateral[1], 6.0],
                rotation,
            },
            refractive_index: n,
            fill: None,
        }),
    }
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.5f64..1.5).prop_map(|radius| Shape::Sphere { radius }),
        (0.2f64..0.8, 0.6f64..1.5, 0.6f64..1.5).prop_map(|(thickness, half_width, half_height)| {
            Shape::Slab {
                thickness,
                half_width,
                half_height,
            }
        }),
        (1.5f64..3.0, 1.5f64..3.0).prop_map(|(a, b)| Shape::Lens {
            front_radius: a,
            back_radius: b,
            thickness: 0.6
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn renderer_mirror_symmetry(s in shape(), n in 1.3f64..1.5, tilt in -40.0f64..40.0, x in 0usize..41, y in 0usize..41) {
        // object symmetric about the camera's y-z plane: flow mirrors in x
        let scene = object_scene(s, n, [tilt, 0.0, 0.0], [0.0, 0.0]);
        let a = trace_ray(&scene, x as f64, y as f64).unwrap();
        let b = trace_ray(&scene, (40 - x) as f64, y as f64).unwrap();
        prop_assert_eq!(a.hit, b.hit);
        match (a.exit, b.exit) {
            (Some(pa), Some(pb)) => {
                prop_assert!((pa[0] - x as f64 + (pb[0] - (40 - x) as f64)).abs() < 1e-6);
                prop_assert!((pa[1] - pb[1]).abs() < 1e-6);
                prop_assert!((a.transmittance - b.transmittance).abs() < 1e-9);
            }
            (None, None) => {}
            _ => prop_assert!(false, "validity differs"),
        }
    }

    #[test]
    fn renderer_index_continuity(s in shape(), rot in prop::array::uniform3(-30.0f64..30.0), lat in prop::array::uniform2(-0.3f64..0.3), x in 0usize..41, y in 0usize..41) {
        let unit = trace_ray(&object_scene(s.clone(), 1.0, rot, lat), x as f64, y as f64).unwrap();
        if let Some(p) = unit.exit {
            prop_assert!((p[0] - x as f64).abs() < 1e-6 && (p[1] - y as f64).abs() < 1e-6);
            prop_assert!((unit.transmittance - 1.0).abs() < 1e-12);
        }
        let near = trace_ray(&object_scene(s, 1.0 + 1e-5, rot, lat), x as f64, y as f64).unwrap();
        if let Some(p) = near.exit {
            prop_assert!((p[0] - x as f64).hypot(p[1] - y as f64) < 0.05);
            prop_assert!(near.transmittance > 0.999);
        }
    }
}
