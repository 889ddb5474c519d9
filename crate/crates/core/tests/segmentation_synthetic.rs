mod common;

use irisbench::segmentation::SegmentationError;
use irisbench::synth::{render_eye, synth_dataset, EyeGeometry, IrisTexture, SynthParams};
use irisbench::{segment, GrayImage};

fn clean_params() -> SynthParams {
    SynthParams {
        pupil_jitter: 0.0,
        center_jitter: 0.0,
        max_rotation_deg: 0.0,
        gradient: 0.0,
        ..SynthParams::default()
    }
}

fn fixed_geometry() -> EyeGeometry {
    EyeGeometry {
        cx: 128.0,
        cy: 128.0,
        pupil_radius: 30.0,
        iris_radius: 70.0,
        rotation: 0.0,
        gradient: (0.0, 0.0),
    }
}

#[test]
fn synthetic_eye_geometry() {
    let p = clean_params();
    let tex = IrisTexture::random(&mut common::rng(5), p.texture_waves, p.max_angular_freq);
    let img = render_eye(&tex, &fixed_geometry(), &p, &mut common::rng(6));
    let seg = segment(&img, 512, 32).unwrap();
    assert!((seg.pupil.cx - 128.0).abs() <= 1.0, "{:?}", seg.pupil);
    assert!((seg.pupil.cy - 128.0).abs() <= 1.0, "{:?}", seg.pupil);
    assert!((seg.pupil.radius - 30.0).abs() <= 1.0, "{:?}", seg.pupil);
    assert!(
        (seg.limbic_radius - 70.0).abs() <= 3.0,
        "limbic {}",
        seg.limbic_radius
    );
    assert_eq!((seg.normalized.angles(), seg.normalized.radii()), (512, 32));
    let (lo, hi) = seg
        .normalized
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    assert_eq!((lo, hi), (0.0, 1.0));
}

#[test]
fn geometry_does_not_depend_on_texture() {
    let p = clean_params();
    let results: Vec<_> = (0..4)
        .map(|seed| {
            let tex = IrisTexture::random(
                &mut common::rng(100 + seed),
                p.texture_waves,
                p.max_angular_freq,
            );
            let img = render_eye(&tex, &fixed_geometry(), &p, &mut common::rng(7));
            segment(&img, 512, 32).unwrap()
        })
        .collect();
    for r in &results[1..] {
        assert!((r.pupil.cx - results[0].pupil.cx).abs() <= 1.0);
        assert!((r.pupil.cy - results[0].pupil.cy).abs() <= 1.0);
        assert!((r.pupil.radius - results[0].pupil.radius).abs() <= 1.0);
        // The limbic radius is quantized to the working radial step
        // (3 r_p / 64, about 1.4 px here); allow one step.
        assert!(
            r.limbic_index.abs_diff(results[0].limbic_index) <= 1,
            "{} vs {}",
            r.limbic_index,
            results[0].limbic_index
        );
        assert!((r.limbic_radius - results[0].limbic_radius).abs() <= 2.0);
    }
}

#[test]
fn segmentation_is_deterministic() {
    let s = synth_dataset(1, 1, 9, &SynthParams::default()).remove(0);
    assert_eq!(
        segment(&s.image, 512, 32).unwrap(),
        segment(&s.image, 512, 32).unwrap()
    );
}

#[test]
fn blank_images_fail_cleanly() {
    let white = GrayImage::from_fn(128, 128, |_, _| 255).unwrap();
    assert!(matches!(
        segment(&white, 512, 32),
        Err(SegmentationError::PupilNotFound(_))
    ));
    let black = GrayImage::from_fn(128, 128, |_, _| 0).unwrap();
    assert!(segment(&black, 512, 32).is_err());
}

#[test]
fn no_failures_over_500_renders() {
    let data = synth_dataset(50, 10, 2024, &SynthParams::default());
    let mut worst = 0.0f64;
    for s in &data {
        let seg = segment(&s.image, 512, 32)
            .unwrap_or_else(|e| panic!("{} sample {}: {e}", s.subject, s.sample));
        assert!((seg.pupil.cx - s.geometry.cx).abs() <= 1.0);
        assert!((seg.pupil.cy - s.geometry.cy).abs() <= 1.0);
        assert!((seg.pupil.radius - s.geometry.pupil_radius).abs() <= 1.0);
        worst = worst.max((seg.limbic_radius - s.geometry.iris_radius).abs());
    }
    assert!(worst <= 3.0, "worst limbic error {worst}");
}
