use sua_core::{ShapeFamily, SynthSpec};
use sua_harness::synth::{apply_intensity_map, synth_generate};
use sua_spatx::{jacobian_determinant, positive_fraction};

#[test]
fn trivial_gap_makes_domains_identical() {
    let spec = SynthSpec {
        warp_amplitude: 0.0,
        intensity_map: vec![[0.0, 0.0], [1.0, 1.0]],
        noise: 0.0,
        source_count: 6,
        target_count: 6,
        ..Default::default()
    };
    let data = synth_generate(&spec).unwrap();
    assert_eq!(data.source.items(), data.target.items());
}

#[test]
fn same_seed_is_bit_identical() {
    let spec = SynthSpec {
        source_count: 5,
        target_count: 4,
        ..Default::default()
    };
    let a = synth_generate(&spec).unwrap();
    let b = synth_generate(&spec).unwrap();
    assert_eq!(a.source.items(), b.source.items());
    assert_eq!(a.target.items(), b.target.items());
    assert_eq!(a.oracle.warps, b.oracle.warps);
    assert_eq!(a.source.len(), 5);
    assert_eq!(a.target.len(), 4);
    let c = synth_generate(&SynthSpec { seed: 8, ..spec }).unwrap();
    assert_ne!(a.source.items(), c.source.items());
}

#[test]
fn generated_warps_have_positive_jacobians() {
    for shape in [ShapeFamily::Ellipse, ShapeFamily::Bands] {
        let data = synth_generate(&SynthSpec {
            shape,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(data.oracle.warps.len(), 40);
        for w in &data.oracle.warps {
            assert!((w.max_norm() - 3.0).abs() < 1e-4);
            assert_eq!(positive_fraction(&jacobian_determinant(w), 0), 1.0);
        }
    }
}

#[test]
fn masks_follow_the_warp_and_images_show_the_gap() {
    let data = synth_generate(&SynthSpec::default()).unwrap();
    let (src, tgt) = (&data.source.items()[0], &data.target.items()[0]);
    let (sm, tm) = (src.mask.as_ref().unwrap(), tgt.mask.as_ref().unwrap());
    assert_eq!(sm.classes(), 2);
    assert_ne!(sm, tm);
    // foreground area roughly preserved by a small smooth warp
    let (a, b) = (sm.count(1) as f64, tm.count(1) as f64);
    assert!((a - b).abs() / b < 0.25, "{a} vs {b}");
    // source background is brighter than target background after the remap
    let mean_bg = |img: &sua_core::Image, m: &sua_core::SegMask| {
        let v: Vec<f64> = img
            .values()
            .zip(m.labels().iter())
            .filter(|(_, &l)| l == 0)
            .map(|(v, _)| f64::from(v))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean_bg(&src.image, sm) > mean_bg(&tgt.image, tm) + 0.3);
}

#[test]
fn bands_have_three_classes() {
    let data = synth_generate(&SynthSpec {
        shape: ShapeFamily::Bands,
        source_count: 2,
        target_count: 2,
        ..Default::default()
    })
    .unwrap();
    let m = data.target.items()[0].mask.as_ref().unwrap();
    assert_eq!(m.classes(), 3);
    assert!((0..3).all(|c| m.count(c) > 0));
}

#[test]
fn intensity_map_interpolates_and_clamps() {
    let knots = [[0.0, 0.45], [0.3, 0.7], [1.0, 0.95]];
    assert_eq!(apply_intensity_map(&knots, 0.0), 0.45);
    assert!((apply_intensity_map(&knots, 0.15) - 0.575).abs() < 1e-12);
    assert_eq!(apply_intensity_map(&knots, 2.0), 0.95);
    assert_eq!(apply_intensity_map(&knots, -1.0), 0.45);
}

#[test]
fn degenerate_specs_are_rejected() {
    for spec in [
        SynthSpec {
            size: 0,
            ..Default::default()
        },
        SynthSpec {
            source_count: 0,
            ..Default::default()
        },
        SynthSpec {
            warp_amplitude: 40.0,
            ..Default::default()
        },
    ] {
        assert!(matches!(synth_generate(&spec), Err(sua_core::Error::Parameter(_))));
    }
}
