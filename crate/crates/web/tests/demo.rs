use std::f64::consts::PI;

use thermiq_web::{bistable_counts, malus_intensities, KoopmanDemo};

#[test]
fn malus_curve_for_polarized_and_unpolarized_beams() {
    let full = malus_intensities(0.4, 1.0, 24).unwrap();
    for (i, v) in full.iter().enumerate() {
        let a = PI * i as f64 / 24.0;
        assert!((v - (a - 0.4).cos().powi(2)).abs() < 1e-12);
    }
    assert!(malus_intensities(0.0, 0.0, 8).unwrap().iter().all(|v| (v - 0.5).abs() < 1e-12));
    assert!(malus_intensities(0.0, 1.5, 8).is_err());
}

#[test]
fn koopman_demo_keeps_mass() {
    let mut demo = KoopmanDemo::create(48, 0.2, 1.0, 0.0, 0.35).unwrap();
    for _ in 0..20 {
        demo.advance(0.05).unwrap();
    }
    let m = demo.moments();
    assert!((m[2] - 1.0).abs() < 1e-10);
    assert!((demo.time() - 1.0).abs() < 1e-12);
    assert_eq!(demo.density().len(), 48 * 48);
}

#[test]
fn histogram_totals() {
    let h = bistable_counts(0.1, 0.0, 200, 1, 20).unwrap();
    assert_eq!(h[..20].iter().sum::<u32>(), 200);
    assert_eq!(h[20] + h[21] + h[22], 200);
}
