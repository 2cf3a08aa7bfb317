use pat_core::field::relative_l2;
use pat_demo::*;

#[test]
fn sinogram_shape_and_causality() {
    let obs = sinogram(0.3, 0.0, 0.4, 2.5).unwrap();
    assert_eq!(obs.n_times, wasm_sinogram_times(2.5));
    assert_eq!(obs.data.len(), obs.grid.len() * obs.n_times);
    // nothing reaches the circle before t = 0.3
    for node in 0..obs.grid.len() {
        assert!(obs.series(node)[..30].iter().all(|&v| v == 0.0));
    }
    assert!(sinogram(0.8, 0.0, 0.4, 2.5).is_err());
}

#[test]
fn reconstruction_resembles_truth() {
    let px = 48;
    let (truth, rec) = reconstruction_images(0.2, -0.1, 0.45, 3.0, 2, px).unwrap();
    assert_eq!(truth.len(), px * px);
    let w = vec![1.0; truth.len()];
    let err = relative_l2(&rec, &truth, &w);
    assert!(err < 0.1, "{err}");
    assert_eq!(truth[0], 0.0);
}

#[test]
fn resolvent_curve_matches_first_order() {
    let h = resolvent_curve(1, 4.0, 41).unwrap();
    for (k, v) in h.iter().enumerate() {
        assert!((v - (-(k as f64) * 0.1).exp()).abs() < 1e-10);
    }
    assert!(resolvent_curve(30, 4.0, 41).is_err());
    assert!(resolvent_curve(3, 4.0, 1).is_err());
}
