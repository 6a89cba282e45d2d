use svelab::conditions::Verdict;
use svelab_web::ops::{cq_summary, ml_curve, scalar_conditions};

#[test]
fn curve_reduces_to_the_exponential() {
    let v = ml_curve(1.0, 1.0, 5.0, 50).unwrap();
    assert_eq!(v.len(), 51);
    for (i, y) in v.iter().enumerate() {
        assert!((y - (-0.1 * i as f64).exp()).abs() < 1e-13);
    }
    assert!(ml_curve(1.0, 1.0, -1.0, 10).is_err());
}

#[test]
fn summary_for_the_exponential_kernel() {
    // E_{1,1}(-t) = e^{-t}: c1 = 1, c2 = 1/2
    let s = cq_summary(1.0, 1.0).unwrap();
    assert!((s.c1.unwrap() - 1.0).abs() < 1e-9);
    assert!((s.c2.unwrap() - 0.5).abs() < 1e-9);
    assert!((s.c2_frequency.unwrap() - 0.5).abs() < 1e-9);
    let outside = cq_summary(0.5, 1.2).unwrap();
    assert_eq!(outside.c1, None);
}

#[test]
fn scalar_conditions_report_both_inequalities() {
    let r = scalar_conditions(-1.0, 1.0, 1.0, 0.25, 0.5).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|c| c.verdict == Verdict::Pass));
    assert!(scalar_conditions(1.0, 1.0, 1.0, 0.0, 0.0).is_err());
}
