use projflow_core::quad::adaptive_simpson;
use projflow_core::{Schedule, Verdict};
use proptest::prelude::*;

fn schedule() -> impl Strategy<Value = Schedule> {
    prop_oneof![
        (0.1..5.0_f64).prop_map(|k| Schedule::constant(k).unwrap()),
        (0.1..5.0_f64, 0.01..0.99_f64).prop_map(|(k, a)| Schedule::power(k, a).unwrap()),
        (0.1..5.0_f64, 1.0..4.0_f64).prop_map(|(k, a)| Schedule::power_ge1(k, a).unwrap()),
        (0.1..5.0_f64).prop_map(|k| Schedule::power_ge1(k, 1.0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma_matches_quadrature(s in schedule(), t in 0.0..100.0_f64) {
        let quad = adaptive_simpson(|u| s.lambda(u).unwrap(), 0.0, t, 1e-12);
        let closed = s.gamma(t).unwrap();
        prop_assert!((quad - closed).abs() <= 1e-9 * (1.0 + closed.abs()), "{} vs {}", quad, closed);
    }

    #[test]
    fn lambda_prime_matches_differences(s in schedule(), t in 0.0..100.0_f64) {
        let h = 1e-4;
        let c = t + h;
        let fd = (s.lambda(c + h).unwrap() - s.lambda(c - h).unwrap()) / (2.0 * h);
        let exact = s.lambda_prime(c).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn gamma_is_concave_and_subadditive(s in schedule(), t in 0.0..100.0_f64, u in 0.0..100.0_f64) {
        let g = |x: f64| s.gamma(x).unwrap();
        prop_assert!(g(t) <= 2.0 * g(0.5 * t) + 1e-12);
        prop_assert!(g(0.5 * (t + u)) >= 0.5 * (g(t) + g(u)) - 1e-12 * (1.0 + g(t) + g(u)));
        prop_assert!(s.lambda(t).unwrap() > 0.0);
        prop_assert!(s.lambda_prime(t).unwrap() <= 0.0);
    }

    #[test]
    fn gamma_inverse_roundtrips(s in schedule(), t in 0.0..100.0_f64) {
        let g = s.gamma(t).unwrap();
        if let Some(back) = s.gamma_inverse(g) {
            prop_assert!((back - t).abs() <= 1e-7 * (1.0 + t));
        }
    }

    #[test]
    fn bounded_gamma_has_limit(k in 0.1..5.0_f64, a in 1.01..4.0_f64) {
        let s = Schedule::power_ge1(k, a).unwrap();
        let limit = s.gamma_limit().unwrap();
        prop_assert!((limit - k / (a - 1.0)).abs() <= 1e-12 * limit);
        prop_assert!(s.gamma(1e6).unwrap() <= limit);
        prop_assert_eq!(s.validate(None, 100.0).unwrap().divergent_gamma.verdict, Verdict::Fail);
    }

    #[test]
    fn power_schedules_pass_all_conditions(k in 0.1..5.0_f64, a in 0.01..0.99_f64, th in 0.05..0.49_f64) {
        let r = Schedule::power(k, a).unwrap().validate(Some(th), 100.0).unwrap();
        prop_assert!(r.all_pass());
        prop_assert_eq!(r.h1.verdict, Verdict::Pass);
    }
}
