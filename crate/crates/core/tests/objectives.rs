use projflow_core::objectives::{
    gheb_check, gheb_passes, grad_check, lojasiewicz_check, lojasiewicz_passes,
};
use projflow_core::{make_power_objective, ConvexSet, Objective, Point};
use proptest::prelude::*;

fn point(dim: usize, range: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-range..range, dim).prop_map(|v| Point::new(v).unwrap())
}

fn positive(dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(lo..hi, dim).prop_map(|v| Point::new(v).unwrap())
}

fn certified_objective(dim: usize) -> BoxedStrategy<Objective> {
    prop_oneof![
        (point(dim, 2.0), positive(dim, 0.2, 3.0), -1.0..1.0_f64)
            .prop_map(|(c, w, s)| Objective::quadratic(c, w, s).unwrap()),
        (positive(dim, 0.2, 2.0), positive(dim, 0.1, 2.0))
            .prop_map(|(q, c)| Objective::even_quartic(q, c).unwrap()),
        positive(dim, 0.2, 2.0)
            .prop_map(move |q| Objective::even_quartic(q, Point::zeros(dim)).unwrap()),
        (point(dim, 1.0), 0.1..1.5_f64).prop_map(|(c, r)| Objective::flat_bottom(c, r).unwrap()),
        (
            point(dim, 1.0),
            prop::sample::select(vec![0.25, 0.3, 0.4, 0.5])
        )
            .prop_map(|(c, th)| {
                make_power_objective(&Objective::squared_distance(c), th).unwrap()
            }),
    ]
    .boxed()
}

fn objective_and_points() -> impl Strategy<Value = (Objective, Point, Point, f64)> {
    (1usize..=3).prop_flat_map(|dim| {
        (
            certified_objective(dim),
            point(dim, 3.0),
            point(dim, 3.0),
            0.0..1.0_f64,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn objectives_are_convex((f, x, y, s) in objective_and_points()) {
        let mix = x.scale(1.0 - s).add(&y.scale(s));
        let lhs = f.eval(&mix).unwrap();
        let rhs = (1.0 - s) * f.eval(&x).unwrap() + s * f.eval(&y).unwrap();
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn gradients_match_finite_differences((f, x, _y, _s) in objective_and_points()) {
        prop_assert!(grad_check(&f, &x, 1e-6).unwrap() <= 1e-5);
    }

    #[test]
    fn gradient_inequality((f, x, y, _s) in objective_and_points()) {
        let fx = f.eval(&x).unwrap();
        let lin = fx + f.grad(&x).unwrap().dot(&y.sub(&x));
        let fy = f.eval(&y).unwrap();
        prop_assert!(fy >= lin - 1e-10 * (1.0 + fy.abs()));
    }

    #[test]
    fn error_bound_certificates_are_honest((f, x, y, _s) in objective_and_points()) {
        let g = f.gheb().unwrap();
        let whole = ConvexSet::whole_space(f.dim()).unwrap();
        let v = gheb_check(&f, &whole, &[x.clone(), y.clone()]).unwrap();
        prop_assert!(gheb_passes(v, g.kappa), "ratio {} below kappa {}", v, g.kappa);
    }

    #[test]
    fn lojasiewicz_inequality_follows((f, x, y, _s) in objective_and_points()) {
        let phi = f.desingularizer().unwrap();
        let v = lojasiewicz_check(&f, &phi, &[x, y]).unwrap();
        prop_assert!(lojasiewicz_passes(v), "value {}", v);
    }

    #[test]
    fn values_stay_above_optimum((f, x, _y, _s) in objective_and_points()) {
        let opt = f.optimum().unwrap();
        prop_assert!(f.eval(&x).unwrap() >= opt.f_star - 1e-12);
        let xbar = opt.argmin.project(&x).unwrap();
        prop_assert!((f.eval(&xbar).unwrap() - opt.f_star).abs() <= 1e-12);
    }

    #[test]
    fn even_objectives_are_even(q in positive(3, 0.1, 2.0), c in positive(3, 0.0, 2.0), x in point(3, 3.0)) {
        let f = Objective::even_quartic(q, c).unwrap();
        prop_assert!(f.is_even());
        prop_assert_eq!(f.eval(&x).unwrap(), f.eval(&x.neg()).unwrap());
    }

    #[test]
    fn power_chain_rule(c in point(2, 1.0), x in point(2, 3.0), th in 0.2..0.5_f64) {
        let g = Objective::squared_distance(c);
        let h = make_power_objective(&g, th).unwrap();
        let p = 0.5 / th;
        let gx = g.eval(&x).unwrap();
        prop_assert!((h.eval(&x).unwrap() - gx.powf(p)).abs() <= 1e-12 * (1.0 + gx.powf(p)));
        let expected = g.grad(&x).unwrap().scale(p * gx.powf(p - 1.0));
        prop_assert!(h.grad(&x).unwrap().distance(&expected) <= 1e-10 * (1.0 + expected.norm()));
    }
}

#[test]
fn inflated_kappa_is_caught() {
    let f = Objective::squared_distance(Point::zeros(2))
        .with_gheb(10.0, 0.5)
        .unwrap();
    let whole = ConvexSet::whole_space(2).unwrap();
    let samples: Vec<Point> = (1..20)
        .map(|k| Point::from([0.1 * k as f64, -0.05 * k as f64]))
        .collect();
    let v = gheb_check(&f, &whole, &samples).unwrap();
    assert!(!gheb_passes(v, 10.0));
}
