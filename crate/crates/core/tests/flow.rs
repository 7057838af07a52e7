use projflow_core::analysis::check_monotone;
use projflow_core::{
    dgp_run, ConvexSet, FlowProblem, Numerics, Objective, Point, Schedule, System,
};
use proptest::prelude::*;

fn point(dim: usize, range: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-range..range, dim).prop_map(|v| Point::new(v).unwrap())
}

fn constrained_problem() -> impl Strategy<Value = FlowProblem> {
    let sets = prop_oneof![
        (0.3..2.0_f64).prop_map(|h| ConvexSet::boxed(
            Point::from([-h, -h]),
            Point::from([h, 0.5 * h])
        )
        .unwrap()),
        (0.3..2.0_f64).prop_map(|r| ConvexSet::ball(Point::from([0.2, -0.1]), r).unwrap()),
        (-1.0..1.0_f64).prop_map(|b| ConvexSet::half_space(Point::from([1.0, 2.0]), b).unwrap()),
        (0.5..2.0_f64).prop_map(|s| ConvexSet::simplex(2, s).unwrap()),
    ];
    let schedules = prop_oneof![
        (0.2..2.0_f64).prop_map(|k| Schedule::constant(k).unwrap()),
        (0.2..2.0_f64, 0.1..0.9_f64).prop_map(|(k, a)| Schedule::power(k, a).unwrap()),
    ];
    (sets, schedules, point(2, 3.0), point(2, 3.0)).prop_map(|(set, schedule, center, start)| {
        let x0 = set.project(&start).unwrap();
        FlowProblem::new(
            set,
            Objective::squared_distance(center),
            schedule,
            x0,
            System::Cgp,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_stay_feasible_and_descend(prob in constrained_problem()) {
        let traj = prob.integrate(&Numerics { step: 1e-2, horizon: 5.0, sample_every: 0.1 }).unwrap();
        for s in traj.samples() {
            prop_assert!(prob.set().residual(&s.x).unwrap() <= 1e-12);
            prop_assert!(s.feas_drift <= 1e-9);
        }
        prop_assert!(check_monotone(&traj.f_gaps(), 1e-8).pass);
    }
}

fn analytic_error(step: f64) -> f64 {
    let prob = FlowProblem::unconstrained(
        Objective::squared_distance(Point::zeros(2)),
        Schedule::constant(1.0).unwrap(),
        Point::from([1.0, -0.5]),
        System::Cgp,
    )
    .unwrap();
    let traj = prob
        .integrate(&Numerics {
            step,
            horizon: 1.0,
            sample_every: 0.5,
        })
        .unwrap();
    traj.last()
        .x
        .distance(&Point::from([1.0, -0.5]).scale((-2.0_f64).exp()))
}

#[test]
fn rk4_is_fourth_order() {
    let coarse = analytic_error(0.1);
    let fine = analytic_error(0.05);
    let finer = analytic_error(0.025);
    assert!(coarse / fine >= 12.0, "{coarse} / {fine}");
    assert!(fine / finer >= 12.0, "{fine} / {finer}");
}

#[test]
fn discrete_and_continuous_limits_agree() {
    let ball = ConvexSet::ball(Point::zeros(2), 1.0).unwrap();
    let f = Objective::squared_distance(Point::from([2.0, 0.0]));
    let x0 = Point::from([0.0, 1.0]);
    let dgp = dgp_run(&ball, &f, &vec![0.05; 2000], &x0).unwrap();
    let cgp = FlowProblem::new(ball, f, Schedule::power(1.0, 0.5).unwrap(), x0, System::Cgp)
        .unwrap()
        .integrate(&Numerics {
            step: 1e-2,
            horizon: 200.0,
            sample_every: 1.0,
        })
        .unwrap();
    assert!(dgp.last().x.distance(&cgp.last().x) <= 1e-4);
    assert!(cgp.last().x.distance(&Point::from([1.0, 0.0])) <= 1e-4);
}

#[test]
fn integration_is_deterministic() {
    let build = || {
        FlowProblem::new(
            ConvexSet::simplex(3, 1.0).unwrap(),
            Objective::squared_distance(Point::from([0.9, -0.3, 0.6])),
            Schedule::power(1.0, 0.5).unwrap(),
            Point::from([1.0, 0.0, 0.0]),
            System::Cgp,
        )
        .unwrap()
    };
    let num = Numerics {
        step: 5e-3,
        horizon: 3.0,
        sample_every: 0.1,
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    build().integrate(&num).unwrap().write_csv(&mut a).unwrap();
    build().integrate(&num).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}
