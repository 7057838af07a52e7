//! Fixtures shared by the benchmarks.

use projflow_core::{ConvexSet, FlowProblem, Objective, Point, Schedule, System};

/// Box-constrained quartic under `lambda(t) = 1 / sqrt(1 + t)`.
pub fn box_quartic_problem(dim: usize) -> FlowProblem {
    let set = ConvexSet::boxed(
        Point::new(vec![-1.0; dim]).unwrap(),
        Point::new(vec![1.0; dim]).unwrap(),
    )
    .unwrap();
    let f = Objective::even_quartic(
        Point::new(vec![1.0; dim]).unwrap(),
        Point::new(vec![0.5; dim]).unwrap(),
    )
    .unwrap();
    let x0 = Point::new(
        (0..dim)
            .map(|i| if i % 2 == 0 { 1.0 } else { -0.6 })
            .collect(),
    )
    .unwrap();
    FlowProblem::new(set, f, Schedule::power(1.0, 0.5).unwrap(), x0, System::Cgp).unwrap()
}

/// Ball-constrained quadratic whose minimizer lies outside the ball.
pub fn ball_quadratic_problem() -> FlowProblem {
    let set = ConvexSet::ball(Point::zeros(2), 1.0).unwrap();
    let f = Objective::squared_distance(Point::from([2.0, 0.0]));
    FlowProblem::new(
        set,
        f,
        Schedule::power(1.0, 0.5).unwrap(),
        Point::from([0.0, 1.0]),
        System::Cgp,
    )
    .unwrap()
}
