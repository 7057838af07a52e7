//! Fixed-step integration of projected and plain gradient flows.
//!
//! Supported systems:
//!
//! * `Cgp`: `x' + x = P_Q(x - lambda(t) grad f(x))`
//! * `Gs`:  `x' = -lambda(t) grad f(x)` (unconstrained)
//! * `Ngs`: `y' = -grad f(y)` (unconstrained, own clock)
//! * `Dgp`: `x_{k+1} = P_Q(x_k - a_k grad f(x_k))`, run through [`dgp_run`]
//!
//! Continuous systems use classic fourth-order Runge-Kutta. The projected
//! flow leaves `Q` invariant but RK4 does not, so every accepted CGP step is
//! projected back onto `Q` and the residual before projection is recorded.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Shape, MEMBERSHIP_TOL};
use crate::objectives::Objective;
use crate::point::Point;
use crate::schedules::Schedule;

/// States with a norm beyond this are treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    Cgp,
    Gs,
    Ngs,
    Dgp,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            System::Cgp => "cgp",
            System::Gs => "gs",
            System::Ngs => "ngs",
            System::Dgp => "dgp",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cgp" => Ok(System::Cgp),
            "gs" => Ok(System::Gs),
            "ngs" => Ok(System::Ngs),
            "dgp" => Ok(System::Dgp),
            other => Err(Error::invalid(format!("unknown system `{other}`"))),
        }
    }
}

/// Step size, horizon and sampling period of an integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Numerics {
    pub step: f64,
    pub horizon: f64,
    pub sample_every: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            step: 1e-3,
            horizon: 50.0,
            sample_every: 0.1,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if !(self.step > 0.0 && self.step <= self.sample_every) {
            return Err(Error::invalid("need 0 < step <= sample_every"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FlowProblem {
    set: ConvexSet,
    objective: Objective,
    schedule: Schedule,
    x0: Point,
    system: System,
}

impl FlowProblem {
    /// Validates the problem. The objective's optimum metadata is recomputed
    /// for minimization over `set`.
    pub fn new(
        set: ConvexSet,
        objective: Objective,
        schedule: Schedule,
        x0: Point,
        system: System,
    ) -> Result<Self> {
        Error::check_dim(set.dim(), objective.dim())?;
        Error::check_dim(set.dim(), x0.dim())?;
        match system {
            System::Gs | System::Ngs if !matches!(set.shape(), Shape::WholeSpace { .. }) => {
                return Err(Error::invalid(format!(
                    "system {system} requires the whole space as set"
                )));
            }
            _ => {}
        }
        let residual = set.residual(&x0)?;
        if residual > MEMBERSHIP_TOL {
            return Err(Error::invalid(format!(
                "initial point {x0} lies outside the set (residual {residual:e})"
            )));
        }
        let objective = objective.restricted_to(&set)?;
        Ok(FlowProblem {
            set,
            objective,
            schedule,
            x0,
            system,
        })
    }

    /// Unconstrained problem on the whole space.
    pub fn unconstrained(
        objective: Objective,
        schedule: Schedule,
        x0: Point,
        system: System,
    ) -> Result<Self> {
        let set = ConvexSet::whole_space(x0.dim())?;
        Self::new(set, objective, schedule, x0, system)
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn system(&self) -> System {
        self.system
    }

    /// Velocity field of the continuous system at `(t, x)`.
    pub fn rhs(&self, t: f64, x: &Point) -> Result<Point> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("time must be >= 0, got {t}")));
        }
        Error::check_dim(self.set.dim(), x.dim())?;
        if self.system == System::Dgp {
            return Err(Error::Unsupported(
                "the discrete system has no vector field; use dgp_run".into(),
            ));
        }
        Ok(self.velocity(t, x))
    }

    fn velocity(&self, t: f64, x: &Point) -> Point {
        let g = self.objective.gradient(x);
        match self.system {
            System::Cgp => {
                let lambda = self.schedule.lambda_at(t);
                self.set.project_unchecked(&x.axpy(-lambda, &g)).sub(x)
            }
            System::Gs => g.scale(-self.schedule.lambda_at(t)),
            System::Ngs | System::Dgp => g.neg(),
        }
    }

    /// `Gamma(t)`; the normalized system already runs on that clock.
    fn clock(&self, t: f64) -> f64 {
        match self.system {
            System::Ngs => t,
            _ => self.schedule.gamma_at(t),
        }
    }

    fn rk4_step(&self, t: f64, x: &Point, h: f64) -> Point {
        let k1 = self.velocity(t, x);
        let k2 = self.velocity(t + 0.5 * h, &x.axpy(0.5 * h, &k1));
        let k3 = self.velocity(t + 0.5 * h, &x.axpy(0.5 * h, &k2));
        let k4 = self.velocity(t + h, &x.axpy(h, &k3));
        let coords = (0..x.dim())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        Point::from_vec(coords)
    }

    /// Integrates the continuous system with fixed-step RK4, sampling at
    /// `t = 0`, every multiple of `sample_every` and at the horizon.
    pub fn integrate(&self, numerics: &Numerics) -> Result<Trajectory> {
        numerics.validate()?;
        if self.system == System::Dgp {
            return Err(Error::Unsupported(
                "the discrete system is run with dgp_run".into(),
            ));
        }
        let Numerics {
            step,
            horizon,
            sample_every,
        } = *numerics;
        let intervals = ((horizon / sample_every) - 1e-9).ceil().max(1.0) as usize;

        let mut recorder = Recorder::new(self.objective.clone(), intervals + 1);
        let mut x = self.x0.clone();
        let mut t_prev = 0.0;
        recorder.push(0.0, &x, self.clock(0.0), 0.0, self.velocity(0.0, &x).norm());

        for k in 1..=intervals {
            let t_next = (k as f64 * sample_every).min(horizon);
            let substeps = ((t_next - t_prev) / step - 1e-9).ceil().max(1.0) as usize;
            let h = (t_next - t_prev) / substeps as f64;
            let mut drift = 0.0_f64;
            for j in 0..substeps {
                let t = t_prev + j as f64 * h;
                x = self.rk4_step(t, &x, h);
                if !x.is_finite() || x.norm() > DIVERGENCE_NORM {
                    return Err(Error::Diverged { t: t + h });
                }
                if self.system == System::Cgp {
                    drift = drift.max(self.set.residual_unchecked(&x));
                    x = self.set.project_unchecked(&x);
                }
            }
            let speed = self.velocity(t_next, &x).norm();
            recorder.push(t_next, &x, self.clock(t_next), drift, speed);
            t_prev = t_next;
        }
        Ok(recorder.finish())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Point,
    pub f_gap: f64,
    pub dist_argmin: Option<f64>,
    pub gamma: f64,
    pub feas_drift: f64,
    pub speed: f64,
}

/// Where the reference value `f*` of a trajectory came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FStarSource {
    Analytic,
    /// Smallest sampled value; gaps measured against it are diagnostic only.
    BestSeen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    f_star: f64,
    f_star_source: FStarSource,
}

impl Trajectory {
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn f_star_source(&self) -> FStarSource {
        self.f_star_source
    }

    pub fn dim(&self) -> usize {
        self.first().x.dim()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn f_gaps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.f_gap).collect()
    }

    /// Sample closest to time `t`.
    pub fn at(&self, t: f64) -> &Sample {
        let idx = self.samples.partition_point(|s| s.t < t);
        if idx == 0 {
            return &self.samples[0];
        }
        if idx >= self.samples.len() {
            return self.last();
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        if (t - a.t) <= (b.t - t) {
            a
        } else {
            b
        }
    }

    /// Writes the trajectory as CSV with header
    /// `t,gamma,f_gap,dist_argmin,feas_drift,speed,x_0..x_{n-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t,gamma,f_gap,dist_argmin,feas_drift,speed")?;
        for i in 0..self.dim() {
            write!(out, ",x_{i}")?;
        }
        writeln!(out)?;
        for s in &self.samples {
            write!(out, "{},{},{},", s.t, s.gamma, s.f_gap)?;
            if let Some(d) = s.dist_argmin {
                write!(out, "{d}")?;
            }
            write!(out, ",{},{}", s.feas_drift, s.speed)?;
            for c in s.x.iter() {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Collects raw samples and resolves `f*` once the run is complete.
struct Recorder {
    objective: Objective,
    raw: Vec<(Sample, f64)>,
}

impl Recorder {
    fn new(objective: Objective, capacity: usize) -> Self {
        Recorder {
            objective,
            raw: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, t: f64, x: &Point, gamma: f64, feas_drift: f64, speed: f64) {
        let value = self.objective.value(x);
        let dist_argmin = self.objective.optimum().map(|o| {
            o.argmin
                .distance(x)
                .expect("dimensions checked at construction")
        });
        let sample = Sample {
            t,
            x: x.clone(),
            f_gap: 0.0,
            dist_argmin,
            gamma,
            feas_drift,
            speed,
        };
        self.raw.push((sample, value));
    }

    fn finish(self) -> Trajectory {
        let (f_star, f_star_source) = match self.objective.optimum() {
            Some(o) => (o.f_star, FStarSource::Analytic),
            None => (
                self.raw
                    .iter()
                    .map(|(_, v)| *v)
                    .fold(f64::INFINITY, f64::min),
                FStarSource::BestSeen,
            ),
        };
        let samples = self
            .raw
            .into_iter()
            .map(|(mut s, v)| {
                s.f_gap = v - f_star;
                s
            })
            .collect();
        Trajectory {
            samples,
            f_star,
            f_star_source,
        }
    }
}

/// Runs the discrete projected gradient iteration with the given step sizes.
/// Iterate `k` is recorded at `t = k`; its `gamma` is the sum of the first
/// `k` step sizes.
pub fn dgp_run(set: &ConvexSet, obj: &Objective, steps: &[f64], x0: &Point) -> Result<Trajectory> {
    if steps.is_empty() {
        return Err(Error::invalid("step list must not be empty"));
    }
    if steps.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
        return Err(Error::invalid("step sizes must be finite and non-negative"));
    }
    Error::check_dim(set.dim(), obj.dim())?;
    if !set.contains(x0)? {
        return Err(Error::invalid(format!(
            "initial point {x0} lies outside the set"
        )));
    }
    let obj = obj.restricted_to(set)?;
    let mut recorder = Recorder::new(obj.clone(), steps.len() + 1);
    let mut x = x0.clone();
    let mut gamma = 0.0;
    for (k, &alpha) in steps.iter().enumerate() {
        let next = set.project_unchecked(&x.axpy(-alpha, &obj.gradient(&x)));
        if !next.is_finite() || next.norm() > DIVERGENCE_NORM {
            return Err(Error::Diverged { t: (k + 1) as f64 });
        }
        recorder.push(k as f64, &x, gamma, 0.0, next.distance(&x));
        gamma += alpha;
        x = next;
    }
    let last_alpha = *steps.last().expect("non-empty");
    let lookahead = set.project_unchecked(&x.axpy(-last_alpha, &obj.gradient(&x)));
    recorder.push(steps.len() as f64, &x, gamma, 0.0, lookahead.distance(&x));
    Ok(recorder.finish())
}

/// Compares the time-dependent gradient system with the plain one run on the
/// clock `Gamma`: returns `max_t ||x_GS(t) - y_NGS(Gamma(t))||` over samples
/// of the GS run. The NGS trajectory is recorded at every step and evaluated
/// between steps with cubic Hermite interpolation using its exact velocity.
pub fn reparam_check(
    obj: &Objective,
    schedule: &Schedule,
    x0: &Point,
    horizon: f64,
    step: f64,
) -> Result<f64> {
    let gs = FlowProblem::unconstrained(obj.clone(), *schedule, x0.clone(), System::Gs)?;
    let ngs = FlowProblem::unconstrained(obj.clone(), *schedule, x0.clone(), System::Ngs)?;
    let gs_traj = gs.integrate(&Numerics {
        step,
        horizon,
        sample_every: (10.0 * step).min(horizon),
    })?;
    let clock_end = schedule.gamma_at(horizon);
    let ngs_traj = ngs.integrate(&Numerics {
        step,
        horizon: clock_end,
        sample_every: step,
    })?;

    let ys = ngs_traj.samples();
    let mut worst = 0.0_f64;
    for s in gs_traj.samples() {
        let clock = s.gamma;
        let idx = ys.partition_point(|y| y.t < clock).clamp(1, ys.len() - 1);
        let (a, b) = (&ys[idx - 1], &ys[idx]);
        let y = hermite(&ngs, a, b, clock);
        worst = worst.max(s.x.distance(&y));
    }
    Ok(worst)
}

fn hermite(problem: &FlowProblem, a: &Sample, b: &Sample, t: f64) -> Point {
    let h = b.t - a.t;
    let s = ((t - a.t) / h).clamp(0.0, 1.0);
    let va = problem.velocity(a.t, &a.x);
    let vb = problem.velocity(b.t, &b.x);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h11 = s * s * (s - 1.0);
    let coords = (0..a.x.dim())
        .map(|i| a.x[i] + h01 * (b.x[i] - a.x[i]) + h * (h10 * va[i] + h11 * vb[i]))
        .collect();
    Point::from_vec(coords)
}
