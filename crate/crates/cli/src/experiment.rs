//! Runs one configured experiment and collects its evidence.

use projflow_core::analysis::{
    cauchy_evidence, check_gamma_gap_limit, check_monotone, diagnostics, fit_exponential,
    fit_power, stationary_deviation, theorem_verdict, theoretical_power_exponent, CauchyEvidence,
    DiagnosticSeries, MonotoneCheck, Quantity, RateReport, TheoremVerdict, VerdictInputs,
};
use projflow_core::{
    dgp_run, reparam_check, ConditionReport, Error, Family, Point, System, Trajectory, Verdict,
};

use crate::config::ExperimentConfig;

pub const LYAPUNOV_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovChecks {
    pub f_gap: MonotoneCheck,
    pub weighted_gap: MonotoneCheck,
    pub psi: MonotoneCheck,
    pub gamma_gap_limit: Verdict,
}

impl LyapunovChecks {
    pub fn rows(&self) -> [(&'static str, Verdict, f64); 4] {
        let row = |m: &MonotoneCheck| (Verdict::from_bool(m.pass), m.max_violation);
        [
            (
                "f_gap non-increasing",
                row(&self.f_gap).0,
                row(&self.f_gap).1,
            ),
            (
                "lambda*f_gap non-increasing",
                row(&self.weighted_gap).0,
                row(&self.weighted_gap).1,
            ),
            ("psi non-increasing", row(&self.psi).0, row(&self.psi).1),
            ("Gamma*f_gap -> 0", self.gamma_gap_limit, f64::NAN),
        ]
    }

    pub fn failed(&self) -> bool {
        self.rows().iter().any(|r| r.1 == Verdict::Fail)
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub trajectory: Trajectory,
    pub conditions: ConditionReport,
    /// Error-bound exponent used for the verdicts.
    pub theta: Option<f64>,
    pub reports: Vec<RateReport>,
    pub diagnostics: Option<DiagnosticSeries>,
    pub lyapunov: Option<LyapunovChecks>,
    pub cauchy: CauchyEvidence,
    pub stationary_deviation: f64,
    pub terminal_error: Option<f64>,
    pub reparam_error: Option<f64>,
    pub theorems: Vec<TheoremVerdict>,
    /// Expected theorems that were inapplicable or failed.
    pub unmet_expectations: Vec<&'static str>,
}

impl Outcome {
    pub fn theorem(&self, name: &str) -> Option<&TheoremVerdict> {
        self.theorems.iter().find(|t| t.theorem == name)
    }

    /// Whether any verdict contradicts the run: a failed theorem, an unmet
    /// expectation or a broken Lyapunov property.
    pub fn has_failures(&self) -> bool {
        !self.unmet_expectations.is_empty()
            || self.theorems.iter().any(TheoremVerdict::failed)
            || self.lyapunov.as_ref().is_some_and(LyapunovChecks::failed)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let prob = &cfg.problem;
    let schedule = *prob.schedule();
    let objective = prob.objective();
    let theta = cfg
        .analysis
        .theta
        .or_else(|| objective.gheb().map(|g| g.theta));
    let validation_theta = theta.filter(|t| *t <= 0.5);
    let conditions = schedule.validate(validation_theta, cfg.numerics.horizon)?;

    let trajectory = match prob.system() {
        System::Dgp => {
            let steps: Vec<f64> = match cfg.dgp.alpha {
                Some(a) => vec![a; cfg.dgp.iters],
                None => (0..cfg.dgp.iters)
                    .map(|k| schedule.lambda(k as f64))
                    .collect::<Result<_, _>>()?,
            };
            dgp_run(prob.set(), objective, &steps, prob.x0())?
        }
        _ => prob.integrate(&cfg.numerics)?,
    };

    let wf = cfg.analysis.window_fraction;
    let alpha = match schedule.family() {
        Family::Constant { .. } => Some(0.0),
        Family::Power { alpha, .. } => Some(alpha),
        Family::PowerGe1 { .. } => None,
    };
    let quantities = [Quantity::FGap, Quantity::TrajErr];
    let reports: Vec<RateReport> = match theta {
        Some(0.5) => quantities
            .iter()
            .map(|&q| fit_exponential(&trajectory, q, wf))
            .collect(),
        _ => quantities
            .iter()
            .map(|&q| {
                let theo = match (theta, alpha) {
                    (Some(th), Some(a)) => theoretical_power_exponent(q, th, a),
                    _ => None,
                };
                fit_power(&trajectory, q, wf, theo)
            })
            .collect(),
    };

    let continuous = prob.system() != System::Dgp;
    let z = cfg
        .analysis
        .reference_z
        .clone()
        .unwrap_or_else(|| match objective.optimum() {
            Some(o) => o
                .argmin
                .project(&trajectory.last().x)
                .expect("dimensions validated"),
            None => trajectory.last().x.clone(),
        });
    let desing = objective.desingularizer();
    let diag = if continuous {
        Some(diagnostics(&trajectory, &z, &schedule, desing.as_ref())?)
    } else {
        None
    };

    let lyapunov = match (&diag, prob.system()) {
        (Some(d), System::Cgp | System::Gs) if conditions.monotone => Some(LyapunovChecks {
            f_gap: check_monotone(&trajectory.f_gaps(), LYAPUNOV_TOL),
            weighted_gap: check_monotone(&d.weighted_gap, LYAPUNOV_TOL),
            psi: check_monotone(&d.psi, LYAPUNOV_TOL),
            gamma_gap_limit: check_gamma_gap_limit(&d.gamma_gap, trajectory.last().gamma, 0.1),
        }),
        _ => None,
    };

    let cauchy = cauchy_evidence(&trajectory);
    let stationary = stationary_deviation(&trajectory);
    let terminal_error = cfg
        .analysis
        .exact_terminal
        .as_ref()
        .map(|p: &Point| trajectory.last().x.distance(p));
    let reparam_error = match prob.system() {
        System::Gs | System::Ngs => Some(reparam_check(
            objective,
            &schedule,
            prob.x0(),
            cfg.numerics.horizon,
            cfg.numerics.step,
        )?),
        _ => None,
    };

    let argmin = objective.optimum().map(|o| &o.argmin);
    let inputs = VerdictInputs {
        system: prob.system(),
        schedule,
        conditions: &conditions,
        theta,
        set_symmetric: prob.set().is_symmetric(),
        objective_even: objective.is_even(),
        argmin_has_interior: argmin.is_some_and(|a| a.has_interior()),
        reports: &reports,
        gamma_gap_limit: lyapunov
            .as_ref()
            .map_or(Verdict::NotApplicable, |l| l.gamma_gap_limit),
        cauchy: continuous.then_some(cauchy),
        stationary_deviation: continuous.then_some(stationary),
    };
    let theorems = theorem_verdict(&inputs);
    let unmet_expectations = cfg
        .analysis
        .expect
        .iter()
        .copied()
        .filter(|name| {
            !theorems
                .iter()
                .any(|t| t.theorem == *name && t.applicable && t.outcome == Verdict::Pass)
        })
        .collect();

    Ok(Outcome {
        trajectory,
        conditions,
        theta,
        reports,
        diagnostics: diag,
        lyapunov,
        cauchy,
        stationary_deviation: stationary,
        terminal_error,
        reparam_error,
        theorems,
        unmet_expectations,
    })
}
