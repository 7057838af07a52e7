//! Lyapunov diagnostics and convergence-rate regression on trajectories.
//!
//! Rates are fitted by ordinary least squares on log-transformed samples:
//! `log q` against `log t` for power laws and against `Gamma(t)` for
//! exponential decay on the schedule clock. The theoretical rates are upper
//! bounds, so a power-law fit passes whenever its exponent is no more than
//! 15% slower than predicted.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::flow::{System, Trajectory};
use crate::objectives::Desingularizer;
use crate::point::Point;
use crate::schedules::{ConditionReport, Family, Schedule, Verdict};

pub const R_SQUARED_MIN: f64 = 0.99;
pub const EXPONENT_REL_TOL: f64 = 0.15;
/// Samples below `RESOLUTION_FLOOR * scale` are rounding noise and end the fit window.
pub const RESOLUTION_FLOOR: f64 = 1e-10;
pub const MIN_FIT_POINTS: usize = 5;
/// `Gamma(horizon)` needed before the `Gamma * gap -> 0` check means anything.
pub const GAMMA_GAP_MIN_CLOCK: f64 = 10.0;
pub const CAUCHY_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticSeries {
    /// `||x(t) - z||^2 / 2`
    pub phi_z: Vec<f64>,
    /// `phi_z + lambda(t) * gap`
    pub psi: Vec<f64>,
    /// `lambda(t) * gap`
    pub weighted_gap: Vec<f64>,
    /// `Gamma(t) * gap`
    pub gamma_gap: Vec<f64>,
    /// `phi(gap)` for the desingularizer, when one is given
    pub lojasiewicz_h: Option<Vec<f64>>,
}

pub fn diagnostics(
    traj: &Trajectory,
    z: &Point,
    schedule: &Schedule,
    desing: Option<&Desingularizer>,
) -> Result<DiagnosticSeries> {
    Error::check_dim(traj.dim(), z.dim())?;
    let n = traj.len();
    let mut out = DiagnosticSeries {
        phi_z: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
        weighted_gap: Vec::with_capacity(n),
        gamma_gap: Vec::with_capacity(n),
        lojasiewicz_h: desing.map(|_| Vec::with_capacity(n)),
    };
    for s in traj.samples() {
        let gap = s.f_gap.max(0.0);
        let phi_z = 0.5 * s.x.sub(z).norm_sq();
        let weighted = schedule.lambda_at(s.t) * gap;
        out.phi_z.push(phi_z);
        out.psi.push(phi_z + weighted);
        out.weighted_gap.push(weighted);
        out.gamma_gap.push(s.gamma * gap);
        if let (Some(h), Some(d)) = (out.lojasiewicz_h.as_mut(), desing) {
            h.push(d.phi(gap));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneCheck {
    pub pass: bool,
    /// Largest forward increase; zero when the series never increases.
    pub max_violation: f64,
}

/// Passes when no forward difference exceeds `tol`.
pub fn check_monotone(series: &[f64], tol: f64) -> MonotoneCheck {
    let max_violation = series
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    MonotoneCheck {
        pass: max_violation <= tol,
        max_violation,
    }
}

/// Mean of the last `window_fraction` of the series against its maximum.
/// Inapplicable when the run ends before `Gamma` reaches [`GAMMA_GAP_MIN_CLOCK`].
pub fn check_gamma_gap_limit(gamma_gap: &[f64], final_gamma: f64, window_fraction: f64) -> Verdict {
    if gamma_gap.is_empty() || final_gamma < GAMMA_GAP_MIN_CLOCK {
        return Verdict::NotApplicable;
    }
    let n = gamma_gap.len();
    let take = ((n as f64 * window_fraction).ceil() as usize).clamp(1, n);
    let tail = &gamma_gap[n - take..];
    let mean = tail.iter().sum::<f64>() / take as f64;
    let max = gamma_gap.iter().cloned().fold(0.0, f64::max);
    Verdict::from_bool(mean <= 0.01 * max)
}

/// Successive Cauchy increments of a run of horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CauchyEvidence {
    /// `||x(T) - x(T/2)||`
    pub gap: f64,
    /// `||x(T/2) - x(T/4)||`
    pub earlier_gap: f64,
}

pub fn cauchy_evidence(traj: &Trajectory) -> CauchyEvidence {
    let end = traj.last();
    let half = traj.at(0.5 * end.t);
    let quarter = traj.at(0.25 * end.t);
    CauchyEvidence {
        gap: half.x.distance(&end.x),
        earlier_gap: quarter.x.distance(&half.x),
    }
}

/// Largest displacement from the initial state.
pub fn stationary_deviation(traj: &Trajectory) -> f64 {
    let x0 = &traj.first().x;
    traj.samples()
        .iter()
        .map(|s| s.x.distance(x0))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope * x + intercept`. A constant response
/// is fitted exactly and reports `r_squared = 1`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let constant = ys.iter().all(|&y| y == ys[0]);
    let slope = if constant { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if constant || syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    FGap,
    /// `||x(t) - x(T)||` with the terminal state standing in for the limit.
    TrajErr,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::FGap => "f_gap",
            Quantity::TrajErr => "traj_err",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateModel {
    PowerInT,
    ExpInGamma,
}

impl RateModel {
    pub fn as_str(self) -> &'static str {
        match self {
            RateModel::PowerInT => "power-in-t",
            RateModel::ExpInGamma => "exp-in-Gamma",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub quantity: Quantity,
    pub model: RateModel,
    /// Fitted exponent (power model) or decay rate `mu` (exponential model).
    pub fitted: f64,
    pub r_squared: f64,
    pub theoretical: Option<f64>,
    pub verdict: Verdict,
    pub fit_window: (f64, f64),
}

impl RateReport {
    fn inapplicable(
        quantity: Quantity,
        model: RateModel,
        theoretical: Option<f64>,
        window: (f64, f64),
    ) -> Self {
        RateReport {
            quantity,
            model,
            fitted: f64::NAN,
            r_squared: 0.0,
            theoretical,
            verdict: Verdict::NotApplicable,
            fit_window: window,
        }
    }

    pub const CSV_HEADER: &'static str = "quantity,model,fitted,theoretical,r2,verdict";

    pub fn csv_row(&self) -> String {
        let theo = self.theoretical.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.quantity.as_str(),
            self.model.as_str(),
            self.fitted,
            theo,
            self.r_squared,
            self.verdict
        )
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let theo = self
            .theoretical
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        write!(
            f,
            "{:<9} {:<13} fitted={:>9.4} theory={:>8} r2={:.5} window=[{:.3}, {:.3}] {}",
            self.quantity.as_str(),
            self.model.as_str(),
            self.fitted,
            theo,
            self.r_squared,
            self.fit_window.0,
            self.fit_window.1,
            self.verdict
        )
    }
}

pub fn write_reports_csv<W: Write>(mut out: W, reports: &[RateReport]) -> io::Result<()> {
    writeln!(out, "{}", RateReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Predicted power-law exponent under `lambda(t) = K / (1 + t)^alpha` for an
/// error bound with exponent `theta < 1/2`. Constant schedules use `alpha = 0`.
pub fn theoretical_power_exponent(quantity: Quantity, theta: f64, alpha: f64) -> Option<f64> {
    if !(theta > 0.0 && theta < 0.5) || !(0.0..1.0).contains(&alpha) {
        return None;
    }
    let base = (1.0 - alpha) / (1.0 - 2.0 * theta);
    Some(match quantity {
        Quantity::FGap => -base,
        Quantity::TrajErr => -base * theta,
    })
}

pub fn power_verdict(fitted: f64, r_squared: f64, theoretical: Option<f64>) -> Verdict {
    match theoretical {
        None => Verdict::NotApplicable,
        Some(theo) => Verdict::from_bool(
            r_squared >= R_SQUARED_MIN && fitted <= theo + EXPONENT_REL_TOL * theo.abs(),
        ),
    }
}

pub fn exponential_verdict(mu: f64, r_squared: f64) -> Verdict {
    Verdict::from_bool(mu > 0.0 && r_squared >= R_SQUARED_MIN)
}

/// Power-law fit of `qs` against `ts` over all given samples.
pub fn fit_power_series(
    ts: &[f64],
    qs: &[f64],
    quantity: Quantity,
    theoretical: Option<f64>,
) -> RateReport {
    let window = (
        ts.first().copied().unwrap_or(0.0),
        ts.last().copied().unwrap_or(0.0),
    );
    if ts.iter().any(|&t| t <= 0.0) || qs.iter().any(|&q| !(q > 0.0)) {
        return RateReport::inapplicable(quantity, RateModel::PowerInT, theoretical, window);
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = qs.iter().map(|q| q.ln()).collect();
    match least_squares(&lx, &ly) {
        Some(fit) => RateReport {
            quantity,
            model: RateModel::PowerInT,
            fitted: fit.slope,
            r_squared: fit.r_squared,
            theoretical,
            verdict: power_verdict(fit.slope, fit.r_squared, theoretical),
            fit_window: window,
        },
        None => RateReport::inapplicable(quantity, RateModel::PowerInT, theoretical, window),
    }
}

/// Exponential fit `q ~ C e^{-mu Gamma}`; the report carries `mu`.
pub fn fit_exponential_series(
    gammas: &[f64],
    qs: &[f64],
    quantity: Quantity,
    window: (f64, f64),
) -> RateReport {
    if qs.iter().any(|&q| !(q > 0.0)) {
        return RateReport::inapplicable(quantity, RateModel::ExpInGamma, None, window);
    }
    let ly: Vec<f64> = qs.iter().map(|q| q.ln()).collect();
    match least_squares(gammas, &ly) {
        Some(fit) => {
            let mu = -fit.slope;
            RateReport {
                quantity,
                model: RateModel::ExpInGamma,
                fitted: mu,
                r_squared: fit.r_squared,
                theoretical: None,
                verdict: exponential_verdict(mu, fit.r_squared),
                fit_window: window,
            }
        }
        None => RateReport::inapplicable(quantity, RateModel::ExpInGamma, None, window),
    }
}

/// `(t, gamma, q)` over the fit window. The window is
/// `[T (1 - window_fraction), T]`, capped at `T / 2` for the trajectory
/// error, and ends early at the first sample below the resolution floor.
fn windowed_series(
    traj: &Trajectory,
    quantity: Quantity,
    window_fraction: f64,
) -> Vec<(f64, f64, f64)> {
    let horizon = traj.last().t;
    let t_lo = horizon * (1.0 - window_fraction.clamp(0.0, 1.0));
    let (t_hi, terminal) = match quantity {
        Quantity::FGap => (horizon, None),
        Quantity::TrajErr => (0.5 * horizon, Some(&traj.last().x)),
    };
    let floor = RESOLUTION_FLOOR
        * match terminal {
            Some(x) => x.norm().max(1.0),
            None => traj.f_star().abs().max(1.0),
        };
    let mut out = Vec::new();
    for s in traj
        .samples()
        .iter()
        .filter(|s| s.t >= t_lo && s.t <= t_hi && s.t > 0.0)
    {
        let q = match terminal {
            Some(xt) => s.x.distance(xt),
            None => s.f_gap,
        };
        if !(q > floor) {
            break;
        }
        out.push((s.t, s.gamma, q));
    }
    out
}

fn window_of(series: &[(f64, f64, f64)], traj: &Trajectory) -> (f64, f64) {
    match (series.first(), series.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (traj.last().t, traj.last().t),
    }
}

pub fn fit_power(
    traj: &Trajectory,
    quantity: Quantity,
    window_fraction: f64,
    theoretical: Option<f64>,
) -> RateReport {
    let series = windowed_series(traj, quantity, window_fraction);
    if series.len() < MIN_FIT_POINTS {
        return RateReport::inapplicable(
            quantity,
            RateModel::PowerInT,
            theoretical,
            window_of(&series, traj),
        );
    }
    let ts: Vec<f64> = series.iter().map(|s| s.0).collect();
    let qs: Vec<f64> = series.iter().map(|s| s.2).collect();
    fit_power_series(&ts, &qs, quantity, theoretical)
}

pub fn fit_exponential(traj: &Trajectory, quantity: Quantity, window_fraction: f64) -> RateReport {
    let series = windowed_series(traj, quantity, window_fraction);
    let window = window_of(&series, traj);
    if series.len() < MIN_FIT_POINTS {
        return RateReport::inapplicable(quantity, RateModel::ExpInGamma, None, window);
    }
    let gs: Vec<f64> = series.iter().map(|s| s.1).collect();
    let qs: Vec<f64> = series.iter().map(|s| s.2).collect();
    fit_exponential_series(&gs, &qs, quantity, window)
}

/// Everything the theorem checks look at.
#[derive(Clone, Debug)]
pub struct VerdictInputs<'a> {
    pub system: System,
    pub schedule: Schedule,
    pub conditions: &'a ConditionReport,
    /// Error-bound exponent: the certified one, or the one requested for the run.
    pub theta: Option<f64>,
    pub set_symmetric: bool,
    pub objective_even: bool,
    pub argmin_has_interior: bool,
    pub reports: &'a [RateReport],
    pub gamma_gap_limit: Verdict,
    pub cauchy: Option<CauchyEvidence>,
    pub stationary_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremVerdict {
    pub theorem: &'static str,
    pub applicable: bool,
    pub outcome: Verdict,
    pub note: String,
}

impl TheoremVerdict {
    fn inapplicable(theorem: &'static str, note: impl Into<String>) -> Self {
        TheoremVerdict {
            theorem,
            applicable: false,
            outcome: Verdict::NotApplicable,
            note: note.into(),
        }
    }

    fn decided(theorem: &'static str, outcome: Verdict, note: impl Into<String>) -> Self {
        TheoremVerdict {
            theorem,
            applicable: true,
            outcome,
            note: note.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.applicable && self.outcome == Verdict::Fail
    }
}

pub const THEOREM_NAMES: [&str; 8] = [
    "thm1_convergence",
    "thm2_symmetric",
    "thm2_interior",
    "thm3_holder",
    "thm3_exponential",
    "cor1_power_schedule",
    "thm4_stationary",
    "thm4_rates",
];

fn fits_verdict(reports: &[RateReport], model: RateModel) -> (Verdict, String) {
    let relevant: Vec<&RateReport> = reports.iter().filter(|r| r.model == model).collect();
    let has = |q: Quantity| relevant.iter().any(|r| r.quantity == q);
    if !has(Quantity::FGap) || !has(Quantity::TrajErr) {
        return (
            Verdict::NotApplicable,
            format!("missing {} fits", model.as_str()),
        );
    }
    let outcome = if relevant.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if relevant.iter().any(|r| r.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::NotApplicable
    };
    let detail = relevant
        .iter()
        .map(|r| format!("{}={:.4}", r.quantity.as_str(), r.fitted))
        .collect::<Vec<_>>()
        .join(" ");
    (outcome, detail)
}

/// Passes below [`CAUCHY_TOL`]; a gap that is still shrinking is inconclusive.
fn cauchy_verdict(evidence: Option<CauchyEvidence>) -> (Verdict, String) {
    match evidence {
        Some(c) if c.gap <= CAUCHY_TOL => {
            (Verdict::Pass, format!("||x(T)-x(T/2)|| = {:.3e}", c.gap))
        }
        Some(c) if c.gap < c.earlier_gap => (
            Verdict::NotApplicable,
            format!(
                "||x(T)-x(T/2)|| = {:.3e} still shrinking; horizon too short",
                c.gap
            ),
        ),
        Some(c) => (
            Verdict::Fail,
            format!(
                "||x(T)-x(T/2)|| = {:.3e} not below ||x(T/2)-x(T/4)|| = {:.3e}",
                c.gap, c.earlier_gap
            ),
        ),
        None => (Verdict::NotApplicable, "no Cauchy evidence".into()),
    }
}

/// Decides, for each convergence result, whether its hypotheses hold for the
/// configured experiment and whether the run agrees with its conclusion.
pub fn theorem_verdict(inp: &VerdictInputs<'_>) -> Vec<TheoremVerdict> {
    let c = inp.conditions;
    let schedule_ok = c.divergent_gamma.verdict.is_pass() && c.bounded_variation.verdict.is_pass();
    let continuous_projected = matches!(inp.system, System::Cgp | System::Gs);
    let unconstrained = matches!(inp.system, System::Gs | System::Ngs);
    let theta = inp.theta;
    let rate_model = |th: f64| {
        if th == 0.5 {
            RateModel::ExpInGamma
        } else {
            RateModel::PowerInT
        }
    };
    let mut out = Vec::with_capacity(THEOREM_NAMES.len());

    out.push(if !continuous_projected {
        TheoremVerdict::inapplicable("thm1_convergence", format!("system {}", inp.system))
    } else if !schedule_ok {
        TheoremVerdict::inapplicable(
            "thm1_convergence",
            "schedule fails divergence or variation condition",
        )
    } else {
        TheoremVerdict::decided(
            "thm1_convergence",
            inp.gamma_gap_limit,
            "Gamma(t) * gap tail check",
        )
    });

    out.push(if !(continuous_projected && schedule_ok) {
        TheoremVerdict::inapplicable("thm2_symmetric", "schedule or system hypotheses fail")
    } else if !(inp.set_symmetric && inp.objective_even) {
        TheoremVerdict::inapplicable("thm2_symmetric", "set not symmetric or objective not even")
    } else {
        let (v, note) = cauchy_verdict(inp.cauchy);
        TheoremVerdict::decided("thm2_symmetric", v, note)
    });

    out.push(if !(continuous_projected && schedule_ok) {
        TheoremVerdict::inapplicable("thm2_interior", "schedule or system hypotheses fail")
    } else if !inp.argmin_has_interior {
        TheoremVerdict::inapplicable("thm2_interior", "argmin has no interior point")
    } else {
        let (v, note) = cauchy_verdict(inp.cauchy);
        TheoremVerdict::decided("thm2_interior", v, note)
    });

    out.push(match theta {
        Some(th) if continuous_projected && c.monotone && th > 0.0 && th < 0.5 => {
            if c.h1.verdict.is_pass() {
                let (v, note) = fits_verdict(inp.reports, RateModel::PowerInT);
                TheoremVerdict::decided("thm3_holder", v, note)
            } else {
                TheoremVerdict::inapplicable("thm3_holder", "tail integrability condition fails")
            }
        }
        _ => TheoremVerdict::inapplicable(
            "thm3_holder",
            "needs a projected flow, monotone schedule, theta in (0, 1/2)",
        ),
    });

    out.push(match theta {
        Some(th) if continuous_projected && c.monotone && th == 0.5 => {
            if c.exponential.verdict.is_pass() {
                let (v, note) = fits_verdict(inp.reports, RateModel::ExpInGamma);
                TheoremVerdict::decided("thm3_exponential", v, note)
            } else {
                TheoremVerdict::inapplicable(
                    "thm3_exponential",
                    "exponential integrability condition fails",
                )
            }
        }
        _ => TheoremVerdict::inapplicable(
            "thm3_exponential",
            "needs a projected flow, monotone schedule, theta = 1/2",
        ),
    });

    out.push(match (theta, inp.schedule.family()) {
        (Some(th), Family::Power { .. }) if continuous_projected && th > 0.0 && th <= 0.5 => {
            let (v, note) = fits_verdict(inp.reports, rate_model(th));
            TheoremVerdict::decided("cor1_power_schedule", v, note)
        }
        _ => TheoremVerdict::inapplicable(
            "cor1_power_schedule",
            "needs K/(1+t)^alpha with 0<alpha<1 and theta <= 1/2",
        ),
    });

    out.push(match theta {
        Some(th) if unconstrained && th > 0.5 => match inp.stationary_deviation {
            Some(d) => TheoremVerdict::decided(
                "thm4_stationary",
                Verdict::from_bool(d == 0.0),
                format!("max ||x(t) - x0|| = {d:e}"),
            ),
            None => TheoremVerdict::decided(
                "thm4_stationary",
                Verdict::NotApplicable,
                "no trajectory evidence",
            ),
        },
        _ => TheoremVerdict::inapplicable(
            "thm4_stationary",
            "needs an unconstrained flow and theta > 1/2",
        ),
    });

    out.push(match theta {
        Some(th)
            if unconstrained && c.divergent_gamma.verdict.is_pass() && th > 0.0 && th <= 0.5 =>
        {
            let (v, note) = fits_verdict(inp.reports, rate_model(th));
            TheoremVerdict::decided("thm4_rates", v, note)
        }
        _ => TheoremVerdict::inapplicable(
            "thm4_rates",
            "needs an unconstrained flow, divergent Gamma, theta <= 1/2",
        ),
    });

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FlowProblem, Numerics};
    use crate::geometry::ConvexSet;
    use crate::objectives::Objective;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn decaying_run() -> Trajectory {
        FlowProblem::unconstrained(
            Objective::squared_distance(p(&[0.0, 0.0])),
            Schedule::constant(1.0).unwrap(),
            p(&[1.0, 0.0]),
            System::Cgp,
        )
        .unwrap()
        .integrate(&Numerics {
            step: 1e-3,
            horizon: 2.0,
            sample_every: 0.1,
        })
        .unwrap()
    }

    #[test]
    fn check_monotone_examples() {
        assert_eq!(
            check_monotone(&[3.0, 2.0, 1.0], 0.0),
            MonotoneCheck {
                pass: true,
                max_violation: 0.0
            }
        );
        assert!(check_monotone(&[1.0, 1.0 + 1e-12, 0.0], 1e-9).pass);
        let bad = check_monotone(&[0.0, 1.0, 0.0], 1e-9);
        assert!(!bad.pass);
        assert_eq!(bad.max_violation, 1.0);
    }

    #[test]
    fn gamma_gap_limit_examples() {
        let ts: Vec<f64> = (0..=500).map(|k| k as f64 * 0.1).collect();
        let series: Vec<f64> = ts.iter().map(|t| t * (-4.0 * t).exp()).collect();
        assert_eq!(check_gamma_gap_limit(&series, 50.0, 0.1), Verdict::Pass);
        assert_eq!(check_gamma_gap_limit(&[1.0; 100], 50.0, 0.1), Verdict::Fail);
        assert_eq!(check_gamma_gap_limit(&[0.0; 100], 50.0, 0.1), Verdict::Pass);
        assert_eq!(
            check_gamma_gap_limit(&series, 5.0, 0.1),
            Verdict::NotApplicable
        );
    }

    #[test]
    fn diagnostics_on_stationary_run_vanish() {
        let prob = FlowProblem::unconstrained(
            Objective::squared_distance(p(&[0.5, 0.5])),
            Schedule::constant(1.0).unwrap(),
            p(&[0.5, 0.5]),
            System::Cgp,
        )
        .unwrap();
        let traj = prob
            .integrate(&Numerics {
                step: 0.01,
                horizon: 1.0,
                sample_every: 0.1,
            })
            .unwrap();
        let d = Desingularizer::new(1.0, 0.5).unwrap();
        let diag = diagnostics(
            &traj,
            &p(&[0.5, 0.5]),
            &Schedule::constant(1.0).unwrap(),
            Some(&d),
        )
        .unwrap();
        for series in [
            &diag.phi_z,
            &diag.psi,
            &diag.gamma_gap,
            diag.lojasiewicz_h.as_ref().unwrap(),
        ] {
            assert!(series.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn diagnostics_match_closed_forms() {
        let traj = decaying_run();
        let diag = diagnostics(
            &traj,
            &p(&[0.0, 0.0]),
            &Schedule::constant(1.0).unwrap(),
            None,
        )
        .unwrap();
        for (s, (phi, psi)) in traj.samples().iter().zip(diag.phi_z.iter().zip(&diag.psi)) {
            let decay = (-4.0 * s.t).exp();
            assert_abs_diff_eq!(*phi, 0.5 * decay, epsilon = 1e-5);
            assert_abs_diff_eq!(*psi, 1.5 * decay, epsilon = 1e-5);
        }
        assert!(diagnostics(&traj, &p(&[0.0]), &Schedule::constant(1.0).unwrap(), None).is_err());
    }

    #[test]
    fn least_squares_recovers_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = least_squares(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
        assert!(least_squares(&[1.0], &[1.0]).is_none());
        assert!(least_squares(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn synthetic_power_law() {
        let ts: Vec<f64> = (0..=450).map(|k| 5.0 + k as f64 * 0.1).collect();
        let qs: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let r = fit_power_series(&ts, &qs, Quantity::FGap, Some(-1.0));
        assert_abs_diff_eq!(r.fitted, -1.0, epsilon = 1e-6);
        assert!(r.r_squared >= 1.0 - 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn theoretical_exponents() {
        assert_abs_diff_eq!(
            theoretical_power_exponent(Quantity::FGap, 0.25, 0.5).unwrap(),
            -1.0
        );
        assert_abs_diff_eq!(
            theoretical_power_exponent(Quantity::TrajErr, 0.25, 0.5).unwrap(),
            -0.25
        );
        assert_eq!(theoretical_power_exponent(Quantity::FGap, 0.5, 0.5), None);
    }

    #[test]
    fn power_verdict_is_one_sided() {
        assert_eq!(power_verdict(-3.0, 0.999, Some(-1.0)), Verdict::Pass);
        assert_eq!(power_verdict(-0.86, 0.999, Some(-1.0)), Verdict::Pass);
        assert_eq!(power_verdict(-0.84, 0.999, Some(-1.0)), Verdict::Fail);
        assert_eq!(power_verdict(-1.0, 0.98, Some(-1.0)), Verdict::Fail);
        assert_eq!(power_verdict(-1.0, 1.0, None), Verdict::NotApplicable);
    }

    #[test]
    fn synthetic_exponential_in_gamma() {
        let gs: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let qs: Vec<f64> = gs.iter().map(|g| (-3.0 * g).exp()).collect();
        let r = fit_exponential_series(&gs, &qs, Quantity::FGap, (0.0, 5.0));
        assert_abs_diff_eq!(r.fitted, 3.0, epsilon = 1e-6);
        assert_eq!(r.verdict, Verdict::Pass);

        let flat = fit_exponential_series(&gs, &[0.7; 100], Quantity::FGap, (0.0, 5.0));
        assert_eq!(flat.fitted, 0.0);
        assert_eq!(flat.verdict, Verdict::Fail);
    }

    #[test]
    fn exponential_rate_of_quadratic_flow() {
        let traj = decaying_run();
        let r = fit_exponential(&traj, Quantity::FGap, 1.0);
        assert_abs_diff_eq!(r.fitted, 4.0, epsilon = 1e-4);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn exact_convergence_makes_fit_inapplicable() {
        let ball = ConvexSet::ball(p(&[0.0, 0.0]), 1.0).unwrap();
        let f = Objective::squared_distance(p(&[0.0, 0.0]));
        let prob = FlowProblem::new(
            ball,
            f,
            Schedule::constant(1.0).unwrap(),
            p(&[0.0, 0.0]),
            System::Cgp,
        )
        .unwrap();
        let traj = prob
            .integrate(&Numerics {
                step: 0.01,
                horizon: 10.0,
                sample_every: 0.1,
            })
            .unwrap();
        assert_eq!(
            fit_power(&traj, Quantity::FGap, 0.9, Some(-1.0)).verdict,
            Verdict::NotApplicable
        );
        assert_eq!(
            fit_exponential(&traj, Quantity::TrajErr, 0.9).verdict,
            Verdict::NotApplicable
        );
    }

    fn inputs<'a>(
        schedule: Schedule,
        conditions: &'a ConditionReport,
        theta: Option<f64>,
        reports: &'a [RateReport],
    ) -> VerdictInputs<'a> {
        VerdictInputs {
            system: System::Cgp,
            schedule,
            conditions,
            theta,
            set_symmetric: false,
            objective_even: false,
            argmin_has_interior: false,
            reports,
            gamma_gap_limit: Verdict::Pass,
            cauchy: None,
            stationary_deviation: None,
        }
    }

    fn find<'a>(v: &'a [TheoremVerdict], name: &str) -> &'a TheoremVerdict {
        v.iter().find(|t| t.theorem == name).unwrap()
    }

    #[test]
    fn holder_rates_need_both_fits() {
        let schedule = Schedule::power(1.0, 0.5).unwrap();
        let cond = schedule.validate(Some(0.25), 200.0).unwrap();
        let pass = |q| RateReport {
            quantity: q,
            model: RateModel::PowerInT,
            fitted: -2.0,
            r_squared: 0.999,
            theoretical: Some(-1.0),
            verdict: Verdict::Pass,
            fit_window: (20.0, 200.0),
        };
        let reports = vec![pass(Quantity::FGap), pass(Quantity::TrajErr)];
        let v = theorem_verdict(&inputs(schedule, &cond, Some(0.25), &reports));
        let thm3 = find(&v, "thm3_holder");
        assert!(thm3.applicable);
        assert_eq!(thm3.outcome, Verdict::Pass);
        assert_eq!(find(&v, "cor1_power_schedule").outcome, Verdict::Pass);

        let mut one_bad = reports.clone();
        one_bad[1].verdict = Verdict::Fail;
        let v = theorem_verdict(&inputs(schedule, &cond, Some(0.25), &one_bad));
        assert!(find(&v, "thm3_holder").failed());
    }

    #[test]
    fn bounded_gamma_disables_convergence_theorem() {
        let schedule = Schedule::power_ge1(1.0, 2.0).unwrap();
        let cond = schedule.validate(None, 200.0).unwrap();
        let v = theorem_verdict(&inputs(schedule, &cond, None, &[]));
        assert!(!find(&v, "thm1_convergence").applicable);
    }

    #[test]
    fn symmetric_geometry_enables_case_one() {
        let schedule = Schedule::power(1.0, 0.5).unwrap();
        let cond = schedule.validate(None, 200.0).unwrap();
        let mut inp = inputs(schedule, &cond, None, &[]);
        inp.set_symmetric = true;
        inp.objective_even = true;
        inp.cauchy = Some(CauchyEvidence {
            gap: 1e-6,
            earlier_gap: 1e-3,
        });
        let v = theorem_verdict(&inp);
        let t = find(&v, "thm2_symmetric");
        assert!(t.applicable);
        assert_eq!(t.outcome, Verdict::Pass);
        assert!(!find(&v, "thm2_interior").applicable);
    }

    #[test]
    fn cauchy_evidence_grades_three_ways() {
        let ev = |gap, earlier_gap| Some(CauchyEvidence { gap, earlier_gap });
        assert_eq!(cauchy_verdict(ev(1e-6, 1e-3)).0, Verdict::Pass);
        assert_eq!(cauchy_verdict(ev(1e-2, 2e-2)).0, Verdict::NotApplicable);
        assert_eq!(cauchy_verdict(ev(1e-2, 1e-2)).0, Verdict::Fail);
        let traj = decaying_run();
        let c = cauchy_evidence(&traj);
        assert!(c.gap < c.earlier_gap);
    }

    #[test]
    fn stationary_item_for_large_theta() {
        let schedule = Schedule::power(1.0, 0.5).unwrap();
        let cond = schedule.validate(None, 10.0).unwrap();
        let mut inp = inputs(schedule, &cond, Some(0.75), &[]);
        inp.system = System::Gs;
        inp.stationary_deviation = Some(0.0);
        let v = theorem_verdict(&inp);
        assert_eq!(find(&v, "thm4_stationary").outcome, Verdict::Pass);
        inp.stationary_deviation = Some(1e-3);
        assert!(find(&theorem_verdict(&inp), "thm4_stationary").failed());
    }
}
