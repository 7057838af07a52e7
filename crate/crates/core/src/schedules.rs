//! Step-size schedules `lambda(t)`, their derivatives and primitives
//! `Gamma(t) = int_0^t lambda(s) ds`, plus validators for the integrability
//! conditions the convergence results depend on.
//!
//! Only families with closed-form primitives are offered, so `Gamma` and
//! `lambda'` carry no quadrature error.

use std::fmt;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `lambda(t) = K`
    Constant { k: f64 },
    /// `lambda(t) = K / (1 + t)^alpha`, `0 < alpha < 1`
    Power { k: f64, alpha: f64 },
    /// `lambda(t) = K / (1 + t)^alpha`, `alpha >= 1`
    PowerGe1 { k: f64, alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    family: Family,
}

impl Schedule {
    pub fn constant(k: f64) -> Result<Self> {
        check_k(k)?;
        Ok(Schedule {
            family: Family::Constant { k },
        })
    }

    pub fn power(k: f64, alpha: f64) -> Result<Self> {
        check_k(k)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "power schedule needs 0 < alpha < 1, got {alpha}"
            )));
        }
        Ok(Schedule {
            family: Family::Power { k, alpha },
        })
    }

    pub fn power_ge1(k: f64, alpha: f64) -> Result<Self> {
        check_k(k)?;
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "power_ge1 schedule needs alpha >= 1, got {alpha}"
            )));
        }
        Ok(Schedule {
            family: Family::PowerGe1 { k, alpha },
        })
    }

    /// `K / (1 + t)^alpha`, dispatching on `alpha` to the matching family.
    pub fn power_law(k: f64, alpha: f64) -> Result<Self> {
        if alpha == 0.0 {
            Self::constant(k)
        } else if alpha < 1.0 {
            Self::power(k, alpha)
        } else {
            Self::power_ge1(k, alpha)
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> f64 {
        match self.family {
            Family::Constant { k } | Family::Power { k, .. } | Family::PowerGe1 { k, .. } => k,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self.family {
            Family::Constant { .. } => 0.0,
            Family::Power { alpha, .. } | Family::PowerGe1 { alpha, .. } => alpha,
        }
    }

    /// Every shipped family is non-increasing.
    pub fn is_monotone_nonincreasing(&self) -> bool {
        true
    }

    pub fn lambda(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.lambda_at(t))
    }

    pub fn lambda_prime(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(match self.family {
            Family::Constant { .. } => 0.0,
            Family::Power { k, alpha } | Family::PowerGe1 { k, alpha } => {
                -alpha * k * (1.0 + t).powf(-alpha - 1.0)
            }
        })
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.gamma_at(t))
    }

    pub(crate) fn lambda_at(&self, t: f64) -> f64 {
        match self.family {
            Family::Constant { k } => k,
            Family::Power { k, alpha } | Family::PowerGe1 { k, alpha } => {
                k * (1.0 + t).powf(-alpha)
            }
        }
    }

    pub(crate) fn gamma_at(&self, t: f64) -> f64 {
        match self.family {
            Family::Constant { k } => k * t,
            Family::Power { k, alpha } => k * ((1.0 + t).powf(1.0 - alpha) - 1.0) / (1.0 - alpha),
            Family::PowerGe1 { k, alpha: 1.0 } => k * t.ln_1p(),
            Family::PowerGe1 { k, alpha } => {
                k * (1.0 - (1.0 + t).powf(1.0 - alpha)) / (alpha - 1.0)
            }
        }
    }

    /// `lim Gamma(t)` as `t -> inf`, or `None` when it diverges.
    pub fn gamma_limit(&self) -> Option<f64> {
        match self.family {
            Family::PowerGe1 { k, alpha } if alpha > 1.0 => Some(k / (alpha - 1.0)),
            _ => None,
        }
    }

    /// `lim lambda(t)` as `t -> inf`.
    pub fn lambda_limit(&self) -> f64 {
        match self.family {
            Family::Constant { k } => k,
            _ => 0.0,
        }
    }

    /// Inverse of `Gamma`; `None` when `s` lies beyond the range of `Gamma`.
    pub fn gamma_inverse(&self, s: f64) -> Option<f64> {
        if s < 0.0 {
            return None;
        }
        match self.family {
            Family::Constant { k } => Some(s / k),
            Family::Power { k, alpha } => {
                Some((1.0 + s * (1.0 - alpha) / k).powf(1.0 / (1.0 - alpha)) - 1.0)
            }
            Family::PowerGe1 { k, alpha: 1.0 } => Some((s / k).exp_m1()),
            Family::PowerGe1 { k, alpha } => {
                let base = 1.0 - s * (alpha - 1.0) / k;
                (base > 0.0).then(|| base.powf(-1.0 / (alpha - 1.0)) - 1.0)
            }
        }
    }

    /// Checks the divergence, bounded-variation and rate conditions.
    ///
    /// Verdicts come from closed-form criteria; the quadratures over
    /// `[0, horizon]` are recorded as evidence only.
    pub fn validate(&self, theta: Option<f64>, horizon: f64) -> Result<ConditionReport> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("validation horizon must be positive"));
        }
        if let Some(th) = theta {
            if !(th > 0.0 && th <= 0.5) {
                return Err(Error::invalid(format!(
                    "theta must lie in (0, 1/2], got {th}"
                )));
            }
        }

        let limit = self.gamma_limit();
        let divergent_gamma = Condition {
            verdict: Verdict::from_bool(limit.is_none()),
            evidence: vec![
                ("gamma_at_horizon", self.gamma_at(horizon)),
                ("gamma_limit", limit.unwrap_or(f64::INFINITY)),
            ],
        };

        let variation = self.lambda_at(0.0) - self.lambda_limit();
        let bounded_variation = Condition {
            verdict: Verdict::from_bool(variation.is_finite()),
            evidence: vec![("total_variation", variation)],
        };

        let h1 = match theta {
            Some(th) if th < 0.5 => self.h1_condition(th, horizon),
            _ => Condition::not_applicable(),
        };
        let exponential = match theta {
            Some(0.5) => self.exponential_condition(horizon),
            _ => Condition::not_applicable(),
        };

        Ok(ConditionReport {
            divergent_gamma,
            bounded_variation,
            h1,
            exponential,
            monotone: self.is_monotone_nonincreasing(),
        })
    }

    /// Tail integrability of `Gamma(t)^(-beta) / (1 + t)`, `beta = theta / (1 - 2 theta)`.
    fn h1_condition(&self, theta: f64, horizon: f64) -> Condition {
        let beta = theta / (1.0 - 2.0 * theta);
        // Gamma grows like t^growth (or log t when growth == 0).
        let (finite, decay) = match self.family {
            Family::Constant { .. } => (true, beta),
            Family::Power { alpha, .. } => (true, beta * (1.0 - alpha)),
            Family::PowerGe1 { alpha: 1.0, .. } => (beta > 1.0, 0.0),
            Family::PowerGe1 { .. } => (false, 0.0),
        };
        let integrand = |t: f64| self.gamma_at(t).powf(-beta) / (1.0 + t);
        let upper = horizon.max(1.0);
        let full = adaptive_simpson(integrand, 1.0, upper, 1e-10);
        let half = adaptive_simpson(integrand, 1.0, 1.0 + 0.5 * (upper - 1.0), 1e-10);
        Condition {
            verdict: Verdict::from_bool(finite),
            evidence: vec![
                ("beta", beta),
                ("tail_decay_exponent", decay),
                ("quadrature_to_half_horizon", half),
                ("quadrature_to_horizon", full),
            ],
        }
    }

    /// `int e^{-c Gamma(t)} / (1 + t) dt < inf` for c in {0.1, 1, 10}.
    fn exponential_condition(&self, horizon: f64) -> Condition {
        let finite = self.gamma_limit().is_none();
        let names = ["quadrature_c0.1", "quadrature_c1", "quadrature_c10"];
        let evidence = [0.1, 1.0, 10.0]
            .iter()
            .zip(names)
            .map(|(&c, name)| {
                let v = adaptive_simpson(
                    |t| (-c * self.gamma_at(t)).exp() / (1.0 + t),
                    0.0,
                    horizon,
                    1e-10,
                );
                (name, v)
            })
            .collect();
        Condition {
            verdict: Verdict::from_bool(finite),
            evidence,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Constant { k } => write!(f, "constant(K={k})"),
            Family::Power { k, alpha } => write!(f, "power(K={k}, alpha={alpha})"),
            Family::PowerGe1 { k, alpha } => write!(f, "power_ge1(K={k}, alpha={alpha})"),
        }
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "schedule scale K must be > 0, got {k}"
        )))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time must be >= 0, got {t}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "inapplicable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub verdict: Verdict,
    pub evidence: Vec<(&'static str, f64)>,
}

impl Condition {
    fn not_applicable() -> Self {
        Condition {
            verdict: Verdict::NotApplicable,
            evidence: Vec::new(),
        }
    }

    pub fn evidence(&self, name: &str) -> Option<f64> {
        self.evidence
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// `int_0^inf lambda = inf`
    pub divergent_gamma: Condition,
    /// `int_0^inf |lambda'| < inf`
    pub bounded_variation: Condition,
    /// tail integrability of `Gamma^(-theta/(1-2theta)) / (1+t)`, for `theta < 1/2`
    pub h1: Condition,
    /// integrability of `e^{-c Gamma} / (1+t)` for every tested `c`, for `theta = 1/2`
    pub exponential: Condition,
    pub monotone: bool,
}

impl ConditionReport {
    pub fn rows(&self) -> [(&'static str, &Condition); 4] {
        [
            ("divergent_gamma", &self.divergent_gamma),
            ("bounded_variation", &self.bounded_variation),
            ("h1_tail", &self.h1),
            ("exponential_tail", &self.exponential),
        ]
    }

    /// No applicable condition failed.
    pub fn all_pass(&self) -> bool {
        self.rows().iter().all(|(_, c)| c.verdict != Verdict::Fail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_examples() {
        assert_eq!(Schedule::constant(2.0).unwrap().lambda(7.0).unwrap(), 2.0);
        let s = Schedule::power(1.0, 0.5).unwrap();
        assert_eq!(s.lambda(0.0).unwrap(), 1.0);
        assert_eq!(s.lambda(3.0).unwrap(), 0.5);
        assert!(s.lambda(-1.0).is_err());
    }

    #[test]
    fn lambda_prime_examples() {
        assert_eq!(
            Schedule::constant(2.0).unwrap().lambda_prime(4.0).unwrap(),
            0.0
        );
        assert_eq!(
            Schedule::power(1.0, 0.5)
                .unwrap()
                .lambda_prime(0.0)
                .unwrap(),
            -0.5
        );
        assert_eq!(
            Schedule::power_ge1(2.0, 1.0)
                .unwrap()
                .lambda_prime(1.0)
                .unwrap(),
            -0.5
        );
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(Schedule::constant(2.0).unwrap().gamma(5.0).unwrap(), 10.0);
        let s = Schedule::power(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(
            s.gamma(10.0).unwrap(),
            2.0 * (11f64.sqrt() - 1.0),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(s.gamma(10.0).unwrap(), 4.63325, epsilon = 1e-5);
        let q = adaptive_simpson(|t| s.lambda_at(t), 0.0, 10.0, 1e-13);
        assert_abs_diff_eq!(s.gamma(10.0).unwrap(), q, epsilon = 1e-10);
        for s in [
            Schedule::constant(3.0).unwrap(),
            s,
            Schedule::power_ge1(1.0, 2.0).unwrap(),
        ] {
            assert_eq!(s.gamma(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(Schedule::constant(0.0).is_err());
        assert!(Schedule::power(1.0, 1.0).is_err());
        assert!(Schedule::power(1.0, 0.0).is_err());
        assert!(Schedule::power_ge1(1.0, 0.5).is_err());
        assert_eq!(
            Schedule::power_law(1.0, 2.0).unwrap().family(),
            Family::PowerGe1 { k: 1.0, alpha: 2.0 }
        );
    }

    #[test]
    fn gamma_inverse_round_trips() {
        for s in [
            Schedule::constant(3.0).unwrap(),
            Schedule::power(1.5, 0.3).unwrap(),
            Schedule::power_ge1(2.0, 1.0).unwrap(),
            Schedule::power_ge1(2.0, 3.0).unwrap(),
        ] {
            for t in [0.0, 0.5, 3.0, 40.0] {
                let back = s.gamma_inverse(s.gamma_at(t)).unwrap();
                assert_abs_diff_eq!(back, t, epsilon = 1e-9 * (1.0 + t));
            }
        }
        assert_eq!(
            Schedule::power_ge1(1.0, 2.0).unwrap().gamma_inverse(1.0),
            None
        );
    }

    #[test]
    fn validate_power_with_theta_quarter() {
        let r = Schedule::power(1.0, 0.5)
            .unwrap()
            .validate(Some(0.25), 1e4)
            .unwrap();
        assert_eq!(r.divergent_gamma.verdict, Verdict::Pass);
        assert_eq!(r.bounded_variation.verdict, Verdict::Pass);
        assert_eq!(r.h1.verdict, Verdict::Pass);
        assert_eq!(r.exponential.verdict, Verdict::NotApplicable);
        assert!(r.all_pass());
        // integrand ~ t^{-1.25}: the second half of the range adds little
        let half = r.h1.evidence("quadrature_to_half_horizon").unwrap();
        let full = r.h1.evidence("quadrature_to_horizon").unwrap();
        assert!(full - half < 0.05 * full);
        assert_abs_diff_eq!(r.h1.evidence("tail_decay_exponent").unwrap(), 0.25);
    }

    #[test]
    fn validate_power_ge1_fails_divergence() {
        let r = Schedule::power_ge1(1.0, 2.0)
            .unwrap()
            .validate(None, 100.0)
            .unwrap();
        assert_eq!(r.divergent_gamma.verdict, Verdict::Fail);
        assert_abs_diff_eq!(
            r.divergent_gamma.evidence("gamma_limit").unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(r.bounded_variation.verdict, Verdict::Pass);
    }

    #[test]
    fn validate_constant_with_theta_half() {
        let r = Schedule::constant(1.0)
            .unwrap()
            .validate(Some(0.5), 200.0)
            .unwrap();
        assert!(r.divergent_gamma.verdict.is_pass());
        assert!(r.bounded_variation.verdict.is_pass());
        assert!(r.exponential.verdict.is_pass());
        assert_eq!(r.h1.verdict, Verdict::NotApplicable);
        for (_, v) in &r.exponential.evidence {
            assert!(v.is_finite() && *v > 0.0);
        }
    }

    #[test]
    fn validate_rejects_theta_out_of_range() {
        let s = Schedule::constant(1.0).unwrap();
        assert!(s.validate(Some(0.6), 10.0).is_err());
        assert!(s.validate(Some(0.0), 10.0).is_err());
        assert!(s.validate(None, 0.0).is_err());
    }

    #[test]
    fn logarithmic_gamma_needs_large_beta() {
        let s = Schedule::power_ge1(1.0, 1.0).unwrap();
        assert!(s.validate(Some(0.25), 100.0).unwrap().h1.verdict == Verdict::Fail);
        assert!(s.validate(Some(0.45), 100.0).unwrap().h1.verdict == Verdict::Pass);
        assert!(s
            .validate(Some(0.5), 100.0)
            .unwrap()
            .exponential
            .verdict
            .is_pass());
    }
}
