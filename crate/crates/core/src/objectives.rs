//! Convex objectives with analytic gradients and optimum metadata.
//!
//! Each catalog entry knows its own minimum value and minimizer set over the
//! whole space. [`Objective::restricted_to`] recomputes that metadata for a
//! constraint set where a closed form exists, and drops it otherwise.

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Shape, MEMBERSHIP_TOL};
use crate::point::Point;

/// Gaps below this are treated as "on the argmin set" by the certificate checks.
pub const GAP_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveKind {
    /// `sum_i w_i (x_i - a_i)^2 + shift`
    Quadratic {
        center: Point,
        weights: Point,
        shift: f64,
    },
    /// `base(x)^(1 / (2 theta))`
    Power {
        base: Box<Objective>,
        theta: f64,
    },
    /// `sum_i q_i x_i^4 + c_i x_i^2`
    EvenQuartic {
        quartic: Point,
        quadratic: Point,
    },
    /// `max(0, ||x - a|| - radius)^2`
    FlatBottom {
        center: Point,
        radius: f64,
    },
    Constant {
        dim: usize,
        value: f64,
    },
}

/// Minimum value and minimizer set.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub f_star: f64,
    pub argmin: ConvexSet,
}

/// Global Hölderian error bound `(f - f*)^theta >= kappa * dist(x, argmin)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gheb {
    pub kappa: f64,
    pub theta: f64,
}

/// Desingularizing function `phi(s) = s^theta / (kappa * theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Desingularizer {
    kappa: f64,
    theta: f64,
}

impl Desingularizer {
    pub fn new(kappa: f64, theta: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be > 0, got {kappa}")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        Ok(Desingularizer { kappa, theta })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self, s: f64) -> f64 {
        s.max(0.0).powf(self.theta) / (self.kappa * self.theta)
    }

    pub fn phi_prime(&self, s: f64) -> f64 {
        s.powf(self.theta - 1.0) / self.kappa
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    optimum: Option<Optimum>,
    gheb: Option<Gheb>,
    strong_convexity: Option<f64>,
    is_even: bool,
}

impl Objective {
    /// Weighted quadratic `sum_i w_i (x_i - a_i)^2 + shift` with all `w_i > 0`.
    pub fn quadratic(center: Point, weights: Point, shift: f64) -> Result<Self> {
        Error::check_dim(center.dim(), weights.dim())?;
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("quadratic weights must be positive"));
        }
        if !shift.is_finite() {
            return Err(Error::invalid("shift must be finite"));
        }
        let w_min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let is_even = center.iter().all(|&c| c == 0.0);
        Ok(Objective {
            optimum: Some(Optimum {
                f_star: shift,
                argmin: ConvexSet::singleton(center.clone()),
            }),
            gheb: Some(Gheb {
                kappa: w_min.sqrt(),
                theta: 0.5,
            }),
            strong_convexity: Some(2.0 * w_min),
            is_even,
            kind: ObjectiveKind::Quadratic {
                center,
                weights,
                shift,
            },
        })
    }

    /// `||x - a||^2`
    pub fn squared_distance(center: Point) -> Self {
        let dim = center.dim();
        Self::quadratic(center, Point::from_vec(vec![1.0; dim]), 0.0)
            .expect("unit weights are valid")
    }

    /// `sum_i q_i x_i^4 + c_i x_i^2`, an even polynomial with `{0}` as argmin.
    pub fn even_quartic(quartic: Point, quadratic: Point) -> Result<Self> {
        Error::check_dim(quartic.dim(), quadratic.dim())?;
        let coeffs_ok = quartic
            .iter()
            .zip(quadratic.iter())
            .all(|(&q, &c)| q >= 0.0 && c >= 0.0 && q + c > 0.0 && q.is_finite() && c.is_finite());
        if !coeffs_ok {
            return Err(Error::invalid(
                "even quartic coefficients must be non-negative with q_i + c_i > 0",
            ));
        }
        let n = quartic.dim() as f64;
        let c_min = quadratic.iter().cloned().fold(f64::INFINITY, f64::min);
        let q_min = quartic.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_max = quadratic.iter().cloned().fold(0.0, f64::max);
        let gheb = if c_min > 0.0 {
            Some(Gheb {
                kappa: c_min.sqrt(),
                theta: 0.5,
            })
        } else if c_max == 0.0 {
            // sum q x^4 >= q_min ||x||^4 / n
            Some(Gheb {
                kappa: (q_min / n).powf(0.25),
                theta: 0.25,
            })
        } else {
            None
        };
        let dim = quartic.dim();
        Ok(Objective {
            optimum: Some(Optimum {
                f_star: 0.0,
                argmin: ConvexSet::singleton(Point::zeros(dim)),
            }),
            gheb,
            strong_convexity: (c_min > 0.0).then_some(2.0 * c_min),
            is_even: true,
            kind: ObjectiveKind::EvenQuartic { quartic, quadratic },
        })
    }

    /// `max(0, ||x - a|| - radius)^2`; its argmin is the ball `B(a, radius)`.
    pub fn flat_bottom(center: Point, radius: f64) -> Result<Self> {
        let argmin = ConvexSet::ball(center.clone(), radius)?;
        let is_even = center.iter().all(|&c| c == 0.0);
        Ok(Objective {
            optimum: Some(Optimum {
                f_star: 0.0,
                argmin,
            }),
            gheb: Some(Gheb {
                kappa: 1.0,
                theta: 0.5,
            }),
            strong_convexity: None,
            is_even,
            kind: ObjectiveKind::FlatBottom { center, radius },
        })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        let argmin = ConvexSet::whole_space(dim)?;
        if !value.is_finite() {
            return Err(Error::invalid("constant value must be finite"));
        }
        Ok(Objective {
            optimum: Some(Optimum {
                f_star: value,
                argmin,
            }),
            gheb: None,
            strong_convexity: None,
            is_even: true,
            kind: ObjectiveKind::Constant { dim, value },
        })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            ObjectiveKind::Quadratic { .. } => "quadratic",
            ObjectiveKind::Power { .. } => "power",
            ObjectiveKind::EvenQuartic { .. } => "even_quartic",
            ObjectiveKind::FlatBottom { .. } => "flat_bottom",
            ObjectiveKind::Constant { .. } => "constant",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Quadratic { center, .. } | ObjectiveKind::FlatBottom { center, .. } => {
                center.dim()
            }
            ObjectiveKind::Power { base, .. } => base.dim(),
            ObjectiveKind::EvenQuartic { quartic, .. } => quartic.dim(),
            ObjectiveKind::Constant { dim, .. } => *dim,
        }
    }

    pub fn optimum(&self) -> Option<&Optimum> {
        self.optimum.as_ref()
    }

    pub fn gheb(&self) -> Option<Gheb> {
        self.gheb
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }

    pub fn is_even(&self) -> bool {
        self.is_even
    }

    pub fn is_nonnegative(&self) -> bool {
        match &self.kind {
            ObjectiveKind::Quadratic { shift, .. } => *shift >= 0.0,
            ObjectiveKind::Constant { value, .. } => *value >= 0.0,
            _ => true,
        }
    }

    pub fn desingularizer(&self) -> Option<Desingularizer> {
        self.gheb
            .and_then(|g| Desingularizer::new(g.kappa, g.theta).ok())
    }

    /// Replaces the error-bound certificate.
    pub fn with_gheb(mut self, kappa: f64, theta: f64) -> Result<Self> {
        Desingularizer::new(kappa, theta)?;
        self.gheb = Some(Gheb { kappa, theta });
        Ok(self)
    }

    pub fn with_optimum(mut self, optimum: Option<Optimum>) -> Self {
        self.optimum = optimum;
        self
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        Error::check_dim(self.dim(), x.dim())?;
        Ok(self.value(x))
    }

    pub fn grad(&self, x: &Point) -> Result<Point> {
        Error::check_dim(self.dim(), x.dim())?;
        Ok(self.gradient(x))
    }

    pub(crate) fn value(&self, x: &Point) -> f64 {
        match &self.kind {
            ObjectiveKind::Quadratic {
                center,
                weights,
                shift,
            } => {
                x.iter()
                    .zip(center.iter().zip(weights.iter()))
                    .map(|(&v, (&a, &w))| w * (v - a) * (v - a))
                    .sum::<f64>()
                    + shift
            }
            ObjectiveKind::Power { base, theta } => base.value(x).max(0.0).powf(0.5 / theta),
            ObjectiveKind::EvenQuartic { quartic, quadratic } => x
                .iter()
                .zip(quartic.iter().zip(quadratic.iter()))
                .map(|(&v, (&q, &c))| {
                    let v2 = v * v;
                    q * v2 * v2 + c * v2
                })
                .sum(),
            ObjectiveKind::FlatBottom { center, radius } => {
                let d = (x.distance(center) - radius).max(0.0);
                d * d
            }
            ObjectiveKind::Constant { value, .. } => *value,
        }
    }

    pub(crate) fn gradient(&self, x: &Point) -> Point {
        match &self.kind {
            ObjectiveKind::Quadratic {
                center, weights, ..
            } => Point::from_vec(
                x.iter()
                    .zip(center.iter().zip(weights.iter()))
                    .map(|(&v, (&a, &w))| 2.0 * w * (v - a))
                    .collect(),
            ),
            ObjectiveKind::Power { base, theta } => {
                let g = base.value(x);
                if g <= 0.0 {
                    // C^1 extension: the gradient vanishes where the base does.
                    return Point::zeros(x.dim());
                }
                let p = 0.5 / theta;
                base.gradient(x).scale(p * g.powf(p - 1.0))
            }
            ObjectiveKind::EvenQuartic { quartic, quadratic } => Point::from_vec(
                x.iter()
                    .zip(quartic.iter().zip(quadratic.iter()))
                    .map(|(&v, (&q, &c))| 4.0 * q * v * v * v + 2.0 * c * v)
                    .collect(),
            ),
            ObjectiveKind::FlatBottom { center, radius } => {
                let offset = x.sub(center);
                let r = offset.norm();
                if r <= *radius {
                    Point::zeros(x.dim())
                } else {
                    offset.scale(2.0 * (r - radius) / r)
                }
            }
            ObjectiveKind::Constant { dim, .. } => Point::zeros(*dim),
        }
    }

    /// Same objective with optimum metadata recomputed for minimization over
    /// `set`. The metadata becomes `None` when no closed form is known.
    pub fn restricted_to(&self, set: &ConvexSet) -> Result<Self> {
        Error::check_dim(self.dim(), set.dim())?;
        if matches!(set.shape(), Shape::WholeSpace { .. }) {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        match &self.kind {
            ObjectiveKind::Quadratic {
                center,
                weights,
                shift,
            } => {
                if set.residual_unchecked(center) > MEMBERSHIP_TOL {
                    let w0 = weights[0];
                    out.optimum = if weights.iter().all(|&w| w == w0) {
                        let p = set.project_unchecked(center);
                        Some(Optimum {
                            f_star: w0 * p.sub(center).norm_sq() + shift,
                            argmin: ConvexSet::singleton(p),
                        })
                    } else {
                        None
                    };
                }
            }
            ObjectiveKind::Power { base, theta } => {
                let restricted = base.restricted_to(set)?;
                out.optimum = restricted.optimum.as_ref().map(|o| Optimum {
                    f_star: o.f_star.max(0.0).powf(0.5 / theta),
                    argmin: o.argmin.clone(),
                });
                out.kind = ObjectiveKind::Power {
                    base: Box::new(restricted),
                    theta: *theta,
                };
            }
            ObjectiveKind::EvenQuartic { .. } => {
                if set.residual_unchecked(&Point::zeros(self.dim())) > MEMBERSHIP_TOL {
                    out.optimum = None;
                }
            }
            ObjectiveKind::FlatBottom { center, radius } => {
                let ball = ConvexSet::ball(center.clone(), *radius)?;
                if set.contains_set(&ball) != Some(true) {
                    let p = set.project_unchecked(center);
                    let d = p.distance(center);
                    if d > *radius {
                        out.optimum = Some(Optimum {
                            f_star: (d - radius) * (d - radius),
                            argmin: ConvexSet::singleton(p),
                        });
                    } else {
                        out.optimum = None;
                    }
                    out.gheb = None;
                }
            }
            ObjectiveKind::Constant { value, .. } => {
                out.optimum = Some(Optimum {
                    f_star: *value,
                    argmin: set.clone(),
                });
            }
        }
        Ok(out)
    }
}

/// `g^(1 / (2 theta))` for a non-negative strongly convex `g`, certified with
/// `kappa = sqrt(m / 2)` where `m` is the strong convexity modulus of `g`.
pub fn make_power_objective(g: &Objective, theta: f64) -> Result<Objective> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::invalid(format!(
            "theta must lie in (0, 1/2], got {theta}"
        )));
    }
    if !g.is_nonnegative() {
        return Err(Error::invalid("power objective needs a non-negative base"));
    }
    let m = g
        .strong_convexity
        .ok_or_else(|| Error::invalid("power objective needs a strongly convex base"))?;
    let p = 0.5 / theta;
    Ok(Objective {
        optimum: g.optimum.as_ref().map(|o| Optimum {
            f_star: o.f_star.max(0.0).powf(p),
            argmin: o.argmin.clone(),
        }),
        gheb: Some(Gheb {
            kappa: (0.5 * m).sqrt(),
            theta,
        }),
        strong_convexity: (theta == 0.5).then_some(m),
        is_even: g.is_even,
        kind: ObjectiveKind::Power {
            base: Box::new(g.clone()),
            theta,
        },
    })
}

/// Largest componentwise error between the analytic gradient and central
/// differences with step `h`, relative to `max(1, |grad_i|)`.
pub fn grad_check(obj: &Objective, x: &Point, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let g = obj.grad(x)?;
    let mut worst = 0.0_f64;
    let mut probe = x.clone();
    for i in 0..x.dim() {
        probe[i] = x[i] + h;
        let up = obj.value(&probe);
        probe[i] = x[i] - h;
        let down = obj.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / g[i].abs().max(1.0));
    }
    Ok(worst)
}

fn optimum_for(obj: &Objective) -> Result<&Optimum> {
    obj.optimum.as_ref().ok_or_else(|| {
        Error::Unsupported(format!("{} objective has no optimum metadata", obj.name()))
    })
}

/// `min (f(x) - f*)^theta / dist(x, argmin)` over the samples lying off the
/// argmin set. Returns `+inf` when no sample qualifies.
pub fn gheb_check(obj: &Objective, set: &ConvexSet, samples: &[Point]) -> Result<f64> {
    let opt = optimum_for(obj)?;
    let gheb = obj.gheb.ok_or_else(|| {
        Error::Unsupported(format!(
            "{} objective has no error-bound certificate",
            obj.name()
        ))
    })?;
    let mut worst = f64::INFINITY;
    for x in samples {
        if !set.contains(x)? {
            return Err(Error::invalid(format!(
                "sample {x} is outside the constraint set"
            )));
        }
        let gap = obj.eval(x)? - opt.f_star;
        if gap < GAP_FLOOR {
            continue;
        }
        let dist = opt.argmin.distance(x)?;
        if dist > 0.0 {
            worst = worst.min(gap.powf(gheb.theta) / dist);
        }
    }
    Ok(worst)
}

/// `min phi'(f(x) - f*) * ||grad f(x)||` over samples off the argmin set.
pub fn lojasiewicz_check(obj: &Objective, phi: &Desingularizer, samples: &[Point]) -> Result<f64> {
    let opt = optimum_for(obj)?;
    let mut worst = f64::INFINITY;
    for x in samples {
        let gap = obj.eval(x)? - opt.f_star;
        if gap < GAP_FLOOR {
            continue;
        }
        worst = worst.min(phi.phi_prime(gap) * obj.gradient(x).norm());
    }
    Ok(worst)
}

/// Whether a certificate check value clears `kappa` with relative slack 1e-6.
pub fn gheb_passes(value: f64, kappa: f64) -> bool {
    value >= kappa * (1.0 - 1e-6)
}

pub fn lojasiewicz_passes(value: f64) -> bool {
    value >= 1.0 - 1e-6
}
