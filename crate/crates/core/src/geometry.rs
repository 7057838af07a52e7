//! Closed convex sets with exact Euclidean projections.
//!
//! Every set is validated when it is built, so [`ConvexSet::project`] is total
//! on inputs of matching dimension. Membership is judged on constraint
//! residuals with the absolute tolerance [`MEMBERSHIP_TOL`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::point::Point;

/// Absolute tolerance on constraint residuals for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// The catalog of supported sets.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    WholeSpace {
        dim: usize,
    },
    Box {
        lo: Point,
        hi: Point,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    /// `{x : <normal, x> <= offset}`
    HalfSpace {
        normal: Point,
        offset: f64,
    },
    /// `{x : x >= 0, sum(x) = scale}`
    Simplex {
        dim: usize,
        scale: f64,
    },
    /// `{x : <normal, x> = offset}`
    AffineHyperplane {
        normal: Point,
        offset: f64,
    },
}

/// A non-empty closed convex subset of R^n.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSet {
    shape: Shape,
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("whole space needs dim >= 1"));
        }
        Ok(ConvexSet {
            shape: Shape::WholeSpace { dim },
        })
    }

    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        Error::check_dim(lo.dim(), hi.dim())?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::invalid("box requires lo <= hi componentwise"));
        }
        Ok(ConvexSet {
            shape: Shape::Box { lo, hi },
        })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        Ok(ConvexSet {
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn half_space(normal: Point, offset: f64) -> Result<Self> {
        check_normal(&normal, offset)?;
        Ok(ConvexSet {
            shape: Shape::HalfSpace { normal, offset },
        })
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("simplex needs dim >= 1"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!(
                "simplex scale must be > 0, got {scale}"
            )));
        }
        Ok(ConvexSet {
            shape: Shape::Simplex { dim, scale },
        })
    }

    pub fn hyperplane(normal: Point, offset: f64) -> Result<Self> {
        check_normal(&normal, offset)?;
        Ok(ConvexSet {
            shape: Shape::AffineHyperplane { normal, offset },
        })
    }

    /// The singleton `{p}`, encoded as a degenerate box.
    pub fn singleton(p: Point) -> Self {
        ConvexSet {
            shape: Shape::Box {
                lo: p.clone(),
                hi: p,
            },
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::WholeSpace { dim } | Shape::Simplex { dim, .. } => *dim,
            Shape::Box { lo, .. } => lo.dim(),
            Shape::Ball { center, .. } => center.dim(),
            Shape::HalfSpace { normal, .. } | Shape::AffineHyperplane { normal, .. } => {
                normal.dim()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.shape {
            Shape::WholeSpace { .. } => "whole",
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::HalfSpace { .. } => "halfspace",
            Shape::Simplex { .. } => "simplex",
            Shape::AffineHyperplane { .. } => "hyperplane",
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        Error::check_dim(self.dim(), x.dim())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Point) -> Point {
        match &self.shape {
            Shape::WholeSpace { .. } => x.clone(),
            Shape::Box { lo, hi } => Point::from_vec(
                x.iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .map(|(&v, (&l, &h))| v.clamp(l, h))
                    .collect(),
            ),
            Shape::Ball { center, radius } => {
                let offset = x.sub(center);
                let r = offset.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / r, &offset)
                }
            }
            Shape::HalfSpace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / normal.norm_sq(), normal)
                }
            }
            Shape::AffineHyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                x.axpy(-excess / normal.norm_sq(), normal)
            }
            Shape::Simplex { scale, .. } => project_simplex(x, *scale),
        }
    }

    /// Largest violated constraint residual; zero inside the set.
    pub fn residual(&self, x: &Point) -> Result<f64> {
        Error::check_dim(self.dim(), x.dim())?;
        Ok(self.residual_unchecked(x))
    }

    pub(crate) fn residual_unchecked(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::WholeSpace { .. } => 0.0,
            Shape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .fold(0.0_f64, |m, (&v, (&l, &h))| m.max(l - v).max(v - h)),
            Shape::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
            Shape::HalfSpace { normal, offset } => {
                ((normal.dot(x) - offset) / normal.norm()).max(0.0)
            }
            Shape::AffineHyperplane { normal, offset } => {
                (normal.dot(x) - offset).abs() / normal.norm()
            }
            Shape::Simplex { scale, .. } => {
                let neg = x.iter().fold(0.0_f64, |m, &v| m.max(-v));
                let sum: f64 = x.iter().sum();
                neg.max((sum - scale).abs())
            }
        }
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.residual(x)? <= MEMBERSHIP_TOL)
    }

    /// `||x - P(x)||`
    pub fn distance(&self, x: &Point) -> Result<f64> {
        let p = self.project(x)?;
        Ok(x.distance(&p))
    }

    /// Whether `x in Q` implies `-x in Q`.
    pub fn is_symmetric(&self) -> bool {
        match &self.shape {
            Shape::WholeSpace { .. } => true,
            Shape::Ball { center, .. } => center.iter().all(|&c| c == 0.0),
            Shape::Box { lo, hi } => lo.iter().zip(hi.iter()).all(|(&l, &h)| l == -h),
            Shape::AffineHyperplane { offset, .. } => *offset == 0.0,
            Shape::HalfSpace { .. } | Shape::Simplex { .. } => false,
        }
    }

    /// Whether the set has a non-empty interior in R^n.
    pub fn has_interior(&self) -> bool {
        match &self.shape {
            Shape::WholeSpace { .. } | Shape::Ball { .. } | Shape::HalfSpace { .. } => true,
            Shape::Box { lo, hi } => lo.iter().zip(hi.iter()).all(|(l, h)| l < h),
            Shape::Simplex { .. } | Shape::AffineHyperplane { .. } => false,
        }
    }

    /// Whether every point of `other` lies in `self`. Only decided for the
    /// pairs the objective catalog needs; `None` means unknown.
    pub fn contains_set(&self, other: &ConvexSet) -> Option<bool> {
        match (&self.shape, &other.shape) {
            (Shape::WholeSpace { .. }, _) => Some(true),
            (Shape::Box { lo, hi }, Shape::Ball { center, radius }) => Some(
                center
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(&c, (&l, &h))| c - radius >= l && c + radius <= h),
            ),
            (
                Shape::Ball {
                    center: c1,
                    radius: r1,
                },
                Shape::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => Some(c1.distance(c2) + r2 <= *r1),
            (_, Shape::Box { lo, hi }) if lo == hi => {
                Some(self.residual_unchecked(lo) <= MEMBERSHIP_TOL)
            }
            _ => None,
        }
    }

    /// A fixed point of the set.
    pub fn reference_point(&self) -> Point {
        match &self.shape {
            Shape::WholeSpace { dim } => Point::zeros(*dim),
            Shape::Box { lo, hi } => lo.add(hi).scale(0.5),
            Shape::Ball { center, .. } => center.clone(),
            Shape::Simplex { dim, scale } => Point::from_vec(vec![scale / *dim as f64; *dim]),
            Shape::HalfSpace { .. } | Shape::AffineHyperplane { .. } => {
                self.project_unchecked(&Point::zeros(self.dim()))
            }
        }
    }

    /// Draws a point of the set: a uniform perturbation of `anchor` of
    /// half-width `spread` in each coordinate, projected back onto the set.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        anchor: &Point,
        spread: f64,
    ) -> Result<Point> {
        Error::check_dim(self.dim(), anchor.dim())?;
        let raw = Point::from_vec(
            anchor
                .iter()
                .map(|&a| a + spread * rng.random_range(-1.0..=1.0))
                .collect(),
        );
        Ok(self.project_unchecked(&raw))
    }
}

fn check_normal(normal: &Point, offset: f64) -> Result<()> {
    if normal.norm() == 0.0 {
        return Err(Error::invalid("normal vector must be non-zero"));
    }
    if !offset.is_finite() {
        return Err(Error::invalid("offset must be finite"));
    }
    Ok(())
}

/// Sort-then-threshold projection onto `{x >= 0, sum(x) = scale}`.
fn project_simplex(x: &Point, scale: f64) -> Point {
    let mut sorted = x.coords().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - scale) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    x.map(|v| (v - tau).max(0.0))
}

/// `max_w <x - p, w - p>` over the probes. For the true projection `p` of
/// `x` this is non-positive for every probe in the set.
pub fn variational_gap(set: &ConvexSet, x: &Point, p: &Point, probes: &[Point]) -> Result<f64> {
    Error::check_dim(set.dim(), x.dim())?;
    Error::check_dim(set.dim(), p.dim())?;
    let normal = x.sub(p);
    let mut gap = f64::NEG_INFINITY;
    for w in probes {
        if !set.contains(w)? {
            return Err(Error::invalid(format!("probe {w} is outside the set")));
        }
        gap = gap.max(normal.dot(&w.sub(p)));
    }
    Ok(gap)
}
