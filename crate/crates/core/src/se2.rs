//! Group algebra of SE(2) in fixed coordinates and closed-form distance
//! approximations under a left-invariant metric.
//!
//! An element `(x, y, θ)` acts on the plane as `p ↦ R_θ p + (x, y)`. Angles are
//! kept in the half-open range `[-π, π)`; every constructor and every group
//! operation reduces its result into that range.
//!
//! ```
//! use se2ot::se2::{GroupElement, MetricParams};
//! use std::f64::consts::FRAC_PI_2;
//!
//! let g = GroupElement::new(1.0, 0.0, FRAC_PI_2);
//! let h = g.compose(&GroupElement::new(1.0, 0.0, 0.0));
//! assert!((h.x - 1.0).abs() < 1e-12 && (h.y - 1.0).abs() < 1e-12);
//!
//! let metric = MetricParams::new(1.0, 1.0, 1.0).unwrap();
//! let d = metric.rho_b(&GroupElement::new(0.0, 0.0, 0.5));
//! assert!((d - 0.5).abs() < 1e-15);
//! ```

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Reduce an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if t >= PI {
        t -= TAU;
    }
    t
}

/// Geodesic distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// An element of SE(2) in fixed coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub x: f64,
    pub y: f64,
    /// Rotation angle, always in `[-π, π)`.
    pub theta: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        GroupElement {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn translation(x: f64, y: f64) -> Self {
        GroupElement { x, y, theta: 0.0 }
    }

    pub fn rotation(theta: f64) -> Self {
        GroupElement::new(0.0, 0.0, theta)
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let (s, c) = self.theta.sin_cos();
        GroupElement::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> GroupElement {
        let (s, c) = self.theta.sin_cos();
        GroupElement::new(
            -(c * self.x + s * self.y),
            -(-s * self.x + c * self.y),
            -self.theta,
        )
    }

    /// Action on the plane: rotate by θ, then translate.
    pub fn act(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * p[0] - s * p[1] + self.x, s * p[0] + c * p[1] + self.y]
    }

    /// `self⁻¹ · g`, the element that carries `self` to `g`.
    pub fn relative_to(&self, g: &GroupElement) -> GroupElement {
        self.inverse().compose(g)
    }

    pub fn half_angle_coords(&self) -> HalfAngleCoords {
        let (s, c) = (0.5 * self.theta).sin_cos();
        HalfAngleCoords {
            b1: self.x * c + self.y * s,
            b2: -self.x * s + self.y * c,
            b3: self.theta,
        }
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        GroupElement::IDENTITY
    }
}

pub fn product(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    g1.compose(g2)
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    g.inverse()
}

pub fn act_on_point(g: &GroupElement, p: [f64; 2]) -> [f64; 2] {
    g.act(p)
}

/// `h⁻¹ g`; by left invariance `d(h, g) = d(e, h⁻¹ g)`.
pub fn relative_element(h: &GroupElement, g: &GroupElement) -> GroupElement {
    h.relative_to(g)
}

pub fn half_angle_coords(g: &GroupElement) -> HalfAngleCoords {
    g.half_angle_coords()
}

/// Coordinates of an element in the frame rotated by half its angle.
///
/// At `θ = 0` they coincide with `(x, y, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfAngleCoords {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

/// Weights of a diagonal left-invariant metric tensor in the frame
/// `(A₁, A₂, A₃)`: forward, lateral, angular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    w1: f64,
    w2: f64,
    w3: f64,
    zeta: f64,
}

impl MetricParams {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        for (name, w) in [("w1", w1), ("w2", w2), ("w3", w3)] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::bad_config(format!(
                    "metric weight {name} must be positive and finite, got {w}"
                )));
            }
        }
        Ok(MetricParams {
            w1,
            w2,
            w3,
            zeta: w1.max(w2) / w1.min(w2),
        })
    }

    pub fn isotropic() -> Self {
        MetricParams {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            zeta: 1.0,
        }
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w3(&self) -> f64 {
        self.w3
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.w1, self.w2, self.w3]
    }

    /// Spatial anisotropy `max(w₁, w₂) / min(w₁, w₂) ≥ 1`.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Half-angle distance approximation `ρ_b(g)` from the identity.
    pub fn rho_b(&self, g: &GroupElement) -> f64 {
        let b = g.half_angle_coords();
        self.norm([b.b1, b.b2, b.b3])
    }

    /// Logarithmic distance approximation `ρ_c(g) = ‖log g‖`.
    ///
    /// Undefined on the chart boundary `|θ| = π`; angles within `1e-9` of it
    /// are rejected.
    pub fn rho_c(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.norm(log_coords(g)?))
    }

    /// Norm of a Lie algebra vector under the metric at the identity.
    pub fn norm(&self, c: [f64; 3]) -> f64 {
        let (a, b, t) = (self.w1 * c[0], self.w2 * c[1], self.w3 * c[2]);
        (a * a + b * b + t * t).sqrt()
    }
}

pub fn rho_b(g: &GroupElement, m: &MetricParams) -> f64 {
    m.rho_b(g)
}

pub fn rho_c(g: &GroupElement, m: &MetricParams) -> Result<f64> {
    m.rho_c(g)
}

/// Exponential coordinates `log g` in the basis `(A₁, A₂, A₃)`.
///
/// These are the half-angle coordinates with the spatial part stretched by
/// `(θ/2) / sin(θ/2)`.
pub fn log_coords(g: &GroupElement) -> Result<[f64; 3]> {
    if PI - g.theta.abs() < 1e-9 {
        return Err(Error::Domain { theta: g.theta });
    }
    let b = g.half_angle_coords();
    let half = 0.5 * g.theta;
    let stretch = if half.abs() < 1e-8 {
        1.0 + half * half / 6.0
    } else {
        half / half.sin()
    };
    Ok([stretch * b.b1, stretch * b.b2, b.b3])
}
