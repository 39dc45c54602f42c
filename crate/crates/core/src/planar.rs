//! Sagittal-plane helpers and the two-link chain shared by the exoskeleton leg and the
//! gait generator.
//!
//! Coordinates are `(x, z)`: `x` forward, `z` up. Angles are counterclockwise-positive.
//! Link directions are measured from the downward vertical, so a link at angle `θ`
//! points along `(sin θ, −cos θ)`.

use nalgebra::{Matrix2, Vector2};

use crate::scalar::Real;

pub type Vec2<T> = Vector2<T>;

/// Rotates `v` counterclockwise by `angle`.
#[inline]
pub fn rotate<T: Real>(angle: T, v: &Vec2<T>) -> Vec2<T> {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Scalar planar cross product `a × b` (counterclockwise moment of `b` applied at `a`).
#[inline]
pub fn cross<T: Real>(a: &Vec2<T>, b: &Vec2<T>) -> T {
    a.x * b.y - a.y * b.x
}

/// `ω × r` for an angular rate about the plane normal.
#[inline]
pub fn omega_cross<T: Real>(omega: T, r: &Vec2<T>) -> Vec2<T> {
    Vec2::new(-omega * r.y, omega * r.x)
}

/// Unit vector of a link at angle `theta` from the downward vertical.
#[inline]
pub fn down_dir<T: Real>(theta: T) -> Vec2<T> {
    let (s, c) = theta.sin_cos();
    Vec2::new(s, -c)
}

/// Position, velocity and acceleration of a planar point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMotion<T: Real> {
    pub pos: Vec2<T>,
    pub vel: Vec2<T>,
    pub acc: Vec2<T>,
}

impl<T: Real> PointMotion<T> {
    pub fn at_rest(pos: Vec2<T>) -> Self {
        Self { pos, vel: Vec2::zeros(), acc: Vec2::zeros() }
    }
}

/// Angle, rate and angular acceleration of a planar body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AngleMotion<T: Real> {
    pub angle: T,
    pub rate: T,
    pub accel: T,
}

/// Motion of a point rigidly attached to a body whose reference point moves with `origin`
/// and whose orientation moves with `orientation`; `local` is the offset in body axes.
pub fn rigid_point<T: Real>(
    origin: &PointMotion<T>,
    orientation: &AngleMotion<T>,
    local: &Vec2<T>,
) -> PointMotion<T> {
    let r = rotate(orientation.angle, local);
    let w = orientation.rate;
    PointMotion {
        pos: origin.pos + r,
        vel: origin.vel + omega_cross(w, &r),
        acc: origin.acc + omega_cross(orientation.accel, &r) - r * (w * w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("target at distance {distance} outside reachable annulus [{min}, {max}]")]
    Unreachable { distance: f64, min: f64, max: f64 },
    #[error("chain singular: |sin θ₂| = {sin_theta2:e}")]
    Singular { sin_theta2: f64 },
}

/// Inverse kinematics of a two-link chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainIk<T: Real> {
    /// Direction of the base→end line from the downward vertical.
    pub theta_a: T,
    /// Angle between the upper link and the base→end line.
    pub theta_b: T,
    /// Upper link angle from the downward vertical, `θ_a + θ_b`.
    pub theta1: T,
    /// Lower link angle relative to the upper link.
    pub theta2: T,
    /// Base→end distance.
    pub distance: T,
    /// True when the target lies within the reach margin of the annulus boundary.
    pub near_singular: bool,
}

/// Planar two-link chain. The upper link hangs from the base at `θ₁`, the lower link
/// continues at `θ₁ + θ₂`; the middle joint bends to the forward (`+x`) side of the
/// base→end line, giving `θ₂ ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLinkChain<T: Real> {
    pub upper: T,
    pub lower: T,
}

impl<T: Real> TwoLinkChain<T> {
    pub fn new(upper: T, lower: T) -> Self {
        Self { upper, lower }
    }

    /// `end − base` for the given joint angles.
    pub fn relative_end(&self, theta1: T, theta2: T) -> Vec2<T> {
        down_dir(theta1) * self.upper + down_dir(theta1 + theta2) * self.lower
    }

    pub fn middle_joint(&self, base: &Vec2<T>, theta1: T) -> Vec2<T> {
        base + down_dir(theta1) * self.upper
    }

    /// Reach interval `[|L − r| + ε, L + r − ε]`.
    pub fn reach_limits(&self, margin: T) -> (T, T) {
        ((self.upper - self.lower).abs() + margin, self.upper + self.lower - margin)
    }

    pub fn inverse(&self, base: &Vec2<T>, end: &Vec2<T>, margin: T) -> Result<ChainIk<T>, ChainError> {
        let d = end - base;
        let p = d.x.hypot(d.y);
        let (l, r) = (self.upper, self.lower);
        let min = (l - r).abs();
        let max = l + r;
        if p > max || p < min || !p.is_finite() {
            return Err(ChainError::Unreachable {
                distance: p.as_f64(),
                min: min.as_f64(),
                max: max.as_f64(),
            });
        }
        let near_singular = p > max - margin || p < min + margin;
        let one = T::one();
        let clamp = |v: T| v.max(-one).min(one);
        // Direction of the base→end line from the downward vertical.
        let theta_a = d.x.atan2(-d.y);
        let theta_b = if p > T::zero() {
            clamp((l * l + p * p - r * r) / (T::lit(2.0) * l * p)).acos()
        } else {
            T::zero()
        };
        let theta2 = -clamp((p * p - l * l - r * r) / (T::lit(2.0) * l * r)).acos();
        Ok(ChainIk {
            theta_a,
            theta_b,
            theta1: theta_a + theta_b,
            theta2,
            distance: p,
            near_singular,
        })
    }

    /// `∂(end − base)/∂(θ₁, θ₂)`.
    pub fn jacobian(&self, theta1: T, theta2: T) -> Matrix2<T> {
        let (s1, c1) = theta1.sin_cos();
        let (s12, c12) = (theta1 + theta2).sin_cos();
        let (l, r) = (self.upper, self.lower);
        Matrix2::new(l * c1 + r * c12, r * c12, l * s1 + r * s12, r * s12)
    }

    /// `J̇ θ̇`, the velocity-product term of the end acceleration.
    pub fn jacobian_dot_rate(&self, theta1: T, theta2: T, rate1: T, rate2: T) -> Vec2<T> {
        centripetal(theta1, rate1, self.upper) + centripetal(theta1 + theta2, rate1 + rate2, self.lower)
    }

    /// Joint rates and accelerations reproducing the relative end velocity and
    /// acceleration. Fails when `|sin θ₂| ≤ sin_eps`.
    pub fn rates(
        &self,
        theta1: T,
        theta2: T,
        rel_vel: &Vec2<T>,
        rel_acc: &Vec2<T>,
        sin_eps: T,
    ) -> Result<(Vec2<T>, Vec2<T>), ChainError> {
        let s2 = theta2.sin();
        if !(s2.abs() > sin_eps) {
            return Err(ChainError::Singular { sin_theta2: s2.as_f64() });
        }
        let j = self.jacobian(theta1, theta2);
        let inv = inverse2(&j);
        let rate = inv * rel_vel;
        let bias = self.jacobian_dot_rate(theta1, theta2, rate.x, rate.y);
        let accel = inv * (rel_acc - bias);
        Ok((rate, accel))
    }
}

/// Acceleration of a point at distance `len` along a link at `theta` rotating at
/// `rate` with zero angular acceleration: `−len θ̇² (sin θ, −cos θ)`.
#[inline]
fn centripetal<T: Real>(theta: T, rate: T, len: T) -> Vec2<T> {
    down_dir(theta) * (-len * rate * rate)
}

pub fn inverse2<T: Real>(m: &Matrix2<T>) -> Matrix2<T> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
}
