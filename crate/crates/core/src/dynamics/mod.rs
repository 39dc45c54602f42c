//! Whole-body inverse dynamics of the human model: a spatial RNEA, support-phase solves for
//! joint torques and floor wrenches, and a world-frame Newton back-substitution used to
//! cross-check the RNEA.

mod newton;
mod rnea;
mod solve;
mod verify;

pub use newton::{joint_loads, newton_generalized_forces, JointLoad, JointLoads};
pub use rnea::{bias_vector, gravity_vector, mass_matrix, rnea};
pub use solve::{solve_dsp, solve_ssp, solve_support, ContactWrench, DynamicsSolution, ACTUATED};
pub use verify::{verify_newton_vs_rnea, VerifyReport, VerifyRow};

use crate::human::{point_jacobian, GeneralizedCoordinates, HumanModel, Link, Phase, PointJacobian, DOF};
use crate::planar::{cross, Vec2};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("support system is singular for phase {phase:?} (pivot column {column})")]
    Singular { phase: Phase, column: usize },
    #[error("expected {expected}, but the configuration is in {found:?}")]
    PhaseMismatch { expected: &'static str, found: Phase },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
}

/// A planar wrench applied to one link: force at a point fixed in the link (link axes,
/// origin at the link's proximal joint), plus a free moment. Force and moment are in
/// world axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalForce<T: Real> {
    pub link: Link,
    pub point: Vec2<T>,
    pub force: Vec2<T>,
    pub moment: T,
}

impl<T: Real> ExternalForce<T> {
    pub fn new(link: Link, point: Vec2<T>, force: Vec2<T>, moment: T) -> Self {
        Self { link, point, force, moment }
    }

    pub fn is_finite(&self) -> bool {
        self.point.iter().chain(self.force.iter()).all(|v| v.is_finite()) && self.moment.is_finite()
    }

    /// Generalized force `Jᵀ (F_x, F_z, M)`.
    pub fn generalized(&self, model: &HumanModel<T>, q: &GeneralizedCoordinates<T>) -> nalgebra::SVector<T, DOF> {
        let j: PointJacobian<T> = point_jacobian(model, q, self.link, &self.point);
        j.transpose() * nalgebra::Vector3::new(self.force.x, self.force.y, self.moment)
    }

    /// Moment about `about` of this wrench applied at world point `at`.
    pub(crate) fn moment_about(&self, at: &Vec2<T>, about: &Vec2<T>) -> T {
        cross(&(at - about), &self.force) + self.moment
    }
}
