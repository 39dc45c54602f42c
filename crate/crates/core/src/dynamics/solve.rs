//! Support-phase inverse dynamics: actuated torques plus floor wrenches.
//!
//! The floating-base rows of the equations of motion carry no actuation, so the floor
//! wrench must balance them. In single support the seven torques and the three wrench
//! components are uniquely determined; in double support the thirteen unknowns are
//! resolved by the minimum-norm solution.

use nalgebra::{SMatrix, SVector};

use super::{rnea, DynamicsError, ExternalForce};
use crate::human::{
    detect_contact, point_jacobian, ContactPoint, GeneralizedState, HumanModel, Link, Phase, Side, DOF,
};
use crate::linalg::{lu_solve_refined, min_norm_solve, norm};
use crate::planar::Vec2;
use crate::scalar::Real;

pub const ACTUATED: usize = 7;

/// Floor wrench on one foot: force at the contact point plus a free moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactWrench<T: Real> {
    pub side: Side,
    /// World contact point.
    pub point: Vec2<T>,
    /// Contact point in foot axes.
    pub local: Vec2<T>,
    pub force: Vec2<T>,
    pub moment: T,
}

impl<T: Real> ContactWrench<T> {
    pub fn as_external(&self) -> ExternalForce<T> {
        ExternalForce::new(Link::Foot(self.side), self.local, self.force, self.moment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSolution<T: Real> {
    pub phase: Phase,
    /// `[τ_T, τ_hR, τ_kR, τ_aR, τ_hL, τ_kL, τ_aL]`.
    pub tau: SVector<T, ACTUATED>,
    /// One wrench in single support; right then left in double support.
    pub contacts: Vec<ContactWrench<T>>,
    /// Norm of the equation-of-motion residual.
    pub residual: T,
    /// Norm of the right-hand side the residual is measured against.
    pub rhs_norm: T,
}

impl<T: Real> DynamicsSolution<T> {
    pub fn contact(&self, side: Side) -> Option<&ContactWrench<T>> {
        self.contacts.iter().find(|c| c.side == side)
    }

    pub fn total_floor_force(&self) -> Vec2<T> {
        self.contacts.iter().fold(Vec2::zeros(), |acc, c| acc + c.force)
    }

    pub fn knee_torque(&self, side: Side) -> T {
        self.tau[2 + 3 * side.index()]
    }

    /// Full unknown vector `[τ; F_contact…]`.
    pub fn unknowns(&self) -> Vec<T> {
        let mut out: Vec<T> = self.tau.iter().copied().collect();
        for c in &self.contacts {
            out.extend([c.force.x, c.force.y, c.moment]);
        }
        out
    }
}

/// Columns mapping the actuated torques into generalized forces.
fn actuation<T: Real, const N: usize>(a: &mut SMatrix<T, DOF, N>) {
    for k in 0..ACTUATED {
        a[(k + 3, k)] = T::one();
    }
}

fn contact_columns<T: Real, const N: usize>(
    a: &mut SMatrix<T, DOF, N>,
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    contact: &ContactPoint<T>,
    first: usize,
) {
    let j = point_jacobian(model, &state.q, Link::Foot(contact.side), &contact.local);
    a.fixed_view_mut::<DOF, 3>(0, first).copy_from(&j.transpose());
}

fn wrench<T: Real>(c: &ContactPoint<T>, x: &[T]) -> ContactWrench<T> {
    ContactWrench {
        side: c.side,
        point: c.point,
        local: c.local,
        force: Vec2::new(x[0], x[1]),
        moment: x[2],
    }
}

fn check_state<T: Real>(state: &GeneralizedState<T>, hri: &[ExternalForce<T>]) -> Result<(), DynamicsError> {
    if !state.is_finite() {
        return Err(DynamicsError::NonFinite { what: "state" });
    }
    if !hri.iter().all(|e| e.is_finite()) {
        return Err(DynamicsError::NonFinite { what: "interaction forces" });
    }
    Ok(())
}

/// Single-support solve of `[D  J_cᵀ] [τ; F_c] = rnea(state, hri)`.
pub fn solve_ssp<T: Real>(
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    hri: &[ExternalForce<T>],
) -> Result<DynamicsSolution<T>, DynamicsError> {
    check_state(state, hri)?;
    let contact = detect_contact(model, &state.q);
    if !contact.phase.is_ssp() {
        return Err(DynamicsError::PhaseMismatch { expected: "single support", found: contact.phase });
    }
    let c = &contact.contacts[0];
    let b = rnea(model, state, hri);
    let mut a = SMatrix::<T, DOF, DOF>::zeros();
    actuation(&mut a);
    contact_columns(&mut a, model, state, c, ACTUATED);
    let x = lu_solve_refined(&a, &b).map_err(|e| DynamicsError::Singular { phase: contact.phase, column: e.column })?;
    let residual = norm(&(a * x - b));
    Ok(DynamicsSolution {
        phase: contact.phase,
        tau: x.fixed_rows::<ACTUATED>(0).into_owned(),
        contacts: vec![wrench(c, &x.as_slice()[ACTUATED..])],
        residual,
        rhs_norm: norm(&b),
    })
}

/// Double-support minimum-norm solve of `[D  J_Rᵀ  J_Lᵀ] [τ; F_R; F_L] = rnea(state, hri)`.
pub fn solve_dsp<T: Real>(
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    hri: &[ExternalForce<T>],
) -> Result<DynamicsSolution<T>, DynamicsError> {
    check_state(state, hri)?;
    let contact = detect_contact(model, &state.q);
    if contact.phase != Phase::Dsp {
        return Err(DynamicsError::PhaseMismatch { expected: "double support", found: contact.phase });
    }
    let b = rnea(model, state, hri);
    let mut a = SMatrix::<T, DOF, 13>::zeros();
    actuation(&mut a);
    contact_columns(&mut a, model, state, &contact.contacts[0], ACTUATED);
    contact_columns(&mut a, model, state, &contact.contacts[1], ACTUATED + 3);
    let x = min_norm_solve(&a, &b).map_err(|e| DynamicsError::Singular { phase: Phase::Dsp, column: e.column })?;
    let residual = norm(&(a * x - b));
    let xs = x.as_slice();
    Ok(DynamicsSolution {
        phase: Phase::Dsp,
        tau: SVector::<T, ACTUATED>::from_column_slice(&xs[..ACTUATED]),
        contacts: vec![
            wrench(&contact.contacts[0], &xs[ACTUATED..ACTUATED + 3]),
            wrench(&contact.contacts[1], &xs[ACTUATED + 3..]),
        ],
        residual,
        rhs_norm: norm(&b),
    })
}

/// Dispatches on the detected support phase.
pub fn solve_support<T: Real>(
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    hri: &[ExternalForce<T>],
) -> Result<DynamicsSolution<T>, DynamicsError> {
    match detect_contact(model, &state.q).phase {
        Phase::Dsp => solve_dsp(model, state, hri),
        _ => solve_ssp(model, state, hri),
    }
}
