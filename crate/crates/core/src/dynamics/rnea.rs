//! Recursive Newton-Euler inverse dynamics in body coordinates.
//!
//! The floating base is modelled as two massless prismatic sliders (world X, then world
//! Y) carrying the pelvis on a revolute joint. The sagittal plane is embedded as the 3-D
//! X–Y plane with rotations about Z, so each generalized coordinate maps to one body:
//! body `i` is driven by `q[i]`.

use nalgebra::{Matrix3, Vector3};

use super::ExternalForce;
use crate::human::{DofMatrix, DofVector, GeneralizedCoordinates, GeneralizedState, HumanModel, Link, DOF};
use crate::scalar::Real;
use crate::spatial::{PluckerTransform, SpatialForce, SpatialInertia, SpatialMotion};

#[derive(Debug, Clone, Copy)]
enum JointKind {
    SlideX,
    SlideY,
    Revolute,
}

struct Body<T: Real> {
    parent: Option<usize>,
    kind: JointKind,
    /// Joint location in the parent's axes.
    offset: Vector3<T>,
    inertia: SpatialInertia<T>,
}

fn lift<T: Real>(v: &crate::planar::Vec2<T>) -> Vector3<T> {
    Vector3::new(v.x, v.y, T::zero())
}

fn bodies<T: Real>(model: &HumanModel<T>) -> Vec<Body<T>> {
    let massless = SpatialInertia::new(T::zero(), Vector3::zeros(), Matrix3::zeros());
    let mut out = vec![
        Body { parent: None, kind: JointKind::SlideX, offset: Vector3::zeros(), inertia: massless },
        Body { parent: Some(0), kind: JointKind::SlideY, offset: Vector3::zeros(), inertia: massless },
    ];
    for link in Link::ALL {
        let b = model.body(link);
        let com = model.com_local(link);
        out.push(Body {
            parent: Some(link.parent().map_or(1, |p| p.joint())),
            kind: JointKind::Revolute,
            offset: lift(&model.joint_offset(link)),
            inertia: SpatialInertia::planar(b.mass, com.x, com.y, b.inertia_cog),
        });
    }
    out
}

impl JointKind {
    fn subspace<T: Real>(self) -> SpatialMotion<T> {
        let (z, o) = (T::zero(), T::one());
        match self {
            JointKind::SlideX => SpatialMotion::new(Vector3::zeros(), Vector3::new(o, z, z)),
            JointKind::SlideY => SpatialMotion::new(Vector3::zeros(), Vector3::new(z, o, z)),
            JointKind::Revolute => SpatialMotion::new(Vector3::new(z, z, o), Vector3::zeros()),
        }
    }

    fn transform<T: Real>(self, q: T) -> PluckerTransform<T> {
        let z = T::zero();
        match self {
            JointKind::SlideX => PluckerTransform::translation(Vector3::new(q, z, z)),
            JointKind::SlideY => PluckerTransform::translation(Vector3::new(z, q, z)),
            JointKind::Revolute => PluckerTransform::rot_z(q),
        }
    }
}

/// Core recursion. `gravity` is the magnitude of the downward gravitational acceleration.
fn rnea_impl<T: Real>(
    model: &HumanModel<T>,
    q: &DofVector<T>,
    qdot: &DofVector<T>,
    qddot: &DofVector<T>,
    gravity: T,
    ext: &[ExternalForce<T>],
) -> DofVector<T> {
    let bodies = bodies(model);
    let mut xup: Vec<PluckerTransform<T>> = Vec::with_capacity(DOF);
    let mut x_world: Vec<PluckerTransform<T>> = Vec::with_capacity(DOF);
    let mut v: Vec<SpatialMotion<T>> = Vec::with_capacity(DOF);
    let mut a: Vec<SpatialMotion<T>> = Vec::with_capacity(DOF);
    let mut forces: Vec<SpatialForce<T>> = Vec::with_capacity(DOF);
    // Uniform upward acceleration of the base is equivalent to gravity.
    let a_base = SpatialMotion::new(Vector3::zeros(), Vector3::new(T::zero(), gravity, T::zero()));
    for (i, body) in bodies.iter().enumerate() {
        let s = body.kind.subspace();
        let x = body.kind.transform(q[i]).compose(&PluckerTransform::translation(body.offset));
        let (v_parent, a_parent, x_parent_world) = match body.parent {
            Some(p) => (v[p], a[p], x_world[p]),
            None => (SpatialMotion::zero(), a_base, PluckerTransform::identity()),
        };
        let vj = s * qdot[i];
        let vi = x.apply_motion(&v_parent) + vj;
        let ai = x.apply_motion(&a_parent) + s * qddot[i] + vi.cross_motion(&vj);
        forces.push(body.inertia.apply(&ai) + vi.cross_force(&body.inertia.apply(&vi)));
        xup.push(x);
        x_world.push(x.compose(&x_parent_world));
        v.push(vi);
        a.push(ai);
    }

    for e in ext {
        let i = e.link.joint();
        let xw = &x_world[i];
        // body point in world coordinates: r + Eᵀ p
        let p_world = xw.translation + xw.rotation.transpose() * lift(&e.point);
        let force = lift(&e.force);
        let f_world = SpatialForce::new(Vector3::new(T::zero(), T::zero(), e.moment) + p_world.cross(&force), force);
        forces[i] = forces[i] - xw.apply_force(&f_world);
    }

    let mut tau = DofVector::zeros();
    for i in (0..DOF).rev() {
        tau[i] = bodies[i].kind.subspace::<T>().dot(&forces[i]);
        if let Some(p) = bodies[i].parent {
            let back = xup[i].inverse_apply_force(&forces[i]);
            forces[p] += back;
        }
    }
    tau
}

/// Generalized forces `M(q) q̈ + C(q, q̇) − Σ Jᵢᵀ Fᵢ` required to realise the state under
/// the given external wrenches.
pub fn rnea<T: Real>(model: &HumanModel<T>, state: &GeneralizedState<T>, ext: &[ExternalForce<T>]) -> DofVector<T> {
    rnea_impl(model, &state.q.0, &state.qdot, &state.qddot, model.gravity, ext)
}

/// Joint-space inertia matrix, one RNEA column per unit acceleration.
pub fn mass_matrix<T: Real>(model: &HumanModel<T>, q: &GeneralizedCoordinates<T>) -> DofMatrix<T> {
    let zero = DofVector::zeros();
    let mut m = DofMatrix::zeros();
    for j in 0..DOF {
        let mut e = DofVector::zeros();
        e[j] = T::one();
        m.set_column(j, &rnea_impl(model, &q.0, &zero, &e, T::zero(), &[]));
    }
    m
}

/// Velocity-product and gravity terms, `rnea` with `q̈ = 0`.
pub fn bias_vector<T: Real>(model: &HumanModel<T>, q: &GeneralizedCoordinates<T>, qdot: &DofVector<T>) -> DofVector<T> {
    rnea_impl(model, &q.0, qdot, &DofVector::zeros(), model.gravity, &[])
}

pub fn gravity_vector<T: Real>(model: &HumanModel<T>, q: &GeneralizedCoordinates<T>) -> DofVector<T> {
    bias_vector(model, q, &DofVector::zeros())
}
