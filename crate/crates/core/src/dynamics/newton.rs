//! Distal-to-proximal Newton-Euler back-substitution in world axes.

use super::{DynamicsSolution, ExternalForce};
use crate::human::{
    forward_kinematics, DofVector, GeneralizedState, HumanModel, Link, LinkStates, Side, LINKS,
};
use crate::planar::{cross, Vec2};
use crate::scalar::Real;

/// Load transmitted across one joint: the force and torque the parent link exerts on the
/// child link (world axes, torque counterclockwise-positive).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointLoad<T: Real> {
    pub force: Vec2<T>,
    pub torque: T,
}

impl<T: Real> JointLoad<T> {
    pub fn fx(&self) -> T {
        self.force.x
    }

    pub fn fz(&self) -> T {
        self.force.y
    }
}

/// Loads at every joint. The pelvis entry is the virtual load the world would have to
/// supply to the floating base; it vanishes for any consistent dynamics solution.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLoads<T: Real> {
    /// Indexed by [`Link::index`]: the load at the link's proximal joint.
    pub loads: [JointLoad<T>; LINKS],
}

impl<T: Real> JointLoads<T> {
    pub fn at(&self, link: Link) -> &JointLoad<T> {
        &self.loads[link.index()]
    }

    pub fn pelvis(&self) -> &JointLoad<T> {
        self.at(Link::Pelvis)
    }

    pub fn ankle(&self, side: Side) -> &JointLoad<T> {
        self.at(Link::Foot(side))
    }

    pub fn knee(&self, side: Side) -> &JointLoad<T> {
        self.at(Link::Shank(side))
    }

    pub fn hip(&self, side: Side) -> &JointLoad<T> {
        self.at(Link::Thigh(side))
    }

    pub fn trunk(&self) -> &JointLoad<T> {
        self.at(Link::Trunk)
    }

    /// `[F_x,p, F_z,p, T_p, T_t, T_hR, T_kR, T_aR, T_hL, T_kL, T_aL]`, directly comparable
    /// with the RNEA output.
    pub fn generalized(&self) -> DofVector<T> {
        let mut out = DofVector::zeros();
        let p = self.pelvis();
        out[0] = p.force.x;
        out[1] = p.force.y;
        for link in Link::ALL {
            out[link.joint()] = self.at(link).torque;
        }
        out
    }
}

fn children(link: Link) -> &'static [Link] {
    const PELVIS: [Link; 3] = [Link::Trunk, Link::Thigh(Side::Right), Link::Thigh(Side::Left)];
    const THIGH_R: [Link; 1] = [Link::Shank(Side::Right)];
    const THIGH_L: [Link; 1] = [Link::Shank(Side::Left)];
    const SHANK_R: [Link; 1] = [Link::Foot(Side::Right)];
    const SHANK_L: [Link; 1] = [Link::Foot(Side::Left)];
    match link {
        Link::Pelvis => &PELVIS,
        Link::Thigh(Side::Right) => &THIGH_R,
        Link::Thigh(Side::Left) => &THIGH_L,
        Link::Shank(Side::Right) => &SHANK_R,
        Link::Shank(Side::Left) => &SHANK_L,
        Link::Trunk | Link::Foot(_) => &[],
    }
}

fn back_substitute<T: Real>(model: &HumanModel<T>, fk: &LinkStates<T>, ext: &[ExternalForce<T>]) -> JointLoads<T> {
    let g = Vec2::new(T::zero(), -model.gravity);
    let mut loads = [JointLoad::default(); LINKS];
    // Reverse of Link::ALL visits every child before its parent.
    for link in Link::ALL.iter().rev().copied() {
        let body = model.body(link);
        let s = fk.get(link);
        let c = s.com.pos;
        let j = s.origin.pos;
        let mut force = (s.com.acc - g) * body.mass;
        let mut torque = body.inertia_cog * s.angle.accel;
        for &child in children(link) {
            let l = loads[child.index()];
            let jc = fk.get(child).origin.pos;
            force += l.force;
            torque += l.torque + cross(&(jc - c), &l.force);
        }
        for e in ext.iter().filter(|e| e.link == link) {
            let at = s.point(&e.point).pos;
            force -= e.force;
            torque -= e.moment_about(&at, &c);
        }
        torque -= cross(&(j - c), &force);
        loads[link.index()] = JointLoad { force, torque };
    }
    JointLoads { loads }
}

/// Joint loads of the state under the external wrenches `ext` (no floor contact).
pub fn newton_generalized_forces<T: Real>(
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    ext: &[ExternalForce<T>],
) -> JointLoads<T> {
    back_substitute(model, &forward_kinematics(model, state), ext)
}

/// Joint loads for a solved state: the solution's floor wrenches and the interaction
/// wrenches `hri` are applied as external loads.
pub fn joint_loads<T: Real>(
    model: &HumanModel<T>,
    state: &GeneralizedState<T>,
    solution: &DynamicsSolution<T>,
    hri: &[ExternalForce<T>],
) -> JointLoads<T> {
    let mut ext: Vec<ExternalForce<T>> = hri.to_vec();
    ext.extend(solution.contacts.iter().map(|c| c.as_external()));
    newton_generalized_forces(model, state, &ext)
}
