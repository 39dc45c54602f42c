//! Eight-link, ten-DoF sagittal human model.
//!
//! The pelvis is a floating base at `(x_p, z_p)` with pitch `q_p`. The trunk hangs above the
//! pelvis, and each leg (thigh, shank, foot) hangs from a hip located `hip_offset` below
//! the pelvis center along the pelvis axis; both hips project onto the same sagittal point.
//! Absolute link angles are sums along the tree: thigh `q_p + q_h`, shank `q_p + q_h + q_k`,
//! foot `q_p + q_h + q_k + q_a`. At the zero configuration the legs hang vertically, the
//! trunk stands vertically and the feet are flat.

use nalgebra::{SMatrix, SVector};

use crate::planar::{rigid_point, AngleMotion, PointMotion, Vec2};
use crate::scalar::Real;

pub const DOF: usize = 10;
pub const JOINTS: usize = 7;
pub const LINKS: usize = 8;

pub const X_P: usize = 0;
pub const Z_P: usize = 1;
pub const Q_P: usize = 2;
pub const Q_T: usize = 3;
pub const Q_HR: usize = 4;
pub const Q_KR: usize = 5;
pub const Q_AR: usize = 6;
pub const Q_HL: usize = 7;
pub const Q_KL: usize = 8;
pub const Q_AL: usize = 9;

/// Column names of the generalized coordinates, in storage order.
pub const COORDINATE_NAMES: [&str; DOF] =
    ["x_p", "z_p", "q_p", "q_t", "q_hR", "q_kR", "q_aR", "q_hL", "q_kL", "q_aL"];

pub type DofVector<T> = SVector<T, DOF>;
pub type DofMatrix<T> = SMatrix<T, DOF, DOF>;
pub type PointJacobian<T> = SMatrix<T, 3, DOF>;
pub type CogJacobian<T> = SMatrix<T, 2, DOF>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Right, Side::Left];

    pub fn index(self) -> usize {
        match self {
            Side::Right => 0,
            Side::Left => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Side::Right => "R",
            Side::Left => "L",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Pelvis,
    Trunk,
    Thigh(Side),
    Shank(Side),
    Foot(Side),
}

impl Link {
    pub const ALL: [Link; LINKS] = [
        Link::Pelvis,
        Link::Trunk,
        Link::Thigh(Side::Right),
        Link::Shank(Side::Right),
        Link::Foot(Side::Right),
        Link::Thigh(Side::Left),
        Link::Shank(Side::Left),
        Link::Foot(Side::Left),
    ];

    /// Storage index in [`Link::ALL`]; the link's joint coordinate is `index() + 2`.
    pub fn index(self) -> usize {
        match self {
            Link::Pelvis => 0,
            Link::Trunk => 1,
            Link::Thigh(s) => 2 + 3 * s.index(),
            Link::Shank(s) => 3 + 3 * s.index(),
            Link::Foot(s) => 4 + 3 * s.index(),
        }
    }

    /// Index into the generalized coordinates of the joint that connects this link to
    /// its parent (`q_p` for the pelvis).
    pub fn joint(self) -> usize {
        self.index() + 2
    }

    pub fn parent(self) -> Option<Link> {
        match self {
            Link::Pelvis => None,
            Link::Trunk | Link::Thigh(_) => Some(Link::Pelvis),
            Link::Shank(s) => Some(Link::Thigh(s)),
            Link::Foot(s) => Some(Link::Shank(s)),
        }
    }

    /// Links from the pelvis down to (and including) `self`.
    pub fn chain(self) -> Vec<Link> {
        let mut out = vec![self];
        let mut cur = self;
        while let Some(p) = cur.parent() {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn name(self) -> String {
        match self {
            Link::Pelvis => "pelvis".into(),
            Link::Trunk => "trunk".into(),
            Link::Thigh(s) => format!("thigh{}", s.suffix()),
            Link::Shank(s) => format!("shank{}", s.suffix()),
            Link::Foot(s) => format!("foot{}", s.suffix()),
        }
    }
}

/// `[x_p, z_p, q_p, q_t, q_hR, q_kR, q_aR, q_hL, q_kL, q_aL]`, metres and radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedCoordinates<T: Real>(pub DofVector<T>);

impl<T: Real> GeneralizedCoordinates<T> {
    pub fn zeros() -> Self {
        Self(DofVector::zeros())
    }

    pub fn from_slice(values: &[T]) -> Self {
        Self(DofVector::from_column_slice(values))
    }

    pub fn pelvis(&self) -> Vec2<T> {
        Vec2::new(self.0[X_P], self.0[Z_P])
    }

    pub fn hip(&self, side: Side) -> T {
        self.0[Q_HR + 3 * side.index()]
    }

    pub fn knee(&self, side: Side) -> T {
        self.0[Q_KR + 3 * side.index()]
    }

    pub fn ankle(&self, side: Side) -> T {
        self.0[Q_AR + 3 * side.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T: Real> std::ops::Index<usize> for GeneralizedCoordinates<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Real> std::ops::IndexMut<usize> for GeneralizedCoordinates<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedState<T: Real> {
    pub q: GeneralizedCoordinates<T>,
    pub qdot: DofVector<T>,
    pub qddot: DofVector<T>,
}

impl<T: Real> GeneralizedState<T> {
    pub fn new(q: GeneralizedCoordinates<T>, qdot: DofVector<T>, qddot: DofVector<T>) -> Self {
        Self { q, qdot, qddot }
    }

    pub fn at_rest(q: GeneralizedCoordinates<T>) -> Self {
        Self::new(q, DofVector::zeros(), DofVector::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite()
            && self.qdot.iter().all(|v| v.is_finite())
            && self.qddot.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams<T: Real> {
    pub mass: T,
    pub length: T,
    /// Distance from the proximal joint to the CoG (for the foot: along the ankle→toe line).
    pub com_distance: T,
    /// Planar moment of inertia about the CoG.
    pub inertia_cog: T,
}

impl<T: Real> BodyParams<T> {
    /// Uniform slender rod: CoG at mid-length, `Ī = m l² / 12`.
    pub fn rod(mass: T, length: T) -> Self {
        Self {
            mass,
            length,
            com_distance: length * T::lit(0.5),
            inertia_cog: mass * length * length / T::lit(12.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanModel<T: Real> {
    pub pelvis: BodyParams<T>,
    pub trunk: BodyParams<T>,
    /// Indexed by [`Side::index`].
    pub thigh: [BodyParams<T>; 2],
    pub shank: [BodyParams<T>; 2],
    pub foot: [BodyParams<T>; 2],
    /// Sole-to-ankle height.
    pub ankle_height: T,
    /// Horizontal distance of the heel behind the ankle; the toe lies
    /// `foot.length − heel_offset` ahead of it.
    pub heel_offset: T,
    /// Pelvis center → hip distance along the pelvis axis.
    pub hip_offset: T,
    /// Pelvis center → trunk joint distance along the pelvis axis.
    pub trunk_offset: T,
    /// Explicit foot CoG in foot axes (ankle origin); overrides the ankle→toe placement.
    pub foot_com_override: Option<Vec2<T>>,
    pub gravity: T,
    /// Height tolerance for classifying double support.
    pub dsp_tolerance: T,
}

/// Default body parameters: masses and lengths from the reference anthropometry
/// (75.14 kg subject), uniform-rod inertias.
pub fn build_default_human<T: Real>() -> HumanModel<T> {
    let l = T::lit;
    let pelvis = BodyParams::rod(l(11.78), l(0.17));
    let thigh = BodyParams::rod(l(9.3), l(0.40));
    let shank = BodyParams::rod(l(3.7), l(0.40));
    let mut foot = BodyParams::rod(l(1.56), l(0.25));
    let heel_offset = l(0.05);
    let ankle_height = l(0.10);
    // CoG halfway along the ankle→toe line.
    let toe = Vec2::new(l(0.25) - heel_offset, -ankle_height);
    foot.com_distance = toe.x.hypot(toe.y) * l(0.5);
    HumanModel {
        pelvis,
        trunk: BodyParams::rod(l(34.24), l(0.60)),
        thigh: [thigh; 2],
        shank: [shank; 2],
        foot: [foot; 2],
        ankle_height,
        heel_offset,
        hip_offset: l(0.085),
        trunk_offset: l(0.085),
        foot_com_override: None,
        gravity: l(9.81),
        dsp_tolerance: l(1e-3),
    }
}

impl<T: Real> Default for HumanModel<T> {
    fn default() -> Self {
        build_default_human()
    }
}

impl<T: Real> HumanModel<T> {
    pub fn body(&self, link: Link) -> &BodyParams<T> {
        match link {
            Link::Pelvis => &self.pelvis,
            Link::Trunk => &self.trunk,
            Link::Thigh(s) => &self.thigh[s.index()],
            Link::Shank(s) => &self.shank[s.index()],
            Link::Foot(s) => &self.foot[s.index()],
        }
    }

    pub fn body_mut(&mut self, link: Link) -> &mut BodyParams<T> {
        match link {
            Link::Pelvis => &mut self.pelvis,
            Link::Trunk => &mut self.trunk,
            Link::Thigh(s) => &mut self.thigh[s.index()],
            Link::Shank(s) => &mut self.shank[s.index()],
            Link::Foot(s) => &mut self.foot[s.index()],
        }
    }

    pub fn total_mass(&self) -> T {
        Link::ALL.iter().fold(T::zero(), |acc, l| acc + self.body(*l).mass)
    }

    pub fn weight(&self) -> T {
        self.total_mass() * self.gravity
    }

    /// Position of the link's joint (frame origin) in the parent's axes.
    pub fn joint_offset(&self, link: Link) -> Vec2<T> {
        let z = T::zero();
        match link {
            Link::Pelvis => Vec2::zeros(),
            Link::Trunk => Vec2::new(z, self.trunk_offset),
            Link::Thigh(_) => Vec2::new(z, -self.hip_offset),
            Link::Shank(s) => Vec2::new(z, -self.thigh[s.index()].length),
            Link::Foot(s) => Vec2::new(z, -self.shank[s.index()].length),
        }
    }

    /// CoG in the link's own axes (origin at its proximal joint).
    pub fn com_local(&self, link: Link) -> Vec2<T> {
        let z = T::zero();
        let b = self.body(link);
        match link {
            Link::Pelvis => Vec2::zeros(),
            Link::Trunk => Vec2::new(z, b.com_distance),
            Link::Thigh(_) | Link::Shank(_) => Vec2::new(z, -b.com_distance),
            Link::Foot(s) => self.foot_com_local(s),
        }
    }

    pub fn heel_local(&self) -> Vec2<T> {
        Vec2::new(-self.heel_offset, -self.ankle_height)
    }

    pub fn toe_local(&self, side: Side) -> Vec2<T> {
        Vec2::new(self.foot[side.index()].length - self.heel_offset, -self.ankle_height)
    }

    pub fn foot_com_local(&self, side: Side) -> Vec2<T> {
        if let Some(c) = self.foot_com_override {
            return c;
        }
        let toe = self.toe_local(side);
        let n = toe.x.hypot(toe.y);
        toe * (self.foot[side.index()].com_distance / n)
    }

    /// Foot CoG polar offset from the ankle: distance and angle of the ankle→CoG line
    /// relative to the foot's downward axis (same convention as [`ContactPoint`]).
    pub fn foot_com_polar(&self, side: Side) -> (T, T) {
        polar_from_local(&self.foot_com_local(side))
    }
}

/// Kinematic state of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState<T: Real> {
    /// Proximal joint (frame origin) motion.
    pub origin: PointMotion<T>,
    /// Absolute orientation.
    pub angle: AngleMotion<T>,
    pub com: PointMotion<T>,
}

impl<T: Real> LinkState<T> {
    pub fn point(&self, local: &Vec2<T>) -> PointMotion<T> {
        rigid_point(&self.origin, &self.angle, local)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkStates<T: Real> {
    pub links: [LinkState<T>; LINKS],
}

impl<T: Real> LinkStates<T> {
    pub fn get(&self, link: Link) -> &LinkState<T> {
        &self.links[link.index()]
    }
}

/// Poses, CoG motion and angular motion of all eight links.
pub fn forward_kinematics<T: Real>(model: &HumanModel<T>, state: &GeneralizedState<T>) -> LinkStates<T> {
    let q = &state.q.0;
    let qd = &state.qdot;
    let qdd = &state.qddot;
    let pelvis_origin = PointMotion {
        pos: Vec2::new(q[X_P], q[Z_P]),
        vel: Vec2::new(qd[X_P], qd[Z_P]),
        acc: Vec2::new(qdd[X_P], qdd[Z_P]),
    };
    let blank = LinkState {
        origin: pelvis_origin,
        angle: AngleMotion::default(),
        com: pelvis_origin,
    };
    let mut links = [blank; LINKS];
    // Link::ALL lists every parent before its children.
    for link in Link::ALL {
        let j = link.joint();
        let (origin, parent_angle) = match link.parent() {
            None => (pelvis_origin, AngleMotion::default()),
            Some(p) => {
                let ps = &links[p.index()];
                (ps.point(&model.joint_offset(link)), ps.angle)
            }
        };
        let angle = AngleMotion {
            angle: parent_angle.angle + q[j],
            rate: parent_angle.rate + qd[j],
            accel: parent_angle.accel + qdd[j],
        };
        let com = rigid_point(&origin, &angle, &model.com_local(link));
        links[link.index()] = LinkState { origin, angle, com };
    }
    LinkStates { links }
}

/// Jacobian of a body-fixed point: rows map `q̇` to `(ẋ, ż, θ̇)` of the point.
pub fn point_jacobian<T: Real>(
    model: &HumanModel<T>,
    q: &GeneralizedCoordinates<T>,
    link: Link,
    point: &Vec2<T>,
) -> PointJacobian<T> {
    let fk = forward_kinematics(model, &GeneralizedState::at_rest(*q));
    jacobian_from_states(&fk, link, point)
}

pub(crate) fn jacobian_from_states<T: Real>(fk: &LinkStates<T>, link: Link, point: &Vec2<T>) -> PointJacobian<T> {
    let mut j = PointJacobian::zeros();
    j[(0, X_P)] = T::one();
    j[(1, Z_P)] = T::one();
    let p = fk.get(link).point(point).pos;
    for l in link.chain() {
        let pivot = fk.get(l).origin.pos;
        let c = l.joint();
        j[(0, c)] = -(p.y - pivot.y);
        j[(1, c)] = p.x - pivot.x;
        j[(2, c)] = T::one();
    }
    j
}

/// Time derivative of [`point_jacobian`] along `q̇`.
pub fn point_jacobian_dot<T: Real>(
    model: &HumanModel<T>,
    q: &GeneralizedCoordinates<T>,
    qdot: &DofVector<T>,
    link: Link,
    point: &Vec2<T>,
) -> PointJacobian<T> {
    let fk = forward_kinematics(model, &GeneralizedState::new(*q, *qdot, DofVector::zeros()));
    let mut j = PointJacobian::zeros();
    let pv = fk.get(link).point(point).vel;
    for l in link.chain() {
        let pivot = fk.get(l).origin.vel;
        let c = l.joint();
        j[(0, c)] = -(pv.y - pivot.y);
        j[(1, c)] = pv.x - pivot.x;
    }
    j
}

/// Whole-body centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CogState<T: Real> {
    pub motion: PointMotion<T>,
    pub jacobian: CogJacobian<T>,
}

pub fn cog<T: Real>(model: &HumanModel<T>, state: &GeneralizedState<T>) -> CogState<T> {
    let fk = forward_kinematics(model, state);
    cog_from_states(model, &fk)
}

pub(crate) fn cog_from_states<T: Real>(model: &HumanModel<T>, fk: &LinkStates<T>) -> CogState<T> {
    let total = model.total_mass();
    let mut pos = Vec2::zeros();
    let mut vel = Vec2::zeros();
    let mut acc = Vec2::zeros();
    let mut jac = CogJacobian::zeros();
    for link in Link::ALL {
        let m = model.body(link).mass;
        if m == T::zero() {
            continue;
        }
        let w = m / total;
        let s = fk.get(link);
        pos += s.com.pos * w;
        vel += s.com.vel * w;
        acc += s.com.acc * w;
        let jl = jacobian_from_states(fk, link, &model.com_local(link));
        jac += jl.fixed_rows::<2>(0) * w;
    }
    CogState { motion: PointMotion { pos, vel, acc }, jacobian: jac }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    SspLeft,
    SspRight,
    Dsp,
}

impl Phase {
    /// Grounded foot in single support.
    pub fn stance(self) -> Option<Side> {
        match self {
            Phase::SspLeft => Some(Side::Left),
            Phase::SspRight => Some(Side::Right),
            Phase::Dsp => None,
        }
    }

    pub fn is_ssp(self) -> bool {
        self != Phase::Dsp
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::SspLeft => "SSP_LEFT",
            Phase::SspRight => "SSP_RIGHT",
            Phase::Dsp => "DSP",
        }
    }
}

/// Contact candidate on one foot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint<T: Real> {
    pub side: Side,
    /// World position.
    pub point: Vec2<T>,
    /// Position in foot axes (ankle origin).
    pub local: Vec2<T>,
    /// Ankle → contact distance.
    pub l_contact: T,
    /// The ankle→contact line points along `down_dir(φ_foot − θ_contact)`.
    pub theta_contact: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactState<T: Real> {
    pub phase: Phase,
    /// Grounded contacts: one in single support, right then left in double support.
    pub contacts: Vec<ContactPoint<T>>,
}

impl<T: Real> ContactState<T> {
    pub fn contact(&self, side: Side) -> Option<&ContactPoint<T>> {
        self.contacts.iter().find(|c| c.side == side)
    }
}

/// Distance and angle such that `local = l · down_dir(−θ)`.
pub fn polar_from_local<T: Real>(local: &Vec2<T>) -> (T, T) {
    let l = local.x.hypot(local.y);
    // down_dir(−θ) = (−sin θ, −cos θ)
    let theta = (-local.x).atan2(-local.y);
    (l, theta)
}

/// Lowest heel/toe point per foot, and the support phase.
pub fn detect_contact<T: Real>(model: &HumanModel<T>, q: &GeneralizedCoordinates<T>) -> ContactState<T> {
    let fk = forward_kinematics(model, &GeneralizedState::at_rest(*q));
    detect_contact_from_states(model, &fk)
}

pub(crate) fn detect_contact_from_states<T: Real>(model: &HumanModel<T>, fk: &LinkStates<T>) -> ContactState<T> {
    let lowest = |side: Side| {
        let foot = fk.get(Link::Foot(side));
        let heel_local = model.heel_local();
        let toe_local = model.toe_local(side);
        let heel = foot.point(&heel_local).pos;
        let toe = foot.point(&toe_local).pos;
        let (point, local) = if heel.y <= toe.y { (heel, heel_local) } else { (toe, toe_local) };
        let (l_contact, theta_contact) = polar_from_local(&local);
        ContactPoint { side, point, local, l_contact, theta_contact }
    };
    let right = lowest(Side::Right);
    let left = lowest(Side::Left);
    let dz = right.point.y - left.point.y;
    if dz.abs() <= model.dsp_tolerance {
        ContactState { phase: Phase::Dsp, contacts: vec![right, left] }
    } else if dz < T::zero() {
        ContactState { phase: Phase::SspRight, contacts: vec![right] }
    } else {
        ContactState { phase: Phase::SspLeft, contacts: vec![left] }
    }
}
