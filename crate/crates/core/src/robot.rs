//! Exoskeleton leg: geometry, closed-form kinematics and per-leg Newton-Euler dynamics.
//!
//! Each leg is a two-link chain. The upper link of length `L` hangs from the user's CoG
//! (the anchor `O₁`) at `θ₁` from the downward vertical; the lower link of length `r`
//! continues from the robot knee `K` at `θ₁ + θ₂` down to the ankle attachment `E`. The
//! upper link carries two bearings on a guide arc of radius `R` centred on the anchor;
//! each bearing transmits a force along the line joining it to the anchor.

use nalgebra::{SMatrix, SVector};

use crate::linalg::{lu_solve_refined, norm};
use crate::planar::{cross, down_dir, ChainError, ChainIk, PointMotion, TwoLinkChain, Vec2};
use crate::scalar::Real;

/// Guard on `|sin θ₂|` for the differential kinematics.
pub const SINGULAR_SIN_EPS: f64 = 1e-6;
/// Reach margin on the chain annulus.
pub const REACH_EPS: f64 = 1e-9;
/// Bearing-to-knee distances below this are treated as degenerate.
pub const DEGENERATE_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobotError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("degenerate bearing geometry: LL{index} = {length:e}")]
    DegenerateGeometry { index: usize, length: f64 },
    #[error("leg force system is rank deficient (pivot column {column})")]
    RankDeficient { column: usize },
    #[error("invalid robot parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegMode {
    /// The leg carries the prescribed share of the user's weight.
    Stance,
    /// The knee motor is idle.
    Swing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams<T: Real> {
    /// Anchor → robot knee (`L`).
    pub upper: T,
    /// Robot knee → ankle attachment (`r`).
    pub lower: T,
    /// Guide-arc radius (`R`).
    pub arc_radius: T,
    /// Angle between the upper link and the first bearing line.
    pub theta_opt: T,
    /// Angle between the two bearing lines.
    pub theta_r: T,
    /// Robot ankle attachment in human foot axes, relative to the human ankle.
    pub ankle_offset: Vec2<T>,
    pub m1: T,
    pub m2: T,
    /// Upper-link CoG: distance along the link from the anchor, as a fraction of `L`.
    pub upper_com_fraction: T,
    /// Upper-link CoG lateral offset (perpendicular to the link, forward-positive), m.
    pub upper_com_lateral: T,
    /// Lower-link CoG distance from the knee, as a fraction of `r`.
    pub lower_com_fraction: T,
    /// Lower-link CoG polar angle from the link axis (`β`).
    pub lower_com_angle: T,
    /// Explicit CoG inertias; `None` means a uniform rod over the link length.
    pub inertia_upper: Option<T>,
    pub inertia_lower: Option<T>,
}

impl<T: Real> Default for RobotParams<T> {
    /// Intuitive baseline design: 0.55 m links, 0.20 m arc, 30° bearing spread.
    fn default() -> Self {
        let l = T::lit;
        Self {
            upper: l(0.55),
            lower: l(0.55),
            arc_radius: l(0.20),
            theta_opt: l(30f64.to_radians()),
            theta_r: l(30f64.to_radians()),
            ankle_offset: Vec2::new(l(0.05), T::zero()),
            m1: l(3.0),
            m2: l(1.0),
            upper_com_fraction: l(0.5),
            upper_com_lateral: T::zero(),
            lower_com_fraction: l(0.5),
            lower_com_angle: T::zero(),
            inertia_upper: None,
            inertia_lower: None,
        }
    }
}

impl<T: Real> RobotParams<T> {
    /// Copy with the four design variables `[L, r, R, θ_opt]` replaced.
    pub fn with_design(&self, design: [T; 4]) -> Self {
        Self {
            upper: design[0],
            lower: design[1],
            arc_radius: design[2],
            theta_opt: design[3],
            ..*self
        }
    }

    pub fn design(&self) -> [T; 4] {
        [self.upper, self.lower, self.arc_radius, self.theta_opt]
    }

    pub fn chain(&self) -> TwoLinkChain<T> {
        TwoLinkChain::new(self.upper, self.lower)
    }

    pub fn leg_mass(&self) -> T {
        self.m1 + self.m2
    }

    pub fn inertia_upper(&self) -> T {
        self.inertia_upper
            .unwrap_or_else(|| self.m1 * self.upper * self.upper / T::lit(12.0))
    }

    pub fn inertia_lower(&self) -> T {
        self.inertia_lower
            .unwrap_or_else(|| self.m2 * self.lower * self.lower / T::lit(12.0))
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        let zero = T::zero();
        let half_pi = T::FRAC_PI_2();
        let bad = |name, reason| Err(RobotError::InvalidParameter { name, reason });
        if !(self.upper > zero) {
            return bad("upper", "must be positive");
        }
        if !(self.lower > zero) {
            return bad("lower", "must be positive");
        }
        if !(self.arc_radius > zero) {
            return bad("arc_radius", "must be positive");
        }
        if !(self.theta_opt > zero && self.theta_opt < half_pi) {
            return bad("theta_opt", "must lie in (0, pi/2)");
        }
        if !(self.theta_r > zero && self.theta_r < half_pi) {
            return bad("theta_r", "must lie in (0, pi/2)");
        }
        if !(self.m1 >= zero && self.m2 >= zero) {
            return bad("mass", "must be non-negative");
        }
        Ok(())
    }
}

/// Knee-to-bearing distances and the knee angles between the upper link and those lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedGeometry<T: Real> {
    pub ll1: T,
    pub ll2: T,
    pub theta_ll1: T,
    pub theta_ll2: T,
}

/// Solves the anchor–knee–bearing triangles for both bearings.
pub fn derive_geometry<T: Real>(upper: T, arc_radius: T, theta_opt: T, theta_r: T) -> Result<DerivedGeometry<T>, RobotError> {
    let side = |index: usize, angle: T| -> Result<(T, T), RobotError> {
        let two = T::lit(2.0);
        let ll_sq = upper * upper + arc_radius * arc_radius - two * upper * arc_radius * angle.cos();
        let ll = ll_sq.max(T::zero()).sqrt();
        if !(ll > T::lit(DEGENERATE_LENGTH)) {
            return Err(RobotError::DegenerateGeometry { index, length: ll.as_f64() });
        }
        let c = (upper * upper + ll * ll - arc_radius * arc_radius) / (two * upper * ll);
        Ok((ll, c.max(-T::one()).min(T::one()).acos()))
    };
    let (ll1, theta_ll1) = side(1, theta_opt)?;
    let (ll2, theta_ll2) = side(2, theta_opt + theta_r)?;
    Ok(DerivedGeometry { ll1, ll2, theta_ll1, theta_ll2 })
}

impl<T: Real> DerivedGeometry<T> {
    pub fn from_params(params: &RobotParams<T>) -> Result<Self, RobotError> {
        derive_geometry(params.upper, params.arc_radius, params.theta_opt, params.theta_r)
    }
}

/// Closed-form inverse kinematics from anchor and ankle attachment positions.
pub fn inverse_kinematics<T: Real>(
    params: &RobotParams<T>,
    anchor: &Vec2<T>,
    ankle: &Vec2<T>,
) -> Result<ChainIk<T>, RobotError> {
    Ok(params.chain().inverse(anchor, ankle, T::lit(REACH_EPS))?)
}

/// Full kinematic state of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotLegState<T: Real> {
    pub anchor: PointMotion<T>,
    pub ankle: PointMotion<T>,
    pub ik: ChainIk<T>,
    /// `(θ̇₁, θ̇₂)`.
    pub rate: Vec2<T>,
    /// `(θ̈₁, θ̈₂)`.
    pub accel: Vec2<T>,
}

impl<T: Real> RobotLegState<T> {
    pub fn theta1(&self) -> T {
        self.ik.theta1
    }

    pub fn theta2(&self) -> T {
        self.ik.theta2
    }
}

/// Joint rates and accelerations from the relative anchor→ankle motion.
pub fn differential_kinematics<T: Real>(
    params: &RobotParams<T>,
    ik: &ChainIk<T>,
    anchor: &PointMotion<T>,
    ankle: &PointMotion<T>,
) -> Result<(Vec2<T>, Vec2<T>), RobotError> {
    let rel_vel = ankle.vel - anchor.vel;
    let rel_acc = ankle.acc - anchor.acc;
    Ok(params
        .chain()
        .rates(ik.theta1, ik.theta2, &rel_vel, &rel_acc, T::lit(SINGULAR_SIN_EPS))?)
}

/// IK plus differential kinematics.
pub fn leg_state<T: Real>(
    params: &RobotParams<T>,
    anchor: &PointMotion<T>,
    ankle: &PointMotion<T>,
) -> Result<RobotLegState<T>, RobotError> {
    let ik = inverse_kinematics(params, &anchor.pos, &ankle.pos)?;
    let (rate, accel) = differential_kinematics(params, &ik, anchor, ankle)?;
    Ok(RobotLegState { anchor: *anchor, ankle: *ankle, ik, rate, accel })
}

/// Bearing lines of one leg at a given upper-link angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssistDirections<T: Real> {
    /// Bearing-line directions from the downward vertical.
    pub phi: [T; 2],
    /// Angles from the horizontal of the unit force each line exerts on the user.
    pub alpha: [T; 2],
    /// Unit vectors (bearing → anchor) of the force on the user.
    pub unit: [Vec2<T>; 2],
    pub bearings: [Vec2<T>; 2],
}

pub fn assist_directions<T: Real>(params: &RobotParams<T>, theta1: T, anchor: &Vec2<T>) -> AssistDirections<T> {
    let phi = [theta1 + params.theta_opt, theta1 + params.theta_opt + params.theta_r];
    let half_pi = T::FRAC_PI_2();
    let unit = phi.map(|p| -down_dir(p));
    AssistDirections {
        phi,
        alpha: phi.map(|p| p + half_pi),
        unit,
        bearings: phi.map(|p| anchor + down_dir(p) * params.arc_radius),
    }
}

/// Interaction and internal forces of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HriForces<T: Real> {
    /// Signed bearing forces along the unit lines toward the anchor (positive pushes the user).
    pub f1: T,
    pub f2: T,
    pub alpha_f1: T,
    pub alpha_f2: T,
    /// Force of the lower link on the upper link at the robot knee.
    pub ax: T,
    pub az: T,
    /// Force of the user's foot on the lower link at the ankle attachment.
    pub bx: T,
    pub bz: T,
    /// Knee motor torque acting on the upper link (reaction on the lower link).
    pub tm: T,
    pub residual: T,
}

impl<T: Real> HriForces<T> {
    pub fn unit(&self, i: usize) -> Vec2<T> {
        let a = if i == 0 { self.alpha_f1 } else { self.alpha_f2 };
        Vec2::new(a.cos(), a.sin())
    }

    /// Resultant seat force on the user.
    pub fn user_force(&self) -> Vec2<T> {
        self.unit(0) * self.f1 + self.unit(1) * self.f2
    }

    /// Force the leg exerts on the user's foot at the attachment point.
    pub fn ankle_reaction(&self) -> Vec2<T> {
        Vec2::new(-self.bx, -self.bz)
    }

    pub fn is_finite(&self) -> bool {
        [self.f1, self.f2, self.ax, self.az, self.bx, self.bz, self.tm]
            .iter()
            .all(|v| v.is_finite())
    }
}

type LegSystem<T> = (SMatrix<T, 7, 7>, SVector<T, 7>);

/// Link CoG motions for a leg state: `(G₁, G₂)`.
pub fn link_coms<T: Real>(params: &RobotParams<T>, state: &RobotLegState<T>) -> (PointMotion<T>, PointMotion<T>) {
    use crate::planar::{rigid_point, AngleMotion};
    let upper = AngleMotion { angle: state.ik.theta1, rate: state.rate.x, accel: state.accel.x };
    let lower = AngleMotion {
        angle: state.ik.theta1 + state.ik.theta2,
        rate: state.rate.x + state.rate.y,
        accel: state.accel.x + state.accel.y,
    };
    // Body axes at angle 0 point the link along −z; the forward normal is +x.
    let g1_local = Vec2::new(params.upper_com_lateral, -params.upper_com_fraction * params.upper);
    let g1 = rigid_point(&state.anchor, &upper, &g1_local);
    let knee = rigid_point(&state.anchor, &upper, &Vec2::new(T::zero(), -params.upper));
    let rg2 = params.lower_com_fraction * params.lower;
    let beta = params.lower_com_angle;
    let g2_local = Vec2::new(rg2 * beta.sin(), -rg2 * beta.cos());
    let g2 = rigid_point(&knee, &lower, &g2_local);
    (g1, g2)
}

/// Assembles the seven Newton-Euler rows (upper link: 3, lower link: 3, closure: 1) in
/// unknowns `[F₁, F₂, A_x, A_z, B_x, B_z, T_m]`.
pub fn leg_system<T: Real>(
    params: &RobotParams<T>,
    state: &RobotLegState<T>,
    mode: LegMode,
    p: T,
    w_human: T,
    gravity: T,
) -> LegSystem<T> {
    let dirs = assist_directions(params, state.ik.theta1, &state.anchor.pos);
    let (g1, g2) = link_coms(params, state);
    let o1 = state.anchor.pos;
    let knee = params.chain().middle_joint(&o1, state.ik.theta1);
    let e = state.ankle.pos;
    let (u1, u2) = (dirs.unit[0], dirs.unit[1]);
    let (m1, m2) = (params.m1, params.m2);
    let one = T::one();
    let z = T::zero();

    let ro = o1 - g1.pos;
    let rk1 = knee - g1.pos;
    let re = e - g2.pos;
    let rk2 = knee - g2.pos;

    #[rustfmt::skip]
    let mut a = SMatrix::<T, 7, 7>::from_row_slice(&[
        // upper link, forces: −F₁u₁ − F₂u₂ + A
        -u1.x, -u2.x, one, z, z, z, z,
        -u1.y, -u2.y, z, one, z, z, z,
        // upper link, moment about G₁
        -cross(&ro, &u1), -cross(&ro, &u2), -rk1.y, rk1.x, z, z, one,
        // lower link, forces: B − A
        z, z, -one, z, one, z, z,
        z, z, z, -one, z, one, z,
        // lower link, moment about G₂
        z, z, rk2.y, -rk2.x, -re.y, re.x, -one,
        // closure row, filled below
        z, z, z, z, z, z, z,
    ]);
    let b1 = g1.acc * m1 + Vec2::new(z, m1 * gravity);
    let b2 = g2.acc * m2 + Vec2::new(z, m2 * gravity);
    let alpha1 = state.accel.x;
    let alpha2 = state.accel.x + state.accel.y;
    let closure = match mode {
        LegMode::Stance => {
            a[(6, 0)] = u1.y;
            a[(6, 1)] = u2.y;
            p * w_human
        }
        LegMode::Swing => {
            a[(6, 6)] = one;
            z
        }
    };
    let b = SVector::<T, 7>::from_column_slice(&[
        b1.x,
        b1.y,
        params.inertia_upper() * alpha1,
        b2.x,
        b2.y,
        params.inertia_lower() * alpha2,
        closure,
    ]);
    (a, b)
}

/// Solves one leg's seven unknowns for the given mode.
///
/// `p` is the share of `w_human` (the user's weight) carried by the seat in stance.
pub fn leg_dynamics<T: Real>(
    params: &RobotParams<T>,
    state: &RobotLegState<T>,
    mode: LegMode,
    p: T,
    w_human: T,
    gravity: T,
) -> Result<HriForces<T>, RobotError> {
    let (a, b) = leg_system(params, state, mode, p, w_human, gravity);
    let x = lu_solve_refined(&a, &b).map_err(|e| RobotError::RankDeficient { column: e.column })?;
    let residual = norm(&(a * x - b));
    let dirs = assist_directions(params, state.ik.theta1, &state.anchor.pos);
    let mut tm = x[6];
    if mode == LegMode::Swing {
        // The closure row pins T_m; drop the round-off of the refinement step.
        tm = T::zero();
    }
    Ok(HriForces {
        f1: x[0],
        f2: x[1],
        alpha_f1: dirs.alpha[0],
        alpha_f2: dirs.alpha[1],
        ax: x[2],
        az: x[3],
        bx: x[4],
        bz: x[5],
        tm,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    fn static_state(params: &RobotParams<f64>, anchor: Vec2<f64>, ankle: Vec2<f64>) -> RobotLegState<f64> {
        leg_state(params, &PointMotion::at_rest(anchor), &PointMotion::at_rest(ankle)).unwrap()
    }

    #[test]
    fn geometry_examples() {
        let g = derive_geometry(0.44, 0.30, deg(34.0), deg(30.0)).unwrap();
        assert!((g.ll1 - 0.254).abs() < 1e-3);
        assert!((g.ll2 - 0.40).abs() < 0.01);
        let g = derive_geometry(0.45, 0.51, deg(28.4), deg(30.0)).unwrap();
        assert!((g.ll1 - 0.243).abs() < 1e-3);
        assert!((g.ll2 - 0.47).abs() < 0.01);
        // law of sines holds for the stored values
        for (angle, ll, th) in [(deg(28.4), g.ll1, g.theta_ll1), (deg(58.4), g.ll2, g.theta_ll2)] {
            assert!((angle.sin() / ll - th.sin() / 0.51).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_limit() {
        let g = derive_geometry(0.5, 0.2, 0.0, deg(30.0)).unwrap();
        assert!((g.ll1 - 0.3).abs() < 1e-12);
        assert!(matches!(
            derive_geometry(0.3, 0.3, 0.0, deg(30.0)),
            Err(RobotError::DegenerateGeometry { index: 1, .. })
        ));
    }

    #[test]
    fn ik_examples() {
        let p = RobotParams { upper: 0.5, lower: 0.5, ..RobotParams::default() };
        let ik = p.chain().inverse(&Vec2::new(0.0, 1.0), &Vec2::new(0.0, 0.0), 0.0).unwrap();
        assert_eq!((ik.theta_a, ik.theta_b, ik.theta2), (0.0, 0.0, 0.0));
        let ik = inverse_kinematics(&p, &Vec2::new(0.0, 0.5), &Vec2::new(0.0, 0.0)).unwrap();
        assert!((ik.theta_b - deg(60.0)).abs() < 1e-12);
        assert!((ik.theta2 + deg(120.0)).abs() < 1e-12);
        assert!(inverse_kinematics(&p, &Vec2::new(0.0, 1.2), &Vec2::zeros()).is_err());
    }

    #[test]
    fn ik_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = RobotParams {
                upper: rng.gen_range(0.25..0.8),
                lower: rng.gen_range(0.25..0.8),
                ..RobotParams::default()
            };
            let (lo, hi) = p.chain().reach_limits(1e-6);
            let d = rng.gen_range(lo..hi);
            let ang = rng.gen_range(-1.0..1.0);
            let anchor = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5));
            let ankle = anchor + down_dir(ang) * d;
            let ik = inverse_kinematics(&p, &anchor, &ankle).unwrap();
            let fk = anchor + p.chain().relative_end(ik.theta1, ik.theta2);
            assert!((fk - ankle).amax() <= 1e-12);
            assert!(ik.theta2 <= 0.0);
        }
    }

    #[test]
    fn stationary_rates_vanish() {
        let p = RobotParams::default();
        let s = static_state(&p, Vec2::new(0.0, 0.95), Vec2::new(0.1, 0.1));
        assert_eq!(s.rate, Vec2::zeros());
        assert_eq!(s.accel, Vec2::zeros());
    }

    #[test]
    fn rates_match_finite_differences() {
        let p = RobotParams::default();
        // anchor and ankle on smooth paths
        let anchor = |t: f64| Vec2::new(0.3 * t, 0.95 + 0.02 * (3.0 * t).sin());
        let ankle = |t: f64| Vec2::new(0.1 + 0.4 * t + 0.05 * (5.0 * t).sin(), 0.1 + 0.03 * (4.0 * t).cos());
        // analytic motions for the paths
        let anchor_m = |t: f64| PointMotion {
            pos: anchor(t),
            vel: Vec2::new(0.3, 0.06 * (3.0 * t).cos()),
            acc: Vec2::new(0.0, -0.18 * (3.0 * t).sin()),
        };
        let ankle_m = |t: f64| PointMotion {
            pos: ankle(t),
            vel: Vec2::new(0.4 + 0.25 * (5.0 * t).cos(), -0.12 * (4.0 * t).sin()),
            acc: Vec2::new(-1.25 * (5.0 * t).sin(), -0.48 * (4.0 * t).cos()),
        };
        let t = 0.37;
        let s = leg_state(&p, &anchor_m(t), &ankle_m(t)).unwrap();
        let angles = |t: f64| {
            let ik = inverse_kinematics(&p, &anchor(t), &ankle(t)).unwrap();
            Vec2::new(ik.theta1, ik.theta2)
        };
        let h = 1e-4;
        let d1 = (angles(t + h) - angles(t - h)) / (2.0 * h);
        let d2 = (angles(t + h) - 2.0 * angles(t) + angles(t - h)) / (h * h);
        assert!((d1 - s.rate).amax() < 1e-6);
        assert!((d2 - s.accel).amax() < 1e-4);
    }

    #[test]
    fn chain_jacobian_determinant() {
        let c = TwoLinkChain::new(0.45, 0.52);
        let j = c.jacobian(0.3, -0.7);
        assert!((j.determinant() - 0.45 * 0.52 * (-0.7f64).sin()).abs() < 1e-14);
    }

    #[test]
    fn singular_chain_is_rejected() {
        let p = RobotParams { upper: 0.5, lower: 0.5, ..RobotParams::default() };
        let anchor = PointMotion::at_rest(Vec2::new(0.0, 1.0));
        let ankle = PointMotion::at_rest(Vec2::new(0.0, 1.0 - (1.0 - 1e-14)));
        assert!(matches!(leg_state(&p, &anchor, &ankle), Err(RobotError::Chain(ChainError::Singular { .. }))));
    }

    #[test]
    fn assist_geometry() {
        let p = RobotParams { theta_opt: deg(34.0), arc_radius: 0.3, upper: 0.44, ..RobotParams::default() };
        let anchor = Vec2::new(0.2, 0.9);
        let d = assist_directions(&p, 0.0, &anchor);
        assert!((d.phi[0] - deg(34.0)).abs() < 1e-15);
        let g = DerivedGeometry::from_params(&p).unwrap();
        let knee = p.chain().middle_joint(&anchor, 0.0);
        for i in 0..2 {
            assert!(((d.bearings[i] - anchor).norm() - 0.3).abs() <= 1e-12);
            // the line of action passes through the anchor: zero moment about it
            assert!(cross(&(d.bearings[i] - anchor), &d.unit[i]).abs() < 1e-15);
            let alpha_unit = Vec2::new(d.alpha[i].cos(), d.alpha[i].sin());
            assert!((alpha_unit - d.unit[i]).amax() < 1e-15);
        }
        assert!(((d.bearings[0] - knee).norm() - g.ll1).abs() < 1e-12);
        assert!(((d.bearings[1] - knee).norm() - g.ll2).abs() < 1e-12);
    }

    fn residual_rows(
        params: &RobotParams<f64>,
        s: &RobotLegState<f64>,
        f: &HriForces<f64>,
        gravity: f64,
    ) -> [f64; 6] {
        // independent re-statement of the six link equations
        let (g1, g2) = link_coms(params, s);
        let knee = params.chain().middle_joint(&s.anchor.pos, s.ik.theta1);
        let seat = f.user_force();
        let a = Vec2::new(f.ax, f.az);
        let b = Vec2::new(f.bx, f.bz);
        let w1 = Vec2::new(0.0, -params.m1 * gravity);
        let w2 = Vec2::new(0.0, -params.m2 * gravity);
        let up = -seat + a + w1 - g1.acc * params.m1;
        let lo = b - a + w2 - g2.acc * params.m2;
        let up_m = cross(&(s.anchor.pos - g1.pos), &(-seat)) + cross(&(knee - g1.pos), &a) + f.tm
            - params.inertia_upper() * s.accel.x;
        let lo_m = cross(&(s.ankle.pos - g2.pos), &b) + cross(&(knee - g2.pos), &(-a)) - f.tm
            - params.inertia_lower() * (s.accel.x + s.accel.y);
        [up.x, up.y, up_m, lo.x, lo.y, lo_m]
    }

    #[test]
    fn static_stance_closure() {
        let p = RobotParams::default();
        let s = static_state(&p, Vec2::new(0.0, 0.95), Vec2::new(0.05, 0.10));
        let w = 75.14 * 9.81;
        let f = leg_dynamics(&p, &s, LegMode::Stance, 0.1, w, 9.81).unwrap();
        assert!((f.user_force().y - 0.1 * w).abs() <= 1e-9 * (1.0 + w));
        assert!((0.1 * w - 73.71).abs() < 5e-3);
        assert!(f.residual <= 1e-9 * (1.0 + w));
        for r in residual_rows(&p, &s, &f, 9.81) {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn swing_static_balance() {
        let p = RobotParams::default();
        let s = static_state(&p, Vec2::new(0.0, 0.95), Vec2::new(-0.2, 0.2));
        let f = leg_dynamics(&p, &s, LegMode::Swing, 0.33, 737.1, 9.81).unwrap();
        assert_eq!(f.tm, 0.0);
        let total = -f.user_force().y + f.bz;
        assert!((total - 4.0 * 9.81).abs() < 1e-9);
        for r in residual_rows(&p, &s, &f, 9.81) {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn dynamic_residuals_both_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = RobotParams {
                upper: rng.gen_range(0.35..0.7),
                lower: rng.gen_range(0.35..0.7),
                arc_radius: rng.gen_range(0.1..0.5),
                theta_opt: rng.gen_range(0.1..1.0),
                upper_com_lateral: rng.gen_range(-0.02..0.02),
                lower_com_angle: rng.gen_range(-0.2..0.2),
                ..RobotParams::default()
            };
            let anchor = PointMotion {
                pos: Vec2::new(0.0, 1.0),
                vel: Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.2..0.2)),
                acc: Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            };
            let (lo, hi) = p.chain().reach_limits(0.05);
            let d = rng.gen_range(lo..hi);
            let ankle = PointMotion {
                pos: anchor.pos + down_dir(rng.gen_range(-0.5..0.5)) * d,
                vel: Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)),
                acc: Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            };
            let s = leg_state(&p, &anchor, &ankle).unwrap();
            for mode in [LegMode::Stance, LegMode::Swing] {
                let f = leg_dynamics(&p, &s, mode, 0.33, 737.1, 9.81).unwrap();
                let scale = 1.0 + 737.1;
                for r in residual_rows(&p, &s, &f, 9.81) {
                    assert!(r.abs() <= 1e-9 * scale, "{mode:?} residual {r}");
                }
                assert!(f.residual <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn doubling_masses_doubles_gravity_balance() {
        let p = RobotParams::default();
        let s = static_state(&p, Vec2::new(0.0, 0.95), Vec2::new(-0.1, 0.15));
        let heavy = RobotParams { m1: 6.0, m2: 2.0, ..p };
        let a = leg_dynamics(&p, &s, LegMode::Swing, 0.0, 0.0, 9.81).unwrap();
        let b = leg_dynamics(&heavy, &s, LegMode::Swing, 0.0, 0.0, 9.81).unwrap();
        for (x, y) in [(a.f1, b.f1), (a.f2, b.f2), (a.ax, b.ax), (a.az, b.az), (a.bx, b.bx), (a.bz, b.bz)] {
            assert!((2.0 * x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }
}
