//! 6-D spatial vector algebra (Featherstone convention).
//!
//! Motion vectors are `[angular; linear]`, force vectors `[moment; force]`. A
//! [`PluckerTransform`] `ᴮX_A` stores the rotation `E` taking A-coordinates to
//! B-coordinates and the position `r` of B's origin expressed in A.
//!
//! The sagittal models in this crate embed the plane as the 3-D X–Y plane (sagittal `x`
//! forward → X, sagittal `z` up → Y) so that planar rotations are rotations about Z and
//! out-of-plane components are `angular.x`, `angular.y` and `linear.z`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMotion<T: Real> {
    pub angular: Vector3<T>,
    pub linear: Vector3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialForce<T: Real> {
    pub moment: Vector3<T>,
    pub force: Vector3<T>,
}

/// Rigid-body inertia expressed about a frame origin, with the body CoG at `com`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialInertia<T: Real> {
    pub mass: T,
    pub com: Vector3<T>,
    /// Rotational inertia about the CoG.
    pub rotational_inertia: Matrix3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerTransform<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> SpatialMotion<T> {
    pub fn new(angular: Vector3<T>, linear: Vector3<T>) -> Self {
        Self { angular, linear }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// Power pairing `⟨m, f⟩ = ω·n + v·f`.
    pub fn dot(&self, f: &SpatialForce<T>) -> T {
        self.angular.dot(&f.moment) + self.linear.dot(&f.force)
    }

    /// `self × m`, the spatial motion cross product.
    pub fn cross_motion(&self, m: &SpatialMotion<T>) -> SpatialMotion<T> {
        motion_cross(self, m)
    }

    /// `self ×* f`, the spatial force cross product.
    pub fn cross_force(&self, f: &SpatialForce<T>) -> SpatialForce<T> {
        force_cross(self, f)
    }

    pub fn is_finite(&self) -> bool {
        self.angular.iter().chain(self.linear.iter()).all(|v| v.is_finite())
    }

    /// Largest magnitude among the components that leave the X–Y plane.
    pub fn out_of_plane(&self) -> T {
        self.angular.x.abs().max(self.angular.y.abs()).max(self.linear.z.abs())
    }
}

impl<T: Real> SpatialForce<T> {
    pub fn new(moment: Vector3<T>, force: Vector3<T>) -> Self {
        Self { moment, force }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.moment.iter().chain(self.force.iter()).all(|v| v.is_finite())
    }

    pub fn out_of_plane(&self) -> T {
        self.moment.x.abs().max(self.moment.y.abs()).max(self.force.z.abs())
    }
}

macro_rules! impl_vector_ops {
    ($ty:ident, $a:ident, $b:ident) => {
        impl<T: Real> Add for $ty<T> {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self::new(self.$a + rhs.$a, self.$b + rhs.$b)
            }
        }
        impl<T: Real> AddAssign for $ty<T> {
            fn add_assign(&mut self, rhs: Self) {
                self.$a += rhs.$a;
                self.$b += rhs.$b;
            }
        }
        impl<T: Real> Sub for $ty<T> {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self::new(self.$a - rhs.$a, self.$b - rhs.$b)
            }
        }
        impl<T: Real> Neg for $ty<T> {
            type Output = Self;
            fn neg(self) -> Self {
                Self::new(-self.$a, -self.$b)
            }
        }
        impl<T: Real> Mul<T> for $ty<T> {
            type Output = Self;
            fn mul(self, s: T) -> Self {
                Self::new(self.$a * s, self.$b * s)
            }
        }
    };
}

impl_vector_ops!(SpatialMotion, angular, linear);
impl_vector_ops!(SpatialForce, moment, force);

/// `v × m = [ω × ω_m; ω × v_m + v × ω_m]`.
pub fn motion_cross<T: Real>(v: &SpatialMotion<T>, m: &SpatialMotion<T>) -> SpatialMotion<T> {
    SpatialMotion::new(
        v.angular.cross(&m.angular),
        v.angular.cross(&m.linear) + v.linear.cross(&m.angular),
    )
}

/// `v ×* f = [ω × n + v × f; ω × f]`, the dual of [`motion_cross`].
pub fn force_cross<T: Real>(v: &SpatialMotion<T>, f: &SpatialForce<T>) -> SpatialForce<T> {
    SpatialForce::new(
        v.angular.cross(&f.moment) + v.linear.cross(&f.force),
        v.angular.cross(&f.force),
    )
}

impl<T: Real> PluckerTransform<T> {
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    /// Pure translation: the new frame's origin sits at `r` in the old frame.
    pub fn translation(r: Vector3<T>) -> Self {
        Self::new(Matrix3::identity(), r)
    }

    /// Frame rotated by `angle` about Z (counterclockwise in the X–Y plane).
    pub fn rot_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let z = T::zero();
        let o = T::one();
        // E = Rz(angle)ᵀ maps old coordinates into the rotated frame.
        let e = Matrix3::new(c, s, z, -s, c, z, z, z, o);
        Self::new(e, Vector3::zeros())
    }

    pub fn apply_motion(&self, m: &SpatialMotion<T>) -> SpatialMotion<T> {
        transform_motion(self, m)
    }

    pub fn apply_force(&self, f: &SpatialForce<T>) -> SpatialForce<T> {
        transform_force(self, f)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &PluckerTransform<T>) -> PluckerTransform<T> {
        // (E1, r1)·(E2, r2) = (E1 E2, r2 + E2ᵀ r1)
        PluckerTransform::new(
            self.rotation * other.rotation,
            other.translation + other.rotation.transpose() * self.translation,
        )
    }

    pub fn inverse(&self) -> PluckerTransform<T> {
        PluckerTransform::new(self.rotation.transpose(), -(self.rotation * self.translation))
    }

    /// Maps a force expressed in the destination frame back to the source frame
    /// (`ᴬX_B^* f`), i.e. `Xᵀ f` for a motion transform `X`.
    pub fn inverse_apply_force(&self, f: &SpatialForce<T>) -> SpatialForce<T> {
        let et = self.rotation.transpose();
        let force = et * f.force;
        SpatialForce::new(et * f.moment + self.translation.cross(&force), force)
    }

    pub fn inverse_apply_motion(&self, m: &SpatialMotion<T>) -> SpatialMotion<T> {
        let et = self.rotation.transpose();
        let angular = et * m.angular;
        SpatialMotion::new(angular, et * m.linear + self.translation.cross(&angular))
    }
}

/// `X m = [E ω; E (v − r × ω)]`.
pub fn transform_motion<T: Real>(x: &PluckerTransform<T>, m: &SpatialMotion<T>) -> SpatialMotion<T> {
    SpatialMotion::new(
        x.rotation * m.angular,
        x.rotation * (m.linear - x.translation.cross(&m.angular)),
    )
}

/// `X* f = [E (n − r × f); E f]`.
pub fn transform_force<T: Real>(x: &PluckerTransform<T>, f: &SpatialForce<T>) -> SpatialForce<T> {
    SpatialForce::new(
        x.rotation * (f.moment - x.translation.cross(&f.force)),
        x.rotation * f.force,
    )
}

impl<T: Real> SpatialInertia<T> {
    pub fn new(mass: T, com: Vector3<T>, rotational_inertia: Matrix3<T>) -> Self {
        Self { mass, com, rotational_inertia }
    }

    /// Planar rigid body: mass, CoG in the X–Y plane and scalar inertia about the CoG.
    /// The same scalar is used for all three principal axes; only the Z entry ever
    /// couples to planar motion.
    pub fn planar(mass: T, com_x: T, com_y: T, inertia_cog: T) -> Self {
        Self::new(
            mass,
            Vector3::new(com_x, com_y, T::zero()),
            Matrix3::from_diagonal_element(inertia_cog),
        )
    }

    pub fn apply(&self, v: &SpatialMotion<T>) -> SpatialForce<T> {
        inertia_apply(self, v)
    }
}

/// `I v`: linear momentum `h = m (v − c × ω)` and angular momentum `I_c ω + c × h`
/// about the frame origin.
pub fn inertia_apply<T: Real>(inertia: &SpatialInertia<T>, v: &SpatialMotion<T>) -> SpatialForce<T> {
    let h = (v.linear - inertia.com.cross(&v.angular)) * inertia.mass;
    SpatialForce::new(inertia.rotational_inertia * v.angular + inertia.com.cross(&h), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn motion(rng: &mut ChaCha8Rng) -> SpatialMotion<f64> {
        SpatialMotion::new(v3(rng), v3(rng))
    }

    fn force(rng: &mut ChaCha8Rng) -> SpatialForce<f64> {
        SpatialForce::new(v3(rng), v3(rng))
    }

    fn rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = nalgebra::Unit::new_normalize(v3(rng) + Vector3::new(0.0, 0.0, 1e-3));
        *nalgebra::Rotation3::from_axis_angle(&axis, rng.gen_range(-3.0..3.0)).matrix()
    }

    fn transform(rng: &mut ChaCha8Rng) -> PluckerTransform<f64> {
        PluckerTransform::new(rotation(rng), v3(rng) * 2.0)
    }

    #[test]
    fn self_cross_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v = motion(&mut rng);
            let c = motion_cross(&v, &v);
            assert!(c.angular.amax() < 1e-15 && c.linear.amax() < 1e-15);
        }
    }

    #[test]
    fn angular_cross_linear_component_formula() {
        // [ω ẑ; 0] × [0; u x̂] = [0; ω u (ẑ × x̂)] = [0; ω u ŷ]
        let (w, u) = (2.5, -0.7);
        let v = SpatialMotion::new(Vector3::new(0.0, 0.0, w), Vector3::zeros());
        let m = SpatialMotion::new(Vector3::zeros(), Vector3::new(u, 0.0, 0.0));
        let c = motion_cross(&v, &m);
        assert_eq!(c.angular, Vector3::zeros());
        assert_eq!(c.linear, Vector3::new(0.0, w * u, 0.0));
    }

    #[test]
    fn cross_products_are_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (v, m, f) = (motion(&mut rng), motion(&mut rng), force(&mut rng));
        let a = motion_cross(&(v * 2.0), &m);
        let b = motion_cross(&v, &m) * 2.0;
        assert!((a - b).angular.amax() < 1e-15 && (a - b).linear.amax() < 1e-15);
        assert_eq!(force_cross(&v, &SpatialForce::zero()), SpatialForce::zero());
        let fa = force_cross(&v, &(f * 3.0));
        let fb = force_cross(&v, &f) * 3.0;
        assert!((fa - fb).moment.amax() < 1e-14 && (fa - fb).force.amax() < 1e-14);
    }

    #[test]
    fn force_cross_of_pure_translation() {
        let lin = Vector3::new(0.3, -1.2, 0.4);
        let fv = Vector3::new(2.0, 1.0, -0.5);
        let v = SpatialMotion::new(Vector3::zeros(), lin);
        let f = SpatialForce::new(Vector3::new(9.0, 9.0, 9.0), fv);
        let c = force_cross(&v, &f);
        assert_eq!(c.moment, lin.cross(&fv));
        assert_eq!(c.force, Vector3::zeros());
    }

    #[test]
    fn duality_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (v, m, f) = (motion(&mut rng), motion(&mut rng), force(&mut rng));
            let lhs = motion_cross(&v, &m).dot(&f);
            let rhs = -m.dot(&force_cross(&v, &f));
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = PluckerTransform::identity();
        let (m, f) = (motion(&mut rng), force(&mut rng));
        assert_eq!(transform_motion(&x, &m), m);
        assert_eq!(transform_force(&x, &f), f);
    }

    #[test]
    fn power_invariance_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = transform(&mut rng);
            let (m, f) = (motion(&mut rng), force(&mut rng));
            let p0 = m.dot(&f);
            let p1 = transform_motion(&x, &m).dot(&transform_force(&x, &f));
            assert!((p0 - p1).abs() <= 1e-12 * (1.0 + p0.abs()));

            let inv = x.inverse();
            let back = transform_motion(&inv, &transform_motion(&x, &m));
            assert!((back - m).angular.amax() < 1e-12 && (back - m).linear.amax() < 1e-12);
            let back_f = transform_force(&inv, &transform_force(&x, &f));
            assert!((back_f - f).moment.amax() < 1e-12 && (back_f - f).force.amax() < 1e-12);

            let via_method = x.inverse_apply_force(&transform_force(&x, &f));
            assert!((via_method - f).moment.amax() < 1e-12);
            let via_motion = x.inverse_apply_motion(&transform_motion(&x, &m));
            assert!((via_motion - m).linear.amax() < 1e-12);
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (a, b) = (transform(&mut rng), transform(&mut rng));
        let m = motion(&mut rng);
        let seq = a.apply_motion(&b.apply_motion(&m));
        let comp = a.compose(&b).apply_motion(&m);
        assert!((seq - comp).angular.amax() < 1e-12 && (seq - comp).linear.amax() < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let x = PluckerTransform::<f64>::rot_z(0.83);
        let e = x.rotation;
        assert!((e.transpose() * e - Matrix3::identity()).amax() < 1e-12);
        assert!((e.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_at_origin() {
        let i = SpatialInertia::new(2.0, Vector3::zeros(), Matrix3::zeros());
        let v = SpatialMotion::new(Vector3::zeros(), Vector3::new(1.0, -3.0, 0.5));
        let f = inertia_apply(&i, &v);
        assert_eq!(f.force, Vector3::new(2.0, -6.0, 1.0));
        assert_eq!(f.moment, Vector3::zeros());
        assert_eq!(inertia_apply(&i, &SpatialMotion::zero()), SpatialForce::zero());
    }

    #[test]
    fn inertia_quadratic_form_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = rotation(&mut rng);
            let d = Matrix3::from_diagonal(&Vector3::new(
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
            ));
            let i = SpatialInertia::new(rng.gen_range(0.1..5.0), v3(&mut rng), r * d * r.transpose());
            let (u, v) = (motion(&mut rng), motion(&mut rng));
            let uv = u.dot(&inertia_apply(&i, &v));
            let vu = v.dot(&inertia_apply(&i, &u));
            assert!((uv - vu).abs() <= 1e-12 * (1.0 + uv.abs()));
            assert!(v.dot(&inertia_apply(&i, &v)) >= -1e-12);
        }
    }

    #[test]
    fn planar_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let planar_motion = |rng: &mut ChaCha8Rng| {
            SpatialMotion::new(
                Vector3::new(0.0, 0.0, rng.gen_range(-1.0..1.0)),
                Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0),
            )
        };
        for _ in 0..50 {
            let (v, m) = (planar_motion(&mut rng), planar_motion(&mut rng));
            let i = SpatialInertia::planar(1.3, 0.2, -0.4, 0.05);
            let f = inertia_apply(&i, &m);
            let x = PluckerTransform::rot_z(rng.gen_range(-3.0..3.0))
                .compose(&PluckerTransform::translation(Vector3::new(0.3, -0.2, 0.0)));
            assert_eq!(motion_cross(&v, &m).out_of_plane(), 0.0);
            assert_eq!(f.out_of_plane(), 0.0);
            assert_eq!(force_cross(&v, &f).out_of_plane(), 0.0);
            assert_eq!(transform_motion(&x, &m).out_of_plane(), 0.0);
            assert_eq!(transform_force(&x, &f).out_of_plane(), 0.0);
        }
    }

    #[test]
    fn single_precision_duality() {
        let v = SpatialMotion::<f32>::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(-0.4, 0.5, 0.6));
        let m = SpatialMotion::<f32>::new(Vector3::new(0.7, -0.1, 0.2), Vector3::new(0.3, 0.3, -0.9));
        let f = SpatialForce::<f32>::new(Vector3::new(1.0, 0.5, -0.5), Vector3::new(0.2, -0.8, 0.4));
        let lhs = motion_cross(&v, &m).dot(&f);
        let rhs = -m.dot(&force_cross(&v, &f));
        assert!((lhs - rhs).abs() < 1e-6);
    }
}
