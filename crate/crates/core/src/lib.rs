//! Sagittal-plane inverse dynamics of a walking user wearing a seat-type assistive
//! exoskeleton, with a design optimizer for the exoskeleton leg geometry.
//!
//! The kinematic and dynamic core ([`spatial`], [`human`], [`robot`], [`dynamics`]) is
//! generic over the scalar type; the application layers ([`gait`], [`simulation`],
//! [`optimizer`], [`config`]) work in `f64`. The aliases below fix the core to `f64`.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod gait;
pub mod human;
pub mod linalg;
pub mod optimizer;
pub mod planar;
pub mod plot;
pub mod robot;
pub mod scalar;
pub mod simulation;
pub mod spatial;

pub use scalar::Real;

pub type HumanModel = human::HumanModel<f64>;
pub type GeneralizedState = human::GeneralizedState<f64>;
pub type GeneralizedCoordinates = human::GeneralizedCoordinates<f64>;
pub type RobotParams = robot::RobotParams<f64>;
pub type HriForces = robot::HriForces<f64>;
pub type DerivedGeometry = robot::DerivedGeometry<f64>;
pub type DynamicsSolution = dynamics::DynamicsSolution<f64>;
pub type JointLoads = dynamics::JointLoads<f64>;
pub type ExternalForce = dynamics::ExternalForce<f64>;
pub type Vec2 = planar::Vec2<f64>;
