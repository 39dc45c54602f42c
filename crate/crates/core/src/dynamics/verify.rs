//! Newton back-substitution versus RNEA on random states.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{newton_generalized_forces, rnea, ExternalForce};
use crate::human::{
    DofVector, GeneralizedCoordinates, GeneralizedState, HumanModel, Link, COORDINATE_NAMES, DOF, X_P, Z_P,
};
use crate::planar::Vec2;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub sample: usize,
    /// Absolute discrepancy per generalized coordinate.
    pub errors: [f64; DOF],
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub max_error: f64,
}

impl VerifyReport {
    /// Comma-separated table: sample index, per-channel error, row maximum.
    pub fn to_table(&self) -> String {
        let mut out = String::from("sample");
        for name in COORDINATE_NAMES {
            let _ = write!(out, ",err_{name}");
        }
        out.push_str(",max_error\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.sample);
            for e in row.errors {
                let _ = write!(out, ",{e:e}");
            }
            let _ = writeln!(out, ",{:e}", row.max);
        }
        out
    }
}

/// Random state with two random external wrenches, drawn from `rng`.
pub(crate) fn random_sample<T: Real>(rng: &mut ChaCha8Rng) -> (GeneralizedState<T>, Vec<ExternalForce<T>>) {
    let l = T::lit;
    let mut q = GeneralizedCoordinates::<T>::zeros();
    q[X_P] = l(rng.gen_range(-1.0..1.0));
    q[Z_P] = l(rng.gen_range(0.8..1.1));
    for i in Z_P + 1..DOF {
        q[i] = l(rng.gen_range(-0.8..0.8));
    }
    let qdot = DofVector::from_fn(|_, _| l(rng.gen_range(-2.0..2.0)));
    let qddot = DofVector::from_fn(|_, _| l(rng.gen_range(-5.0..5.0)));
    let ext = (0..2)
        .map(|_| {
            let link = Link::ALL[rng.gen_range(0..Link::ALL.len())];
            ExternalForce::new(
                link,
                Vec2::new(l(rng.gen_range(-0.2..0.2)), l(rng.gen_range(-0.2..0.2))),
                Vec2::new(l(rng.gen_range(-200.0..200.0)), l(rng.gen_range(-200.0..200.0))),
                l(rng.gen_range(-20.0..20.0)),
            )
        })
        .collect();
    (GeneralizedState::new(q, qdot, qddot), ext)
}

/// Compares the world-frame Newton assembly with the spatial RNEA on `samples` random
/// states (with random external wrenches) drawn deterministically from `seed`.
pub fn verify_newton_vs_rnea<T: Real>(model: &HumanModel<T>, samples: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(samples);
    let mut max_error = 0.0f64;
    for sample in 0..samples {
        let (state, ext) = random_sample::<T>(&mut rng);
        let a = rnea(model, &state, &ext);
        let b = newton_generalized_forces(model, &state, &ext).generalized();
        let mut errors = [0.0; DOF];
        for (k, e) in errors.iter_mut().enumerate() {
            *e = (a[k] - b[k]).abs().as_f64();
        }
        let max = errors.iter().copied().fold(0.0, f64::max);
        max_error = max_error.max(max);
        rows.push(VerifyRow { sample, errors, max });
    }
    VerifyReport { rows, max_error }
}
