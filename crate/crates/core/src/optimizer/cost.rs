//! Design costs over the single-support samples of a gait.
//!
//! The design vector is `[L, r, R, θ_opt]`. Anchor and ankle-attachment motions depend
//! only on the user's motion, so they are computed once per sample and reused for every
//! candidate design.

use super::{Bounds, OptimizerError};
use crate::dynamics::solve_ssp;
use crate::gait::GaitTrajectory;
use crate::human::{GeneralizedState, HumanModel, Side};
use crate::planar::PointMotion;
use crate::robot::{derive_geometry, DerivedGeometry, RobotParams, DEGENERATE_LENGTH, REACH_EPS, SINGULAR_SIN_EPS};
use crate::simulation::{attachment_motions, solve_legs, Exoskeleton, RobotSolution};

pub type Design = [f64; 4];
pub type ParameterBounds = Bounds<4>;

impl Default for Bounds<4> {
    fn default() -> Self {
        Self {
            lower: [0.25, 0.25, 0.10, 5f64.to_radians()],
            upper: [0.80, 0.80, 0.60, 60f64.to_radians()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w_penalty: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0, w3: 1.0, w_penalty: 1e4 }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let all = [self.w1, self.w2, self.w3, self.w_penalty];
        if !all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            return Err(OptimizerError::InvalidWeights("weights must be finite and non-negative"));
        }
        if self.w1 == 0.0 && self.w2 == 0.0 && self.w3 == 0.0 {
            return Err(OptimizerError::InvalidWeights("at least one of w1, w2, w3 must be positive"));
        }
        Ok(())
    }
}

/// Quantities the per-sample cost is built from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleTerms {
    /// Horizontal resultant of the stance leg's seat forces on the user, N.
    pub fx: f64,
    /// Stance motor torque, N·m.
    pub tm: f64,
    /// Constraint violation; zero for a feasible sample.
    pub violation: f64,
}

/// `w₁|F_x| + w₂|T_m| + w_pen·violation`.
pub fn cost_strategy1(terms: &SampleTerms, weights: &CostWeights) -> f64 {
    weights.w1 * terms.fx.abs() + weights.w2 * terms.tm.abs() + weights.w_penalty * terms.violation
}

/// Outcome of [`fit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitReport {
    pub fits: bool,
    /// Summed geometric violation (m, plus `sin θ₂` shortfall) over all samples.
    pub violation: f64,
}

/// Shortfall of the bearing geometry below the degenerate length.
fn geometry_violation(params: &RobotParams<f64>) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    let two = 2.0;
    [params.theta_opt, params.theta_opt + params.theta_r]
        .into_iter()
        .map(|a| {
            let ll_sq = params.upper.powi(2) + params.arc_radius.powi(2) - two * params.upper * params.arc_radius * a.cos();
            (DEGENERATE_LENGTH - ll_sq.max(0.0).sqrt()).max(0.0)
        })
        .sum()
}

/// Distance outside the reach annulus (with margin) plus the singular-margin shortfall.
fn reach_violation(params: &RobotParams<f64>, anchor: &PointMotion<f64>, ankle: &PointMotion<f64>) -> f64 {
    let chain = params.chain();
    let d = ankle.pos - anchor.pos;
    let dist = d.norm();
    let (min, max) = chain.reach_limits(REACH_EPS);
    let reach = (dist - max).max(0.0) + (min - dist).max(0.0);
    if reach > 0.0 || !dist.is_finite() {
        return if dist.is_finite() { reach } else { f64::INFINITY };
    }
    match chain.inverse(&anchor.pos, &ankle.pos, REACH_EPS) {
        Ok(ik) => (SINGULAR_SIN_EPS - ik.theta2.sin().abs()).max(0.0),
        Err(_) => REACH_EPS,
    }
}

/// Whether the robot fits the user over every sample of the gait: each ankle target
/// reachable with margin, away from the straight-knee singularity, and non-degenerate
/// bearing geometry.
pub fn fit_check(params: &RobotParams<f64>, human: &HumanModel<f64>, gait: &GaitTrajectory, exo: &Exoskeleton) -> FitReport {
    let exo = Exoskeleton { params: *params, ..*exo };
    let mut violation = geometry_violation(params);
    for state in &gait.samples {
        let (anchor, ankles) = attachment_motions(human, &exo, state);
        violation += ankles.iter().map(|a| reach_violation(params, &anchor, a)).sum::<f64>();
    }
    FitReport { fits: violation == 0.0, violation }
}

/// Design-independent data of one single-support sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleContext {
    /// Index into the source gait.
    pub index: usize,
    pub stance: Side,
    pub state: GeneralizedState<f64>,
    pub anchor: PointMotion<f64>,
    pub ankles: [PointMotion<f64>; 2],
}

/// Everything the design costs need besides the design vector.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub human: HumanModel<f64>,
    /// Non-design robot parameters and the coupling mode.
    pub template: Exoskeleton,
    /// Seat share of the user's weight.
    pub p: f64,
    pub samples: Vec<SampleContext>,
}

/// Per-sample robot outcome for a design.
enum LegOutcome {
    Feasible(Box<RobotSolution>),
    /// Unit charge plus the geometric excess.
    Infeasible(f64),
}

impl CostModel {
    /// Keeps the single-support samples of `gait`.
    pub fn new(human: HumanModel<f64>, template: Exoskeleton, gait: &GaitTrajectory, p: f64) -> Result<Self, OptimizerError> {
        let samples: Vec<SampleContext> = gait
            .phases
            .iter()
            .enumerate()
            .filter_map(|(i, ph)| ph.stance().map(|s| (i, s)))
            .map(|(index, stance)| {
                let state = gait.samples[index];
                let (anchor, ankles) = attachment_motions(&human, &template, &state);
                SampleContext { index, stance, state, anchor, ankles }
            })
            .collect();
        if samples.is_empty() {
            return Err(OptimizerError::NoSupportSamples);
        }
        Ok(Self { human, template, p, samples })
    }

    pub fn params(&self, design: &Design) -> RobotParams<f64> {
        self.template.params.with_design(*design)
    }

    fn legs(&self, params: &RobotParams<f64>, geometry: f64, s: &SampleContext) -> LegOutcome {
        let excess = geometry + s.ankles.iter().map(|a| reach_violation(params, &s.anchor, a)).sum::<f64>();
        if excess > 0.0 {
            return LegOutcome::Infeasible(1.0 + excess);
        }
        let g = self.human.gravity;
        match solve_legs(params, &s.anchor, &s.ankles, Some(s.stance), self.p, self.human.weight(), g) {
            Ok(r) if r.forces.iter().all(|f| f.is_finite()) => LegOutcome::Feasible(Box::new(r)),
            _ => LegOutcome::Infeasible(1.0),
        }
    }

    /// Cost terms of sample `k` (an index into [`Self::samples`]).
    pub fn sample_terms(&self, design: &Design, k: usize) -> SampleTerms {
        let params = self.params(design);
        self.terms_with(&params, geometry_violation(&params), &self.samples[k])
    }

    fn terms_with(&self, params: &RobotParams<f64>, geometry: f64, s: &SampleContext) -> SampleTerms {
        match self.legs(params, geometry, s) {
            LegOutcome::Feasible(r) => {
                let f = &r.forces[s.stance.index()];
                SampleTerms { fx: f.user_force().x, tm: f.tm, violation: 0.0 }
            }
            LegOutcome::Infeasible(v) => SampleTerms { violation: v, ..SampleTerms::default() },
        }
    }

    pub fn strategy1(&self, design: &Design, k: usize, weights: &CostWeights) -> f64 {
        cost_strategy1(&self.sample_terms(design, k), weights)
    }

    /// Per-sample cost summed over the gait.
    pub fn strategy2(&self, design: &Design, weights: &CostWeights) -> f64 {
        let params = self.params(design);
        let geometry = geometry_violation(&params);
        self.samples
            .iter()
            .map(|s| cost_strategy1(&self.terms_with(&params, geometry, s), weights))
            .sum()
    }

    /// `Σ w₁|τ_knee| + w₂|T_m,L| + w₃|T_m,R|` with the user model in the loop.
    pub fn strategy3(&self, design: &Design, weights: &CostWeights) -> f64 {
        let params = self.params(design);
        let geometry = geometry_violation(&params);
        let exo = Exoskeleton { params, ..self.template };
        self.samples
            .iter()
            .map(|s| {
                let r = match self.legs(&params, geometry, s) {
                    LegOutcome::Feasible(r) => r,
                    LegOutcome::Infeasible(v) => return weights.w_penalty * v,
                };
                let hri = r.human_wrenches(&self.human, &exo);
                match solve_ssp(&self.human, &s.state, &hri) {
                    Ok(sol) if sol.tau.iter().all(|t| t.is_finite()) => {
                        weights.w1 * sol.knee_torque(s.stance).abs()
                            + weights.w2 * r.forces[Side::Left.index()].tm.abs()
                            + weights.w3 * r.forces[Side::Right.index()].tm.abs()
                    }
                    _ => weights.w_penalty,
                }
            })
            .sum()
    }

    /// Largest stance motor torque magnitude over the samples; `None` if any sample is
    /// infeasible.
    pub fn peak_motor_torque(&self, design: &Design) -> Option<f64> {
        let params = self.params(design);
        let geometry = geometry_violation(&params);
        self.samples.iter().try_fold(0.0f64, |peak, s| {
            let t = self.terms_with(&params, geometry, s);
            (t.violation == 0.0).then(|| peak.max(t.tm.abs()))
        })
    }

    pub fn geometry(&self, design: &Design) -> Option<DerivedGeometry<f64>> {
        let p = self.params(design);
        derive_geometry(p.upper, p.arc_radius, p.theta_opt, p.theta_r).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{default_synthetic_gait, synthesize_gait};
    use crate::human::build_default_human;
    use crate::simulation::run_simulation;

    fn model(p: f64, params: RobotParams<f64>) -> (CostModel, GaitTrajectory) {
        let human = build_default_human();
        let gait = default_synthetic_gait(&human).unwrap();
        (CostModel::new(human, Exoskeleton::new(params), &gait, p).unwrap(), gait)
    }

    fn baseline() -> Design {
        RobotParams::<f64>::default().design()
    }

    #[test]
    fn strategy1_examples() {
        let w = CostWeights::default();
        assert_eq!(cost_strategy1(&SampleTerms::default(), &w), 0.0);
        let t = SampleTerms { fx: 11.1, tm: -8.8, violation: 0.0 };
        assert!((cost_strategy1(&t, &w) - 19.9).abs() < 1e-12);
        let w2 = CostWeights { w1: 2.0, ..w };
        assert!((cost_strategy1(&t, &w2) - cost_strategy1(&t, &w) - 11.1).abs() < 1e-12);
    }

    #[test]
    fn strategy2_is_the_sum_of_strategy1() {
        let (m, _) = model(0.33, RobotParams::default());
        let w = CostWeights::default();
        let d = baseline();
        let mut brute = 0.0;
        for k in 0..m.samples.len() {
            brute += m.strategy1(&d, k, &w);
        }
        assert!((m.strategy2(&d, &w) - brute).abs() <= 1e-12 * brute.max(1.0));

        let mut one = m.clone();
        one.samples.truncate(1);
        assert_eq!(one.strategy2(&d, &w), m.strategy1(&d, 0, &w));
        let single = one.strategy2(&d, &w);
        one.samples = vec![m.samples[0].clone(); 5];
        assert!((one.strategy2(&d, &w) - 5.0 * single).abs() <= 1e-12 * single);
    }

    #[test]
    fn strategy3_null_robot_and_replay() {
        let params = RobotParams { m1: 0.0, m2: 0.0, ..RobotParams::default() };
        let (m, gait) = model(0.0, params);
        let w = CostWeights { w1: 0.0, ..CostWeights::default() };
        assert!(m.strategy3(&baseline(), &w).abs() < 1e-9);

        let (m, gait2) = model(0.33, RobotParams::default());
        assert_eq!(gait.n_data(), gait2.n_data());
        let w = CostWeights { w1: 1.0, w2: 0.0, w3: 0.0, w_penalty: 1e4 };
        let report = run_simulation(&m.human, Some(&m.template), &gait2, 0.33).unwrap();
        let replay: f64 = report.rows.iter().map(|r| r.tau[2 + 3 * r.stance().index()].abs()).sum();
        assert!((m.strategy3(&baseline(), &w) - replay).abs() <= 1e-12 * replay);
    }

    #[test]
    fn penalty_is_monotone_and_zero_when_fitting() {
        let (m, gait) = model(0.33, RobotParams::default());
        let w = CostWeights::default();
        let tiny = [0.26, 0.26, 0.3, 0.5];
        let fit = fit_check(&m.params(&tiny), &m.human, &gait, &m.template);
        assert!(!fit.fits && fit.violation > 0.0);
        let mut last = 0.0;
        for wp in [0.0, 1.0, 10.0, 1e4] {
            let wi = CostWeights { w_penalty: wp, ..w };
            let c = m.strategy2(&tiny, &wi);
            assert!(c >= last);
            last = c;
            assert!(m.strategy3(&tiny, &wi) >= wp);
        }
        let d = baseline();
        assert!(fit_check(&m.params(&d), &m.human, &gait, &m.template).fits);
        assert!((0..m.samples.len()).all(|k| m.sample_terms(&d, k).violation == 0.0));
        assert!(m.peak_motor_torque(&d).unwrap() > 0.0);
        assert!(m.peak_motor_torque(&tiny).is_none());
    }

    #[test]
    fn fit_check_margin() {
        let human = build_default_human();
        let gait = synthesize_gait(1.1, 0.0, 10, &human).unwrap();
        let exo = Exoskeleton::new(RobotParams::default());
        let short = RobotParams { upper: 0.1, lower: 0.1, ..RobotParams::default() };
        assert!(!fit_check(&short, &human, &gait, &exo).fits);
        // legs exactly as long as the anchor-ankle distance of the first sample
        let (anchor, ankles) = attachment_motions(&human, &exo, &gait.samples[0]);
        let d = (ankles[0].pos - anchor.pos).norm();
        let exact = RobotParams { upper: d / 2.0, lower: d / 2.0, ..RobotParams::default() };
        let one = gait.subset(&[0]);
        assert!(!fit_check(&exact, &human, &one, &exo).fits);
    }

    #[test]
    fn no_support_samples_is_an_error() {
        let human = build_default_human();
        let standing = synthesize_gait(1.1, 0.0, 10, &human).unwrap();
        let r = CostModel::new(human, Exoskeleton::new(RobotParams::default()), &standing, 0.33);
        assert!(matches!(r, Err(OptimizerError::NoSupportSamples)));
    }
}
