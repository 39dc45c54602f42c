//! Per-sample coupled analysis of the user and the exoskeleton over a gait.
//!
//! For each single-support sample the two robot legs are solved first (the leg on the
//! grounded foot in stance mode, the other in swing mode). Their seat forces and ankle
//! reactions are then applied to the human model as external wrenches before the
//! support-phase solve and the joint-load back-substitution.

use rayon::prelude::*;

use crate::dynamics::{
    joint_loads, solve_dsp, solve_ssp, DynamicsError, DynamicsSolution, ExternalForce, JointLoads,
};
use crate::gait::GaitTrajectory;
use crate::human::{cog_from_states, forward_kinematics, GeneralizedState, HumanModel, Link, Phase, Side};
use crate::planar::{down_dir, PointMotion, Vec2};
use crate::robot::{leg_dynamics, leg_state, link_coms, HriForces, LegMode, RobotError, RobotLegState, RobotParams};

/// Relative tolerance of the whole-system vertical momentum check.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// Where the resultant seat force acts on the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssistPoint {
    /// Whole-body CoG, distributed over the links by mass.
    #[default]
    Cog,
    /// Pelvis centre.
    Pelvis,
}

/// Exoskeleton design plus how it couples to the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exoskeleton {
    pub params: RobotParams<f64>,
    pub assist_point: AssistPoint,
}

impl Exoskeleton {
    pub fn new(params: RobotParams<f64>) -> Self {
        Self { params, assist_point: AssistPoint::Cog }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("{side:?} robot leg: {source}")]
    Robot { side: Side, source: RobotError },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("whole-system vertical balance violated by {residual:e} N")]
    Equilibrium { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sample {sample}: {source}")]
pub struct SimulationError {
    pub sample: usize,
    #[source]
    pub source: SampleError,
}

/// Both robot legs solved for one human state.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSolution {
    /// Indexed by [`Side::index`].
    pub legs: [RobotLegState<f64>; 2],
    pub forces: [HriForces<f64>; 2],
    pub modes: [LegMode; 2],
}

impl RobotSolution {
    pub fn stance_side(&self) -> Option<Side> {
        Side::BOTH.into_iter().find(|s| self.modes[s.index()] == LegMode::Stance)
    }

    /// External wrenches the legs apply to the user.
    pub fn human_wrenches(&self, human: &HumanModel<f64>, exo: &Exoskeleton) -> Vec<ExternalForce<f64>> {
        let seat: Vec2<f64> = self.forces.iter().map(|f| f.user_force()).sum();
        let mut out = match exo.assist_point {
            AssistPoint::Cog => {
                let total = human.total_mass();
                Link::ALL
                    .iter()
                    .filter(|l| human.body(**l).mass != 0.0)
                    .map(|&l| ExternalForce::new(l, human.com_local(l), seat * (human.body(l).mass / total), 0.0))
                    .collect()
            }
            AssistPoint::Pelvis => vec![ExternalForce::new(Link::Pelvis, Vec2::zeros(), seat, 0.0)],
        };
        for side in Side::BOTH {
            out.push(ExternalForce::new(
                Link::Foot(side),
                exo.params.ankle_offset,
                self.forces[side.index()].ankle_reaction(),
                0.0,
            ));
        }
        out
    }
}

/// Anchor motion (CoG or pelvis) and ankle-attachment motions for a human state.
pub fn attachment_motions(
    human: &HumanModel<f64>,
    exo: &Exoskeleton,
    state: &GeneralizedState<f64>,
) -> (PointMotion<f64>, [PointMotion<f64>; 2]) {
    let fk = forward_kinematics(human, state);
    let anchor = match exo.assist_point {
        AssistPoint::Cog => cog_from_states(human, &fk).motion,
        AssistPoint::Pelvis => fk.get(Link::Pelvis).origin,
    };
    let ankles = Side::BOTH.map(|s| fk.get(Link::Foot(s)).point(&exo.params.ankle_offset));
    (anchor, ankles)
}

/// Solves both legs. `stance` selects which leg carries the share `p` of the user's
/// weight; `None` puts both legs in swing mode.
pub fn solve_robot(
    human: &HumanModel<f64>,
    exo: &Exoskeleton,
    state: &GeneralizedState<f64>,
    stance: Option<Side>,
    p: f64,
) -> Result<RobotSolution, SampleError> {
    let (anchor, ankles) = attachment_motions(human, exo, state);
    solve_legs(&exo.params, &anchor, &ankles, stance, p, human.weight(), human.gravity)
}

/// [`solve_robot`] from precomputed anchor and ankle-attachment motions.
pub fn solve_legs(
    params: &RobotParams<f64>,
    anchor: &PointMotion<f64>,
    ankles: &[PointMotion<f64>; 2],
    stance: Option<Side>,
    p: f64,
    w_human: f64,
    gravity: f64,
) -> Result<RobotSolution, SampleError> {
    let solve = |side: Side| -> Result<(RobotLegState<f64>, HriForces<f64>, LegMode), SampleError> {
        let wrap = |source| SampleError::Robot { side, source };
        let leg = leg_state(params, anchor, &ankles[side.index()]).map_err(wrap)?;
        let mode = if stance == Some(side) { LegMode::Stance } else { LegMode::Swing };
        let f = leg_dynamics(params, &leg, mode, p, w_human, gravity).map_err(wrap)?;
        Ok((leg, f, mode))
    };
    let (rl, rf, rm) = solve(Side::Right)?;
    let (ll, lf, lm) = solve(Side::Left)?;
    Ok(RobotSolution { legs: [rl, ll], forces: [rf, lf], modes: [rm, lm] })
}

/// Result of one single-support sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub solution: DynamicsSolution<f64>,
    pub loads: JointLoads<f64>,
    pub robot: Option<RobotSolution>,
    /// Whole-system vertical momentum residual, N.
    pub balance_residual: f64,
}

impl SampleResult {
    pub fn stance(&self) -> Side {
        self.solution.phase.stance().unwrap_or(Side::Right)
    }
}

/// Force the thigh exerts on the shank projected on the shank axis toward the ankle;
/// positive when the knee is compressed.
pub fn knee_compression(human: &HumanModel<f64>, state: &GeneralizedState<f64>, loads: &JointLoads<f64>, side: Side) -> f64 {
    let fk = forward_kinematics(human, state);
    let axis = down_dir(fk.get(Link::Shank(side)).angle.angle);
    loads.knee(side).force.dot(&axis)
}

/// Full coupled pipeline for one single-support state.
pub fn evaluate_sample(
    human: &HumanModel<f64>,
    exo: Option<&Exoskeleton>,
    state: &GeneralizedState<f64>,
    p: f64,
) -> Result<SampleResult, SampleError> {
    let phase = crate::human::detect_contact(human, &state.q).phase;
    let robot = match exo {
        Some(e) => Some(solve_robot(human, e, state, phase.stance(), p)?),
        None => None,
    };
    let hri = match (exo, &robot) {
        (Some(e), Some(r)) => r.human_wrenches(human, e),
        _ => Vec::new(),
    };
    let solution = solve_ssp(human, state, &hri)?;
    let loads = joint_loads(human, state, &solution, &hri);
    let balance_residual = vertical_balance(human, exo, state, &solution, robot.as_ref());
    let scale = human.weight() + exo.map_or(0.0, |e| 2.0 * e.params.leg_mass() * human.gravity);
    if !(balance_residual.abs() <= EQUILIBRIUM_TOL * (1.0 + scale)) {
        return Err(SampleError::Equilibrium { residual: balance_residual });
    }
    Ok(SampleResult { solution, loads, robot, balance_residual })
}

/// `Σ F_z,floor − total weight − Σ m a_z` over the user and both robot legs.
pub fn vertical_balance(
    human: &HumanModel<f64>,
    exo: Option<&Exoskeleton>,
    state: &GeneralizedState<f64>,
    solution: &DynamicsSolution<f64>,
    robot: Option<&RobotSolution>,
) -> f64 {
    let g = human.gravity;
    let fk = forward_kinematics(human, state);
    let cog = cog_from_states(human, &fk);
    let mut momentum_rate = human.total_mass() * cog.motion.acc.y;
    let mut weight = human.weight();
    if let (Some(e), Some(r)) = (exo, robot) {
        for leg in &r.legs {
            let (g1, g2) = link_coms(&e.params, leg);
            momentum_rate += e.params.m1 * g1.acc.y + e.params.m2 * g2.acc.y;
            weight += e.params.leg_mass() * g;
        }
    }
    solution.total_floor_force().y - weight - momentum_rate
}

/// One report row per single-support sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRow {
    pub sample: usize,
    pub time: f64,
    pub phase: Phase,
    /// `[τ_T, τ_hR, τ_kR, τ_aR, τ_hL, τ_kL, τ_aL]`.
    pub tau: [f64; 7],
    /// Floor wrench `(F_x, F_z, M)` on the grounded foot.
    pub floor: [f64; 3],
    /// Knee joint forces (thigh on shank) `[F_x, F_z]`, right then left.
    pub knee_force: [[f64; 2]; 2],
    /// Knee compression along the shank axis, right then left.
    pub knee_compression: [f64; 2],
    pub hri: Option<[HriForces<f64>; 2]>,
    /// Robot knee rates `θ̇₂`, rev/min, right then left.
    pub motor_speed_rpm: [f64; 2],
    pub balance_residual: f64,
}

impl SimulationRow {
    pub fn stance(&self) -> Side {
        self.phase.stance().unwrap_or(Side::Right)
    }

    pub fn stance_knee_compression(&self) -> f64 {
        self.knee_compression[self.stance().index()]
    }

    /// Vertical seat force delivered by the stance leg.
    pub fn stance_assist_vertical(&self) -> f64 {
        self.hri.map_or(0.0, |h| h[self.stance().index()].user_force().y)
    }
}

/// Floor wrenches of the double-support samples, solved by the minimum-norm method.
#[derive(Debug, Clone, PartialEq)]
pub struct DspRow {
    pub sample: usize,
    pub time: f64,
    /// `(F_x, F_z, M)` per foot, right then left.
    pub floor: [[f64; 3]; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationReport {
    pub rows: Vec<SimulationRow>,
    pub dsp: Vec<DspRow>,
}

pub const RAD_S_TO_RPM: f64 = 60.0 / (2.0 * std::f64::consts::PI);

fn row_from(sample: usize, time: f64, human: &HumanModel<f64>, state: &GeneralizedState<f64>, r: &SampleResult) -> SimulationRow {
    let c = &r.solution.contacts[0];
    let knee = Side::BOTH.map(|s| {
        let f = r.loads.knee(s).force;
        [f.x, f.y]
    });
    let compression = Side::BOTH.map(|s| knee_compression(human, state, &r.loads, s));
    let mut tau = [0.0; 7];
    tau.copy_from_slice(r.solution.tau.as_slice());
    SimulationRow {
        sample,
        time,
        phase: r.solution.phase,
        tau,
        floor: [c.force.x, c.force.y, c.moment],
        knee_force: knee,
        knee_compression: compression,
        hri: r.robot.as_ref().map(|rb| rb.forces),
        motor_speed_rpm: r
            .robot
            .as_ref()
            .map_or([0.0; 2], |rb| rb.legs.map(|l| l.rate.y * RAD_S_TO_RPM)),
        balance_residual: r.balance_residual,
    }
}

/// Runs the coupled analysis over every sample of the gait. Single-support samples
/// produce report rows; double-support samples get a minimum-norm floor-wrench solve of
/// the user alone.
pub fn run_simulation(
    human: &HumanModel<f64>,
    exo: Option<&Exoskeleton>,
    gait: &GaitTrajectory,
    p: f64,
) -> Result<SimulationReport, SimulationError> {
    enum Out {
        Ssp(Box<SimulationRow>),
        Dsp(DspRow),
    }
    let outs: Vec<Result<Out, SimulationError>> = (0..gait.n_data())
        .into_par_iter()
        .map(|i| {
            let state = &gait.samples[i];
            let time = gait.times[i];
            let wrap = |source| SimulationError { sample: i, source };
            if gait.phases[i] == Phase::Dsp {
                let sol = solve_dsp(human, state, &[]).map_err(|e| wrap(e.into()))?;
                let floor = Side::BOTH.map(|s| {
                    sol.contact(s).map_or([0.0; 3], |c| [c.force.x, c.force.y, c.moment])
                });
                return Ok(Out::Dsp(DspRow { sample: i, time, floor, residual: sol.residual }));
            }
            let r = evaluate_sample(human, exo, state, p).map_err(wrap)?;
            Ok(Out::Ssp(Box::new(row_from(i, time, human, state, &r))))
        })
        .collect();
    let mut report = SimulationReport::default();
    for out in outs {
        match out? {
            Out::Ssp(r) => report.rows.push(*r),
            Out::Dsp(d) => report.dsp.push(d),
        }
    }
    Ok(report)
}

impl SimulationReport {
    pub fn peak_stance_knee_compression(&self) -> f64 {
        self.rows.iter().map(|r| r.stance_knee_compression()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn header() -> &'static str {
        "sample,time,phase,tau_T,tau_hR,tau_kR,tau_aR,tau_hL,tau_kL,tau_aL,\
floor_Fx,floor_Fz,floor_M,knee_Fx_R,knee_Fz_R,knee_Fx_L,knee_Fz_L,knee_comp_R,knee_comp_L,\
F1_R,F2_R,assist_Fx_R,assist_Fz_R,Bx_R,Bz_R,Tm_R,speed_rpm_R,\
F1_L,F2_L,assist_Fx_L,assist_Fz_L,Bx_L,Bz_L,Tm_L,speed_rpm_L,balance_residual"
    }

    /// Comma-separated report, one row per single-support sample.
    pub fn to_table(&self) -> String {
        let mut out = String::from(Self::header());
        out.push('\n');
        for r in &self.rows {
            let mut cells: Vec<String> = vec![r.sample.to_string(), r.time.to_string(), r.phase.label().to_string()];
            cells.extend(r.tau.iter().map(|v| v.to_string()));
            cells.extend(r.floor.iter().map(|v| v.to_string()));
            cells.extend(r.knee_force.iter().flatten().map(|v| v.to_string()));
            cells.extend(r.knee_compression.iter().map(|v| v.to_string()));
            for side in Side::BOTH {
                let k = side.index();
                match &r.hri {
                    Some(h) => {
                        let f = &h[k];
                        let u = f.user_force();
                        cells.extend([f.f1, f.f2, u.x, u.y, f.bx, f.bz, f.tm, r.motor_speed_rpm[k]].map(|v| v.to_string()));
                    }
                    None => cells.extend(std::iter::repeat_n("0".to_string(), 8)),
                }
            }
            cells.push(r.balance_residual.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Comma-separated double-support floor wrenches.
    pub fn dsp_table(&self) -> String {
        let mut out = String::from("sample,time,Fx_R,Fz_R,M_R,Fx_L,Fz_L,M_L,residual\n");
        for d in &self.dsp {
            let mut cells = vec![d.sample.to_string(), d.time.to_string()];
            cells.extend(d.floor.iter().flatten().map(|v| v.to_string()));
            cells.push(d.residual.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
