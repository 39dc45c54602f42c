//! Gait trajectories: CSV ingestion with numerical differentiation, and a synthetic
//! periodic walking pattern.

use std::io::{Read, Write};
use std::path::Path;

use crate::human::{
    detect_contact, DofVector, GeneralizedCoordinates, GeneralizedState, HumanModel, Phase, Side,
    COORDINATE_NAMES, DOF, Q_AL, Q_AR, Q_HL, Q_HR, Q_KL, Q_KR, Q_P, Q_T, X_P, Z_P,
};
use crate::planar::{rigid_point, AngleMotion, ChainError, PointMotion, TwoLinkChain, Vec2};

/// Relative tolerance on time-step uniformity.
pub const DT_JITTER: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum GaitError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: non-finite value")]
    NonFinite { row: usize, column: String },
    #[error("row {row}: time step {step} deviates from the mean step {dt} by more than 0.1%")]
    NonUniformStep { row: usize, step: f64, dt: f64 },
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("gait parameters unreachable: {0}")]
    Unreachable(String),
    #[error("invalid gait parameter: {0}")]
    InvalidParameter(String),
}

/// Uniformly sampled sequence of generalized states with their support phases.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub samples: Vec<GeneralizedState<f64>>,
    pub phases: Vec<Phase>,
}

impl GaitTrajectory {
    /// Builds a trajectory and tags every sample with its detected phase.
    pub fn new(model: &HumanModel<f64>, dt: f64, times: Vec<f64>, samples: Vec<GeneralizedState<f64>>) -> Self {
        let phases = samples.iter().map(|s| detect_contact(model, &s.q).phase).collect();
        Self { dt, times, samples, phases }
    }

    pub fn n_data(&self) -> usize {
        self.samples.len()
    }

    pub fn ssp_indices(&self) -> Vec<usize> {
        (0..self.n_data()).filter(|&i| self.phases[i].is_ssp()).collect()
    }

    pub fn stance_indices(&self, side: Side) -> Vec<usize> {
        (0..self.n_data()).filter(|&i| self.phases[i].stance() == Some(side)).collect()
    }

    /// New trajectory made of the given samples (times and phases carried along).
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dt: self.dt,
            times: indices.iter().map(|&i| self.times[i]).collect(),
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            phases: indices.iter().map(|&i| self.phases[i]).collect(),
        }
    }

    /// `count` single-support samples of one stance side, evenly spread over its window.
    pub fn select_ssp(&self, side: Side, count: usize) -> Option<Self> {
        let idx = self.stance_indices(side);
        if idx.len() < count || count == 0 {
            return None;
        }
        let picked: Vec<usize> = if count == 1 {
            vec![idx[idx.len() / 2]]
        } else {
            (0..count).map(|k| idx[k * (idx.len() - 1) / (count - 1)]).collect()
        };
        Some(self.subset(&picked))
    }
}

fn column_names() -> Vec<String> {
    let mut out = vec!["time".to_string()];
    out.extend(COORDINATE_NAMES.iter().map(|n| n.to_string()));
    out.extend(COORDINATE_NAMES.iter().map(|n| format!("{n}_dot")));
    out.extend(COORDINATE_NAMES.iter().map(|n| format!("{n}_ddot")));
    out
}

/// Writes every column (including derivatives) with shortest round-trip formatting.
pub fn write_gait_to<W: Write>(gait: &GaitTrajectory, writer: W) -> Result<(), GaitError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(column_names())?;
    for (t, s) in gait.times.iter().zip(&gait.samples) {
        let mut row = vec![t.to_string()];
        row.extend(s.q.0.iter().map(|v| v.to_string()));
        row.extend(s.qdot.iter().map(|v| v.to_string()));
        row.extend(s.qddot.iter().map(|v| v.to_string()));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gait(gait: &GaitTrajectory, path: impl AsRef<Path>) -> Result<(), GaitError> {
    write_gait_to(gait, std::fs::File::create(path)?)
}

pub fn load_gait(path: impl AsRef<Path>, model: &HumanModel<f64>) -> Result<GaitTrajectory, GaitError> {
    read_gait(std::fs::File::open(path)?, model)
}

/// Parses a gait table. Rows are numbered from 1 for the first data row.
pub fn read_gait<R: Read>(reader: R, model: &HumanModel<f64>) -> Result<GaitTrajectory, GaitError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let time_col = find("time").ok_or_else(|| GaitError::MissingColumn("time".into()))?;
    let mut q_cols = [0usize; DOF];
    for (k, name) in COORDINATE_NAMES.iter().enumerate() {
        q_cols[k] = find(name).ok_or_else(|| GaitError::MissingColumn(name.to_string()))?;
    }
    let dot_cols: Vec<Option<usize>> = COORDINATE_NAMES.iter().map(|n| find(&format!("{n}_dot"))).collect();
    let ddot_cols: Vec<Option<usize>> = COORDINATE_NAMES.iter().map(|n| find(&format!("{n}_ddot"))).collect();

    let mut times = Vec::new();
    let mut q = Vec::new();
    let mut qd = Vec::new();
    let mut qdd = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let get = |col: usize| -> Result<f64, GaitError> {
            let raw = rec.get(col).unwrap_or("");
            let name = headers.get(col).unwrap_or("").to_string();
            let v: f64 = raw.parse().map_err(|_| GaitError::Parse {
                row,
                column: name.clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(GaitError::NonFinite { row, column: name });
            }
            Ok(v)
        };
        times.push(get(time_col)?);
        let mut qv = DofVector::zeros();
        let mut dv = DofVector::zeros();
        let mut av = DofVector::zeros();
        for k in 0..DOF {
            qv[k] = get(q_cols[k])?;
            if let Some(c) = dot_cols[k] {
                dv[k] = get(c)?;
            }
            if let Some(c) = ddot_cols[k] {
                av[k] = get(c)?;
            }
        }
        q.push(qv);
        qd.push(dv);
        qdd.push(av);
    }

    let n = times.len();
    let missing_any = dot_cols.iter().chain(&ddot_cols).any(|c| c.is_none());
    let needed = if missing_any { 4 } else { 1 };
    if n < needed {
        return Err(GaitError::TooFewRows { needed, found: n });
    }
    let dt = if n > 1 { (times[n - 1] - times[0]) / (n - 1) as f64 } else { 0.0 };
    if n > 1 {
        if !(dt > 0.0) {
            return Err(GaitError::NonUniformStep { row: 2, step: times[1] - times[0], dt });
        }
        for k in 1..n {
            let step = times[k] - times[k - 1];
            if (step - dt).abs() > DT_JITTER * dt {
                return Err(GaitError::NonUniformStep { row: k + 1, step, dt });
            }
        }
    }

    for k in 0..DOF {
        let series: Vec<f64> = q.iter().map(|v| v[k]).collect();
        if dot_cols[k].is_none() {
            for (i, v) in first_derivative(&series, dt).into_iter().enumerate() {
                qd[i][k] = v;
            }
        }
        if ddot_cols[k].is_none() {
            let second = if dot_cols[k].is_some() {
                let rates: Vec<f64> = qd.iter().map(|v| v[k]).collect();
                first_derivative(&rates, dt)
            } else {
                second_derivative(&series, dt)
            };
            for (i, v) in second.into_iter().enumerate() {
                qdd[i][k] = v;
            }
        }
    }

    let samples = (0..n)
        .map(|i| GeneralizedState::new(GeneralizedCoordinates(q[i]), qd[i], qdd[i]))
        .collect();
    Ok(GaitTrajectory::new(model, dt, times, samples))
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn first_derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let d = (x[1] - x[0]) / dt;
            out.fill(d);
        }
        return out;
    }
    for i in 1..n - 1 {
        out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    }
    // (−3x₀ + 4x₁ − x₂) / 2h, written in differences so constants give exact zeros
    out[0] = (4.0 * (x[1] - x[0]) - (x[2] - x[0])) / (2.0 * dt);
    out[n - 1] = (4.0 * (x[n - 1] - x[n - 2]) - (x[n - 1] - x[n - 3])) / (2.0 * dt);
    out
}

/// Second differences inside, second-order one-sided differences at the ends.
pub fn second_derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        if n == 3 {
            out.fill((x[0] - 2.0 * x[1] + x[2]) / (dt * dt));
        }
        return out;
    }
    let h2 = dt * dt;
    for i in 1..n - 1 {
        out[i] = ((x[i + 1] - x[i]) - (x[i] - x[i - 1])) / h2;
    }
    // (2x₀ − 5x₁ + 4x₂ − x₃) / h²
    let one_sided = |a: f64, b: f64, c: f64, d: f64| (2.0 * (a - b) - 3.0 * (b - c) + (c - d)) / h2;
    out[0] = one_sided(x[0], x[1], x[2], x[3]);
    out[n - 1] = one_sided(x[n - 1], x[n - 2], x[n - 3], x[n - 4]);
    out
}

/// Share of the stride each foot spends on the ground.
pub const STANCE_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitParams {
    /// Duration of one full stride (two steps), s.
    pub stride_period: f64,
    /// Distance between successive opposite footfalls, m.
    pub step_length: f64,
    /// Peak swing-foot clearance, m.
    pub lift: f64,
    /// Pelvis vertical oscillation amplitude, m.
    pub pelvis_bob: f64,
    /// Pelvis pitch amplitude, rad.
    pub pelvis_pitch: f64,
    /// Trunk pitch amplitude relative to the pelvis, rad.
    pub trunk_pitch: f64,
    /// Largest hip–ankle distance as a fraction of thigh + shank.
    pub max_extension: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            stride_period: 1.1,
            step_length: 0.5,
            lift: 0.06,
            pelvis_bob: 0.01,
            pelvis_pitch: 0.03,
            trunk_pitch: 0.02,
            max_extension: 0.97,
        }
    }
}

impl GaitParams {
    /// No motion at all: both feet flat under the hips.
    pub fn standing(stride_period: f64) -> Self {
        Self {
            stride_period,
            step_length: 0.0,
            lift: 0.0,
            pelvis_bob: 0.0,
            pelvis_pitch: 0.0,
            trunk_pitch: 0.0,
            ..Self::default()
        }
    }
}

/// Closed-form periodic walking pattern with flat feet.
///
/// The right foot lands at stride phase 0 and stays down for [`STANCE_FRACTION`] of the
/// stride; the left foot follows half a stride later. Double support occupies phases
/// `[0, 0.1)` and `[0.5, 0.6)`. Legs are placed by two-link inverse kinematics from the
/// hips, so every joint rate and acceleration is analytic.
#[derive(Debug, Clone)]
pub struct GaitGenerator {
    pub params: GaitParams,
    pub human: HumanModel<f64>,
    /// Mean pelvis height.
    pub pelvis_height: f64,
}

struct Scalar3 {
    v: f64,
    d: f64,
    dd: f64,
}

impl GaitGenerator {
    pub fn new(params: GaitParams, human: &HumanModel<f64>) -> Result<Self, GaitError> {
        if !(params.stride_period > 0.0) {
            return Err(GaitError::InvalidParameter("stride period must be positive".into()));
        }
        if !(params.step_length >= 0.0 && params.lift >= 0.0) {
            return Err(GaitError::InvalidParameter("step length and lift must be non-negative".into()));
        }
        let mut gen = Self { params, human: human.clone(), pelvis_height: 0.0 };
        gen.pelvis_height = gen.fit_pelvis_height()?;
        Ok(gen)
    }

    fn velocity(&self) -> f64 {
        2.0 * self.params.step_length / self.params.stride_period
    }

    fn leg(&self, side: Side) -> TwoLinkChain<f64> {
        TwoLinkChain::new(self.human.thigh[side.index()].length, self.human.shank[side.index()].length)
    }

    /// Highest mean pelvis height at which both legs stay within `max_extension` reach.
    fn fit_pelvis_height(&self) -> Result<f64, GaitError> {
        let n = 400;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let t = self.params.stride_period * k as f64 / n as f64;
            let pelvis = self.pelvis(t, 0.0);
            for side in Side::BOTH {
                let leg = self.leg(side);
                let reach = self.params.max_extension * (leg.upper + leg.lower);
                let hip = self.hip(&pelvis.0, &pelvis.1).pos;
                let ankle = self.ankle(side, t).pos;
                let dx = hip.x - ankle.x;
                if dx.abs() >= reach {
                    return Err(GaitError::Unreachable(format!(
                        "step length {} needs a horizontal reach of {dx:.3} m, leg reach is {reach:.3} m",
                        self.params.step_length
                    )));
                }
                // hip z is linear in the mean height: hip_z = height + (hip.y at height 0)
                best = best.min(ankle.y + (reach * reach - dx * dx).sqrt() - hip.y);
            }
        }
        Ok(best)
    }

    fn phase(&self, t: f64) -> f64 {
        t / self.params.stride_period
    }

    fn harmonic(&self, amp: f64, cycles: f64, phase0: f64, t: f64) -> Scalar3 {
        let w = 2.0 * std::f64::consts::PI * cycles / self.params.stride_period;
        let arg = w * t - 2.0 * std::f64::consts::PI * cycles * phase0;
        Scalar3 { v: amp * arg.cos(), d: -amp * w * arg.sin(), dd: -amp * w * w * arg.cos() }
    }

    /// Pelvis point and orientation motion at `t` for mean height `height`.
    fn pelvis(&self, t: f64, height: f64) -> (PointMotion<f64>, AngleMotion<f64>) {
        let v = self.velocity();
        // highest at mid-stance (phases 0.3 and 0.8), lowest in double support
        let z = self.harmonic(self.params.pelvis_bob, 2.0, 0.3, t);
        let pitch = self.harmonic(self.params.pelvis_pitch, 2.0, 0.0, t);
        let point = PointMotion {
            pos: Vec2::new(v * t, height + z.v),
            vel: Vec2::new(v, z.d),
            acc: Vec2::new(0.0, z.dd),
        };
        (point, AngleMotion { angle: pitch.v, rate: pitch.d, accel: pitch.dd })
    }

    fn hip(&self, pelvis: &PointMotion<f64>, orientation: &AngleMotion<f64>) -> PointMotion<f64> {
        rigid_point(pelvis, orientation, &self.human.joint_offset(crate::human::Link::Thigh(Side::Right)))
    }

    /// Ankle motion of one foot.
    fn ankle(&self, side: Side, t: f64) -> PointMotion<f64> {
        let period = self.params.stride_period;
        let stride = 2.0 * self.params.step_length;
        let offset = match side {
            Side::Right => 0.0,
            Side::Left => 0.5,
        };
        let phi = self.phase(t) - offset;
        let cycle = phi.floor();
        let local = phi - cycle;
        let planted = stride * (cycle + offset + STANCE_FRACTION / 2.0);
        let h = self.human.ankle_height;
        if local < STANCE_FRACTION {
            return PointMotion::at_rest(Vec2::new(planted, h));
        }
        let swing = 1.0 - STANCE_FRACTION;
        let s = (local - STANCE_FRACTION) / swing;
        let sd = 1.0 / (swing * period);
        let tau = 2.0 * std::f64::consts::PI;
        let (sin2, cos2) = (tau * s).sin_cos();
        let lift = self.params.lift;
        PointMotion {
            pos: Vec2::new(planted + stride * (s - sin2 / tau), h + lift * (0.5 - 0.5 * cos2)),
            vel: Vec2::new(stride * (1.0 - cos2) * sd, lift * 0.5 * tau * sin2 * sd),
            acc: Vec2::new(stride * tau * sin2 * sd * sd, lift * 0.5 * tau * tau * cos2 * sd * sd),
        }
    }

    /// Generalized state at time `t`.
    pub fn state_at(&self, t: f64) -> Result<GeneralizedState<f64>, GaitError> {
        let (pelvis, pitch) = self.pelvis(t, self.pelvis_height);
        let trunk = self.harmonic(self.params.trunk_pitch, 1.0, 0.0, t);
        let mut q = GeneralizedCoordinates::zeros();
        let mut qd = DofVector::zeros();
        let mut qdd = DofVector::zeros();
        q[X_P] = pelvis.pos.x;
        q[Z_P] = pelvis.pos.y;
        qd[X_P] = pelvis.vel.x;
        qd[Z_P] = pelvis.vel.y;
        qdd[X_P] = pelvis.acc.x;
        qdd[Z_P] = pelvis.acc.y;
        q[Q_P] = pitch.angle;
        qd[Q_P] = pitch.rate;
        qdd[Q_P] = pitch.accel;
        q[Q_T] = trunk.v;
        qd[Q_T] = trunk.d;
        qdd[Q_T] = trunk.dd;
        let hip = self.hip(&pelvis, &pitch);
        for side in Side::BOTH {
            let (ih, ik, ia) = match side {
                Side::Right => (Q_HR, Q_KR, Q_AR),
                Side::Left => (Q_HL, Q_KL, Q_AL),
            };
            let ankle = self.ankle(side, t);
            let leg = self.leg(side);
            let chain_err = |e: ChainError| GaitError::Unreachable(format!("{side:?} leg at t = {t}: {e}"));
            let ik_sol = leg.inverse(&hip.pos, &ankle.pos, 0.0).map_err(chain_err)?;
            let (rate, accel) = leg
                .rates(ik_sol.theta1, ik_sol.theta2, &(ankle.vel - hip.vel), &(ankle.acc - hip.acc), 1e-9)
                .map_err(chain_err)?;
            // thigh absolute = q_p + q_h, shank absolute adds q_k, foot stays flat
            q[ih] = ik_sol.theta1 - pitch.angle;
            q[ik] = ik_sol.theta2;
            q[ia] = -(ik_sol.theta1 + ik_sol.theta2);
            qd[ih] = rate.x - pitch.rate;
            qd[ik] = rate.y;
            qd[ia] = -(rate.x + rate.y);
            qdd[ih] = accel.x - pitch.accel;
            qdd[ik] = accel.y;
            qdd[ia] = -(accel.x + accel.y);
        }
        Ok(GeneralizedState::new(q, qd, qdd))
    }

    /// One stride sampled at `n_samples` uniform instants starting at phase 0.
    pub fn stride(&self, n_samples: usize) -> Result<GaitTrajectory, GaitError> {
        if n_samples < 2 {
            return Err(GaitError::TooFewRows { needed: 2, found: n_samples });
        }
        let dt = self.params.stride_period / n_samples as f64;
        let times: Vec<f64> = (0..n_samples).map(|k| k as f64 * dt).collect();
        let samples = times.iter().map(|&t| self.state_at(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(GaitTrajectory::new(&self.human, dt, times, samples))
    }
}

/// One stride of the synthetic walking pattern. A zero step length yields quiet standing.
pub fn synthesize_gait(
    stride_period: f64,
    step_length: f64,
    n_samples: usize,
    human: &HumanModel<f64>,
) -> Result<GaitTrajectory, GaitError> {
    let params = if step_length == 0.0 {
        GaitParams::standing(stride_period)
    } else {
        GaitParams { stride_period, step_length, ..GaitParams::default() }
    };
    GaitGenerator::new(params, human)?.stride(n_samples)
}

/// Default synthetic stride: 1.1 s, 0.5 m steps, 100 samples.
pub fn default_synthetic_gait(human: &HumanModel<f64>) -> Result<GaitTrajectory, GaitError> {
    let p = GaitParams::default();
    synthesize_gait(p.stride_period, p.step_length, 100, human)
}
