//! Design optimization of the exoskeleton leg geometry.

mod cost;
mod pso;

pub use cost::*;
pub use pso::*;

use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("invalid bounds for dimension {index}: [{lower}, {upper}]")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("invalid swarm setting {name}: {reason}")]
    InvalidConfig { name: &'static str, reason: &'static str },
    #[error("invalid cost weights: {0}")]
    InvalidWeights(&'static str),
    #[error("every initial particle has a non-finite cost")]
    Initialization,
    #[error("gait has no single-support samples")]
    NoSupportSamples,
    #[error("unknown strategy {0:?} (expected 1, 2 or 3)")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// One swarm per sample minimizing the per-sample cost.
    PerSample,
    /// One swarm over the per-sample cost summed across the gait.
    #[default]
    WholeGait,
    /// One swarm over the user's knee torque and both motor torques.
    HumanInLoop,
}

impl FromStr for Strategy {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "per_sample" => Ok(Strategy::PerSample),
            "2" | "whole_gait" => Ok(Strategy::WholeGait),
            "3" | "human_in_loop" => Ok(Strategy::HumanInLoop),
            _ => Err(OptimizerError::UnknownStrategy(s.to_string())),
        }
    }
}

impl Strategy {
    pub fn number(self) -> u8 {
        match self {
            Strategy::PerSample => 1,
            Strategy::WholeGait => 2,
            Strategy::HumanInLoop => 3,
        }
    }

    /// Cost of a design under this strategy; `sample` selects the sample for
    /// [`Strategy::PerSample`].
    pub fn cost(self, model: &CostModel, design: &Design, sample: usize, weights: &CostWeights) -> f64 {
        match self {
            Strategy::PerSample => model.strategy1(design, sample, weights),
            Strategy::WholeGait => model.strategy2(design, weights),
            Strategy::HumanInLoop => model.strategy3(design, weights),
        }
    }
}

/// Runs the chosen strategy. Per-sample optimization returns one result per
/// single-support sample, in gait order; the other strategies return one result.
pub fn optimize(
    strategy: Strategy,
    model: &CostModel,
    bounds: &ParameterBounds,
    weights: &CostWeights,
    config: &PsoConfig,
) -> Result<Vec<OptimizationResult<4>>, OptimizerError> {
    weights.validate()?;
    if model.samples.is_empty() {
        return Err(OptimizerError::NoSupportSamples);
    }
    let run = |k: usize| pso_minimize(|d: &Design| strategy.cost(model, d, k, weights), bounds, config);
    match strategy {
        Strategy::PerSample => (0..model.samples.len()).map(run).collect(),
        _ => Ok(vec![run(0)?]),
    }
}

fn design_cells(model: &CostModel, d: &Design) -> String {
    let (ll1, ll2) = model.geometry(d).map_or((f64::NAN, f64::NAN), |g| (g.ll1, g.ll2));
    format!("{},{},{},{},{},{}", d[0], d[1], d[2], d[3], ll1, ll2)
}

/// Global-best trace: `iteration,cost,L,r,R,theta_opt,LL1,LL2`.
pub fn history_table(model: &CostModel, result: &OptimizationResult<4>) -> String {
    let mut out = String::from("iteration,cost,L,r,R,theta_opt,LL1,LL2\n");
    for (i, (c, d)) in result.cost_history.iter().zip(&result.param_history).enumerate() {
        let _ = writeln!(out, "{i},{c},{}", design_cells(model, d));
    }
    out
}

/// One row per result: `sample,cost,L,r,R,theta_opt,LL1,LL2`, where `sample` is the gait
/// index of the optimized sample (per-sample strategy) or `-1` for a whole-gait run.
pub fn summary_table(model: &CostModel, strategy: Strategy, results: &[OptimizationResult<4>]) -> String {
    let mut out = String::from("sample,cost,L,r,R,theta_opt,LL1,LL2\n");
    for (k, r) in results.iter().enumerate() {
        let sample = match strategy {
            Strategy::PerSample => model.samples[k].index as i64,
            _ => -1,
        };
        let _ = writeln!(out, "{sample},{},{}", r.best_cost, design_cells(model, &r.best_params));
    }
    out
}
