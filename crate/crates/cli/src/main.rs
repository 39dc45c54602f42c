//! `exosim`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numeric or runtime failure,
//! 3 verification threshold exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use exosim_core::config::{read_bounds, read_campaign, read_human, read_robot, read_weights, Campaign, ConfigFile};
use exosim_core::dynamics::verify_newton_vs_rnea;
use exosim_core::gait::{load_gait, synthesize_gait, GaitTrajectory};
use exosim_core::human::{build_default_human, Side};
use exosim_core::optimizer::{fit_check, history_table, optimize, summary_table, CostModel, Strategy};
use exosim_core::plot::{LinePlot, Series};
use exosim_core::robot::{derive_geometry, RobotParams};
use exosim_core::simulation::{run_simulation, Exoskeleton, SimulationReport};
use exosim_core::HumanModel;

#[derive(Parser)]
#[command(name = "exosim", version, about = "Inverse dynamics and design optimization for a seat-type walking assist exoskeleton")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the Newton back-substitution against the RNEA on random states.
    Verify {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Error table output.
        #[arg(long, default_value = "verify.csv")]
        out: PathBuf,
        /// Human model overrides.
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Coupled user and exoskeleton inverse dynamics over a gait.
    Simulate {
        #[command(flatten)]
        gait: GaitArgs,
        /// Seat share of the user's weight during stance.
        #[arg(long, default_value_t = 0.33)]
        assist: f64,
        /// Robot parameter overrides.
        #[arg(long, conflicts_with = "no_robot")]
        robot: Option<PathBuf>,
        /// Analyse the user alone.
        #[arg(long)]
        no_robot: bool,
        #[arg(long)]
        human: Option<PathBuf>,
        #[arg(long, default_value = "simulation")]
        out_dir: PathBuf,
    },
    /// Optimize the leg design `[L, r, R, theta_opt]`.
    Optimize {
        /// 1 per sample, 2 whole gait, 3 human in the loop.
        #[arg(long)]
        strategy: Option<String>,
        #[command(flatten)]
        gait: GaitArgs,
        /// Campaign file (strategy, assist, bounds, weights, swarm settings).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bounds file (`L_min`, `L_max`, ...).
        #[arg(long)]
        bounds: Option<PathBuf>,
        /// Weights file (`w1`, `w2`, `w3`, `w_penalty`).
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        assist: Option<f64>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Keep only the first N left-stance single-support samples.
        #[arg(long)]
        ssp_samples: Option<usize>,
        /// Robot parameter overrides (non-design parameters).
        #[arg(long)]
        robot: Option<PathBuf>,
        #[arg(long)]
        human: Option<PathBuf>,
        #[arg(long, default_value = "optimization")]
        out_dir: PathBuf,
    },
    /// Print the bearing geometry derived from a robot parameter file.
    Geometry {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Args)]
struct GaitArgs {
    /// Gait table file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    gait: Option<PathBuf>,
    /// Use the built-in synthetic gait.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 1.1)]
    stride_period: f64,
    #[arg(long, default_value_t = 0.5)]
    step_length: f64,
    /// Samples per synthetic stride.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

/// Error tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait Tag<T> {
    fn usage(self) -> Result<T, Failure>;
    fn numeric(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Tag<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 1, error: e.into() })
    }

    fn numeric(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Verify { samples, seed, tolerance, out, human } => verify(samples, seed, tolerance, &out, human.as_deref()),
        Command::Simulate { gait, assist, robot, no_robot, human, out_dir } => {
            simulate(&gait, assist, robot.as_deref(), no_robot, human.as_deref(), &out_dir)
        }
        Command::Optimize {
            strategy,
            gait,
            config,
            bounds,
            weights,
            seed,
            assist,
            population,
            iterations,
            ssp_samples,
            robot,
            human,
            out_dir,
        } => {
            let mut campaign = Campaign::default();
            if let Some(path) = &config {
                let mut cfg = ConfigFile::load(path).usage()?;
                campaign = read_campaign(&mut cfg, campaign).usage()?;
                cfg.finish().with_context(|| path.display().to_string()).usage()?;
            }
            if let Some(path) = &bounds {
                let mut cfg = ConfigFile::load(path).usage()?;
                campaign.bounds = read_bounds(&mut cfg, campaign.bounds).usage()?;
                cfg.finish().with_context(|| path.display().to_string()).usage()?;
            }
            if let Some(path) = &weights {
                let mut cfg = ConfigFile::load(path).usage()?;
                campaign.weights = read_weights(&mut cfg, campaign.weights).usage()?;
                cfg.finish().with_context(|| path.display().to_string()).usage()?;
            }
            if let Some(s) = strategy {
                campaign.strategy = s.parse::<Strategy>().usage()?;
            }
            if let Some(s) = seed {
                campaign.pso.seed = s;
            }
            if let Some(p) = assist {
                campaign.assist = p;
            }
            if let Some(n) = population {
                campaign.pso.population = n;
            }
            if let Some(n) = iterations {
                campaign.pso.max_iterations = n;
            }
            campaign.bounds.validate().usage()?;
            campaign.weights.validate().usage()?;
            campaign.pso.validate().usage()?;
            optimize_cmd(&gait, &campaign, ssp_samples, robot.as_deref(), human.as_deref(), &out_dir)
        }
        Command::Geometry { params } => geometry(&params),
    }
}

fn load_human(path: Option<&Path>) -> Result<HumanModel, Failure> {
    let base = build_default_human();
    let Some(path) = path else { return Ok(base) };
    let mut cfg = ConfigFile::load(path).usage()?;
    let human = read_human(&mut cfg, base).usage()?;
    cfg.finish().with_context(|| path.display().to_string()).usage()?;
    Ok(human)
}

fn load_robot(path: Option<&Path>) -> Result<Exoskeleton, Failure> {
    let base = Exoskeleton::new(RobotParams::default());
    let Some(path) = path else { return Ok(base) };
    let mut cfg = ConfigFile::load(path).usage()?;
    let exo = read_robot(&mut cfg, base).usage()?;
    cfg.finish().with_context(|| path.display().to_string()).usage()?;
    exo.params.validate().usage()?;
    Ok(exo)
}

fn load_gait_args(args: &GaitArgs, human: &HumanModel) -> Result<GaitTrajectory, Failure> {
    match &args.gait {
        Some(path) => load_gait(path, human).with_context(|| path.display().to_string()).usage(),
        None => synthesize_gait(args.stride_period, args.step_length, args.samples, human).usage(),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display())).numeric()
}

fn verify(samples: usize, seed: u64, tolerance: f64, out: &Path, human: Option<&Path>) -> Result<(), Failure> {
    let human = load_human(human)?;
    let report = verify_newton_vs_rnea(&human, samples, seed);
    fs::write(out, report.to_table()).with_context(|| format!("writing {}", out.display())).numeric()?;
    println!("samples: {samples}");
    println!("max_error: {:e}", report.max_error);
    if report.max_error.is_nan() || report.max_error > tolerance {
        return Err(Failure {
            code: 3,
            error: anyhow!("maximum discrepancy {:e} exceeds {tolerance:e}", report.max_error),
        });
    }
    println!("PASS (tolerance {tolerance:e})");
    Ok(())
}

fn simulate(
    gait_args: &GaitArgs,
    assist: f64,
    robot: Option<&Path>,
    no_robot: bool,
    human: Option<&Path>,
    out_dir: &Path,
) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&assist) {
        return Err(anyhow!("--assist must lie in [0, 1]")).usage();
    }
    let human = load_human(human)?;
    let gait = load_gait_args(gait_args, &human)?;
    let exo = if no_robot { None } else { Some(load_robot(robot)?) };
    if let Some(e) = &exo {
        let fit = fit_check(&e.params, &human, &gait, e);
        if !fit.fits {
            return Err(anyhow!("robot does not fit the gait (violation {:e})", fit.violation)).numeric();
        }
    }
    let report = run_simulation(&human, exo.as_ref(), &gait, assist).numeric()?;
    fs::create_dir_all(out_dir).with_context(|| out_dir.display().to_string()).numeric()?;
    write(out_dir, "simulation.csv", &report.to_table())?;
    write(out_dir, "dsp.csv", &report.dsp_table())?;
    for (name, plot) in simulation_plots(&report) {
        write(out_dir, name, &plot.to_svg())?;
    }
    println!("single-support samples: {}", report.rows.len());
    println!("double-support samples: {}", report.dsp.len());
    println!("peak stance knee compression: {:.3} N", report.peak_stance_knee_compression());
    if exo.is_some() {
        let assist_fz: Vec<f64> = report.rows.iter().map(|r| r.stance_assist_vertical()).collect();
        let (lo, hi) = assist_fz.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        println!("stance vertical assist: {lo:.3} .. {hi:.3} N");
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn simulation_plots(report: &SimulationReport) -> Vec<(&'static str, LinePlot)> {
    let t: Vec<f64> = report.rows.iter().map(|r| r.time).collect();
    let col = |f: &dyn Fn(&exosim_core::simulation::SimulationRow) -> f64| -> Vec<f64> { report.rows.iter().map(f).collect() };
    let knee = LinePlot::new("Knee compressive force", "time [s]", "force [N]")
        .with(Series::from_xy("right", &t, &col(&|r| r.knee_compression[0])))
        .with(Series::from_xy("left", &t, &col(&|r| r.knee_compression[1])));
    let torques = LinePlot::new("Joint torques", "time [s]", "torque [N m]")
        .with(Series::from_xy("hip R", &t, &col(&|r| r.tau[1])))
        .with(Series::from_xy("knee R", &t, &col(&|r| r.tau[2])))
        .with(Series::from_xy("ankle R", &t, &col(&|r| r.tau[3])))
        .with(Series::from_xy("hip L", &t, &col(&|r| r.tau[4])))
        .with(Series::from_xy("knee L", &t, &col(&|r| r.tau[5])))
        .with(Series::from_xy("ankle L", &t, &col(&|r| r.tau[6])));
    let mut out = vec![("knee_forces.svg", knee), ("torques.svg", torques)];
    if report.rows.iter().any(|r| r.hri.is_some()) {
        let hri = |side: Side, f: &dyn Fn(&exosim_core::HriForces) -> f64| -> Vec<f64> {
            report.rows.iter().map(|r| r.hri.map_or(0.0, |h| f(&h[side.index()]))).collect()
        };
        let assist = LinePlot::new("Motor torque and horizontal assist force", "time [s]", "T_m [N m], F_x [N]")
            .with(Series::from_xy("T_m R", &t, &hri(Side::Right, &|h| h.tm)))
            .with(Series::from_xy("T_m L", &t, &hri(Side::Left, &|h| h.tm)))
            .with(Series::from_xy("F_x R", &t, &hri(Side::Right, &|h| h.user_force().x)))
            .with(Series::from_xy("F_x L", &t, &hri(Side::Left, &|h| h.user_force().x)));
        let mut speed = LinePlot::new("Motor torque vs speed", "speed [rpm]", "torque [N m]");
        for side in Side::BOTH {
            let rpm = col(&|r| r.motor_speed_rpm[side.index()]);
            speed = speed.with(Series::from_xy(format!("leg {}", side.suffix()), &rpm, &hri(side, &|h| h.tm)));
        }
        out.push(("assist.svg", assist));
        out.push(("motor_torque_speed.svg", speed));
    }
    out
}

fn optimize_cmd(
    gait_args: &GaitArgs,
    campaign: &Campaign,
    ssp_samples: Option<usize>,
    robot: Option<&Path>,
    human: Option<&Path>,
    out_dir: &Path,
) -> Result<(), Failure> {
    let human = load_human(human)?;
    let mut gait = load_gait_args(gait_args, &human)?;
    if let Some(n) = ssp_samples {
        gait = gait
            .select_ssp(Side::Left, n)
            .ok_or_else(|| anyhow!("gait has fewer than {n} left single-support samples"))
            .usage()?;
    }
    let template = load_robot(robot)?;
    let model = CostModel::new(human, template, &gait, campaign.assist).numeric()?;
    let results = optimize(campaign.strategy, &model, &campaign.bounds, &campaign.weights, &campaign.pso).numeric()?;
    fs::create_dir_all(out_dir).with_context(|| out_dir.display().to_string()).numeric()?;
    write(out_dir, "summary.csv", &summary_table(&model, campaign.strategy, &results))?;

    let trace = |title: &str, x_label: &str, x: &[f64], designs: &[[f64; 4]]| {
        let mut plot = LinePlot::new(title, x_label, "L, r, R [m]; theta_opt [rad]");
        for (k, name) in ["L", "r", "R", "theta_opt"].into_iter().enumerate() {
            let y: Vec<f64> = designs.iter().map(|d| d[k]).collect();
            plot = plot.with(Series::from_xy(name, x, &y));
        }
        plot
    };
    if campaign.strategy == Strategy::PerSample {
        let x: Vec<f64> = model.samples.iter().map(|s| s.index as f64).collect();
        let designs: Vec<[f64; 4]> = results.iter().map(|r| r.best_params).collect();
        let costs: Vec<f64> = results.iter().map(|r| r.best_cost).collect();
        write(out_dir, "design_trace.svg", &trace("Optimal design per sample", "gait sample", &x, &designs).to_svg())?;
        let cost = LinePlot::new("Optimal cost per sample", "gait sample", "cost").with(Series::from_xy("cost", &x, &costs));
        write(out_dir, "cost_trace.svg", &cost.to_svg())?;
        println!("optimized {} samples", results.len());
    } else {
        let r = &results[0];
        let x: Vec<f64> = (0..r.cost_history.len()).map(|i| i as f64).collect();
        write(out_dir, "history.csv", &history_table(&model, r))?;
        write(out_dir, "design_trace.svg", &trace("Global-best design", "iteration", &x, &r.param_history).to_svg())?;
        let cost = LinePlot::new("Global-best cost", "iteration", "cost").with(Series::from_xy("cost", &x, &r.cost_history));
        write(out_dir, "cost_trace.svg", &cost.to_svg())?;
        let d = r.best_params;
        let baseline = campaign.strategy.cost(&model, &RobotParams::default().design(), 0, &campaign.weights);
        println!("strategy {}: best cost {:.6} (default design {:.6})", campaign.strategy.number(), r.best_cost, baseline);
        println!("L = {:.4} m, r = {:.4} m, R = {:.4} m, theta_opt = {:.3} deg", d[0], d[1], d[2], d[3].to_degrees());
        if let Some(g) = model.geometry(&d) {
            println!("LL1 = {:.4} m, LL2 = {:.4} m", g.ll1, g.ll2);
        }
        if let Some(peak) = model.peak_motor_torque(&d) {
            println!("peak stance motor torque: {peak:.3} N m");
        }
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn geometry(path: &Path) -> Result<(), Failure> {
    let exo = load_robot(Some(path))?;
    let p = &exo.params;
    let g = derive_geometry(p.upper, p.arc_radius, p.theta_opt, p.theta_r).numeric()?;
    println!("LL1 = {:.6} m", g.ll1);
    println!("LL2 = {:.6} m", g.ll2);
    println!("theta_LL1 = {:.6} rad ({:.4} deg)", g.theta_ll1, g.theta_ll1.to_degrees());
    println!("theta_LL2 = {:.6} rad ({:.4} deg)", g.theta_ll2, g.theta_ll2.to_degrees());
    Ok(())
}
