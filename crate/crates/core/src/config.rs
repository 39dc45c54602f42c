//! `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Every angle key
//! also accepts a `_deg` suffixed variant in degrees. Keys left unconsumed after all
//! readers have run are reported as errors, so typos never pass silently.

use std::collections::BTreeMap;
use std::path::Path;

use crate::human::{HumanModel, Side};
use crate::optimizer::{CostWeights, ParameterBounds, PsoConfig, Strategy};
use crate::simulation::{AssistPoint, Exoskeleton};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key:?}: {reason}")]
    Value { line: usize, key: String, value: String, reason: String },
    #[error("both {key:?} and {key}_deg given")]
    Conflict { key: String },
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed entries not yet consumed by a reader.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            }
            if entries.contains_key(&key) {
                return Err(ConfigError::Duplicate { line, key });
            }
            entries.insert(key, Entry { line, value: v.trim().to_string() });
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Merges `other` into `self`; a key present in both is a duplicate.
    pub fn merge(&mut self, other: ConfigFile) -> Result<(), ConfigError> {
        for (key, e) in other.entries {
            if self.entries.contains_key(&key) {
                return Err(ConfigError::Duplicate { line: e.line, key });
            }
            self.entries.insert(key, e);
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn invalid(key: &str, e: &Entry, reason: impl Into<String>) -> ConfigError {
        ConfigError::Value { line: e.line, key: key.to_string(), value: e.value.clone(), reason: reason.into() }
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.entries.remove(key) else { return Ok(None) };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(Self::invalid(key, &e, "expected a finite number")),
        }
    }

    /// Angle in radians from `key`, or from `key_deg` in degrees.
    pub fn take_angle(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let rad = self.take_f64(key)?;
        let deg = self.take_f64(&format!("{key}_deg"))?;
        match (rad, deg) {
            (Some(_), Some(_)) => Err(ConfigError::Conflict { key: key.to_string() }),
            (r, d) => Ok(r.or(d.map(f64::to_radians))),
        }
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.entries.remove(key) else { return Ok(None) };
        e.value.parse().map(Some).map_err(|_| Self::invalid(key, &e, "expected a non-negative integer"))
    }

    pub fn take_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        let Some(e) = self.entries.remove(key) else { return Ok(None) };
        e.value.parse().map(Some).map_err(|_| Self::invalid(key, &e, "expected a non-negative integer"))
    }

    fn take_parsed<V>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<V, String>) -> Result<Option<V>, ConfigError> {
        let Some(e) = self.entries.remove(key) else { return Ok(None) };
        parse(&e.value).map(Some).map_err(|r| Self::invalid(key, &e, r))
    }

    /// Errors on the first entry no reader consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => Err(ConfigError::UnknownKey { line: e.line, key }),
            None => Ok(()),
        }
    }
}

fn set(target: &mut f64, v: Option<f64>) {
    if let Some(v) = v {
        *target = v;
    }
}

/// Segment overrides: `<seg>_mass`, `<seg>_length`, `<seg>_com`, `<seg>_inertia` for
/// `pelvis`, `trunk`, `thigh`, `shank`, `foot` (legs apply to both sides), plus
/// `ankle_height`, `heel_offset`, `hip_offset`, `trunk_offset`, `gravity`,
/// `dsp_tolerance`. A changed mass or length recomputes the uniform-rod inertia and the
/// CoG placement unless those are given explicitly.
pub fn read_human(cfg: &mut ConfigFile, base: HumanModel<f64>) -> Result<HumanModel<f64>, ConfigError> {
    let mut h = base;
    set(&mut h.ankle_height, cfg.take_f64("ankle_height")?);
    set(&mut h.heel_offset, cfg.take_f64("heel_offset")?);
    set(&mut h.hip_offset, cfg.take_f64("hip_offset")?);
    set(&mut h.trunk_offset, cfg.take_f64("trunk_offset")?);
    set(&mut h.gravity, cfg.take_f64("gravity")?);
    set(&mut h.dsp_tolerance, cfg.take_f64("dsp_tolerance")?);
    for seg in ["pelvis", "trunk", "thigh", "shank", "foot"] {
        let mass = cfg.take_f64(&format!("{seg}_mass"))?;
        let length = cfg.take_f64(&format!("{seg}_length"))?;
        let com = cfg.take_f64(&format!("{seg}_com"))?;
        let inertia = cfg.take_f64(&format!("{seg}_inertia"))?;
        let (heel, ankle_h) = (h.heel_offset, h.ankle_height);
        let update = |b: &mut crate::human::BodyParams<f64>| {
            let reshaped = mass.is_some() || length.is_some();
            set(&mut b.mass, mass);
            set(&mut b.length, length);
            if reshaped {
                b.inertia_cog = b.mass * b.length * b.length / 12.0;
                b.com_distance = if seg == "foot" {
                    (b.length - heel).hypot(ankle_h) / 2.0
                } else {
                    b.length / 2.0
                };
            }
            set(&mut b.com_distance, com);
            set(&mut b.inertia_cog, inertia);
        };
        match seg {
            "pelvis" => update(&mut h.pelvis),
            "trunk" => update(&mut h.trunk),
            _ => {
                for side in Side::BOTH {
                    let k = side.index();
                    match seg {
                        "thigh" => update(&mut h.thigh[k]),
                        "shank" => update(&mut h.shank[k]),
                        _ => update(&mut h.foot[k]),
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Robot keys: `upper`, `lower`, `arc_radius`, `theta_opt`, `theta_r`, `ankle_offset_x`,
/// `ankle_offset_z`, `m1`, `m2`, `upper_com_fraction`, `upper_com_lateral`,
/// `lower_com_fraction`, `lower_com_angle`, `inertia_upper`, `inertia_lower`, and
/// `assist_point = cog | pelvis`.
pub fn read_robot(cfg: &mut ConfigFile, base: Exoskeleton) -> Result<Exoskeleton, ConfigError> {
    let mut e = base;
    let p = &mut e.params;
    set(&mut p.upper, cfg.take_f64("upper")?);
    set(&mut p.lower, cfg.take_f64("lower")?);
    set(&mut p.arc_radius, cfg.take_f64("arc_radius")?);
    set(&mut p.theta_opt, cfg.take_angle("theta_opt")?);
    set(&mut p.theta_r, cfg.take_angle("theta_r")?);
    set(&mut p.ankle_offset.x, cfg.take_f64("ankle_offset_x")?);
    set(&mut p.ankle_offset.y, cfg.take_f64("ankle_offset_z")?);
    set(&mut p.m1, cfg.take_f64("m1")?);
    set(&mut p.m2, cfg.take_f64("m2")?);
    set(&mut p.upper_com_fraction, cfg.take_f64("upper_com_fraction")?);
    set(&mut p.upper_com_lateral, cfg.take_f64("upper_com_lateral")?);
    set(&mut p.lower_com_fraction, cfg.take_f64("lower_com_fraction")?);
    set(&mut p.lower_com_angle, cfg.take_angle("lower_com_angle")?);
    if let Some(v) = cfg.take_f64("inertia_upper")? {
        p.inertia_upper = Some(v);
    }
    if let Some(v) = cfg.take_f64("inertia_lower")? {
        p.inertia_lower = Some(v);
    }
    if let Some(a) = cfg.take_parsed("assist_point", |s| match s.to_ascii_lowercase().as_str() {
        "cog" => Ok(AssistPoint::Cog),
        "pelvis" => Ok(AssistPoint::Pelvis),
        _ => Err("expected cog or pelvis".to_string()),
    })? {
        e.assist_point = a;
    }
    Ok(e)
}

/// `L_min`, `L_max`, `r_min`, `r_max`, `R_min`, `R_max`, `theta_opt_min`, `theta_opt_max`.
pub fn read_bounds(cfg: &mut ConfigFile, base: ParameterBounds) -> Result<ParameterBounds, ConfigError> {
    let mut b = base;
    for (k, name) in ["L", "r", "R"].into_iter().enumerate() {
        set(&mut b.lower[k], cfg.take_f64(&format!("{name}_min"))?);
        set(&mut b.upper[k], cfg.take_f64(&format!("{name}_max"))?);
    }
    set(&mut b.lower[3], cfg.take_angle("theta_opt_min")?);
    set(&mut b.upper[3], cfg.take_angle("theta_opt_max")?);
    Ok(b)
}

/// `w1`, `w2`, `w3`, `w_penalty`.
pub fn read_weights(cfg: &mut ConfigFile, base: CostWeights) -> Result<CostWeights, ConfigError> {
    let mut w = base;
    set(&mut w.w1, cfg.take_f64("w1")?);
    set(&mut w.w2, cfg.take_f64("w2")?);
    set(&mut w.w3, cfg.take_f64("w3")?);
    set(&mut w.w_penalty, cfg.take_f64("w_penalty")?);
    Ok(w)
}

/// `population`, `iterations`, `inertia`, `cognitive`, `social`, `velocity_clamp`, `seed`.
pub fn read_pso(cfg: &mut ConfigFile, base: PsoConfig) -> Result<PsoConfig, ConfigError> {
    let mut c = base;
    if let Some(v) = cfg.take_usize("population")? {
        c.population = v;
    }
    if let Some(v) = cfg.take_usize("iterations")? {
        c.max_iterations = v;
    }
    set(&mut c.inertia, cfg.take_f64("inertia")?);
    set(&mut c.cognitive, cfg.take_f64("cognitive")?);
    set(&mut c.social, cfg.take_f64("social")?);
    set(&mut c.velocity_clamp, cfg.take_f64("velocity_clamp")?);
    if let Some(v) = cfg.take_u64("seed")? {
        c.seed = v;
    }
    Ok(c)
}

/// Everything an optimization run needs besides the models and the gait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Campaign {
    pub strategy: Strategy,
    /// Seat share of the user's weight.
    pub assist: f64,
    pub bounds: ParameterBounds,
    pub weights: CostWeights,
    pub pso: PsoConfig,
}

impl Default for Campaign {
    fn default() -> Self {
        Self {
            strategy: Strategy::WholeGait,
            assist: 0.33,
            bounds: ParameterBounds::default(),
            weights: CostWeights::default(),
            pso: PsoConfig::default(),
        }
    }
}

/// `strategy`, `assist`, plus the bound, weight and swarm keys.
pub fn read_campaign(cfg: &mut ConfigFile, base: Campaign) -> Result<Campaign, ConfigError> {
    let mut c = base;
    if let Some(s) = cfg.take_parsed("strategy", |s| s.parse::<Strategy>().map_err(|e| e.to_string()))? {
        c.strategy = s;
    }
    set(&mut c.assist, cfg.take_f64("assist")?);
    c.bounds = read_bounds(cfg, c.bounds)?;
    c.weights = read_weights(cfg, c.weights)?;
    c.pso = read_pso(cfg, c.pso)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::human::build_default_human;
    use crate::robot::RobotParams;

    #[test]
    fn parses_comments_and_degrees() {
        let mut cfg = ConfigFile::parse("# robot\nupper = 0.44  # m\n\ntheta_opt_deg=34\nassist_point = pelvis\n").unwrap();
        let e = read_robot(&mut cfg, Exoskeleton::new(RobotParams::default())).unwrap();
        cfg.finish().unwrap();
        assert_eq!(e.params.upper, 0.44);
        assert!((e.params.theta_opt - 34f64.to_radians()).abs() < 1e-15);
        assert_eq!(e.assist_point, AssistPoint::Pelvis);
        assert_eq!(e.params.lower, 0.55);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ConfigFile::parse("upper 0.4"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("a=1\na=2"), Err(ConfigError::Duplicate { line: 2, .. })));
        let mut cfg = ConfigFile::parse("upper = abc").unwrap();
        assert!(matches!(read_robot(&mut cfg, Exoskeleton::new(RobotParams::default())), Err(ConfigError::Value { .. })));
        let mut cfg = ConfigFile::parse("theta_opt = 0.5\ntheta_opt_deg = 30").unwrap();
        assert!(matches!(read_robot(&mut cfg, Exoskeleton::new(RobotParams::default())), Err(ConfigError::Conflict { .. })));
        let mut cfg = ConfigFile::parse("upper = 0.5\nuper = 0.4").unwrap();
        read_robot(&mut cfg, Exoskeleton::new(RobotParams::default())).unwrap();
        assert!(matches!(cfg.finish(), Err(ConfigError::UnknownKey { line: 2, .. })));
    }

    #[test]
    fn campaign_and_human() {
        let text = "strategy = 3\nassist = 0.2\nL_min = 0.3\ntheta_opt_max_deg = 45\nw1 = 0\nseed = 9\niterations = 10\n\
thigh_mass = 10\ngravity = 9.8\n";
        let mut cfg = ConfigFile::parse(text).unwrap();
        let c = read_campaign(&mut cfg, Campaign::default()).unwrap();
        let h = read_human(&mut cfg, build_default_human()).unwrap();
        cfg.finish().unwrap();
        assert_eq!(c.strategy, Strategy::HumanInLoop);
        assert_eq!((c.assist, c.bounds.lower[0], c.weights.w1, c.pso.seed, c.pso.max_iterations), (0.2, 0.3, 0.0, 9, 10));
        assert!((c.bounds.upper[3] - 45f64.to_radians()).abs() < 1e-15);
        assert_eq!(h.thigh[0].mass, 10.0);
        assert_eq!(h.thigh[1].mass, 10.0);
        assert!((h.thigh[1].inertia_cog - 10.0 * 0.16 / 12.0).abs() < 1e-15);
        assert_eq!(h.gravity, 9.8);
        // foot placement recomputed from the default geometry
        let mut cfg = ConfigFile::parse("foot_mass = 1.56").unwrap();
        let h2 = read_human(&mut cfg, build_default_human()).unwrap();
        assert!((h2.foot[0].com_distance - build_default_human::<f64>().foot[0].com_distance).abs() < 1e-15);
    }
}
