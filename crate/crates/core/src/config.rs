//! Run configuration: `section.key = value` lines, `#` comments, unknown keys rejected.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `grid.n` | 513 | node count (≥ 16) |
//! | `grid.r_max` | 12 | truncation radius |
//! | `init.kind` | gaussian | `gaussian`, `ball`, `smoothed_ball` or `file` |
//! | `init.sigma` | 1 | Gaussian width |
//! | `init.radius` | 1 | ball radius |
//! | `init.edge` | 0.25 | logistic edge width of `smoothed_ball` |
//! | `init.path` | unset | snapshot JSON for `file` |
//! | `init.normalize` | true | rescale to unit mass |
//! | `flow.alpha` | 1 | coefficient of ρ² in the non-divergence form, in (0, 1] |
//! | `time.t_end` | 1 | final time |
//! | `time.cfl_safety` | 0.5 | in (0, 1] |
//! | `time.dt_max` | 0.01 | step cap |
//! | `time.rho_floor` | 0 | values below are clipped to 0 after each step |
//! | `time.mass_drift_budget` | 1e-6 | abort when `|m(t) − m(0)|` exceeds it |
//! | `output.every` | 100 | steps between trace rows |
//! | `output.dir` | out | output directory |
//! | `output.snapshots` | none | comma-separated snapshot times |
//! | `diag.gamma` | 0.1 | in (0, 1/7) |
//! | `diag.poincare_eps` | 0.1 | ε of the Poincaré probe |
//! | `seeds.base` | 20240 | seed for every randomized check |
//! | `geodesic.amplitude` | 0.1 | Φ₀ = A·exp(−r²/(2w²)) |
//! | `geodesic.width` | √2 | |
//! | `geodesic.t_end` | 1 | |
//! | `geodesic.dt` | 1e-3 | |
//! | `geodesic.every` | 50 | steps between exported path samples |
//! | `distance.target` | geodesic | `geodesic` (shoot Φ₀ from `geodesic.*`), `gaussian`, `ball`, `smoothed_ball`, `file` |
//! | `distance.sigma` / `distance.radius` / `distance.edge` / `distance.path` | as init | target parameters |
//! | `distance.scale` | 1 | multiplies the target density (mass mismatch ⇒ usage error) |
//! | `distance.dt` | 0.01 | shooting integrator step |
//! | `distance.rtol` | 1e-4 | L¹ terminal residual for convergence |
//! | `distance.max_iter` | 60 | Levenberg–Marquardt iterations |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Gaussian,
    Ball,
    SmoothedBall,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub sigma: f64,
    pub radius: f64,
    pub edge: f64,
    pub path: Option<PathBuf>,
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceTarget {
    Geodesic,
    Profile(InitKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSpec {
    pub amplitude: f64,
    pub width: f64,
    pub t_end: f64,
    pub dt: f64,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSpec {
    pub target: DistanceTarget,
    pub profile: InitSpec,
    pub scale: f64,
    pub dt: f64,
    pub rtol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub r_max: f64,
    pub init: InitSpec,
    pub alpha: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub rho_floor: f64,
    pub mass_drift_budget: f64,
    pub every: usize,
    pub out_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub gamma: f64,
    pub poincare_eps: f64,
    pub seed: u64,
    pub geodesic: GeodesicSpec,
    pub distance: DistanceSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        let init = InitSpec {
            kind: InitKind::Gaussian,
            sigma: 1.0,
            radius: 1.0,
            edge: 0.25,
            path: None,
            normalize: true,
        };
        SimConfig {
            n: 513,
            r_max: 12.0,
            distance: DistanceSpec {
                target: DistanceTarget::Geodesic,
                profile: init.clone(),
                scale: 1.0,
                dt: 1e-2,
                rtol: 1e-4,
                max_iter: 60,
            },
            init,
            alpha: 1.0,
            t_end: 1.0,
            cfl_safety: 0.5,
            dt_max: 1e-2,
            rho_floor: 0.0,
            mass_drift_budget: 1e-6,
            every: 100,
            out_dir: PathBuf::from("out"),
            snapshot_times: Vec::new(),
            gamma: 0.1,
            poincare_eps: 0.1,
            seed: 20240,
            geodesic: GeodesicSpec {
                amplitude: 0.1,
                width: std::f64::consts::SQRT_2,
                t_end: 1.0,
                dt: 1e-3,
                every: 50,
            },
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(key, format!("expected a finite number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true/false, got `{v}`"))),
    }
}

fn parse_kind(key: &str, v: &str) -> Result<InitKind> {
    match v {
        "gaussian" => Ok(InitKind::Gaussian),
        "ball" => Ok(InitKind::Ball),
        "smoothed_ball" => Ok(InitKind::SmoothedBall),
        "file" => Ok(InitKind::File),
        _ => Err(Error::config(key, format!("unknown density kind `{v}`"))),
    }
}

fn kind_name(k: InitKind) -> &'static str {
    match k {
        InitKind::Gaussian => "gaussian",
        InitKind::Ball => "ball",
        InitKind::SmoothedBall => "smoothed_ball",
        InitKind::File => "file",
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

/// Parses and validates a configuration, filling defaults for absent keys.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut c = SimConfig::default();
    let mut seen = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), format!("expected `section.key = value`, got `{line}`")))?;
        let (key, v) = (key.trim(), value.trim());
        if seen.insert(key.to_string(), ()).is_some() {
            return Err(Error::config(key, "given more than once"));
        }
        match key {
            "grid.n" => c.n = parse_usize(key, v)?,
            "grid.r_max" => c.r_max = positive(key, parse_f64(key, v)?)?,
            "init.kind" => c.init.kind = parse_kind(key, v)?,
            "init.sigma" => c.init.sigma = positive(key, parse_f64(key, v)?)?,
            "init.radius" => c.init.radius = positive(key, parse_f64(key, v)?)?,
            "init.edge" => c.init.edge = positive(key, parse_f64(key, v)?)?,
            "init.path" => c.init.path = Some(PathBuf::from(v)),
            "init.normalize" => c.init.normalize = parse_bool(key, v)?,
            "flow.alpha" => c.alpha = parse_f64(key, v)?,
            "time.t_end" => c.t_end = parse_f64(key, v)?,
            "time.cfl_safety" => c.cfl_safety = parse_f64(key, v)?,
            "time.dt_max" => c.dt_max = positive(key, parse_f64(key, v)?)?,
            "time.rho_floor" => c.rho_floor = parse_f64(key, v)?,
            "time.mass_drift_budget" => c.mass_drift_budget = positive(key, parse_f64(key, v)?)?,
            "output.every" => c.every = parse_usize(key, v)?,
            "output.dir" => c.out_dir = PathBuf::from(v),
            "output.snapshots" => {
                c.snapshot_times = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64(key, s))
                    .collect::<Result<_>>()?
            }
            "diag.gamma" => c.gamma = parse_f64(key, v)?,
            "diag.poincare_eps" => c.poincare_eps = positive(key, parse_f64(key, v)?)?,
            "seeds.base" => c.seed = v.parse().map_err(|_| Error::config(key, format!("expected an integer seed, got `{v}`")))?,
            "geodesic.amplitude" => c.geodesic.amplitude = parse_f64(key, v)?,
            "geodesic.width" => c.geodesic.width = positive(key, parse_f64(key, v)?)?,
            "geodesic.t_end" => c.geodesic.t_end = parse_f64(key, v)?,
            "geodesic.dt" => c.geodesic.dt = positive(key, parse_f64(key, v)?)?,
            "geodesic.every" => c.geodesic.every = parse_usize(key, v)?,
            "distance.target" => {
                c.distance.target = match v {
                    "geodesic" => DistanceTarget::Geodesic,
                    other => DistanceTarget::Profile(parse_kind(key, other)?),
                }
            }
            "distance.sigma" => c.distance.profile.sigma = positive(key, parse_f64(key, v)?)?,
            "distance.radius" => c.distance.profile.radius = positive(key, parse_f64(key, v)?)?,
            "distance.edge" => c.distance.profile.edge = positive(key, parse_f64(key, v)?)?,
            "distance.path" => c.distance.profile.path = Some(PathBuf::from(v)),
            "distance.scale" => c.distance.scale = positive(key, parse_f64(key, v)?)?,
            "distance.dt" => c.distance.dt = positive(key, parse_f64(key, v)?)?,
            "distance.rtol" => c.distance.rtol = positive(key, parse_f64(key, v)?)?,
            "distance.max_iter" => c.distance.max_iter = parse_usize(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
    }
    c.validate()?;
    Ok(c)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < crate::grid::MIN_NODES {
            return Err(Error::config("grid.n", format!("need at least {} nodes", crate::grid::MIN_NODES)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("flow.alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::config("time.t_end", "must be nonnegative"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config("time.cfl_safety", format!("must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if self.rho_floor < 0.0 {
            return Err(Error::config("time.rho_floor", "must be nonnegative"));
        }
        if self.every == 0 {
            return Err(Error::config("output.every", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0 / 7.0) {
            return Err(Error::config("diag.gamma", format!("must lie in the open interval (0, 1/7), got {}", self.gamma)));
        }
        if self.snapshot_times.iter().any(|t| *t < 0.0) {
            return Err(Error::config("output.snapshots", "times must be nonnegative"));
        }
        if self.init.kind == InitKind::File && self.init.path.is_none() {
            return Err(Error::config("init.path", "required when init.kind = file"));
        }
        if self.distance.target == DistanceTarget::Profile(InitKind::File) && self.distance.profile.path.is_none() {
            return Err(Error::config("distance.path", "required when distance.target = file"));
        }
        if !(self.geodesic.t_end >= 0.0) {
            return Err(Error::config("geodesic.t_end", "must be nonnegative"));
        }
        if self.geodesic.every == 0 {
            return Err(Error::config("geodesic.every", "must be at least 1"));
        }
        Ok(())
    }

    /// The fully resolved configuration in the input syntax.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let _ = writeln!(s, "grid.n = {}", self.n);
        let _ = writeln!(s, "grid.r_max = {}", self.r_max);
        let _ = writeln!(s, "init.kind = {}", kind_name(self.init.kind));
        let _ = writeln!(s, "init.sigma = {}", self.init.sigma);
        let _ = writeln!(s, "init.radius = {}", self.init.radius);
        let _ = writeln!(s, "init.edge = {}", self.init.edge);
        if let Some(p) = path(&self.init.path) {
            let _ = writeln!(s, "init.path = {p}");
        }
        let _ = writeln!(s, "init.normalize = {}", self.init.normalize);
        let _ = writeln!(s, "flow.alpha = {}", self.alpha);
        let _ = writeln!(s, "time.t_end = {}", self.t_end);
        let _ = writeln!(s, "time.cfl_safety = {}", self.cfl_safety);
        let _ = writeln!(s, "time.dt_max = {}", self.dt_max);
        let _ = writeln!(s, "time.rho_floor = {}", self.rho_floor);
        let _ = writeln!(s, "time.mass_drift_budget = {}", self.mass_drift_budget);
        let _ = writeln!(s, "output.every = {}", self.every);
        let _ = writeln!(s, "output.dir = {}", self.out_dir.display());
        if !self.snapshot_times.is_empty() {
            let t: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(s, "output.snapshots = {}", t.join(", "));
        }
        let _ = writeln!(s, "diag.gamma = {}", self.gamma);
        let _ = writeln!(s, "diag.poincare_eps = {}", self.poincare_eps);
        let _ = writeln!(s, "seeds.base = {}", self.seed);
        let _ = writeln!(s, "geodesic.amplitude = {}", self.geodesic.amplitude);
        let _ = writeln!(s, "geodesic.width = {}", self.geodesic.width);
        let _ = writeln!(s, "geodesic.t_end = {}", self.geodesic.t_end);
        let _ = writeln!(s, "geodesic.dt = {}", self.geodesic.dt);
        let _ = writeln!(s, "geodesic.every = {}", self.geodesic.every);
        let target = match self.distance.target {
            DistanceTarget::Geodesic => "geodesic",
            DistanceTarget::Profile(k) => kind_name(k),
        };
        let _ = writeln!(s, "distance.target = {target}");
        let _ = writeln!(s, "distance.sigma = {}", self.distance.profile.sigma);
        let _ = writeln!(s, "distance.radius = {}", self.distance.profile.radius);
        let _ = writeln!(s, "distance.edge = {}", self.distance.profile.edge);
        if let Some(p) = path(&self.distance.profile.path) {
            let _ = writeln!(s, "distance.path = {p}");
        }
        let _ = writeln!(s, "distance.scale = {}", self.distance.scale);
        let _ = writeln!(s, "distance.dt = {}", self.distance.dt);
        let _ = writeln!(s, "distance.rtol = {}", self.distance.rtol);
        let _ = writeln!(s, "distance.max_iter = {}", self.distance.max_iter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), SimConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), SimConfig::default());
    }

    #[test]
    fn gamma_outside_open_interval_is_rejected() {
        let e = parse_config("diag.gamma = 0.2").unwrap_err();
        match e {
            Error::Config { key, message } => {
                assert_eq!(key, "diag.gamma");
                assert!(message.contains("(0, 1/7)"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config("diag.gamma = 0.125").is_ok());
        assert!(parse_config("diag.gamma = 0").is_err());
    }

    #[test]
    fn unknown_keys_and_type_errors_name_the_key() {
        for (text, key) in [
            ("grid.nodes = 3", "grid.nodes"),
            ("grid.n = many", "grid.n"),
            ("init.normalize = maybe", "init.normalize"),
            ("flow.alpha = 1.5", "flow.alpha"),
            ("time.cfl_safety = 0", "time.cfl_safety"),
            ("init.kind = file", "init.path"),
        ] {
            match parse_config(text) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn resolved_echo_round_trips() {
        let c = parse_config("init.kind = ball\ninit.radius = 2\noutput.snapshots = 0.5, 1\nseeds.base = 7").unwrap();
        assert_eq!(parse_config(&c.resolved()).unwrap(), c);
    }
}
