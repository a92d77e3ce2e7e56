//! Flat `key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Lists are comma
//! separated; seed lists also accept half-open ranges such as `0..100`.
//! Every key is optional and falls back to a per-mode default.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `mode` | must match the subcommand when present | |
//! | `u_grid` | Hubbard U values (units of 2𝒟) | `0,0.5,1,1.5,2,2.5,3` |
//! | `lambda_c` | bath level of the standalone embedding problems | `0` |
//! | `noise` | `none`, `gaussian` or `circuit` | `gaussian` (scans, landscape), `circuit` (risb-scan, calibrate) |
//! | `noise.p1`, `noise.p2` | depolarizing probability after 1- and 2-qubit gates | `0.001`, `0.01` |
//! | `noise.gamma` | amplitude damping per gate layer | `0` |
//! | `noise.readout` | symmetric readout flip probability per qubit | `0.02` |
//! | `noise.shots` | shots per Pauli term, or `inf` | `4096` |
//! | `noise.mitigate` | readout mitigation from a sampled calibration | `false` |
//! | `noise.calibration_shots` | shots per calibration column | `100000` |
//! | `sigma_alpha` | Gaussian noise and nominal training σ, units of abs(𝒟) | `0.2` |
//! | `sigma_policy` | `nominal` or `reported` training σ | `nominal` |
//! | `fit.exact` | `constraints` or `floor` (σ = 1e-8 on exact points) | `constraints` |
//! | `fit.t` | prior weight `t ≥ 0` | `0` |
//! | `optimizers` | subset of `exact,gpr,seq1d,baseline` for eh-scan | all four |
//! | `solvers` | subset of `ed,gpr,seq1d` for risb-scan | all three |
//! | `seeds` | noise seeds | `0..10` (eh-scan), `0..3` (risb-scan), `0` otherwise |
//! | `output_dir` | where artifacts are written | `out` |
//! | `seq1d.iterations` | sweeps of the sequential optimizer | `20` |
//! | `baseline.evals` | evaluation budget of the baseline | `20` |
//! | `landscape.u` | U of the landscape dump | first `u_grid` entry |
//! | `landscape.points` | grid points per axis | `101` |
//! | `risb.tol`, `risb.max_iter`, `risb.repeats`, `risb.damping`, `risb.window` | loop controls | solver dependent |
//! | `plots` | emit SVG plots next to the CSVs | `true` |

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pgpr_core::optimize::SigmaPolicy;
use pgpr_core::simulator::Shots;
use pgpr_core::surrogate::ExactHandling;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EhScan,
    RisbScan,
    Landscape,
    Calibrate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::EhScan => "eh-scan",
            Mode::RisbScan => "risb-scan",
            Mode::Landscape => "landscape",
            Mode::Calibrate => "calibrate",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eh-scan" => Ok(Mode::EhScan),
            "risb-scan" => Ok(Mode::RisbScan),
            "landscape" => Ok(Mode::Landscape),
            "calibrate" => Ok(Mode::Calibrate),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Gaussian,
    Circuit,
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(NoiseKind::None),
            "gaussian" => Ok(NoiseKind::Gaussian),
            "circuit" => Ok(NoiseKind::Circuit),
            _ => Err(format!("expected none, gaussian or circuit, got `{s}`")),
        }
    }
}

/// Variants of the embedding solve compared in eh-scan, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OptimizerKind {
    Exact,
    Gpr,
    Seq1d,
    Baseline,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Exact => "exact",
            OptimizerKind::Gpr => "gpr",
            OptimizerKind::Seq1d => "seq1d",
            OptimizerKind::Baseline => "baseline",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(OptimizerKind::Exact),
            "gpr" => Ok(OptimizerKind::Gpr),
            "seq1d" => Ok(OptimizerKind::Seq1d),
            "baseline" => Ok(OptimizerKind::Baseline),
            _ => Err(format!("unknown optimizer `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolverKind {
    Ed,
    Gpr,
    Seq1d,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ed => "ed",
            SolverKind::Gpr => "gpr",
            SolverKind::Seq1d => "seq1d",
        }
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ed" => Ok(SolverKind::Ed),
            "gpr" => Ok(SolverKind::Gpr),
            "seq1d" => Ok(SolverKind::Seq1d),
            _ => Err(format!("unknown solver `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RisbOverrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub repeats: Option<u64>,
    pub damping: Option<f64>,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub u_grid: Vec<f64>,
    pub lambda_c: f64,
    pub noise: NoiseKind,
    pub p1: f64,
    pub p2: f64,
    pub gamma: f64,
    pub readout: f64,
    pub shots: Shots,
    pub mitigate: bool,
    pub calibration_shots: u32,
    pub sigma_alpha: f64,
    pub sigma_policy: SigmaPolicy,
    pub exact_handling: ExactHandling,
    pub prior_t: f64,
    pub optimizers: Vec<OptimizerKind>,
    pub solvers: Vec<SolverKind>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub seq1d_iterations: usize,
    pub baseline_evals: u64,
    pub landscape_u: Option<f64>,
    pub landscape_points: usize,
    pub risb: RisbOverrides,
    pub plots: bool,
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        let circuit = matches!(mode, Mode::RisbScan | Mode::Calibrate);
        Self {
            mode,
            u_grid: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            lambda_c: 0.0,
            noise: if circuit { NoiseKind::Circuit } else { NoiseKind::Gaussian },
            p1: 0.001,
            p2: 0.01,
            gamma: 0.0,
            readout: 0.02,
            shots: Shots::Finite(4096),
            mitigate: false,
            calibration_shots: 100_000,
            sigma_alpha: 0.2,
            sigma_policy: SigmaPolicy::Nominal,
            exact_handling: ExactHandling::Constraints,
            prior_t: 0.0,
            optimizers: vec![
                OptimizerKind::Exact,
                OptimizerKind::Gpr,
                OptimizerKind::Seq1d,
                OptimizerKind::Baseline,
            ],
            solvers: vec![SolverKind::Ed, SolverKind::Gpr, SolverKind::Seq1d],
            seeds: match mode {
                Mode::EhScan => (0..10).collect(),
                Mode::RisbScan => (0..3).collect(),
                _ => vec![0],
            },
            output_dir: PathBuf::from("out"),
            seq1d_iterations: 20,
            baseline_evals: 20,
            landscape_u: None,
            landscape_points: 101,
            risb: RisbOverrides::default(),
            plots: true,
        }
    }

    pub fn load(mode: Mode, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            key: "--config".into(),
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(mode, &text)
    }

    pub fn parse(mode: Mode, text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(mode);
        let mut seen = BTreeSet::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |key: &str, message: String| CliError::Config {
                key: key.to_string(),
                line: Some(number + 1),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(line, "expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(fail(key, "duplicate key".into()));
            }
            cfg.apply(key, value).map_err(|m| fail(key, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "mode" => {
                let m: Mode = value.parse()?;
                if m != self.mode {
                    return Err(format!("file is for `{}` but the subcommand is `{}`", m.name(), self.mode.name()));
                }
            }
            "u_grid" => self.u_grid = list(value)?,
            "lambda_c" => self.lambda_c = number(value)?,
            "noise" => self.noise = value.parse()?,
            "noise.p1" => self.p1 = number(value)?,
            "noise.p2" => self.p2 = number(value)?,
            "noise.gamma" => self.gamma = number(value)?,
            "noise.readout" => self.readout = number(value)?,
            "noise.shots" => {
                self.shots = match value {
                    "inf" => Shots::Infinite,
                    v => Shots::Finite(number(v)?),
                }
            }
            "noise.mitigate" => self.mitigate = boolean(value)?,
            "noise.calibration_shots" => self.calibration_shots = number(value)?,
            "sigma_alpha" => self.sigma_alpha = number(value)?,
            "sigma_policy" => {
                self.sigma_policy = match value {
                    "nominal" => SigmaPolicy::Nominal,
                    "reported" => SigmaPolicy::Reported,
                    v => return Err(format!("expected nominal or reported, got `{v}`")),
                }
            }
            "fit.exact" => {
                self.exact_handling = match value {
                    "constraints" => ExactHandling::Constraints,
                    "floor" => ExactHandling::SigmaFloor(1e-8),
                    v => return Err(format!("expected constraints or floor, got `{v}`")),
                }
            }
            "fit.t" => self.prior_t = number(value)?,
            "optimizers" => self.optimizers = unique(list(value)?),
            "solvers" => self.solvers = unique(list(value)?),
            "seeds" => self.seeds = seeds(value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("empty path".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            "seq1d.iterations" => self.seq1d_iterations = number(value)?,
            "baseline.evals" => self.baseline_evals = number(value)?,
            "landscape.u" => self.landscape_u = Some(number(value)?),
            "landscape.points" => self.landscape_points = number(value)?,
            "risb.tol" => self.risb.tol = Some(number(value)?),
            "risb.max_iter" => self.risb.max_iter = Some(number(value)?),
            "risb.repeats" => self.risb.repeats = Some(number(value)?),
            "risb.damping" => self.risb.damping = Some(number(value)?),
            "risb.window" => self.risb.window = Some(number(value)?),
            "plots" => self.plots = boolean(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |key: &str, message: &str| {
            Err(CliError::Config {
                key: key.into(),
                line: None,
                message: message.into(),
            })
        };
        if self.u_grid.is_empty() {
            return fail("u_grid", "must not be empty");
        }
        if self.u_grid.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return fail("u_grid", "values must be finite and non-negative");
        }
        if !self.lambda_c.is_finite() {
            return fail("lambda_c", "must be finite");
        }
        for (key, p) in [
            ("noise.p1", self.p1),
            ("noise.p2", self.p2),
            ("noise.gamma", self.gamma),
            ("noise.readout", self.readout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(key, "probability outside [0, 1]");
            }
        }
        if self.shots == Shots::Finite(0) {
            return fail("noise.shots", "must be at least 1");
        }
        if self.calibration_shots == 0 {
            return fail("noise.calibration_shots", "must be at least 1");
        }
        if !(self.sigma_alpha.is_finite() && self.sigma_alpha >= 0.0) {
            return fail("sigma_alpha", "must be finite and non-negative");
        }
        if !(self.prior_t.is_finite() && self.prior_t >= 0.0) {
            return fail("fit.t", "must be finite and non-negative");
        }
        if self.optimizers.is_empty() {
            return fail("optimizers", "select at least one optimizer");
        }
        if self.solvers.is_empty() {
            return fail("solvers", "select at least one solver");
        }
        if self.seeds.is_empty() {
            return fail("seeds", "must not be empty");
        }
        if self.seq1d_iterations == 0 {
            return fail("seq1d.iterations", "must be at least 1");
        }
        if self.baseline_evals < 3 {
            return fail("baseline.evals", "must be at least 3");
        }
        if let Some(u) = self.landscape_u {
            if !(u.is_finite() && u >= 0.0) {
                return fail("landscape.u", "must be finite and non-negative");
            }
        }
        if self.landscape_points < 2 {
            return fail("landscape.points", "must be at least 2");
        }
        if let Some(t) = self.risb.tol {
            if !(t > 0.0) {
                return fail("risb.tol", "must be positive");
            }
        }
        if self.risb.max_iter == Some(0) {
            return fail("risb.max_iter", "must be at least 1");
        }
        if self.risb.repeats == Some(0) {
            return fail("risb.repeats", "must be at least 1");
        }
        if self.risb.window == Some(0) {
            return fail("risb.window", "must be at least 1");
        }
        if let Some(d) = self.risb.damping {
            if !(d > 0.0 && d <= 1.0) {
                return fail("risb.damping", "must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    /// Canonical dump, parseable back by [`RunConfig::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        writeln!(f, "mode = {}", self.mode.name())?;
        writeln!(f, "u_grid = {}", join(self.u_grid.iter().map(|u| u.to_string()).collect()))?;
        writeln!(f, "lambda_c = {}", self.lambda_c)?;
        let noise = match self.noise {
            NoiseKind::None => "none",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Circuit => "circuit",
        };
        writeln!(f, "noise = {noise}")?;
        writeln!(f, "noise.p1 = {}", self.p1)?;
        writeln!(f, "noise.p2 = {}", self.p2)?;
        writeln!(f, "noise.gamma = {}", self.gamma)?;
        writeln!(f, "noise.readout = {}", self.readout)?;
        match self.shots {
            Shots::Infinite => writeln!(f, "noise.shots = inf")?,
            Shots::Finite(s) => writeln!(f, "noise.shots = {s}")?,
        }
        writeln!(f, "noise.mitigate = {}", self.mitigate)?;
        writeln!(f, "noise.calibration_shots = {}", self.calibration_shots)?;
        writeln!(f, "sigma_alpha = {}", self.sigma_alpha)?;
        let policy = match self.sigma_policy {
            SigmaPolicy::Nominal => "nominal",
            SigmaPolicy::Reported => "reported",
        };
        writeln!(f, "sigma_policy = {policy}")?;
        let exact = match self.exact_handling {
            ExactHandling::Constraints => "constraints",
            ExactHandling::SigmaFloor(_) => "floor",
        };
        writeln!(f, "fit.exact = {exact}")?;
        writeln!(f, "fit.t = {}", self.prior_t)?;
        writeln!(f, "optimizers = {}", join(self.optimizers.iter().map(|o| o.name().into()).collect()))?;
        writeln!(f, "solvers = {}", join(self.solvers.iter().map(|s| s.name().into()).collect()))?;
        writeln!(f, "seeds = {}", join(self.seeds.iter().map(|s| s.to_string()).collect()))?;
        writeln!(f, "output_dir = {}", self.output_dir.display())?;
        writeln!(f, "seq1d.iterations = {}", self.seq1d_iterations)?;
        writeln!(f, "baseline.evals = {}", self.baseline_evals)?;
        if let Some(u) = self.landscape_u {
            writeln!(f, "landscape.u = {u}")?;
        }
        writeln!(f, "landscape.points = {}", self.landscape_points)?;
        let r = &self.risb;
        if let Some(v) = r.tol {
            writeln!(f, "risb.tol = {v}")?;
        }
        if let Some(v) = r.max_iter {
            writeln!(f, "risb.max_iter = {v}")?;
        }
        if let Some(v) = r.repeats {
            writeln!(f, "risb.repeats = {v}")?;
        }
        if let Some(v) = r.damping {
            writeln!(f, "risb.damping = {v}")?;
        }
        if let Some(v) = r.window {
            writeln!(f, "risb.window = {v}")?;
        }
        writeln!(f, "plots = {}", self.plots)
    }
}

fn number<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

fn boolean(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{value}`")),
    }
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn unique<T: Ord + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v.dedup();
    v
}

fn seeds(value: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (number(a.trim())?, number(b.trim())?);
                if b <= a {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..b);
            }
            None => out.push(number(part)?),
        }
    }
    Ok(out)
}
