use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{StrikeMode, THREE_ASSET_SIGMA3};
use crate::pricing::Method;

/// Dynamics of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    BlackScholes,
    VarianceGamma,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::BlackScholes => "bs",
            ModelKind::VarianceGamma => "vg",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bs" => Ok(ModelKind::BlackScholes),
            "vg" => Ok(ModelKind::VarianceGamma),
            _ => Err(Error::ConfigInvalid(format!("unknown model `{s}`"))),
        }
    }
}

/// Which problem instance the sweep prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// Seeded random instance of dimension `d`.
    Random,
    /// The fixed three-asset Variance-Gamma example.
    ThreeAsset,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Random => "random",
            InstanceKind::ThreeAsset => "three_asset",
        })
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InstanceKind::Random),
            "three_asset" => Ok(InstanceKind::ThreeAsset),
            _ => Err(Error::ConfigInvalid(format!("unknown instance `{s}`"))),
        }
    }
}

/// A convergence study, read from a flat `key = value` file. List-valued
/// keys are repeated, one entry per line; `#` starts a comment.
///
/// ```text
/// model = bs
/// d = 8
/// seed = 7
/// strike_mode = itm
/// methods = MC
/// methods = QMC+CS
/// budgets = 18
/// budgets = 108
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub instance: InstanceKind,
    pub d: usize,
    pub seed: u64,
    pub strike_mode: StrikeMode,
    pub methods: Vec<Method>,
    /// Sample counts for the Monte Carlo and quasi-Monte Carlo methods.
    pub budgets: Vec<usize>,
    /// Tolerances for the adaptive methods.
    pub tol_schedule: Vec<f64>,
    /// Independent runs per Monte Carlo row; the row reports their median.
    pub mc_runs: usize,
    /// Evaluation cap per adaptive row.
    pub max_evals: usize,
    /// Overrides the dimension-dependent reference tolerance.
    pub reference_tol: Option<f64>,
    /// Overrides the reference computation altogether.
    pub reference: Option<f64>,
    pub nu: f64,
    pub theta_range: (f64, f64),
    /// Explicit drifts; take precedence over `theta_range`.
    pub theta: Option<Vec<f64>>,
    /// Third volatility of the fixed example.
    pub sigma3: f64,
    /// Selector for aSG+CS2; the best binary selector when absent.
    pub cs2_v: Option<Vec<f64>>,
    /// Output path prefix.
    pub output: PathBuf,
}

/// `3·6^q` for `q = 1..=8`.
pub fn default_budgets() -> Vec<usize> {
    (1..=8).map(|q| 3 * 6usize.pow(q)).collect()
}

/// `1e-2, 1e-3, …, 1e-9`.
pub fn default_tolerances() -> Vec<f64> {
    (2..=9).map(|e| 10f64.powi(-e)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::BlackScholes,
            instance: InstanceKind::Random,
            d: 3,
            seed: 1,
            strike_mode: StrikeMode::Atm,
            methods: Vec::new(),
            budgets: default_budgets(),
            tol_schedule: default_tolerances(),
            mc_runs: 20,
            max_evals: crate::sparsegrid::DEFAULT_MAX_EVALS,
            reference_tol: None,
            reference: None,
            nu: 0.5,
            theta_range: (-0.2, -0.05),
            theta: None,
            sigma3: THREE_ASSET_SIGMA3,
            cs2_v: None,
            output: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::ConfigInvalid(format!("bad value `{value}` for `{key}`"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        text.parse()
    }

    /// Dimension of the priced instance.
    pub fn dim(&self) -> usize {
        match self.instance {
            InstanceKind::Random => self.d,
            InstanceKind::ThreeAsset => 3,
        }
    }

    /// Checks the fields for consistency. An empty method list is allowed
    /// here (the decomposition report needs none) and rejected by the sweeps.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::ConfigInvalid(m));
        if self.instance == InstanceKind::Random && self.d < 2 {
            return invalid(format!("d = {} must be at least 2", self.d));
        }
        if self.instance == InstanceKind::ThreeAsset && self.model != ModelKind::VarianceGamma {
            return invalid("the three_asset instance is a Variance-Gamma model".into());
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 || self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("budgets must be positive and strictly increasing".into());
        }
        if self.tol_schedule.is_empty() || self.tol_schedule.iter().any(|t| !(*t > 0.0)) {
            return invalid("tolerances must be positive".into());
        }
        if self.mc_runs == 0 {
            return invalid("mc_runs must be positive".into());
        }
        if !(self.nu > 0.0) {
            return invalid(format!("nu = {} must be positive", self.nu));
        }
        if !(self.theta_range.0 <= self.theta_range.1) {
            return invalid("theta_range must be ordered".into());
        }
        if let Some(t) = &self.theta {
            if t.len() != self.d {
                return invalid(format!("{} theta entries for d = {}", t.len(), self.d));
            }
        }
        if let Some(v) = &self.cs2_v {
            if v.len() != self.dim() || v.iter().any(|x| *x != 0.0 && *x != 1.0) || v.iter().all(|x| *x == 0.0) {
                return invalid("cs2_v must be a nonzero 0/1 vector of length d".into());
            }
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut methods = Vec::new();
        let mut budgets = Vec::new();
        let mut tols = Vec::new();
        let mut theta = Vec::new();
        let mut theta_range = Vec::new();
        let mut cs2_v = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model" => cfg.model = value.parse()?,
                "instance" => cfg.instance = value.parse()?,
                "d" => cfg.d = num(key, value)?,
                "seed" => cfg.seed = num(key, value)?,
                "strike_mode" => cfg.strike_mode = value.parse()?,
                "methods" => methods.push(value.parse::<Method>()?),
                "budgets" => budgets.push(num(key, value)?),
                "tol_schedule" => tols.push(num(key, value)?),
                "mc_runs" => cfg.mc_runs = num(key, value)?,
                "max_evals" => cfg.max_evals = num(key, value)?,
                "reference_tol" => cfg.reference_tol = Some(num(key, value)?),
                "reference" => cfg.reference = Some(num(key, value)?),
                "nu" => cfg.nu = num(key, value)?,
                "theta_range" => theta_range.push(num(key, value)?),
                "theta" => theta.push(num(key, value)?),
                "sigma3" => cfg.sigma3 = num(key, value)?,
                "cs2_v" => cs2_v.push(num(key, value)?),
                "output" => cfg.output = PathBuf::from(value),
                _ => return Err(Error::ConfigInvalid(format!("unknown key `{key}`"))),
            }
        }
        cfg.methods = methods;
        if !budgets.is_empty() {
            cfg.budgets = budgets;
        }
        if !tols.is_empty() {
            cfg.tol_schedule = tols;
        }
        match theta_range[..] {
            [] => {}
            [lo, hi] => cfg.theta_range = (lo, hi),
            _ => return Err(Error::ConfigInvalid("theta_range takes exactly two entries".into())),
        }
        if !theta.is_empty() {
            cfg.theta = Some(theta);
        }
        if !cs2_v.is_empty() {
            cfg.cs2_v = Some(cs2_v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes the configuration back in the file format; parsing the output
/// gives the same configuration.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model = {}", self.model)?;
        writeln!(f, "instance = {}", self.instance)?;
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "strike_mode = {}", self.strike_mode)?;
        for m in &self.methods {
            writeln!(f, "methods = {m}")?;
        }
        for b in &self.budgets {
            writeln!(f, "budgets = {b}")?;
        }
        for t in &self.tol_schedule {
            writeln!(f, "tol_schedule = {t:e}")?;
        }
        writeln!(f, "mc_runs = {}", self.mc_runs)?;
        writeln!(f, "max_evals = {}", self.max_evals)?;
        if let Some(t) = self.reference_tol {
            writeln!(f, "reference_tol = {t:e}")?;
        }
        if let Some(r) = self.reference {
            writeln!(f, "reference = {r:e}")?;
        }
        writeln!(f, "nu = {:e}", self.nu)?;
        writeln!(f, "theta_range = {:e}", self.theta_range.0)?;
        writeln!(f, "theta_range = {:e}", self.theta_range.1)?;
        for t in self.theta.iter().flatten() {
            writeln!(f, "theta = {t:e}")?;
        }
        writeln!(f, "sigma3 = {:e}", self.sigma3)?;
        for v in self.cs2_v.iter().flatten() {
            writeln!(f, "cs2_v = {v}")?;
        }
        writeln!(f, "output = {}", self.output.display())
    }
}
