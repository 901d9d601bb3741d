use std::path::{Path, PathBuf};

use conehj::{
    InitialCondition64, InitialConfig, Kernel64, MeasureSpec64, Method, Property, PDE_MAX_SCALE,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Pde,
    #[default]
    Hopflax,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Pde => vec![Method::Pde],
            MethodChoice::Hopflax => vec![Method::Hopflax],
            MethodChoice::Both => vec![Method::Pde, Method::Hopflax],
        }
    }

    pub fn includes_pde(self) -> bool {
        self != MethodChoice::Hopflax
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    LowerBound,
    NonnegDefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    /// Subtracts a multiple of `|y_0|`, breaking monotonicity.
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Lattice spacing of the grid route.
    pub dx: f64,
    /// KKT tolerance of the Hopf-Lax search.
    pub hopf_lax: f64,
    pub max_iter: usize,
    pub starts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            dx: 0.05,
            hopf_lax: 1e-11,
            max_iter: 5000,
            starts: conehj::hopf_lax::DEFAULT_STARTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RCompare {
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BCompare {
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    /// All properties when absent.
    pub properties: Option<Vec<Property>>,
    pub samples: usize,
    pub fault: Fault,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            properties: None,
            samples: 200,
            fault: Fault::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Reports are written here as well as to stdout.
    pub dir: Option<PathBuf>,
}

fn default_r() -> f64 {
    4.0
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_hypotheses() -> Vec<Hypothesis> {
    vec![Hypothesis::LowerBound, Hypothesis::NonnegDefinite]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: Kernel64,
    #[serde(default)]
    pub initial: Option<InitialConfig<f64>>,
    #[serde(default)]
    pub measure: Option<MeasureSpec64>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(rename = "K", default)]
    pub k: u32,
    /// Inclusive `[lo, hi]`; replaces `K` for convergence runs.
    #[serde(rename = "K_range", default)]
    pub k_range: Option<[u32; 2]>,
    #[serde(rename = "R", default = "default_r")]
    pub r: f64,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_hypotheses")]
    pub hypotheses: Vec<Hypothesis>,
    /// Total mass of the velocity measure for the mass-constrained Hopf-Lax problem.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub r_independence: Option<RCompare>,
    #[serde(default)]
    pub b_invariance: Option<BCompare>,
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub times: Option<Vec<f64>>,
    pub k: Option<u32>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.apply(ov);
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(t) = &ov.times {
            self.times = t.clone();
        }
        if let Some(k) = ov.k {
            self.k = k;
            self.k_range = None;
        }
        if let Some(r) = ov.r {
            self.r = r;
        }
        if let Some(s) = ov.seed {
            self.seeds = vec![s];
        }
        if let Some(o) = &ov.out {
            self.output.dir = Some(o.clone());
        }
    }

    pub fn seed(&self) -> u64 {
        self.seeds[0]
    }

    pub fn scales(&self) -> Vec<u32> {
        match self.k_range {
            Some([lo, hi]) => (lo..=hi).collect(),
            None => vec![self.k],
        }
    }

    pub fn initial(&self) -> Result<InitialCondition64, CliError> {
        let ic = self
            .initial
            .clone()
            .ok_or_else(|| CliError::Config("`initial` is required for this command".into()))?;
        InitialCondition64::try_from(ic).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn measure(&self) -> Result<&MeasureSpec64, CliError> {
        let mu = self
            .measure
            .as_ref()
            .ok_or_else(|| CliError::Config("`measure` is required for this command".into()))?;
        mu.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(mu)
    }

    /// Checks shared by every command.
    pub fn validate_common(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("`seeds` must not be empty".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(CliError::Config(format!("R = {} must be positive", self.r)));
        }
        if !(self.tolerances.dx > 0.0) {
            return Err(CliError::Config("tolerances.dx must be positive".into()));
        }
        if let Some([lo, hi]) = self.k_range {
            if lo > hi {
                return Err(CliError::Config(format!("K_range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// Checks for commands that evolve `initial` from `measure` at `times`.
    pub fn validate_run(&self, method: MethodChoice) -> Result<InitialCondition64, CliError> {
        self.validate_common()?;
        let psi = self.initial()?;
        self.measure()?;
        if self.times.is_empty() {
            return Err(CliError::Config("`times` must not be empty".into()));
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(CliError::Config(
                "times must be finite and non-negative".into(),
            ));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("times must be strictly ascending".into()));
        }
        if method.includes_pde() {
            let lip = psi.lip_tv(&self.kernel);
            if !(self.r > lip) {
                return Err(CliError::Config(format!(
                    "hypothesis violated: R = {} must exceed the TV Lipschitz constant {lip} of the initial condition",
                    self.r
                )));
            }
            let top = *self.scales().iter().max().unwrap();
            if top > PDE_MAX_SCALE {
                return Err(CliError::Config(format!(
                    "the grid route is limited to K ≤ {PDE_MAX_SCALE} (requested K = {top}); use method hopflax"
                )));
            }
        }
        Ok(psi)
    }
}
