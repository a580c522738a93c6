//! Run configuration: a TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use lrpath::monte_carlo::McConfig;
use lrpath::problems::ProblemSpec;
use lrpath::solver::SolverConfig;
use lrpath::Exec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemTag {
    Harmonic,
    Cauchy,
    Impurity,
    FreeGaussian,
    Custom,
}

impl ProblemTag {
    /// `(σ, T)` used in the reference runs for each problem.
    fn defaults(self) -> (f64, f64) {
        match self {
            ProblemTag::Harmonic => (0.25, 10.0),
            ProblemTag::Cauchy => (0.5, 1.0),
            ProblemTag::Impurity => (0.25, 20.0),
            ProblemTag::FreeGaussian => (0.5, 1.0),
            ProblemTag::Custom => (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl From<ExecMode> for Exec {
    fn from(m: ExecMode) -> Self {
        match m {
            ExecMode::Sequential => Exec::Sequential,
            ExecMode::Parallel => Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub tag: ProblemTag,
    /// Diffusivity; the tag's reference value when absent.
    pub sigma: Option<f64>,
    /// Final time; the tag's reference value when absent.
    pub t_final: Option<f64>,
    /// Width parameter of the Gaussian initial density.
    pub beta: f64,
    /// `V(x, t)` for custom problems.
    pub potential: Option<String>,
    /// `f(x)` for custom problems.
    pub initial: Option<String>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            tag: ProblemTag::Cauchy,
            sigma: None,
            t_final: None,
            beta: 1.0,
            potential: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Half-width `a` of the final spatial domain `[−a, a)`.
    pub half_width: f64,
    /// `N`; each window holds `M = 2N` points.
    pub half_count: usize,
    /// Time steps for single runs.
    pub n: usize,
    /// Time steps for sweeps.
    pub sweep: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: 2.0,
            half_count: 4000,
            n: 128,
            sweep: vec![32, 64, 128, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub eps_c: f64,
    pub r0: usize,
    pub r_max: usize,
    pub dense_switch_k: usize,
    pub rank_trigger: bool,
    pub max_rounds: usize,
    pub seed: u64,
    pub exec: ExecMode,
    pub memory_budget_mb: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            eps_c: d.eps_c,
            r0: d.r0,
            r_max: d.r_max,
            dense_switch_k: d.dense_switch_k,
            rank_trigger: d.rank_trigger,
            max_rounds: d.max_rounds,
            seed: d.seed,
            exec: ExecMode::Parallel,
            memory_budget_mb: d.memory_budget >> 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub samples: u64,
    pub seed: u64,
    pub x0: f64,
    pub antithetic: bool,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            samples: d.samples,
            seed: d.seed,
            x0: d.x0,
            antithetic: d.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub sweep: Vec<usize>,
    /// Also time the dense reference.
    pub dense: bool,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            sweep: vec![100, 200, 300, 400, 500],
            dense: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HermiteSection {
    pub l_max: usize,
    pub nrows: usize,
    pub ncols: usize,
    pub half_width: f64,
    pub eps: f64,
    pub keep: usize,
}

impl Default for HermiteSection {
    fn default() -> Self {
        let d = lrpath::analysis::HermiteStudyConfig::default();
        Self {
            l_max: d.l_max,
            nrows: d.nrows,
            ncols: d.ncols,
            half_width: d.half_width,
            eps: d.eps,
            keep: d.keep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// CSV destination; standard output when absent.
    pub csv: Option<PathBuf>,
    /// Write wall-clock columns; off gives byte-stable output.
    pub timings: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            csv: None,
            timings: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    /// Monte Carlo block; required by `compare-mc`.
    pub mc: Option<McSection>,
    pub scaling: ScalingSection,
    pub hermite: HermiteSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn sigma(&self) -> f64 {
        self.problem.sigma.unwrap_or(self.problem.tag.defaults().0)
    }

    pub fn t_final(&self) -> f64 {
        self.problem.t_final.unwrap_or(self.problem.tag.defaults().1)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let (sigma, t) = (self.sigma(), self.t_final());
        let p = &self.problem;
        let spec = match p.tag {
            ProblemTag::Harmonic => ProblemSpec::harmonic(sigma, t, p.beta),
            ProblemTag::Cauchy => ProblemSpec::cauchy(sigma, t),
            ProblemTag::Impurity => ProblemSpec::impurity(sigma, t),
            ProblemTag::FreeGaussian => ProblemSpec::free_gaussian(sigma, t, p.beta),
            ProblemTag::Custom => {
                let v = p
                    .potential
                    .as_deref()
                    .ok_or_else(|| CliError::Config("problem.potential is required for custom problems".into()))?;
                let f = p
                    .initial
                    .as_deref()
                    .ok_or_else(|| CliError::Config("problem.initial is required for custom problems".into()))?;
                ProblemSpec::from_expressions("custom", sigma, t, v, f)
            }
        };
        spec.map_err(|e| CliError::Config(format!("problem: {e}")))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            eps_c: s.eps_c,
            r0: s.r0,
            r_max: s.r_max,
            dense_switch_k: s.dense_switch_k,
            rank_trigger: s.rank_trigger,
            max_rounds: s.max_rounds,
            seed: s.seed,
            exec: s.exec.into(),
            memory_budget: s.memory_budget_mb.saturating_mul(1 << 20),
        }
    }

    pub fn mc_config(&self) -> Result<McConfig, CliError> {
        let mc = self
            .mc
            .as_ref()
            .ok_or_else(|| CliError::Config("an [mc] section (or --mc-samples) is required".into()))?;
        Ok(McConfig {
            samples: mc.samples,
            seed: mc.seed,
            x0: mc.x0,
            antithetic: mc.antithetic,
            exec: self.solver.exec.into(),
        })
    }

    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.sigma() > 0.0 && self.sigma().is_finite()) {
            return bad(format!("problem.sigma must be positive, got {}", self.sigma()));
        }
        if !(self.t_final() > 0.0 && self.t_final().is_finite()) {
            return bad(format!("problem.t_final must be positive, got {}", self.t_final()));
        }
        if !(self.grid.half_width > 0.0 && self.grid.half_width.is_finite()) {
            return bad(format!("grid.half_width must be positive, got {}", self.grid.half_width));
        }
        if self.grid.half_count == 0 {
            return bad("grid.half_count must be positive".into());
        }
        if self.grid.n == 0 {
            return bad("grid.n must be positive".into());
        }
        if self.grid.sweep.contains(&0) || self.scaling.sweep.contains(&0) {
            return bad("sweep entries must be positive".into());
        }
        if let Some(mc) = &self.mc {
            if mc.samples == 0 {
                return bad("mc.samples must be positive".into());
            }
        }
        self.solver_config()
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        self.problem_spec()?;
        Ok(())
    }

    /// Sweep used for order estimates; entries must double.
    pub fn doubling_sweep(&self) -> Result<Vec<usize>, CliError> {
        let s = &self.grid.sweep;
        if s.is_empty() {
            return Err(CliError::Config("grid.sweep is empty".into()));
        }
        if let Some(w) = s.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(CliError::Config(format!(
                "grid.sweep must double at each entry, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(s.clone())
    }
}
