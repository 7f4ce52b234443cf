use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use procure_core::env::{make_environment, Distribution, Environment, Valuation};

use crate::error::{CliError, Result};

const MIN_GRID: usize = 1 << 8;
const MAX_GRID: usize = 1 << 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentBlock,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    pub n: usize,
    pub gamma: f64,
    #[serde(default)]
    pub buyer_ir: bool,
    #[serde(default = "uniform")]
    pub distribution: Distribution,
    pub valuation: Valuation,
}

fn uniform() -> Distribution {
    Distribution::Uniform
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Cells of the quantile grid.
    pub grid: usize,
    pub lp_bins: usize,
    pub tolerances: Tolerances,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            grid: 4096,
            lp_bins: 400,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Floor on the gap between the LP value and the solver objective.
    pub oracle: f64,
    pub greedy: f64,
    pub round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle: 1e-3,
            greedy: 1e-9,
            round_trip: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub trials: u64,
    pub seed: u64,
    pub bins: usize,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        SimulationBlock {
            trials: 1_000_000,
            seed: 2024,
            bins: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    /// Figure formats written by `plot`.
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: PathBuf::from("out"),
            formats: vec![Format::Svg],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let e = &self.environment;
        if e.n < 2 {
            return bad(format!("environment.n must be at least 2, got {}", e.n));
        }
        if !(0.0..=1.0).contains(&e.gamma) {
            return bad(format!("environment.gamma must lie in [0, 1], got {}", e.gamma));
        }
        let k = self.numerics.grid;
        if !k.is_power_of_two() || !(MIN_GRID..=MAX_GRID).contains(&k) {
            return bad(format!("numerics.grid must be a power of two in [{MIN_GRID}, {MAX_GRID}], got {k}"));
        }
        if self.numerics.lp_bins == 0 {
            return bad("numerics.lp_bins must be positive".into());
        }
        let t = &self.numerics.tolerances;
        if ![t.oracle, t.greedy, t.round_trip].iter().all(|x| x.is_finite() && *x >= 0.0) {
            return bad("numerics.tolerances must be finite and non-negative".into());
        }
        self.check_trials(self.simulation.trials)?;
        if self.simulation.bins == 0 {
            return bad("simulation.bins must be positive".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name at least one format".into());
        }
        Ok(())
    }

    pub fn check_trials(&self, trials: u64) -> Result<()> {
        if trials == 0 {
            return Err(CliError::Config("simulation.trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment> {
        let e = &self.environment;
        make_environment(e.n, e.distribution.clone(), e.valuation.clone(), e.gamma, e.buyer_ir)
            .map_err(CliError::Assumption)
    }

    /// `--out` if given, else the configured directory.
    pub fn out_dir(&self, out: Option<&Path>) -> PathBuf {
        out.map_or_else(|| self.output.directory.clone(), Path::to_path_buf)
    }
}
