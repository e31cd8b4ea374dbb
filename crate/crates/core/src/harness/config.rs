//! TOML run configuration. Unknown keys are rejected; the fully resolved
//! configuration (defaults filled in) is what gets hashed and written to the
//! manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::EnergyParams;
use crate::error::{Result, SvpError};
use crate::evolution::{Scheme, StepPlan, Tolerances};
use crate::linear_oracle::Lemma;
use crate::phase_space::{InitialDataSpec, PhaseGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    LinearOracle,
    ScatterAnalyze,
    GreenTable,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::LinearOracle => "linear-oracle",
            Experiment::ScatterAnalyze => "scatter-analyze",
            Experiment::GreenTable => "green-table",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Experiment,
    /// Output directory (overridden by `--out`).
    #[serde(default = "default_out")]
    pub out: String,
    /// Worker threads; 0 means the rayon default (overridden by `--threads` / `SVP_THREADS`).
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_ceiling")]
    pub memory_ceiling: u64,
    /// Seed for randomized point sampling in checks.
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> String {
    "svp-out".into()
}

fn default_ceiling() -> u64 {
    8 << 30
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub nx: usize,
    pub nv: usize,
    /// Half-widths of the spatial and velocity boxes.
    pub lx: f64,
    pub lv: f64,
}

impl GridSection {
    pub fn build(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.d, self.nx, self.nv, self.lx, self.lv)
    }
}

/// Decay fit of one diagnostics column over a time window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub column: String,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub record_every: usize,
    /// Spatial moment order of the weighted sup norm; `None` means `d + 1`.
    pub moment_order: Option<f64>,
    /// Times handed to the scattering monitor (dyadic).
    pub snapshot_times: Vec<f64>,
    pub energy: EnergyParams,
    pub fits: Vec<FitSpec>,
    /// Write one SVG per fit.
    pub plots: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            record_every: 1,
            moment_order: None,
            snapshot_times: Vec::new(),
            energy: EnergyParams::default(),
            fits: Vec::new(),
            plots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointSection {
    /// Times at which the state is saved.
    pub times: Vec<f64>,
    /// Save the final state.
    pub last: bool,
}

impl Default for CheckpointSection {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            last: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSpec {
    pub lemma: Lemma,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub alpha: Vec<usize>,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Dimension of the analytic profile; `None` means `grid.d`.
    pub d: Option<usize>,
    pub v_derivative_order: usize,
    /// `None` means `d + 1`.
    pub moment_order: Option<usize>,
    pub analytic: bool,
    pub lemmas: Vec<LemmaSpec>,
    /// Times for the velocity-shift inequality check (d = 2); empty skips it.
    pub shift_times: Vec<f64>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            d: None,
            v_derivative_order: 3,
            moment_order: None,
            analytic: true,
            lemmas: Vec::new(),
            shift_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    pub d: usize,
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Uniform grid `r_min..=r_max` with `count` points, used when `radii` is empty.
    #[serde(default)]
    pub r_min: f64,
    #[serde(default)]
    pub r_max: f64,
    #[serde(default)]
    pub count: usize,
}

impl GreenSection {
    pub fn radii(&self) -> Result<Vec<f64>> {
        if !self.radii.is_empty() {
            return Ok(self.radii.clone());
        }
        if self.count < 2 || !(self.r_max > self.r_min) {
            return Err(SvpError::Config("green: give `radii` or `r_min < r_max` with `count >= 2`".into()));
        }
        Ok((0..self.count)
            .map(|i| self.r_min + (self.r_max - self.r_min) * i as f64 / (self.count - 1) as f64)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    /// Checkpoint files at dyadic times, relative to the config file.
    pub snapshots: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Fitted decay exponent of `column` over `[t1, t2]` within `[lower, upper]`.
    Exponent,
    /// Largest `|column(t) / column(t0) - 1|` at most `upper`.
    Drift,
    /// Largest `column(t) / column(t0)` at most `upper`.
    Growth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    pub kind: CheckKind,
    pub column: String,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub initial: InitialDataSpec,
    #[serde(default)]
    pub plan: Option<StepPlan>,
    #[serde(default)]
    pub numerics: Tolerances,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub checkpoint: CheckpointSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub green: Option<GreenSection>,
    #[serde(default)]
    pub scatter: Option<ScatterSection>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| SvpError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| SvpError::Config(format!("experiment `{}` needs a [{name}] section", self.run.experiment.name())))
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        self.require(&self.grid, "grid")?.build()
    }

    pub fn plan(&self) -> Result<StepPlan> {
        Ok(*self.require(&self.plan, "plan")?)
    }

    pub fn green_section(&self) -> Result<&GreenSection> {
        self.require(&self.green, "green")
    }

    pub fn scatter_section(&self) -> Result<&ScatterSection> {
        self.require(&self.scatter, "scatter")
    }

    pub fn validate(&self) -> Result<()> {
        match self.run.experiment {
            Experiment::Simulate => {
                let grid = self.grid()?;
                self.initial.validate(grid.d)?;
                let plan = self.plan()?;
                plan.validate()?;
                if plan.scheme == Scheme::PhysicalReference && grid.d != 1 {
                    return Err(SvpError::Config("the physical reference scheme is available in d = 1 only".into()));
                }
                if self.diagnostics.record_every == 0 {
                    return Err(SvpError::Config("record_every must be at least 1".into()));
                }
                for c in &self.checks {
                    if !crate::diagnostics::DiagnosticsRecord::COLUMNS.contains(&c.column.as_str()) {
                        return Err(SvpError::Config(format!("check `{}`: unknown column `{}`", c.name, c.column)));
                    }
                }
                for f in &self.diagnostics.fits {
                    if !crate::diagnostics::DiagnosticsRecord::COLUMNS.contains(&f.column.as_str()) {
                        return Err(SvpError::Config(format!("fit: unknown column `{}`", f.column)));
                    }
                }
            }
            Experiment::LinearOracle => {
                let d = self.oracle_dim()?;
                self.initial.validate(d)?;
                if self.initial.bumps.is_empty() {
                    return Err(SvpError::Config("linear-oracle needs at least one [[initial.bumps]] entry".into()));
                }
            }
            Experiment::GreenTable => {
                self.green_section()?.radii()?;
            }
            Experiment::ScatterAnalyze => {
                self.scatter_section()?;
            }
        }
        Ok(())
    }

    pub fn oracle_dim(&self) -> Result<usize> {
        match (self.oracle.d, &self.grid) {
            (Some(d), _) => Ok(d),
            (None, Some(g)) => Ok(g.d),
            (None, None) => Err(SvpError::Config("linear-oracle needs `oracle.d` or a [grid] section".into())),
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("serializable")).expect("serializable")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
experiment = "green-table"

[green]
d = 1
r_min = 0.1
r_max = 5.0
count = 50
"#;

    #[test]
    fn defaults_are_filled() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.run.out, "svp-out");
        assert_eq!(c.diagnostics.record_every, 1);
        assert_eq!(c.numerics, Tolerances::default());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse(&format!("{MINIMAL}\nbogus_key = 3\n")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("bogus_key"), "{e}");
    }

    #[test]
    fn missing_section_is_a_config_error() {
        let e = RunConfig::parse("[run]\nexperiment = \"simulate\"\n").unwrap_err();
        assert_eq!(e.kind(), "config");
    }
}
