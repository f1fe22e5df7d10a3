//! Scenario files: TOML with the sections `[grid]`, `[params]`, `[initial]`,
//! `[potential]`, `[forcing]`, `[run]`, `[solver]` and `[step]`. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsOptions;
use crate::error::{Result, SimError};
use crate::grid::Grid;
use crate::model::Params;
use crate::solvers::SolverConfig;
use crate::stepper::StepConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

fn center() -> [f64; 2] {
    [0.5, 0.5]
}

fn bump_width() -> f64 {
    0.1
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

/// Initial data. Coordinates of `center` are fractions of the domain size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum InitialSpec {
    Uniform {
        n0: f64,
        c0: f64,
    },
    /// `n0 = base + amplitude exp(-|x - center|^2 / width^2)`, `c` constant.
    GaussianBump {
        amplitude: f64,
        #[serde(default = "bump_width")]
        width: f64,
        #[serde(default = "center")]
        center: [f64; 2],
        #[serde(default)]
        base: f64,
        #[serde(default = "one")]
        c0: f64,
    },
    /// `n0 = base (1 + noise_amp xi)` with `xi` uniform on `[-1, 1]` per cell.
    RandomPerturbed {
        base: f64,
        noise_amp: f64,
        /// Falls back to `run.seed`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "one")]
        c0: f64,
    },
    /// Alternates `level_a` and `level_b` cell by cell.
    Checker {
        level_a: f64,
        level_b: f64,
        #[serde(default = "one")]
        c0: f64,
    },
}

impl InitialSpec {
    pub fn c0(&self) -> f64 {
        match *self {
            InitialSpec::Uniform { c0, .. }
            | InitialSpec::GaussianBump { c0, .. }
            | InitialSpec::RandomPerturbed { c0, .. }
            | InitialSpec::Checker { c0, .. } => c0,
        }
    }

    fn values(&self) -> Vec<f64> {
        match *self {
            InitialSpec::Uniform { n0, c0 } => vec![n0, c0],
            InitialSpec::GaussianBump {
                amplitude,
                width,
                center,
                base,
                c0,
            } => vec![amplitude, width, center[0], center[1], base, c0],
            InitialSpec::RandomPerturbed {
                base, noise_amp, c0, ..
            } => vec![base, noise_amp, c0],
            InitialSpec::Checker { level_a, level_b, c0 } => vec![level_a, level_b, c0],
        }
    }

    /// Checks finiteness, `n0 >= 0`, `c0 > 0`, and (when `strict`) `n0 != 0`.
    pub fn validate(&self, strict: bool) -> Result<()> {
        if self.values().iter().any(|v| !v.is_finite()) {
            return Err(SimError::validation("initial", "preset parameters must be finite"));
        }
        if !(self.c0() > 0.0) {
            return Err(SimError::validation("initial.c0", "must be positive"));
        }
        let (nonneg, nonzero) = match *self {
            InitialSpec::Uniform { n0, .. } => (n0 >= 0.0, n0 > 0.0),
            InitialSpec::GaussianBump {
                amplitude, width, base, ..
            } => {
                if !(width > 0.0) {
                    return Err(SimError::validation("initial.width", "must be positive"));
                }
                (amplitude >= 0.0 && base >= 0.0, amplitude > 0.0 || base > 0.0)
            }
            InitialSpec::RandomPerturbed { base, noise_amp, .. } => {
                if !(0.0..=1.0).contains(&noise_amp) {
                    return Err(SimError::validation("initial.noise_amp", "must lie in [0,1]"));
                }
                (base >= 0.0, base > 0.0)
            }
            InitialSpec::Checker { level_a, level_b, .. } => {
                (level_a >= 0.0 && level_b >= 0.0, level_a > 0.0 || level_b > 0.0)
            }
        };
        if !nonneg {
            return Err(SimError::validation("initial", "n0 must be non-negative"));
        }
        if strict && !nonzero {
            return Err(SimError::validation("initial", "n0 must not vanish identically"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        #[serde(default)]
        value: f64,
    },
    /// `phi = -g y`, so the buoyancy `n grad(phi)` points down.
    LinearGravity { g: f64 },
    /// `phi = amplitude exp(-|x - center|^2 / width^2)`.
    Bump {
        amplitude: f64,
        #[serde(default = "bump_width")]
        width: f64,
        #[serde(default = "center")]
        center: [f64; 2],
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Constant { value: 0.0 }
    }
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PotentialSpec::Constant { value } => value.is_finite(),
            PotentialSpec::LinearGravity { g } => g.is_finite(),
            PotentialSpec::Bump {
                amplitude,
                width,
                center,
            } => amplitude.is_finite() && width > 0.0 && width.is_finite() && center.iter().all(|c| c.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::validation("potential", "preset parameters must be finite (width > 0)"))
        }
    }
}

/// Body force. OSCILLATORY is the divergence-free cellular field
/// `A sin(2 pi freq t) (sin(pi x/lx) cos(pi y/ly), -cos(pi x/lx) sin(pi y/ly))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    Oscillatory {
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Zero
    }
}

impl ForcingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ForcingSpec::Zero => Ok(()),
            ForcingSpec::Oscillatory {
                amplitude,
                frequency,
            } => {
                if amplitude.is_finite() && frequency.is_finite() {
                    Ok(())
                } else {
                    Err(SimError::validation("forcing", "preset parameters must be finite"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub t_end: f64,
    pub snapshot_interval: f64,
    /// Where the CSV series and checkpoints go; nothing is written when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_csv_name")]
    pub csv_name: String,
    /// Periodic checkpoints; the final state is always checkpointed when an
    /// output directory is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Multiplies `n0` and `c0` jointly.
    #[serde(default = "one")]
    pub initial_scale: f64,
    #[serde(default = "one")]
    pub window_tau: f64,
    #[serde(default = "default_spread")]
    pub spread_threshold: f64,
    /// Tail fraction of `[0, t_end]` used for absorbing statistics.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Accept parameters outside `k, eta in (0,1)` and positive rates.
    #[serde(default)]
    pub allow_out_of_hypothesis: bool,
    #[serde(default = "default_np_cq_p")]
    pub np_cq_p: f64,
    #[serde(default = "default_np_cq_q")]
    pub np_cq_q: f64,
    #[serde(default = "default_grad_c_p")]
    pub grad_c_p: f64,
}

fn default_csv_name() -> String {
    "series.csv".into()
}
fn default_spread() -> f64 {
    1.5
}
fn default_tail() -> f64 {
    0.2
}
fn default_np_cq_p() -> f64 {
    DiagnosticsOptions::default().np_cq_p
}
fn default_np_cq_q() -> f64 {
    DiagnosticsOptions::default().np_cq_q
}
fn default_grad_c_p() -> f64 {
    DiagnosticsOptions::default().grad_c_p
}

impl RunSpec {
    pub fn new(t_end: f64, snapshot_interval: f64) -> Self {
        RunSpec {
            t_end,
            snapshot_interval,
            output_dir: None,
            csv_name: default_csv_name(),
            checkpoint_interval: None,
            seed: 0,
            initial_scale: 1.0,
            window_tau: 1.0,
            spread_threshold: default_spread(),
            tail_fraction: default_tail(),
            allow_out_of_hypothesis: false,
            np_cq_p: default_np_cq_p(),
            np_cq_q: default_np_cq_q(),
            grad_c_p: default_grad_c_p(),
        }
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        DiagnosticsOptions {
            np_cq_p: self.np_cq_p,
            np_cq_q: self.np_cq_q,
            grad_c_p: self.grad_c_p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SimError::validation("run.t_end", "must be positive"));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval <= self.t_end) {
            return Err(SimError::validation("run.snapshot_interval", "must lie in (0, t_end]"));
        }
        if let Some(ci) = self.checkpoint_interval {
            if !(ci > 0.0 && ci.is_finite()) {
                return Err(SimError::validation("run.checkpoint_interval", "must be positive"));
            }
        }
        if self.csv_name.is_empty() {
            return Err(SimError::validation("run.csv_name", "must not be empty"));
        }
        if !(self.initial_scale > 0.0 && self.initial_scale.is_finite()) {
            return Err(SimError::validation("run.initial_scale", "must be positive"));
        }
        if !(self.window_tau > 0.0 && self.window_tau.is_finite()) {
            return Err(SimError::validation("run.window_tau", "must be positive"));
        }
        if !(self.spread_threshold >= 1.0) {
            return Err(SimError::validation("run.spread_threshold", "must be at least 1"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(SimError::validation("run.tail_fraction", "must lie in (0,1]"));
        }
        for (name, v) in [
            ("run.np_cq_p", self.np_cq_p),
            ("run.np_cq_q", self.np_cq_q),
            ("run.grad_c_p", self.grad_c_p),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::validation(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub params: Params,
    pub initial: InitialSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub step: StepConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        if self.run.allow_out_of_hypothesis {
            self.params.validate_structural()?;
        } else {
            self.params.validate()?;
        }
        self.initial.validate(!self.run.allow_out_of_hypothesis)?;
        self.potential.validate()?;
        self.forcing.validate()?;
        self.run.validate()?;
        self.solver.validate()?;
        self.step.validate()?;
        Ok(())
    }

    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            SimError::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::Experiment(format!("cannot serialize config: {e}")))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}
