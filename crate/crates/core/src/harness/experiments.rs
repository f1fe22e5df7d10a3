//! Multi-run experiments: absorbing-set comparison across scaled initial
//! data, and one-parameter sweeps.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, SimError};
use crate::exec;

use super::config::ScenarioConfig;
use super::run::{run_scenario, RunResult};

/// Maxima over the tail of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    pub max_n: f64,
    pub linf_grad_c: f64,
    pub linf_u: f64,
}

impl TailStats {
    pub const NAMES: [&'static str; 3] = ["max_n", "linf_grad_c", "linf_u"];

    pub fn values(&self) -> [f64; 3] {
        [self.max_n, self.linf_grad_c, self.linf_u]
    }
}

/// Max of each tracked quantity over records with `t >= (1 - fraction) t_end`.
pub fn tail_stats(series: &[DiagnosticsRecord], t_end: f64, fraction: f64) -> TailStats {
    let start = (1.0 - fraction) * t_end;
    let mut out = TailStats {
        max_n: f64::NEG_INFINITY,
        linf_grad_c: f64::NEG_INFINITY,
        linf_u: f64::NEG_INFINITY,
    };
    for r in series.iter().filter(|r| r.t >= start - 1e-12 * t_end) {
        out.max_n = out.max_n.max(r.max_n);
        out.linf_grad_c = out.linf_grad_c.max(r.linf_grad_c);
        out.linf_u = out.linf_u.max(r.linf_u);
    }
    out
}

/// `max / min` of non-negative values; 1 when all vanish, infinite when only
/// some do.
pub fn spread_ratio(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == lo {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct ScaleRun {
    pub scale: f64,
    pub tail: TailStats,
    pub result: RunResult,
}

#[derive(Debug, Clone)]
pub struct AbsorbingReport {
    /// In the order the scales were given.
    pub runs: Vec<ScaleRun>,
    /// Per quantity, in the order of [`TailStats::NAMES`].
    pub spreads: [f64; 3],
    pub threshold: f64,
    /// Whether the scales span at least a factor of ten.
    pub spans_decade: bool,
}

impl AbsorbingReport {
    pub fn max_spread(&self) -> f64 {
        self.spreads.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_spread() <= self.threshold
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:>10} {:>22} {:>22} {:>22}\n", "scale", "tail max_n", "tail linf_grad_c", "tail linf_u");
        for r in &self.runs {
            s.push_str(&format!(
                "{:>10} {:>22.12e} {:>22.12e} {:>22.12e}\n",
                r.scale, r.tail.max_n, r.tail.linf_grad_c, r.tail.linf_u
            ));
        }
        s.push_str(&format!(
            "{:>10} {:>22.6} {:>22.6} {:>22.6}\n",
            "spread", self.spreads[0], self.spreads[1], self.spreads[2]
        ));
        s
    }
}

fn scaled_config(base: &ScenarioConfig, scale: f64, tag: &str) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.run.initial_scale = base.run.initial_scale * scale;
    if let Some(dir) = &base.run.output_dir {
        cfg.run.output_dir = Some(dir.join(tag));
    }
    cfg
}

/// Runs each scaled copy of the initial data (in parallel when enabled) and
/// compares the tail maxima.
pub fn absorbing_experiment(base: &ScenarioConfig, scales: &[f64]) -> Result<AbsorbingReport> {
    if scales.len() < 3 {
        return Err(SimError::validation("scales", "need at least three scales"));
    }
    if scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(SimError::validation("scales", "must be positive and finite"));
    }
    base.validate()?;
    let jobs: Vec<(usize, f64)> = scales.iter().copied().enumerate().collect();
    let results = exec::map_jobs(jobs, |(k, s)| {
        let cfg = scaled_config(base, s, &format!("scale_{k}_{s}"));
        run_scenario(&cfg).map(|r| (s, r))
    });
    let t_end = base.run.t_end;
    let mut runs = Vec::with_capacity(scales.len());
    for res in results {
        let (scale, result) = res?;
        if result.blowup_flag() {
            return Err(SimError::RunIncomplete {
                label: format!("with initial scale {scale}"),
                outcome: format!("{:?}", result.summary.outcome),
            });
        }
        let tail = tail_stats(&result.series, t_end, base.run.tail_fraction);
        runs.push(ScaleRun { scale, tail, result });
    }
    let mut spreads = [0.0; 3];
    for (q, spread) in spreads.iter_mut().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|r| r.tail.values()[q]).collect();
        *spread = spread_ratio(&vals);
    }
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AbsorbingReport {
        runs,
        spreads,
        threshold: base.run.spread_threshold,
        spans_decade: hi / lo >= 10.0 * (1.0 - 1e-12),
    })
}

#[derive(Debug, Clone)]
pub struct SweepMember {
    pub value: f64,
    /// `None` when the value made the configuration invalid.
    pub result: Option<RunResult>,
    pub tail: Option<TailStats>,
    pub note: String,
}

/// Names accepted by [`set_param`].
pub const SWEEP_PARAMS: [&str; 9] = ["r", "mu", "alpha", "beta", "chi", "k", "eta", "nu_visc", "c_floor"];

pub fn set_param(cfg: &mut ScenarioConfig, name: &str, value: f64) -> Result<()> {
    let p = &mut cfg.params;
    let slot = match name {
        "r" => &mut p.r,
        "mu" => &mut p.mu,
        "alpha" => &mut p.alpha,
        "beta" => &mut p.beta,
        "chi" => &mut p.chi,
        "k" => &mut p.k,
        "eta" => &mut p.eta,
        "nu_visc" => &mut p.nu_visc,
        "c_floor" => &mut p.c_floor,
        _ => {
            return Err(SimError::validation(
                "param",
                format!("unknown parameter `{name}`; expected one of {}", SWEEP_PARAMS.join(", ")),
            ))
        }
    };
    *slot = value;
    Ok(())
}

/// Runs the base scenario once per value of `param`. Members whose value is
/// invalid or whose run stops early are kept with a note.
pub fn sweep(base: &ScenarioConfig, param: &str, values: &[f64]) -> Result<Vec<SweepMember>> {
    if values.is_empty() {
        return Err(SimError::validation("values", "need at least one value"));
    }
    set_param(&mut base.clone(), param, 0.0)?;
    let jobs: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    let members = exec::map_jobs(jobs, |(k, v)| {
        let mut cfg = base.clone();
        set_param(&mut cfg, param, v).expect("name checked above");
        if let Some(dir) = &base.run.output_dir {
            cfg.run.output_dir = Some(dir.join(format!("{param}_{k}_{v}")));
        }
        match run_scenario(&cfg) {
            Ok(r) => {
                let tail = tail_stats(&r.series, cfg.run.t_end, cfg.run.tail_fraction);
                let note = match &r.summary.outcome {
                    super::run::RunOutcome::Completed => "completed".to_string(),
                    other => format!("{other:?}"),
                };
                Ok(SweepMember {
                    value: v,
                    result: Some(r),
                    tail: Some(tail),
                    note,
                })
            }
            Err(e @ SimError::Validation { .. }) => Ok(SweepMember {
                value: v,
                result: None,
                tail: None,
                note: e.to_string(),
            }),
            Err(e) => Err(e),
        }
    });
    members.into_iter().collect()
}
