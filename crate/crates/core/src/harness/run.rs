//! Single scenario runs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{snapshot, DiagnosticsOptions, DiagnosticsRecord, SpaceTimeWindows};
use crate::error::{Result, SimError};
use crate::model::{Forcing, SimState};
use crate::stepper::Stepper;

use super::checkpoint::write_checkpoint;
use super::config::ScenarioConfig;
use super::presets;

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    /// The solution ran away (overflow guard or time-step underflow).
    BlowUp { t: f64, reason: String },
    /// The scheme failed for another reason (solver, positivity, divergence).
    Failed { t: f64, reason: String },
}

impl RunOutcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunOutcome::Completed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub clamp_activations: usize,
    pub max_transport_substeps: usize,
    pub initial_min_c: f64,
    pub outcome: RunOutcome,
}

impl RunSummary {
    /// Anything but a completed run raises the flag.
    pub fn blowup_flag(&self) -> bool {
        !self.outcome.is_completed()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: SimState,
    /// Final checkpoint, when an output directory was configured.
    pub checkpoint: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
    pub series: Vec<DiagnosticsRecord>,
    pub summary: RunSummary,
}

impl RunResult {
    pub fn blowup_flag(&self) -> bool {
        self.summary.blowup_flag()
    }
}

/// Output times: every snapshot interval, every checkpoint interval, and `t_end`.
fn landing_times(t_end: f64, every: f64) -> Vec<f64> {
    let k_max = (t_end / every * (1.0 + 1e-12)).floor() as usize;
    let mut ts: Vec<f64> = (1..=k_max).map(|k| k as f64 * every).filter(|&t| t < t_end).collect();
    ts.push(t_end);
    ts
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    out
}

fn contains(ts: &[f64], t: f64) -> bool {
    ts.iter().any(|&s| (s - t).abs() <= 1e-12 * s.abs().max(1.0))
}

struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvSink {
    fn create(path: PathBuf) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(DiagnosticsRecord::CSV_HEADER)?;
        Ok(CsvSink { path, writer })
    }

    fn push(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        self.writer
            .write_record(r.csv_values().iter().map(|v| format!("{v:.16e}")))?;
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| SimError::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Validates `cfg`, builds the initial data and integrates to `t_end`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    let (state, forcing) = presets::build(cfg)?;
    run_from(cfg, state, forcing)
}

/// Integrates from a given state. Stepper failures end the run early and are
/// reported through [`RunOutcome`]; only setup and I/O problems are errors.
pub fn run_from(cfg: &ScenarioConfig, initial: SimState, forcing: Forcing) -> Result<RunResult> {
    let run = &cfg.run;
    let opts: DiagnosticsOptions = run.diagnostics_options();
    let out_dir = run.output_dir.as_deref();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    let mut sink = match out_dir {
        Some(dir) => Some(CsvSink::create(dir.join(&run.csv_name))?),
        None => None,
    };

    let snaps = landing_times(run.t_end, run.snapshot_interval);
    let checks = run
        .checkpoint_interval
        .map(|ci| landing_times(run.t_end, ci))
        .unwrap_or_default();
    let t0 = initial.t;
    let after_start = |ts: Vec<f64>| -> Vec<f64> { ts.into_iter().filter(|&t| t > t0 + 1e-12 * t.abs().max(1.0)).collect() };
    let snaps = after_start(snaps);
    let checks = after_start(checks);
    let targets = merge(&snaps, &checks);

    let mut stepper = Stepper::new(cfg.params, forcing, cfg.step, cfg.solver);
    let mut windows = SpaceTimeWindows::new(run.window_tau);
    let mut state = initial;
    let mut series = Vec::with_capacity(snaps.len() + 1);
    let mut summary = RunSummary {
        steps: 0,
        min_dt: f64::INFINITY,
        max_dt: 0.0,
        clamp_activations: 0,
        max_transport_substeps: 0,
        initial_min_c: state.c.min(),
        outcome: RunOutcome::Completed,
    };

    let first = snapshot(&state, &cfg.params, Some(&windows), &opts);
    if let Some(s) = sink.as_mut() {
        s.push(&first)?;
    }
    series.push(first);

    let mut checkpoint_count = 0usize;
    'targets: for &target in &targets {
        while state.t < target {
            let remaining = target - state.t;
            match stepper.step(&state, Some(remaining)) {
                Ok((mut next, report)) => {
                    windows.accumulate(&state, &cfg.params, report.dt_used);
                    if (next.t - target).abs() <= 1e-12 * target.max(1.0) {
                        next.t = target;
                    }
                    summary.steps += 1;
                    summary.min_dt = summary.min_dt.min(report.dt_used);
                    summary.max_dt = summary.max_dt.max(report.dt_used);
                    summary.clamp_activations += report.clamp_activations;
                    summary.max_transport_substeps = summary.max_transport_substeps.max(report.transport_substeps);
                    state = next;
                }
                Err(e) => {
                    let reason = e.to_string();
                    log::warn!("run stopped at t = {}: {reason}", state.t);
                    summary.outcome = if e.is_blowup() {
                        RunOutcome::BlowUp { t: state.t, reason }
                    } else {
                        RunOutcome::Failed { t: state.t, reason }
                    };
                    break 'targets;
                }
            }
        }
        if contains(&snaps, target) {
            let rec = snapshot(&state, &cfg.params, Some(&windows), &opts);
            if !rec.is_finite() {
                summary.outcome = RunOutcome::BlowUp {
                    t: state.t,
                    reason: "non-finite diagnostics".into(),
                };
                break;
            }
            if let Some(s) = sink.as_mut() {
                s.push(&rec)?;
            }
            series.push(rec);
            log::debug!("t = {:.4} max_n = {:.6e}", rec.t, rec.max_n);
        }
        if contains(&checks, target) && target < run.t_end {
            if let Some(dir) = out_dir {
                checkpoint_count += 1;
                write_checkpoint(&state, dir.join(format!("checkpoint_{checkpoint_count:04}.cfsim")))?;
            }
        }
    }

    let csv_path = match sink {
        Some(s) => Some(s.finish()?),
        None => None,
    };
    let checkpoint = match out_dir {
        Some(dir) => {
            let p = dir.join("final.cfsim");
            write_checkpoint(&state, &p)?;
            Some(p)
        }
        None => None,
    };
    if summary.steps == 0 {
        summary.min_dt = 0.0;
    }
    Ok(RunResult {
        final_state: state,
        checkpoint,
        csv_path,
        series,
        summary,
    })
}

/// Writes `text` next to the run outputs (used for resolved configs).
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| SimError::io(&p, e))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{GridSpec, InitialSpec, RunSpec};
    use crate::model::Params;

    fn cfg(initial: InitialSpec, t_end: f64, every: f64) -> ScenarioConfig {
        ScenarioConfig {
            grid: GridSpec {
                nx: 8,
                ny: 8,
                lx: 1.0,
                ly: 1.0,
            },
            params: Params::default(),
            initial,
            potential: Default::default(),
            forcing: Default::default(),
            run: RunSpec::new(t_end, every),
            solver: Default::default(),
            step: Default::default(),
        }
    }

    #[test]
    fn landing_times_cover_t_end() {
        assert_eq!(landing_times(1.0, 0.25), vec![0.25, 0.5, 0.75, 1.0]);
        let ts = landing_times(1.0, 0.3);
        assert_eq!(ts.len(), 4);
        assert_eq!(*ts.last().unwrap(), 1.0);
        // 0.1 * 10 rounds just above 1; no duplicate end point
        assert_eq!(landing_times(1.0, 0.1).len(), 10);
    }

    #[test]
    fn zero_scenario_decays_without_clamps() {
        let mut c = cfg(InitialSpec::Uniform { n0: 0.0, c0: 1.0 }, 1.0, 0.1);
        c.run.allow_out_of_hypothesis = true;
        let r = run_scenario(&c).unwrap();
        assert!(!r.blowup_flag());
        assert_eq!(r.summary.clamp_activations, 0);
        assert_eq!(r.series.len(), 11);
        for w in r.series.windows(2) {
            assert!(w[1].t > w[0].t);
            assert_eq!(w[1].mass_n, 0.0);
            assert_eq!(w[1].l2_u, 0.0);
            assert!(w[1].mass_c < w[0].mass_c);
        }
        assert_eq!(r.series.last().unwrap().t, 1.0);
    }

    #[test]
    fn snapshots_land_on_grid_times() {
        let c = cfg(
            InitialSpec::GaussianBump {
                amplitude: 2.0,
                width: 0.2,
                center: [0.5, 0.5],
                base: 0.1,
                c0: 1.0,
            },
            0.3,
            0.05,
        );
        let r = run_scenario(&c).unwrap();
        let ts: Vec<f64> = r.series.iter().map(|s| s.t).collect();
        for (k, t) in ts.iter().enumerate() {
            assert!((t - 0.05 * k as f64).abs() < 1e-12, "{ts:?}");
        }
        assert!(r.series.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn outputs_written_when_dir_set() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(InitialSpec::Uniform { n0: 1.0, c0: 1.0 }, 0.2, 0.1);
        c.run.output_dir = Some(dir.path().to_path_buf());
        c.run.checkpoint_interval = Some(0.1);
        let r = run_scenario(&c).unwrap();
        let text = fs::read_to_string(r.csv_path.unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DiagnosticsRecord::CSV_HEADER.join(","));
        assert_eq!(lines.count(), 3);
        assert!(r.checkpoint.unwrap().exists());
        assert!(dir.path().join("checkpoint_0001.cfsim").exists());
    }

    #[test]
    fn blowup_is_flagged_not_raised() {
        let mut c = cfg(InitialSpec::Uniform { n0: 1.0, c0: 1.0 }, 1.0, 0.5);
        c.step.overflow_guard = 1.05;
        c.params.r = 5.0;
        let r = run_scenario(&c).unwrap();
        assert!(r.blowup_flag());
        assert!(matches!(r.summary.outcome, RunOutcome::BlowUp { .. }));
        assert!(r.series.iter().all(|s| s.is_finite()));
    }
}
