use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemoflow::diagnostics::snapshot;
use chemoflow::exec;
use chemoflow::harness::{
    absorbing_experiment, convergence_study, load_config, read_checkpoint, run::write_text, run_scenario, sweep,
    MmsOptions, RunOutcome, ScenarioConfig,
};
use chemoflow::lemmas::verify;
use chemoflow::operators::max_divergence;
use chemoflow::reporting::{report_dir, verdicts_table, CriteriaSpec};
use chemoflow::{Params, SimError};
use clap::{Parser, Subcommand};

/// Finite-volume solver and experiment harness for a chemotaxis
/// Navier-Stokes system with singular sensitivity and sub-logistic damping.
#[derive(Debug, Parser)]
#[command(name = "chemoflow", version)]
struct Cli {
    /// Output directory (overrides `run.output_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; 1 runs every kernel serially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized initial data and lemma checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario.
    Run { config: PathBuf },
    /// Compare tail statistics across scaled initial data.
    Absorbing {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
    },
    /// Run the scenario once per parameter value.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Manufactured-solution refinement study.
    Converge {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
    },
    /// Randomized checks of the auxiliary inequalities.
    Lemmas,
    /// Read a checkpoint and print its invariants.
    Check { checkpoint: PathBuf },
    /// Summarize the series under a directory into verdicts.
    Report { dir: PathBuf },
}

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

fn exit_code(e: &SimError) -> u8 {
    match e {
        SimError::Validation { .. }
        | SimError::Parse { .. }
        | SimError::Format(_)
        | SimError::Schema(_)
        | SimError::InvalidDimensions(_) => EXIT_VALIDATION,
        e if e.is_blowup() => EXIT_BLOWUP,
        _ => EXIT_OTHER,
    }
}

fn prepare(cli: &Cli, path: &Path) -> Result<ScenarioConfig, SimError> {
    let mut cfg = load_config(path)?;
    if let Some(dir) = &cli.out_dir {
        cfg.run.output_dir = Some(dir.clone());
    }
    if cfg.run.output_dir.is_none() {
        cfg.run.output_dir = Some(PathBuf::from("out"));
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn save_config(cfg: &ScenarioConfig) -> Result<(), SimError> {
    if let Some(dir) = &cfg.run.output_dir {
        write_text(dir, "config.toml", &cfg.to_toml_string()?)?;
    }
    Ok(())
}

fn cmd_run(cli: &Cli, config: &Path) -> Result<u8, SimError> {
    let cfg = prepare(cli, config)?;
    save_config(&cfg)?;
    let r = run_scenario(&cfg)?;
    let s = &r.summary;
    println!(
        "steps {}  dt [{:.3e}, {:.3e}]  clamps {}  max transport substeps {}",
        s.steps, s.min_dt, s.max_dt, s.clamp_activations, s.max_transport_substeps
    );
    if let Some(last) = r.series.last() {
        println!(
            "t = {}  mass_n = {:.6e}  max_n = {:.6e}  min_c = {:.6e}  energy_F = {:.6e}",
            last.t, last.mass_n, last.max_n, last.min_c, last.energy_f
        );
    }
    if let Some(p) = &r.csv_path {
        println!("series: {}", p.display());
    }
    match &s.outcome {
        RunOutcome::Completed => Ok(0),
        RunOutcome::BlowUp { t, reason } | RunOutcome::Failed { t, reason } => {
            eprintln!("run flagged at t = {t}: {reason}");
            Ok(EXIT_BLOWUP)
        }
    }
}

fn cmd_absorbing(cli: &Cli, config: &Path, scales: &[f64]) -> Result<u8, SimError> {
    let cfg = prepare(cli, config)?;
    save_config(&cfg)?;
    let rep = absorbing_experiment(&cfg, scales)?;
    print!("{}", rep.table());
    if !rep.spans_decade {
        println!("note: scales span less than one order of magnitude");
    }
    println!(
        "max spread {:.6} (threshold {}) {}",
        rep.max_spread(),
        rep.threshold,
        if rep.passes() { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = &cfg.run.output_dir {
        let mut csv = String::from("scale,tail_max_n,tail_linf_grad_c,tail_linf_u\n");
        for r in &rep.runs {
            let _ = writeln!(csv, "{},{:.16e},{:.16e},{:.16e}", r.scale, r.tail.max_n, r.tail.linf_grad_c, r.tail.linf_u);
        }
        write_text(dir, "absorbing.csv", &csv)?;
    }
    Ok(0)
}

fn cmd_sweep(cli: &Cli, config: &Path, param: &str, values: &[f64]) -> Result<u8, SimError> {
    let cfg = prepare(cli, config)?;
    save_config(&cfg)?;
    let members = sweep(&cfg, param, values)?;
    let mut csv = format!("{param},outcome,tail_max_n,tail_linf_grad_c,tail_linf_u\n");
    println!("{:>12} {:>14} {:>14} {:>14}  outcome", param, "tail max_n", "tail |grad c|", "tail |u|");
    for m in &members {
        let t = m.tail.map(|t| t.values()).unwrap_or([f64::NAN; 3]);
        println!("{:>12} {:>14.6e} {:>14.6e} {:>14.6e}  {}", m.value, t[0], t[1], t[2], m.note);
        let _ = writeln!(csv, "{},\"{}\",{:.16e},{:.16e},{:.16e}", m.value, m.note.replace('"', "'"), t[0], t[1], t[2]);
    }
    if let Some(dir) = &cfg.run.output_dir {
        write_text(dir, "sweep.csv", &csv)?;
    }
    Ok(0)
}

fn cmd_converge(cli: &Cli, config: &Path, levels: &[usize]) -> Result<u8, SimError> {
    let cfg = prepare(cli, config)?;
    let rep = convergence_study(
        levels,
        cfg.grid.lx,
        cfg.grid.ly,
        &cfg.params,
        &cfg.solver,
        &MmsOptions::default(),
    )?;
    print!("{}", rep.table());
    println!(
        "diffusion order {:.4}, composite order {:.4}: {}",
        rep.min_diffusion_order(),
        rep.min_composite_order(),
        if rep.passes() { "PASS" } else { "FAIL" }
    );
    Ok(if rep.passes() { 0 } else { EXIT_OTHER })
}

fn cmd_lemmas(cli: &Cli) -> u8 {
    let checks = verify::run_suite(cli.seed.unwrap_or(0));
    print!("{}", verify::format_table(&checks));
    if checks.iter().all(|c| c.pass) {
        0
    } else {
        EXIT_OTHER
    }
}

fn cmd_check(path: &Path) -> Result<u8, SimError> {
    let state = read_checkpoint(path)?;
    let g = state.grid();
    println!("t = {}", state.t);
    println!("grid {} x {} on [0, {}] x [0, {}]", g.nx, g.ny, g.lx, g.ly);
    println!("n in [{:.6e}, {:.6e}]", state.n.min(), state.n.max());
    println!("c in [{:.6e}, {:.6e}]", state.c.min(), state.c.max());
    println!("max |u| = {:.6e}, max |div u| = {:.3e}", state.u.max_abs(), max_divergence(&state.u));
    let params = Params::default();
    let rec = snapshot(&state, &params, None, &Default::default());
    println!("mass_n = {:.6e}, mass_c = {:.6e}", rec.mass_n, rec.mass_c);
    state.validate(&params)?;
    println!("state invariants hold");
    Ok(0)
}

fn cmd_report(dir: &Path) -> Result<u8, SimError> {
    let verdicts = report_dir(dir, &CriteriaSpec::default())?;
    print!("{}", verdicts_table(&verdicts));
    println!("verdicts: {}", dir.join("verdicts.csv").display());
    Ok(if verdicts.iter().all(|v| v.pass) { 0 } else { EXIT_OTHER })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let mode = exec::set_threads(t);
        log::info!("execution mode {mode:?}");
    }
    let result = match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Absorbing { config, scales } => cmd_absorbing(&cli, config, scales),
        Command::Sweep { config, param, values } => cmd_sweep(&cli, config, param, values),
        Command::Converge { config, levels } => cmd_converge(&cli, config, levels),
        Command::Lemmas => Ok(cmd_lemmas(&cli)),
        Command::Check { checkpoint } => cmd_check(checkpoint),
        Command::Report { dir } => cmd_report(dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
