//! Turns preset specifications into fields.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};
use crate::model::{Forcing, SimState};

use super::config::{ForcingSpec, InitialSpec, PotentialSpec, ScenarioConfig};

fn gaussian(g: &Grid, x: f64, y: f64, center: [f64; 2], width: f64) -> f64 {
    let dx = x - center[0] * g.lx;
    let dy = y - center[1] * g.ly;
    (-(dx * dx + dy * dy) / (width * width)).exp()
}

/// Initial state at `t = 0` with `u = 0`; `scale` multiplies `n0` and `c0`.
pub fn initial_state(grid: Grid, spec: &InitialSpec, scale: f64, fallback_seed: u64) -> Result<SimState> {
    let nb = BoundaryKind::NeumannZero;
    let n = match *spec {
        InitialSpec::Uniform { n0, .. } => ScalarField::constant(grid, nb, n0),
        InitialSpec::GaussianBump {
            amplitude,
            width,
            center,
            base,
            ..
        } => ScalarField::from_fn(grid, nb, |x, y| base + amplitude * gaussian(&grid, x, y, center, width)),
        InitialSpec::RandomPerturbed {
            base, noise_amp, seed, ..
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed));
            ScalarField::from_fn(grid, nb, |_, _| base * (1.0 + noise_amp * rng.gen_range(-1.0..=1.0)))
        }
        InitialSpec::Checker { level_a, level_b, .. } => {
            let mut data = Vec::with_capacity(grid.cells());
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    data.push(if (i + j) % 2 == 0 { level_a } else { level_b });
                }
            }
            ScalarField::from_data(grid, nb, data)?
        }
    };
    let mut n = n;
    n.scale(scale);
    let c = ScalarField::constant(grid, nb, spec.c0() * scale);
    SimState::new(0.0, n, c, VectorField::zeros(grid))
}

pub fn potential_field(grid: Grid, spec: &PotentialSpec) -> ScalarField {
    let nb = BoundaryKind::NeumannZero;
    match *spec {
        PotentialSpec::Constant { value } => ScalarField::constant(grid, nb, value),
        PotentialSpec::LinearGravity { g } => ScalarField::from_fn(grid, nb, |_, y| -g * y),
        PotentialSpec::Bump {
            amplitude,
            width,
            center,
        } => ScalarField::from_fn(grid, nb, |x, y| amplitude * gaussian(&grid, x, y, center, width)),
    }
}

pub fn forcing(grid: Grid, potential: &PotentialSpec, force: &ForcingSpec) -> Forcing {
    let mut out = Forcing::none(grid);
    out.phi = potential_field(grid, potential);
    if let ForcingSpec::Oscillatory {
        amplitude,
        frequency,
    } = *force
    {
        let (lx, ly) = (grid.lx, grid.ly);
        out = out.with_force(Arc::new(move |x, y, t| {
            let a = amplitude * (2.0 * PI * frequency * t).sin();
            let (sx, cx) = (PI * x / lx).sin_cos();
            let (sy, cy) = (PI * y / ly).sin_cos();
            [a * sx * cy, -a * cx * sy]
        }));
    }
    out
}

/// Initial state and forcing described by `cfg`.
pub fn build(cfg: &ScenarioConfig) -> Result<(SimState, Forcing)> {
    let grid = cfg.grid.build()?;
    let state = initial_state(grid, &cfg.initial, cfg.run.initial_scale, cfg.run.seed)?;
    Ok((state, forcing(grid, &cfg.potential, &cfg.forcing)))
}
