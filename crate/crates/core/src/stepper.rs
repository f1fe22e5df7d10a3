//! One time step of the coupled system by operator splitting:
//! fluid (viscous solve + projection), then c, then n.
//!
//! Transport and chemotaxis are explicit first-order upwind, diffusion is
//! backward Euler, the decay of c is implicit, and the density reaction uses a
//! Patankar-type factorization that keeps n non-negative for any step size.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::grid::{BoundaryKind, ScalarField, VectorField};
use crate::model::{Forcing, Params, SimState};
use crate::operators::{
    advect_velocity, buoyancy_on_faces, chemotactic_velocity, grad_to_faces, mac_divergence,
    max_divergence, max_outflow_rate, upwind_flux_divergence, StencilWorkspace,
};
use crate::solvers::{
    solve_helmholtz_nonneg, solve_helmholtz_ws, solve_pressure_poisson_abs,
    solve_velocity_helmholtz, SolveStats, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub cfl_adv: f64,
    pub cfl_chem: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Max-norm bound on the discrete divergence after projection.
    pub proj_tol: f64,
    /// Any field magnitude above this flags a suspected blow-up.
    pub overflow_guard: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            cfl_adv: 0.4,
            cfl_chem: 0.4,
            dt_max: 1e-2,
            dt_min: 1e-9,
            proj_tol: 1e-9,
            overflow_guard: 1e12,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("step.cfl_adv", self.cfl_adv), ("step.cfl_chem", self.cfl_chem)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SimError::validation(name, "must lie in (0,1)"));
            }
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return Err(SimError::validation("step.dt_min", "need 0 < dt_min < dt_max"));
        }
        if !(self.proj_tol > 0.0) {
            return Err(SimError::validation("step.proj_tol", "must be positive"));
        }
        if !(self.overflow_guard > 0.0) {
            return Err(SimError::validation("step.overflow_guard", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverIters {
    pub velocity_x: usize,
    pub velocity_y: usize,
    pub pressure: usize,
    pub c: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub dt_used: f64,
    pub clamp_activations: usize,
    pub solver_iters: SolverIters,
    pub min_n: f64,
    pub min_c: f64,
    pub max_divergence: f64,
    /// Explicit transport sub-steps used for n (1 when the CFL bound sufficed).
    pub transport_substeps: usize,
}

const EPS_SPEED: f64 = 1e-30;
// Sub-steps keep dt_sub * outflow_rate below this.
const POSITIVITY_CFL: f64 = 0.9;

/// Adaptive step: the smallest of `dt_max` and the advective and chemotactic
/// CFL limits.
pub fn compute_dt(state: &SimState, params: &Params, cfg: &StepConfig) -> Result<f64> {
    let h = state.grid().h();
    let u_max = state.u.max_abs();
    let (drift, _) = chemotactic_velocity(&state.c, params);
    let chem_max = drift.max_abs();
    let dt = cfg
        .dt_max
        .min(cfg.cfl_adv * h / u_max.max(EPS_SPEED))
        .min(cfg.cfl_chem * h / chem_max.max(EPS_SPEED));
    if !(dt >= cfg.dt_min) {
        return Err(SimError::DtUnderflow {
            dt,
            dt_min: cfg.dt_min,
        });
    }
    Ok(dt)
}

/// Fluid sub-step: explicit convection and body forces, implicit viscosity,
/// then projection onto discretely divergence-free fields.
pub fn step_fluid(
    state: &SimState,
    params: &Params,
    forcing: &Forcing,
    solver: &SolverConfig,
    cfg: &StepConfig,
    dt: f64,
    pressure_guess: Option<&ScalarField>,
) -> Result<(VectorField, ScalarField, [SolveStats; 3])> {
    let g = state.grid();
    let mut rhs = state.u.clone();
    rhs.axpy(dt, &advect_velocity(&state.u));
    rhs.axpy(dt, &buoyancy_on_faces(&state.n, &forcing.phi));
    if let Some(f) = forcing.force_on_faces(state.t) {
        rhs.axpy(dt, &f);
    }
    rhs.enforce_no_slip();
    let (u_star, [sx, sy]) = solve_velocity_helmholtz(&rhs, params.nu_visc * dt, solver, 0.0)?;

    let mut div = mac_divergence(&u_star);
    div.scale(1.0 / dt);
    // dt * ||residual||_2 bounds the post-projection divergence in max norm
    let tol_abs = 0.1 * cfg.proj_tol / dt;
    let (p, sp) = solve_pressure_poisson_abs(&div, solver, tol_abs, pressure_guess, None)?;
    let mut u_new = u_star;
    u_new.axpy(-dt, &grad_to_faces(&p));
    u_new.enforce_no_slip();
    let found = max_divergence(&u_new);
    if found > cfg.proj_tol {
        return Err(SimError::DivergenceTooLarge {
            found,
            tol: cfg.proj_tol,
        });
    }
    debug_assert_eq!(u_new.grid, g);
    Ok((u_new, p, [sx, sy, sp]))
}

/// Advances `field` by `dt` under the upwind fluxes of `vels`, splitting the
/// interval so that each explicit update is a convex combination.
fn transport_subcycled(field: &ScalarField, vels: &[&VectorField], dt: f64) -> (ScalarField, usize) {
    let rate = max_outflow_rate(vels);
    let substeps = ((dt * rate / POSITIVITY_CFL).ceil() as usize).max(1);
    let h = dt / substeps as f64;
    let mut cur = field.clone();
    for _ in 0..substeps {
        let mut next = cur.clone();
        for v in vels {
            next.axpy(h, &upwind_flux_divergence(&cur, v));
        }
        cur = next;
    }
    (cur, substeps)
}

fn sample_source(field: &ScalarField, src: &dyn Fn(f64, f64, f64) -> f64, t: f64) -> ScalarField {
    ScalarField::from_fn(field.grid, field.bc, |x, y| src(x, y, t))
}

/// Signal sub-step: `(1 + alpha dt - dt Lap) c_new = c + dt (transport + beta n)`.
pub fn step_c(
    state: &SimState,
    params: &Params,
    forcing: &Forcing,
    solver: &SolverConfig,
    cfg: &StepConfig,
    u_new: &VectorField,
    dt: f64,
    ws: Option<&mut StencilWorkspace>,
) -> Result<(ScalarField, SolveStats)> {
    let div = max_divergence(u_new);
    if div > cfg.proj_tol {
        return Err(SimError::DivergenceTooLarge {
            found: div,
            tol: cfg.proj_tol,
        });
    }
    let (mut rhs, _) = transport_subcycled(&state.c, &[u_new], dt);
    rhs.axpy(dt * params.beta, &state.n);
    if let Some(src) = &forcing.c_source {
        rhs.axpy(dt, &sample_source(&state.c, src.as_ref(), state.t));
    }
    let decay = 1.0 + params.alpha * dt;
    rhs.scale(1.0 / decay);
    let (c_new, stats) = solve_helmholtz_ws(&rhs, dt / decay, BoundaryKind::NeumannZero, solver, ws)?;
    let min = c_new.min();
    if !(min > 0.0) {
        return Err(SimError::NegativeC { min });
    }
    Ok((c_new, stats))
}

/// Patankar-type reaction update; exact fixed point at the positive
/// equilibrium and non-negative for any `dt`.
#[inline]
pub fn reaction_substep(n: f64, params: &Params, dt: f64) -> f64 {
    n * (1.0 + dt * params.r) / (1.0 + dt * params.mu * n / (n + E).ln().powf(params.eta))
}

/// Density sub-step: explicit upwind transport and chemotaxis on `c_new`,
/// implicit diffusion, then the pointwise reaction.
/// Returns the new density, clamp activations, transport sub-steps and the
/// diffusion solve statistics.
#[allow(clippy::too_many_arguments)]
pub fn step_n(
    state: &SimState,
    params: &Params,
    forcing: &Forcing,
    solver: &SolverConfig,
    cfg: &StepConfig,
    u_new: &VectorField,
    c_new: &ScalarField,
    dt: f64,
    ws: Option<&mut StencilWorkspace>,
) -> Result<(ScalarField, usize, usize, SolveStats)> {
    let div = max_divergence(u_new);
    if div > cfg.proj_tol {
        return Err(SimError::DivergenceTooLarge {
            found: div,
            tol: cfg.proj_tol,
        });
    }
    let (drift, clamps) = chemotactic_velocity(c_new, params);
    let (mut rhs, substeps) = transport_subcycled(&state.n, &[u_new, &drift], dt);
    if let Some(src) = &forcing.n_source {
        rhs.axpy(dt, &sample_source(&state.n, src.as_ref(), state.t));
    }
    let (mut n_new, stats) = solve_helmholtz_nonneg(&rhs, dt, BoundaryKind::NeumannZero, solver, ws)?;
    for v in &mut n_new.data {
        *v = reaction_substep(*v, params, dt);
    }
    let min = n_new.min();
    if !(min >= 0.0) && forcing.n_source.is_none() {
        return Err(SimError::NegativeN { min });
    }
    Ok((n_new, clamps, substeps, stats))
}

/// Owns the per-run scratch space and the previous pressure (used as the
/// initial guess of the next projection).
#[derive(Debug, Clone)]
pub struct Stepper {
    pub params: Params,
    pub forcing: Forcing,
    pub cfg: StepConfig,
    pub solver: SolverConfig,
    ws: Option<StencilWorkspace>,
    last_pressure: Option<ScalarField>,
}

impl Stepper {
    pub fn new(params: Params, forcing: Forcing, cfg: StepConfig, solver: SolverConfig) -> Self {
        Stepper {
            params,
            forcing,
            cfg,
            solver,
            ws: None,
            last_pressure: None,
        }
    }

    /// One full step. `max_dt` caps the adaptive step (used to land exactly on
    /// output times).
    pub fn step(&mut self, state: &SimState, max_dt: Option<f64>) -> Result<(SimState, StepReport)> {
        let mut dt = compute_dt(state, &self.params, &self.cfg).map_err(|e| match e {
            SimError::DtUnderflow { dt, .. } => SimError::BlowupSuspected {
                t: state.t,
                reason: format!("time step underflow (dt = {dt:.3e})"),
            },
            other => other,
        })?;
        if let Some(cap) = max_dt {
            if cap > 0.0 && cap < dt {
                dt = cap;
            }
        }
        self.step_with_dt(state, dt)
    }

    pub fn step_with_dt(&mut self, state: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
        let g = state.grid();
        let mut ws = match self.ws.take() {
            Some(w) if w.fits(&g, g.cells()) => w,
            _ => StencilWorkspace::new(g, g.cells()),
        };
        let result = self.advance(state, dt, &mut ws);
        self.ws = Some(ws);
        result
    }

    fn advance(&mut self, state: &SimState, dt: f64, ws: &mut StencilWorkspace) -> Result<(SimState, StepReport)> {
        let p = &self.params;
        let guess = self.last_pressure.as_ref().filter(|q| q.grid == state.grid());
        let (u_new, pressure, [sx, sy, sp]) =
            step_fluid(state, p, &self.forcing, &self.solver, &self.cfg, dt, guess)?;
        self.last_pressure = Some(pressure);
        let (c_new, sc) = step_c(state, p, &self.forcing, &self.solver, &self.cfg, &u_new, dt, Some(ws))?;
        let (n_new, clamps, substeps, sn) =
            step_n(state, p, &self.forcing, &self.solver, &self.cfg, &u_new, &c_new, dt, Some(ws))?;

        let t = state.t + dt;
        let guard = self.cfg.overflow_guard;
        let peak = n_new.max_abs().max(c_new.max_abs()).max(u_new.max_abs());
        if !(peak <= guard) {
            return Err(SimError::BlowupSuspected {
                t,
                reason: format!("field magnitude {peak:.3e} above overflow guard {guard:.1e}"),
            });
        }
        let report = StepReport {
            dt_used: dt,
            clamp_activations: clamps,
            solver_iters: SolverIters {
                velocity_x: sx.iterations,
                velocity_y: sy.iterations,
                pressure: sp.iterations,
                c: sc.iterations,
                n: sn.iterations,
            },
            min_n: n_new.min(),
            min_c: c_new.min(),
            max_divergence: max_divergence(&u_new),
            transport_substeps: substeps,
        };
        let next = SimState {
            t,
            n: n_new,
            c: c_new,
            u: u_new,
        };
        Ok((next, report))
    }
}

/// Convenience wrapper: a single step without persistent scratch space.
pub fn step(
    state: &SimState,
    params: &Params,
    forcing: &Forcing,
    cfg: &StepConfig,
    solver: &SolverConfig,
) -> Result<(SimState, StepReport)> {
    Stepper::new(*params, forcing.clone(), *cfg, *solver).step(state, None)
}
