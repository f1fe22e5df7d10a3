//! Grid-refinement studies against manufactured solutions.
//!
//! Two problems are solved on each level:
//! * pure diffusion of a Neumann cosine mode, with every coupling switched
//!   off and `dt ~ h^2`, which isolates the second-order spatial stencil;
//! * the full coupled system with smooth exact fields and the PDE residual
//!   injected as sources, `dt ~ h`, where first-order splitting and upwinding
//!   dominate.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use crate::error::{Result, SimError};
use crate::exec;
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};
use crate::model::{Forcing, Params, SimState};
use crate::solvers::SolverConfig;
use crate::stepper::{StepConfig, Stepper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsOptions {
    pub diffusion_t_end: f64,
    /// `dt = factor * h^2` for the diffusion problem.
    pub diffusion_dt_factor: f64,
    pub full_t_end: f64,
    /// `dt = factor * h` for the coupled problem.
    pub full_dt_factor: f64,
}

impl Default for MmsOptions {
    fn default() -> Self {
        MmsOptions {
            diffusion_t_end: 0.05,
            diffusion_dt_factor: 0.5,
            full_t_end: 0.5,
            full_dt_factor: 0.25,
        }
    }
}

/// Discrete L2 errors of one coupled run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldErrors {
    pub n: f64,
    pub c: f64,
    pub u: f64,
}

impl FieldErrors {
    pub fn composite(&self) -> f64 {
        self.n + self.c + self.u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    pub diffusion_errors: Vec<f64>,
    pub full_errors: Vec<FieldErrors>,
    /// Between consecutive levels; NaN where a level repeats.
    pub diffusion_orders: Vec<f64>,
    pub n_orders: Vec<f64>,
    pub c_orders: Vec<f64>,
    pub u_orders: Vec<f64>,
    pub composite_orders: Vec<f64>,
    /// Some consecutive levels coincide, so no order can be formed there.
    pub degenerate: bool,
}

pub const DIFFUSION_ORDER_MIN: f64 = 1.9;
pub const COMPOSITE_ORDER_MIN: f64 = 0.9;

fn min_order(orders: &[f64]) -> f64 {
    if orders.is_empty() || orders.iter().any(|o| o.is_nan()) {
        return f64::NAN;
    }
    orders.iter().copied().fold(f64::INFINITY, f64::min)
}

impl ConvergenceReport {
    pub fn min_diffusion_order(&self) -> f64 {
        min_order(&self.diffusion_orders)
    }

    pub fn min_composite_order(&self) -> f64 {
        min_order(&self.composite_orders)
    }

    pub fn passes(&self) -> bool {
        !self.degenerate
            && self.min_diffusion_order() >= DIFFUSION_ORDER_MIN
            && self.min_composite_order() >= COMPOSITE_ORDER_MIN
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>6} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
            "level", "diffusion", "n", "c", "u", "composite"
        );
        for (k, &l) in self.levels.iter().enumerate() {
            let f = &self.full_errors[k];
            s.push_str(&format!(
                "{:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                l,
                self.diffusion_errors[k],
                f.n,
                f.c,
                f.u,
                f.composite()
            ));
            if k + 1 < self.levels.len() {
                s.push_str(&format!(
                    "{:>6} {:>14.4} {:>14.4} {:>14.4} {:>14.4} {:>14.4}\n",
                    "order",
                    self.diffusion_orders[k],
                    self.n_orders[k],
                    self.c_orders[k],
                    self.u_orders[k],
                    self.composite_orders[k]
                ));
            }
        }
        if self.degenerate {
            s.push_str("degenerate input: repeated refinement level\n");
        }
        s
    }
}

/// `log(e_coarse / e_fine) / log(N_fine / N_coarse)`; NaN for equal levels.
pub fn observed_order(n_coarse: usize, e_coarse: f64, n_fine: usize, e_fine: f64) -> f64 {
    if n_coarse == n_fine {
        return f64::NAN;
    }
    (e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

fn orders(levels: &[usize], errs: &[f64]) -> Vec<f64> {
    levels
        .windows(2)
        .zip(errs.windows(2))
        .map(|(l, e)| observed_order(l[0], e[0], l[1], e[1]))
        .collect()
}

fn l2_cells(a: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = a.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.cell_center(i, j);
            let d = a.at(i, j) - exact(x, y);
            s += d * d;
        }
    }
    (s * g.cell_area()).sqrt()
}

fn l2_faces(u: &VectorField, ex: impl Fn(f64, f64) -> f64, ey: impl Fn(f64, f64) -> f64) -> f64 {
    let g = u.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let (x, y) = g.x_face(i, j);
            let d = u.ux_at(i, j) - ex(x, y);
            s += d * d;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let (x, y) = g.y_face(i, j);
            let d = u.uy_at(i, j) - ey(x, y);
            s += d * d;
        }
    }
    (s * g.cell_area()).sqrt()
}

/// Fixed-step integration to `t_end` with the step count rounded up.
fn integrate(stepper: &mut Stepper, mut state: SimState, t_end: f64, dt_target: f64) -> Result<SimState> {
    let steps = (t_end / dt_target).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    for _ in 0..steps {
        state = stepper.step_with_dt(&state, dt)?.0;
    }
    Ok(state)
}

fn level_grid(level: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(level, level, lx, ly)
}

/// Neumann cosine mode under pure diffusion: `n = 1 + A e^{-lambda t} cos(kx x) cos(ky y)`.
pub fn diffusion_error(level: usize, lx: f64, ly: f64, opts: &MmsOptions, solver: &SolverConfig) -> Result<f64> {
    let g = level_grid(level, lx, ly)?;
    let (kx, ky) = (PI / lx, PI / ly);
    let lambda = kx * kx + ky * ky;
    let amp = 0.5;
    let exact = move |x: f64, y: f64, t: f64| 1.0 + amp * (-lambda * t).exp() * (kx * x).cos() * (ky * y).cos();
    let params = Params {
        r: 0.0,
        mu: 0.0,
        alpha: 0.0,
        beta: 0.0,
        chi: 0.0,
        ..Params::default()
    };
    let nb = BoundaryKind::NeumannZero;
    let state = SimState::new(
        0.0,
        ScalarField::from_fn(g, nb, |x, y| exact(x, y, 0.0)),
        ScalarField::constant(g, nb, 1.0),
        VectorField::zeros(g),
    )?;
    let h = g.hx.max(g.hy);
    let dt = opts.diffusion_dt_factor * h * h;
    let cfg = StepConfig {
        dt_max: dt.max(2e-12),
        dt_min: 1e-12,
        ..StepConfig::default()
    };
    let mut stepper = Stepper::new(params, Forcing::none(g), cfg, *solver);
    let end = integrate(&mut stepper, state, opts.diffusion_t_end, dt)?;
    let t = end.t;
    Ok(l2_cells(&end.n, |x, y| exact(x, y, t)))
}

/// Smooth exact solution of the coupled system with residual sources.
///
/// `n = 1 + a E C`, `c = 2 + b E C`, `E = e^{-t}`, `C = cos(kx x) cos(ky y)`;
/// `u = curl(psi)` with `psi = gamma E sin^2(kx x) sin^2(ky y)`; `P = 0`;
/// `phi = phi0 y`.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub params: Params,
    pub kx: f64,
    pub ky: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub phi0: f64,
}

/// `S(z) = sin^2(kz)` and its first three derivatives.
#[inline]
fn s_derivs(k: f64, z: f64) -> [f64; 4] {
    let s = (k * z).sin();
    let (s2, c2) = (2.0 * k * z).sin_cos();
    [s * s, k * s2, 2.0 * k * k * c2, -4.0 * k * k * k * s2]
}

impl Manufactured {
    pub fn new(params: Params, lx: f64, ly: f64) -> Self {
        Manufactured {
            params,
            kx: PI / lx,
            ky: PI / ly,
            a: 0.5,
            b: 0.5,
            gamma: 0.2,
            phi0: 0.5,
        }
    }

    /// `(C, C_x, C_y)`.
    fn cos_mode(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (sx, cx) = (self.kx * x).sin_cos();
        let (sy, cy) = (self.ky * y).sin_cos();
        (cx * cy, -self.kx * sx * cy, -self.ky * cx * sy)
    }

    fn lap_factor(&self) -> f64 {
        -(self.kx * self.kx + self.ky * self.ky)
    }

    pub fn n(&self, x: f64, y: f64, t: f64) -> f64 {
        1.0 + self.a * (-t).exp() * self.cos_mode(x, y).0
    }

    pub fn c(&self, x: f64, y: f64, t: f64) -> f64 {
        2.0 + self.b * (-t).exp() * self.cos_mode(x, y).0
    }

    pub fn psi(&self, x: f64, y: f64, t: f64) -> f64 {
        self.gamma * (-t).exp() * s_derivs(self.kx, x)[0] * s_derivs(self.ky, y)[0]
    }

    /// Velocity and its derivatives: `[ux, uy, ux_x, ux_y, uy_x, uy_y, lap ux, lap uy]`.
    fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 8] {
        let e = self.gamma * (-t).exp();
        let sx = s_derivs(self.kx, x);
        let sy = s_derivs(self.ky, y);
        [
            e * sx[0] * sy[1],
            -e * sx[1] * sy[0],
            e * sx[1] * sy[1],
            e * sx[0] * sy[2],
            -e * sx[2] * sy[0],
            -e * sx[1] * sy[1],
            e * (sx[2] * sy[1] + sx[0] * sy[3]),
            -e * (sx[3] * sy[0] + sx[1] * sy[2]),
        ]
    }

    pub fn ux(&self, x: f64, y: f64, t: f64) -> f64 {
        self.velocity(x, y, t)[0]
    }

    pub fn uy(&self, x: f64, y: f64, t: f64) -> f64 {
        self.velocity(x, y, t)[1]
    }

    pub fn source_n(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let e = (-t).exp();
        let (cm, cmx, cmy) = self.cos_mode(x, y);
        let n = 1.0 + self.a * e * cm;
        let c = 2.0 + self.b * e * cm;
        let (nx, ny) = (self.a * e * cmx, self.a * e * cmy);
        let (cx, cy) = (self.b * e * cmx, self.b * e * cmy);
        let lap_n = self.a * e * self.lap_factor() * cm;
        let lap_c = self.b * e * self.lap_factor() * cm;
        let v = self.velocity(x, y, t);
        let ck = c.powf(-p.k);
        let chemo = ck * (nx * cx + ny * cy) - p.k * n * ck / c * (cx * cx + cy * cy) + n * ck * lap_c;
        let damping = p.mu * n * n / (n + E).ln().powf(p.eta);
        -self.a * e * cm + v[0] * nx + v[1] * ny - lap_n + p.chi * chemo - p.r * n + damping
    }

    pub fn source_c(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let e = (-t).exp();
        let (cm, cmx, cmy) = self.cos_mode(x, y);
        let n = 1.0 + self.a * e * cm;
        let c = 2.0 + self.b * e * cm;
        let lap_c = self.b * e * self.lap_factor() * cm;
        let v = self.velocity(x, y, t);
        -self.b * e * cm + self.b * e * (v[0] * cmx + v[1] * cmy) - lap_c + p.alpha * c - p.beta * n
    }

    pub fn force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let nu = self.params.nu_visc;
        let v = self.velocity(x, y, t);
        let n = self.n(x, y, t);
        let adv_x = v[0] * v[2] + v[1] * v[3];
        let adv_y = v[0] * v[4] + v[1] * v[5];
        [-v[0] + adv_x - nu * v[6], -v[1] + adv_y - nu * v[7] - n * self.phi0]
    }

    /// Exact state at `t`, with `u` taken from corner values of `psi` so it is
    /// discretely divergence-free.
    pub fn state(&self, g: Grid, t: f64) -> Result<SimState> {
        let nb = BoundaryKind::NeumannZero;
        let n = ScalarField::from_fn(g, nb, |x, y| self.n(x, y, t));
        let c = ScalarField::from_fn(g, nb, |x, y| self.c(x, y, t));
        let mut u = VectorField::zeros(g);
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in 1..nx {
                let x = i as f64 * g.hx;
                u.ux[j * (nx + 1) + i] = (self.psi(x, (j + 1) as f64 * g.hy, t) - self.psi(x, j as f64 * g.hy, t)) / g.hy;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let y = j as f64 * g.hy;
                u.uy[j * nx + i] = -(self.psi((i + 1) as f64 * g.hx, y, t) - self.psi(i as f64 * g.hx, y, t)) / g.hx;
            }
        }
        SimState::new(t, n, c, u)
    }

    pub fn forcing(&self, g: Grid) -> Forcing {
        let m = *self;
        let mut f = Forcing::none(g);
        f.phi = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |_, y| m.phi0 * y);
        f.f = Some(Arc::new(move |x, y, t| m.force(x, y, t)));
        f.n_source = Some(Arc::new(move |x, y, t| m.source_n(x, y, t)));
        f.c_source = Some(Arc::new(move |x, y, t| m.source_c(x, y, t)));
        f
    }
}

pub fn full_system_errors(
    level: usize,
    lx: f64,
    ly: f64,
    params: &Params,
    opts: &MmsOptions,
    solver: &SolverConfig,
) -> Result<FieldErrors> {
    let g = level_grid(level, lx, ly)?;
    let m = Manufactured::new(*params, lx, ly);
    let h = g.hx.max(g.hy);
    let dt = opts.full_dt_factor * h;
    let cfg = StepConfig {
        dt_max: dt,
        ..StepConfig::default()
    };
    let mut stepper = Stepper::new(*params, m.forcing(g), cfg, *solver);
    let end = integrate(&mut stepper, m.state(g, 0.0)?, opts.full_t_end, dt)?;
    let t = end.t;
    Ok(FieldErrors {
        n: l2_cells(&end.n, |x, y| m.n(x, y, t)),
        c: l2_cells(&end.c, |x, y| m.c(x, y, t)),
        u: l2_faces(&end.u, |x, y| m.ux(x, y, t), |x, y| m.uy(x, y, t)),
    })
}

/// Runs both manufactured problems on every level (levels in parallel when
/// enabled). The domain size and the coupled-problem constants come from the
/// arguments.
pub fn convergence_study(
    levels: &[usize],
    lx: f64,
    ly: f64,
    params: &Params,
    solver: &SolverConfig,
    opts: &MmsOptions,
) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(SimError::validation("levels", "need at least three grid levels"));
    }
    params.validate_structural()?;
    let results = exec::map_jobs(levels.to_vec(), |l| -> Result<(f64, FieldErrors)> {
        Ok((
            diffusion_error(l, lx, ly, opts, solver)?,
            full_system_errors(l, lx, ly, params, opts, solver)?,
        ))
    });
    let mut diffusion_errors = Vec::with_capacity(levels.len());
    let mut full_errors = Vec::with_capacity(levels.len());
    for r in results {
        let (d, f) = r?;
        diffusion_errors.push(d);
        full_errors.push(f);
    }
    let pick = |f: fn(&FieldErrors) -> f64| -> Vec<f64> { full_errors.iter().map(f).collect() };
    let degenerate = levels.windows(2).any(|w| w[0] == w[1]);
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        diffusion_orders: orders(levels, &diffusion_errors),
        n_orders: orders(levels, &pick(|e| e.n)),
        c_orders: orders(levels, &pick(|e| e.c)),
        u_orders: orders(levels, &pick(|e| e.u)),
        composite_orders: orders(levels, &pick(FieldErrors::composite)),
        diffusion_errors,
        full_errors,
        degenerate,
    })
}
