//! Conjugate-gradient solvers for the implicit diffusion (Helmholtz) and
//! pressure (Neumann Poisson) problems.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::exec;
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};
use crate::operators::{laplacian_into, StencilWorkspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative residual target `||A x - b|| <= tol * ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * (nx + ny)`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SimError::validation("solver.tol", "must be positive"));
        }
        if self.max_iter == Some(0) {
            return Err(SimError::validation("solver.max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, grid: &Grid) -> usize {
        self.max_iter.unwrap_or(10 * (grid.nx + grid.ny))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual, recomputed from scratch.
    pub residual: f64,
}

/// Symmetric positive (semi-)definite stencil operator in flat storage.
trait SpdOperator: Sync {
    fn len(&self) -> usize;
    /// Row width used to split work across threads.
    fn width(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
    /// Whether constants lie in the kernel (pure Neumann Laplacian).
    fn singular(&self) -> bool {
        false
    }
}

/// `I - gamma * Laplacian` on cell centers.
struct CellHelmholtz<'a> {
    grid: &'a Grid,
    gamma: f64,
    bc: BoundaryKind,
}

impl SpdOperator for CellHelmholtz<'_> {
    fn len(&self) -> usize {
        self.grid.cells()
    }
    fn width(&self) -> usize {
        self.grid.nx
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        laplacian_into(self.grid, self.bc, x, out);
        let g = self.gamma;
        exec::for_each_row(out, self.grid.nx, |j, row| {
            let base = j * row.len();
            for (i, o) in row.iter_mut().enumerate() {
                *o = x[base + i] - g * *o;
            }
        });
    }
    fn diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
        let mut d = vec![0.0; g.cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let walls = |lo: bool, hi: bool, a: f64| (lo as usize + hi as usize) as f64 * a;
                let w = walls(i == 0, i + 1 == g.nx, ax) + walls(j == 0, j + 1 == g.ny, ay);
                // a mirror ghost drops the wall link, an odd ghost doubles it
                let lap_diag = match self.bc {
                    BoundaryKind::NeumannZero => -2.0 * ax - 2.0 * ay + w,
                    BoundaryKind::DirichletZero => -2.0 * ax - 2.0 * ay - w,
                };
                d[j * g.nx + i] = 1.0 - self.gamma * lap_diag;
            }
        }
        d
    }
}

/// `-Laplacian` with Neumann walls; singular with constant kernel.
struct NeumannPoisson<'a> {
    grid: &'a Grid,
}

impl SpdOperator for NeumannPoisson<'_> {
    fn len(&self) -> usize {
        self.grid.cells()
    }
    fn width(&self) -> usize {
        self.grid.nx
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        laplacian_into(self.grid, BoundaryKind::NeumannZero, x, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
    }
    fn diagonal(&self) -> Vec<f64> {
        let h = CellHelmholtz {
            grid: self.grid,
            gamma: 1.0,
            bc: BoundaryKind::NeumannZero,
        };
        h.diagonal().into_iter().map(|d| d - 1.0).collect()
    }
    fn singular(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceKind {
    X,
    Y,
}

/// `I - gamma * Laplacian` for one velocity component with no-slip walls.
/// Wall-normal faces are decoupled identity rows pinned at zero; across
/// tangential walls the odd ghost applies.
struct FaceHelmholtz<'a> {
    grid: &'a Grid,
    gamma: f64,
    kind: FaceKind,
}

impl FaceHelmholtz<'_> {
    /// Layout `(columns, rows)` of the component array.
    fn shape(&self) -> (usize, usize) {
        match self.kind {
            FaceKind::X => (self.grid.nx + 1, self.grid.ny),
            FaceKind::Y => (self.grid.nx, self.grid.ny + 1),
        }
    }

    fn is_wall(&self, i: usize, j: usize) -> bool {
        let (w, h) = self.shape();
        match self.kind {
            FaceKind::X => i == 0 || i + 1 == w,
            FaceKind::Y => j == 0 || j + 1 == h,
        }
    }
}

impl SpdOperator for FaceHelmholtz<'_> {
    fn len(&self) -> usize {
        let (w, h) = self.shape();
        w * h
    }
    fn width(&self) -> usize {
        self.shape().0
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (w, h) = self.shape();
        let g = self.grid;
        let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
        let gamma = self.gamma;
        let kind = self.kind;
        exec::for_each_row(out, w, |j, row| {
            for (i, o) in row.iter_mut().enumerate() {
                let v = x[j * w + i];
                if self.is_wall(i, j) {
                    *o = v;
                    continue;
                }
                // normal-direction neighbours may be walls (value 0); tangential
                // neighbours past the boundary use the odd ghost.
                let (west, east, south, north) = match kind {
                    FaceKind::X => (
                        if i == 1 { 0.0 } else { x[j * w + i - 1] },
                        if i + 2 == w { 0.0 } else { x[j * w + i + 1] },
                        if j == 0 { -v } else { x[(j - 1) * w + i] },
                        if j + 1 == h { -v } else { x[(j + 1) * w + i] },
                    ),
                    FaceKind::Y => (
                        if i == 0 { -v } else { x[j * w + i - 1] },
                        if i + 1 == w { -v } else { x[j * w + i + 1] },
                        if j == 1 { 0.0 } else { x[(j - 1) * w + i] },
                        if j + 2 == h { 0.0 } else { x[(j + 1) * w + i] },
                    ),
                };
                let lap = ax * (west - 2.0 * v + east) + ay * (south - 2.0 * v + north);
                *o = v - gamma * lap;
            }
        });
    }
    fn diagonal(&self) -> Vec<f64> {
        let (w, h) = self.shape();
        let g = self.grid;
        let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
        let mut d = vec![1.0; w * h];
        for j in 0..h {
            for i in 0..w {
                if self.is_wall(i, j) {
                    continue;
                }
                let ghosts = match self.kind {
                    FaceKind::X => ay * ((j == 0) as usize + (j + 1 == h) as usize) as f64,
                    FaceKind::Y => ax * ((i == 0) as usize + (i + 1 == w) as usize) as f64,
                };
                d[j * w + i] = 1.0 + self.gamma * (2.0 * ax + 2.0 * ay + ghosts);
            }
        }
        d
    }
}

fn norm(v: &[f64]) -> f64 {
    exec::dot(v, v).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Preconditioned CG on `op x = b`, starting from the contents of `x`.
/// Stops when the true residual 2-norm is at most `tol_abs`.
fn conjugate_gradient(
    op: &dyn SpdOperator,
    precond: Preconditioner,
    b: &[f64],
    x: &mut [f64],
    tol_abs: f64,
    max_iter: usize,
    ws: &mut [Vec<f64>; 4],
) -> Result<usize> {
    let n = op.len();
    let width = op.width();
    let inv_diag: Option<Vec<f64>> = match precond {
        Preconditioner::None => None,
        Preconditioner::Jacobi => Some(op.diagonal().into_iter().map(|d| 1.0 / d).collect()),
    };
    let [r, z, p, ap] = ws;
    for v in [&mut *r, &mut *z, &mut *p, &mut *ap] {
        v.resize(n, 0.0);
    }

    let mut iterations = 0;
    // Outer loop restarts from the true residual if the recurrence drifted.
    loop {
        op.apply(x, ap);
        for k in 0..n {
            r[k] = b[k] - ap[k];
        }
        if op.singular() {
            remove_mean(r);
        }
        let mut rnorm = norm(r);
        if rnorm <= tol_abs {
            return Ok(iterations);
        }
        if iterations >= max_iter {
            return Err(SimError::NoConvergence {
                iterations,
                residual: rnorm,
            });
        }
        let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
            Some(d) => {
                for k in 0..n {
                    z[k] = r[k] * d[k];
                }
            }
            None => z.copy_from_slice(r),
        };
        precondition(r, z);
        if op.singular() {
            remove_mean(z);
        }
        p.copy_from_slice(z);
        let mut rz = exec::dot(r, z);
        while iterations < max_iter {
            iterations += 1;
            op.apply(p, ap);
            let pap = exec::dot(p, ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            {
                let (pp, app) = (&*p, &*ap);
                exec::for_each_row(x, width, |j, row| {
                    let base = j * width;
                    for (k, v) in row.iter_mut().enumerate() {
                        *v += alpha * pp[base + k];
                    }
                });
                exec::for_each_row(r, width, |j, row| {
                    let base = j * width;
                    for (k, v) in row.iter_mut().enumerate() {
                        *v -= alpha * app[base + k];
                    }
                });
            }
            rnorm = norm(r);
            if rnorm <= 0.5 * tol_abs {
                break;
            }
            precondition(r, z);
            if op.singular() {
                remove_mean(z);
            }
            let rz_new = exec::dot(r, z);
            let beta = rz_new / rz;
            rz = rz_new;
            let zz = &*z;
            exec::for_each_row(p, width, |j, row| {
                let base = j * width;
                for (k, v) in row.iter_mut().enumerate() {
                    *v = zz[base + k] + beta * *v;
                }
            });
        }
    }
}

fn residual_norm(op: &dyn SpdOperator, b: &[f64], x: &[f64]) -> f64 {
    let mut ax = vec![0.0; op.len()];
    op.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if op.singular() {
        remove_mean(&mut r);
    }
    norm(&r)
}

fn workspace(grid: &Grid, len: usize, ws: Option<&mut StencilWorkspace>) -> StencilWorkspace {
    match ws {
        Some(w) if w.fits(grid, len) => std::mem::replace(w, StencilWorkspace::new(*grid, 0)),
        _ => StencilWorkspace::new(*grid, len),
    }
}

/// Solves `(I - gamma * Laplacian_bc) x = rhs` to relative residual `cfg.tol`.
pub fn solve_helmholtz(
    rhs: &ScalarField,
    gamma: f64,
    bc: BoundaryKind,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveStats)> {
    solve_helmholtz_ws(rhs, gamma, bc, cfg, None)
}

pub fn solve_helmholtz_ws(
    rhs: &ScalarField,
    gamma: f64,
    bc: BoundaryKind,
    cfg: &SolverConfig,
    ws: Option<&mut StencilWorkspace>,
) -> Result<(ScalarField, SolveStats)> {
    assert!(gamma >= 0.0, "gamma must be non-negative");
    let g = rhs.grid;
    let mut out = ScalarField {
        grid: g,
        data: rhs.data.clone(),
        bc,
    };
    let bnorm = norm(&rhs.data);
    if gamma == 0.0 || bnorm == 0.0 {
        return Ok((out, SolveStats::default()));
    }
    let op = CellHelmholtz {
        grid: &g,
        gamma,
        bc,
    };
    // With Neumann walls constants are exact solutions, so only the deviation
    // from the mean is solved for, to a tolerance relative to its own size.
    // Otherwise variations below `tol * ||b||` would never be diffused.
    let mean = match bc {
        BoundaryKind::NeumannZero => rhs.data.iter().sum::<f64>() / rhs.data.len() as f64,
        _ => 0.0,
    };
    let dev: Vec<f64> = rhs.data.iter().map(|v| v - mean).collect();
    let dnorm = norm(&dev);
    let mut iterations = 0;
    if dnorm > 0.0 {
        let mut w = workspace(&g, g.cells(), ws);
        out.data.copy_from_slice(&dev);
        iterations = conjugate_gradient(
            &op,
            cfg.preconditioner,
            &dev,
            &mut out.data,
            cfg.tol * dnorm,
            cfg.iteration_cap(&g),
            &mut w.bufs,
        )?;
        for v in &mut out.data {
            *v += mean;
        }
    }
    let residual = residual_norm(&op, &rhs.data, &out.data) / bnorm;
    Ok((out, SolveStats {
        iterations,
        residual,
    }))
}

/// Helmholtz solve for a non-negative right-hand side whose exact solution is
/// non-negative (the operator is an M-matrix). Round-off negatives left by CG
/// are projected to zero, which can only move the iterate towards the exact
/// solution; Gauss-Seidel sweeps, which preserve the sign, then restore the
/// residual bound if the projection disturbed it.
pub fn solve_helmholtz_nonneg(
    rhs: &ScalarField,
    gamma: f64,
    bc: BoundaryKind,
    cfg: &SolverConfig,
    ws: Option<&mut StencilWorkspace>,
) -> Result<(ScalarField, SolveStats)> {
    let (mut x, mut stats) = solve_helmholtz_ws(rhs, gamma, bc, cfg, ws)?;
    if x.data.iter().all(|v| *v >= 0.0) || rhs.data.iter().any(|v| *v < 0.0) {
        return Ok((x, stats));
    }
    for v in &mut x.data {
        *v = v.max(0.0);
    }
    let g = rhs.grid;
    let op = CellHelmholtz {
        grid: &g,
        gamma,
        bc,
    };
    let bnorm = norm(&rhs.data);
    let diag = op.diagonal();
    let (ax, ay) = (gamma / (g.hx * g.hx), gamma / (g.hy * g.hy));
    let cap = cfg.iteration_cap(&g);
    let mut residual = residual_norm(&op, &rhs.data, &x.data) / bnorm;
    let mut sweeps = 0;
    while residual > cfg.tol {
        if sweeps >= cap {
            return Err(SimError::NoConvergence {
                iterations: stats.iterations + sweeps,
                residual,
            });
        }
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = j * g.nx + i;
                let mut off = 0.0;
                if i > 0 {
                    off += ax * x.data[k - 1];
                }
                if i + 1 < g.nx {
                    off += ax * x.data[k + 1];
                }
                if j > 0 {
                    off += ay * x.data[k - g.nx];
                }
                if j + 1 < g.ny {
                    off += ay * x.data[k + g.nx];
                }
                x.data[k] = (rhs.data[k] + off) / diag[k];
            }
        }
        sweeps += 1;
        residual = residual_norm(&op, &rhs.data, &x.data) / bnorm;
    }
    stats.iterations += sweeps;
    stats.residual = residual;
    Ok((x, stats))
}

/// Implicit viscous solve for both velocity components.
pub fn solve_velocity_helmholtz(
    rhs: &VectorField,
    gamma: f64,
    cfg: &SolverConfig,
    tol_abs_floor: f64,
) -> Result<(VectorField, [SolveStats; 2])> {
    let g = rhs.grid;
    let mut out = rhs.clone();
    out.enforce_no_slip();
    if gamma == 0.0 {
        return Ok((out, [SolveStats::default(); 2]));
    }
    let mut stats = [SolveStats::default(); 2];
    for (k, kind) in [FaceKind::X, FaceKind::Y].into_iter().enumerate() {
        let op = FaceHelmholtz {
            grid: &g,
            gamma,
            kind,
        };
        let (b, x) = match kind {
            FaceKind::X => (&rhs.ux, &mut out.ux),
            FaceKind::Y => (&rhs.uy, &mut out.uy),
        };
        let mut b = b.clone();
        for (idx, v) in b.iter_mut().enumerate() {
            let w = op.width();
            if op.is_wall(idx % w, idx / w) {
                *v = 0.0;
            }
        }
        let bnorm = norm(&b);
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        let mut ws: [Vec<f64>; 4] = Default::default();
        let tol_abs = (cfg.tol * bnorm).max(tol_abs_floor);
        let iterations = conjugate_gradient(
            &op,
            cfg.preconditioner,
            &b,
            x,
            tol_abs,
            cfg.iteration_cap(&g),
            &mut ws,
        )?;
        stats[k] = SolveStats {
            iterations,
            residual: residual_norm(&op, &b, x) / bnorm,
        };
    }
    Ok((out, stats))
}

/// Zero-mean `p` with `Laplacian_N p = rhs` after removing the mean of `rhs`.
pub fn solve_pressure_poisson(div_u_star: &ScalarField, cfg: &SolverConfig) -> Result<(ScalarField, SolveStats)> {
    solve_pressure_poisson_abs(div_u_star, cfg, 0.0, None, None)
}

/// Pressure solve with an additional absolute residual cap `tol_abs` (the
/// effective target is `min(cfg.tol * ||rhs||, tol_abs)` when `tol_abs > 0`)
/// and an optional initial guess.
pub fn solve_pressure_poisson_abs(
    div_u_star: &ScalarField,
    cfg: &SolverConfig,
    tol_abs: f64,
    guess: Option<&ScalarField>,
    ws: Option<&mut StencilWorkspace>,
) -> Result<(ScalarField, SolveStats)> {
    let g = div_u_star.grid;
    // solve -Lap p = -rhs so the operator is positive semi-definite
    let mut b: Vec<f64> = div_u_star.data.iter().map(|v| -v).collect();
    remove_mean(&mut b);
    let bnorm = norm(&b);
    let mut p = ScalarField::zeros(g, BoundaryKind::NeumannZero);
    if bnorm == 0.0 {
        return Ok((p, SolveStats::default()));
    }
    if let Some(guess) = guess {
        p.data.copy_from_slice(&guess.data);
        remove_mean(&mut p.data);
    }
    let op = NeumannPoisson { grid: &g };
    let mut target = cfg.tol * bnorm;
    if tol_abs > 0.0 {
        target = target.min(tol_abs);
    }
    // below this the residual is round-off dominated
    let floor = 1e-15 * bnorm * (g.cells() as f64).sqrt();
    let target = target.max(floor);
    let mut w = workspace(&g, g.cells(), ws);
    let iterations = conjugate_gradient(
        &op,
        cfg.preconditioner,
        &b,
        &mut p.data,
        target,
        cfg.iteration_cap(&g),
        &mut w.bufs,
    )?;
    remove_mean(&mut p.data);
    let residual = residual_norm(&op, &b, &p.data) / bnorm;
    Ok((p, SolveStats {
        iterations,
        residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{grad_to_faces, laplacian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(g, BoundaryKind::NeumannZero, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Dense Gaussian elimination with partial pivoting; test oracle only.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    /// Assembles `I - gamma * Lap` column by column from the stencil.
    fn dense_helmholtz(g: Grid, gamma: f64, bc: BoundaryKind) -> Vec<Vec<f64>> {
        let n = g.cells();
        let mut a = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut e = ScalarField::zeros(g, bc);
            e.data[col] = 1.0;
            let l = laplacian(&e);
            for row in 0..n {
                a[row][col] = e.data[row] - gamma * l.data[row];
            }
        }
        a
    }

    #[test]
    fn gamma_zero_is_identity() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let rhs = random_field(g, 1);
        let (x, _) = solve_helmholtz(&rhs, 0.0, BoundaryKind::NeumannZero, &SolverConfig::default()).unwrap();
        assert_eq!(x.data, rhs.data);
    }

    #[test]
    fn helmholtz_matches_dense_oracle() {
        for bc in [BoundaryKind::NeumannZero, BoundaryKind::DirichletZero] {
            let g = Grid::new(9, 7, 1.0, 0.8).unwrap();
            let rhs = random_field(g, 2);
            let cfg = SolverConfig {
                tol: 1e-12,
                ..SolverConfig::default()
            };
            let (x, stats) = solve_helmholtz(&rhs, 0.05, bc, &cfg).unwrap();
            assert!(stats.residual <= 1e-12);
            let exact = dense_solve(dense_helmholtz(g, 0.05, bc), rhs.data.clone());
            for (a, b) in x.data.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tiny_variation_on_a_large_mean_is_still_diffused() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let (gamma, eps) = (0.01, 1e-10);
        let mode = |i: usize| (std::f64::consts::PI * (i as f64 + 0.5) / 16.0).cos();
        let mut rhs = ScalarField::zeros(g, BoundaryKind::NeumannZero);
        for j in 0..16 {
            for i in 0..16 {
                rhs.data[j * 16 + i] = 3.0 + eps * mode(i);
            }
        }
        // cosine modes are eigenvectors of the mirror-ghost Laplacian
        let lambda = 4.0 * 16.0 * 16.0 * (std::f64::consts::PI / 32.0).sin().powi(2);
        let factor = 1.0 / (1.0 + gamma * lambda);
        let (x, _) = solve_helmholtz(&rhs, gamma, BoundaryKind::NeumannZero, &SolverConfig::default()).unwrap();
        for i in 0..16 {
            let got = x.data[i] - 3.0;
            let want = eps * factor * mode(i);
            assert!((got - want).abs() < 1e-4 * eps, "{i}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn jacobi_diagonal_matches_assembled_matrix() {
        for bc in [BoundaryKind::NeumannZero, BoundaryKind::DirichletZero] {
            let g = Grid::new(5, 6, 1.0, 1.3).unwrap();
            let a = dense_helmholtz(g, 0.3, bc);
            let op = CellHelmholtz {
                grid: &g,
                gamma: 0.3,
                bc,
            };
            for (k, d) in op.diagonal().iter().enumerate() {
                assert!((d - a[k][k]).abs() < 1e-12, "{bc:?} {k}");
            }
        }
    }

    #[test]
    fn residual_contract_on_random_rhs() {
        let g = Grid::new(32, 24, 1.0, 0.75).unwrap();
        let rhs = random_field(g, 3);
        let cfg = SolverConfig::default();
        for gamma in [1e-3, 0.1, 10.0] {
            let (x, _) = solve_helmholtz(&rhs, gamma, BoundaryKind::NeumannZero, &cfg).unwrap();
            // independent residual evaluation through the public Laplacian
            let l = laplacian(&x);
            let r: f64 = x
                .data
                .iter()
                .zip(&l.data)
                .zip(&rhs.data)
                .map(|((x, l), b)| (x - gamma * l - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let bn: f64 = rhs.data.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r <= cfg.tol * bn * 1.0001, "gamma {gamma}: {r} vs {}", cfg.tol * bn);
        }
    }

    #[test]
    fn helmholtz_cosine_converges_second_order() {
        let gamma = 0.1;
        let err = |n: usize| {
            let g = Grid::new(n, n, 1.0, 1.0).unwrap();
            let rhs = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, _| (1.0 + gamma * PI * PI) * (PI * x).cos());
            let (x, _) = solve_helmholtz(&rhs, gamma, BoundaryKind::NeumannZero, &SolverConfig::default()).unwrap();
            let exact = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, _| (PI * x).cos());
            x.data.iter().zip(&exact.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(16), err(32), err(64));
        assert!(e1 < 1e-2);
        assert!((e1 / e2).log2() > 1.9 && (e2 / e3).log2() > 1.9);
    }

    #[test]
    fn pressure_zero_rhs() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let (p, _) = solve_pressure_poisson(&ScalarField::zeros(g, BoundaryKind::NeumannZero), &SolverConfig::default()).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn pressure_cosine_eigenfunction() {
        let g = Grid::new(64, 64, 1.0, 1.0).unwrap();
        let rhs = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, _| -PI * PI * (PI * x).cos());
        let (p, stats) = solve_pressure_poisson(&rhs, &SolverConfig::default()).unwrap();
        assert!(stats.residual <= 1e-10);
        let exact = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, _| (PI * x).cos());
        let err = p.data.iter().zip(&exact.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "err {err}");
        assert!(p.integrate().abs() <= 1e-12 * p.max_abs() * g.area());
    }

    #[test]
    fn pressure_residual_and_mean() {
        let g = Grid::new(20, 30, 1.0, 1.5).unwrap();
        let rhs = random_field(g, 4);
        let (p, _) = solve_pressure_poisson(&rhs, &SolverConfig::default()).unwrap();
        let mut b = rhs.data.clone();
        remove_mean(&mut b);
        let l = laplacian(&p);
        let r: f64 = l.data.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r <= 1e-10 * bn * 1.0001);
        assert!(p.integrate().abs() <= 1e-12 * p.max_abs() * g.area());
    }

    #[test]
    fn gradient_ignores_gauge() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let p = random_field(g, 5);
        let mut q = p.clone();
        for v in &mut q.data {
            *v += 3.25;
        }
        let (a, b) = (grad_to_faces(&p), grad_to_faces(&q));
        for (x, y) in a.ux.iter().zip(&b.ux).chain(a.uy.iter().zip(&b.uy)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let g = Grid::new(24, 24, 1.0, 1.0).unwrap();
        let rhs = random_field(g, 6);
        let cfg = SolverConfig::default();
        let (a, _) = solve_pressure_poisson(&rhs, &cfg).unwrap();
        let (b, _) = solve_pressure_poisson(&rhs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
        let rhs = random_field(g, 7);
        let cfg = SolverConfig {
            max_iter: Some(2),
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_pressure_poisson(&rhs, &cfg),
            Err(SimError::NoConvergence { .. })
        ));
    }

    #[test]
    fn nonneg_solve_never_returns_negatives() {
        let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
        let rhs = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, y| {
            5.0 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.005).exp()
        });
        let (x, stats) = solve_helmholtz_nonneg(&rhs, 1e-3, BoundaryKind::NeumannZero, &SolverConfig::default(), None).unwrap();
        assert!(x.min() >= 0.0);
        assert!(stats.residual <= 1e-10);
    }

    #[test]
    fn velocity_helmholtz_keeps_walls_and_matches_dense() {
        let g = Grid::new(6, 5, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rhs = VectorField::zeros(g);
        for v in rhs.ux.iter_mut().chain(rhs.uy.iter_mut()) {
            *v = rng.gen_range(-1.0..1.0);
        }
        rhs.enforce_no_slip();
        let cfg = SolverConfig {
            tol: 1e-13,
            ..SolverConfig::default()
        };
        let (u, _) = solve_velocity_helmholtz(&rhs, 0.02, &cfg, 0.0).unwrap();
        assert!(u.satisfies_no_slip());
        // dense oracle for the x component
        let op = FaceHelmholtz {
            grid: &g,
            gamma: 0.02,
            kind: FaceKind::X,
        };
        let n = op.len();
        let mut a = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let mut out = vec![0.0; n];
            op.apply(&e, &mut out);
            for row in 0..n {
                a[row][col] = out[row];
            }
        }
        for row in 0..n {
            for col in 0..n {
                assert!((a[row][col] - a[col][row]).abs() < 1e-12, "asymmetric");
            }
        }
        let d = op.diagonal();
        for k in 0..n {
            assert!((d[k] - a[k][k]).abs() < 1e-12);
        }
        let exact = dense_solve(a, rhs.ux.clone());
        for (x, y) in u.ux.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-11);
        }
    }
}
