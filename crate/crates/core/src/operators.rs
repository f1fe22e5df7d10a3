//! Discrete spatial operators on the MAC grid.
//!
//! All operators are pure: they read their inputs and return a fresh field.
//! Divergence-form operators use face fluxes that vanish on the walls, so
//! their discrete integral telescopes to zero.

use crate::error::{Result, SimError};
use crate::exec;
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};
use crate::model::Params;

/// Scratch vectors sized to a grid; reused by the iterative solvers.
#[derive(Debug, Clone)]
pub struct StencilWorkspace {
    pub grid: Grid,
    len: usize,
    pub bufs: [Vec<f64>; 4],
}

impl StencilWorkspace {
    pub fn new(grid: Grid, len: usize) -> Self {
        StencilWorkspace {
            grid,
            len,
            bufs: std::array::from_fn(|_| vec![0.0; len]),
        }
    }

    pub fn fits(&self, grid: &Grid, len: usize) -> bool {
        self.grid == *grid && self.len == len
    }
}

/// Five-point Laplacian with ghost cells chosen by `field.bc`.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(field.grid, field.bc);
    laplacian_into(&field.grid, field.bc, &field.data, &mut out.data);
    out
}

/// Cell Laplacian of raw data into `out`.
pub fn laplacian_into(g: &Grid, bc: BoundaryKind, data: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let ax = 1.0 / (g.hx * g.hx);
    let ay = 1.0 / (g.hy * g.hy);
    exec::for_each_row(out, nx, |j, row| {
        let base = j * nx;
        for (i, o) in row.iter_mut().enumerate() {
            let v = data[base + i];
            let w = if i > 0 { data[base + i - 1] } else { bc.ghost(v) };
            let e = if i + 1 < nx { data[base + i + 1] } else { bc.ghost(v) };
            let s = if j > 0 { data[base + i - nx] } else { bc.ghost(v) };
            let n = if j + 1 < ny { data[base + i + nx] } else { bc.ghost(v) };
            *o = ax * (w - 2.0 * v + e) + ay * (s - 2.0 * v + n);
        }
    });
}

/// Cell-centered divergence of a face field.
pub fn mac_divergence(u: &VectorField) -> ScalarField {
    let g = u.grid;
    let (nx, hx, hy) = (g.nx, g.hx, g.hy);
    let mut out = ScalarField::zeros(g, BoundaryKind::NeumannZero);
    exec::for_each_row(&mut out.data, nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let dx = u.ux[j * (nx + 1) + i + 1] - u.ux[j * (nx + 1) + i];
            let dy = u.uy[(j + 1) * nx + i] - u.uy[j * nx + i];
            *o = dx / hx + dy / hy;
        }
    });
    out
}

pub fn max_divergence(u: &VectorField) -> f64 {
    mac_divergence(u).max_abs()
}

/// Face differences of a cell field; wall faces are zero.
pub fn grad_to_faces(p: &ScalarField) -> VectorField {
    let g = p.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut v = VectorField::zeros(g);
    exec::for_each_row(&mut v.ux, nx + 1, |j, row| {
        for i in 1..nx {
            row[i] = (p.data[j * nx + i] - p.data[j * nx + i - 1]) / g.hx;
        }
    });
    exec::for_each_row(&mut v.uy, nx, |j, row| {
        if j == 0 || j == ny {
            return;
        }
        for (i, o) in row.iter_mut().enumerate() {
            *o = (p.data[j * nx + i] - p.data[(j - 1) * nx + i]) / g.hy;
        }
    });
    v
}

/// `-div(vel * field)` with first-order upwind face states.
pub fn upwind_flux_divergence(field: &ScalarField, vel: &VectorField) -> ScalarField {
    let g = field.grid;
    let (nx, ny) = (g.nx, g.ny);
    let phi = &field.data;
    let mut fx = vec![0.0; (nx + 1) * ny];
    exec::for_each_row(&mut fx, nx + 1, |j, row| {
        for i in 1..nx {
            let v = vel.ux[j * (nx + 1) + i];
            let up = if v > 0.0 { phi[j * nx + i - 1] } else { phi[j * nx + i] };
            row[i] = v * up;
        }
    });
    let mut fy = vec![0.0; nx * (ny + 1)];
    exec::for_each_row(&mut fy, nx, |j, row| {
        if j == 0 || j == ny {
            return;
        }
        for (i, o) in row.iter_mut().enumerate() {
            let v = vel.uy[j * nx + i];
            let up = if v > 0.0 { phi[(j - 1) * nx + i] } else { phi[j * nx + i] };
            *o = v * up;
        }
    });
    let mut out = ScalarField::zeros(g, field.bc);
    exec::for_each_row(&mut out.data, nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let dx = fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i];
            let dy = fy[(j + 1) * nx + i] - fy[j * nx + i];
            *o = -(dx / g.hx + dy / g.hy);
        }
    });
    out
}

/// Conservative upwind transport tendency `-div(u * field)`.
///
/// Fails if `u` is not discretely divergence-free to `div_tol`, since the
/// conservative form only equals `-u . grad(field)` when `div u = 0`.
pub fn advect_scalar(field: &ScalarField, u: &VectorField, div_tol: f64) -> Result<ScalarField> {
    let div = max_divergence(u);
    if div > div_tol {
        return Err(SimError::DivergenceTooLarge {
            found: div,
            tol: div_tol,
        });
    }
    Ok(upwind_flux_divergence(field, u))
}

/// Chemotactic drift `chi * grad(c) / c_face^k` on faces, with `c_face` the
/// arithmetic mean of the two adjacent cells clamped at `c_floor`. Returns the
/// drift and the number of faces where the clamp fired.
pub fn chemotactic_velocity(c: &ScalarField, params: &Params) -> (VectorField, usize) {
    let g = c.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut v = VectorField::zeros(g);
    let mut clamps = 0;
    let face = |lo: f64, hi: f64, h: f64, clamps: &mut usize| {
        let mut cf = 0.5 * (lo + hi);
        if cf < params.c_floor {
            *clamps += 1;
            cf = params.c_floor;
        }
        params.chi * (hi - lo) / h / cf.powf(params.k)
    };
    for j in 0..ny {
        for i in 1..nx {
            v.ux[j * (nx + 1) + i] = face(c.data[j * nx + i - 1], c.data[j * nx + i], g.hx, &mut clamps);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            v.uy[j * nx + i] = face(c.data[(j - 1) * nx + i], c.data[j * nx + i], g.hy, &mut clamps);
        }
    }
    (v, clamps)
}

/// `-chi * div(n * grad(c) / c^k)` with upwinded `n`. Also returns the clamp
/// activation count.
pub fn chemotaxis_div(n: &ScalarField, c: &ScalarField, params: &Params) -> (ScalarField, usize) {
    let (vel, clamps) = chemotactic_velocity(c, params);
    (upwind_flux_divergence(n, &vel), clamps)
}

/// Upwind tendency `-(u . grad) u` on interior faces; wall faces stay zero.
/// Tangential neighbours across a wall use the odd (no-slip) ghost.
pub fn advect_velocity(u: &VectorField) -> VectorField {
    let g = u.grid;
    let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx, g.hy);
    let ux = |i: usize, j: isize| -> f64 {
        if j < 0 {
            -u.ux[i]
        } else if j as usize >= ny {
            -u.ux[(ny - 1) * (nx + 1) + i]
        } else {
            u.ux[j as usize * (nx + 1) + i]
        }
    };
    let uy = |i: isize, j: usize| -> f64 {
        if i < 0 {
            -u.uy[j * nx]
        } else if i as usize >= nx {
            -u.uy[j * nx + nx - 1]
        } else {
            u.uy[j * nx + i as usize]
        }
    };
    let mut out = VectorField::zeros(g);
    exec::for_each_row(&mut out.ux, nx + 1, |j, row| {
        let jj = j as isize;
        for i in 1..nx {
            let a = ux(i, jj);
            let dadx = if a > 0.0 {
                (a - ux(i - 1, jj)) / hx
            } else {
                (ux(i + 1, jj) - a) / hx
            };
            let vbar = 0.25
                * (u.uy[j * nx + i - 1] + u.uy[j * nx + i] + u.uy[(j + 1) * nx + i - 1] + u.uy[(j + 1) * nx + i]);
            let dady = if vbar > 0.0 {
                (a - ux(i, jj - 1)) / hy
            } else {
                (ux(i, jj + 1) - a) / hy
            };
            row[i] = -(a * dadx + vbar * dady);
        }
    });
    exec::for_each_row(&mut out.uy, nx, |j, row| {
        if j == 0 || j == ny {
            return;
        }
        for (i, o) in row.iter_mut().enumerate() {
            let ii = i as isize;
            let b = uy(ii, j);
            let dbdy = if b > 0.0 {
                (b - uy(ii, j - 1)) / hy
            } else {
                (uy(ii, j + 1) - b) / hy
            };
            let ubar = 0.25
                * (u.ux[(j - 1) * (nx + 1) + i]
                    + u.ux[(j - 1) * (nx + 1) + i + 1]
                    + u.ux[j * (nx + 1) + i]
                    + u.ux[j * (nx + 1) + i + 1]);
            let dbdx = if ubar > 0.0 {
                (b - uy(ii - 1, j)) / hx
            } else {
                (uy(ii + 1, j) - b) / hx
            };
            *o = -(ubar * dbdx + b * dbdy);
        }
    });
    out
}

/// Buoyancy `n grad(phi)` on interior faces, with `n` averaged to the face.
pub fn buoyancy_on_faces(n: &ScalarField, phi: &ScalarField) -> VectorField {
    let g = n.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut v = VectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let (a, b) = (j * nx + i - 1, j * nx + i);
            v.ux[j * (nx + 1) + i] = 0.5 * (n.data[a] + n.data[b]) * (phi.data[b] - phi.data[a]) / g.hx;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let (a, b) = ((j - 1) * nx + i, j * nx + i);
            v.uy[j * nx + i] = 0.5 * (n.data[a] + n.data[b]) * (phi.data[b] - phi.data[a]) / g.hy;
        }
    }
    v
}

/// Largest per-cell sum of outgoing face speeds divided by the spacing, over
/// the given face velocity fields (each upwinded separately). An explicit
/// upwind update with step `dt` keeps a non-negative field non-negative as
/// long as `dt * rate <= 1`.
pub fn max_outflow_rate(fields: &[&VectorField]) -> f64 {
    let Some(first) = fields.first() else {
        return 0.0;
    };
    let g = first.grid;
    let (nx, ny) = (g.nx, g.ny);
    exec::max_rows(ny, g.cells(), |j| {
        let mut m: f64 = 0.0;
        for i in 0..nx {
            let mut rate = 0.0;
            for v in fields {
                let right = v.ux[j * (nx + 1) + i + 1];
                let left = v.ux[j * (nx + 1) + i];
                let top = v.uy[(j + 1) * nx + i];
                let bottom = v.uy[j * nx + i];
                rate += right.max(0.0) / g.hx
                    + (-left).max(0.0) / g.hx
                    + top.max(0.0) / g.hy
                    + (-bottom).max(0.0) / g.hy;
            }
            m = m.max(rate);
        }
        m
    })
    .max(0.0)
}
