//! Uniform rectangular mesh and the field containers living on it.
//!
//! Scalars (n, c, pressure) sit at cell centers; the velocity uses a MAC
//! layout with `ux` on vertical faces and `uy` on horizontal faces. Storage is
//! row-major with `j` (the y index) as the slow index.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

pub const MIN_CELLS: usize = 4;

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(SimError::InvalidDimensions(format!(
                "need at least {MIN_CELLS} cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(SimError::InvalidDimensions(format!(
                "domain lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Smallest spacing.
    pub fn h(&self) -> f64 {
        self.hx.min(self.hy)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Position of x-face `(i, j)`, `i` in `0..=nx`.
    #[inline]
    pub fn x_face(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Position of y-face `(i, j)`, `j` in `0..=ny`.
    #[inline]
    pub fn y_face(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, j as f64 * self.hy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Mirror ghosts: zero normal derivative.
    NeumannZero,
    /// Odd reflection: the field vanishes on the wall, half a cell out.
    DirichletZero,
}

impl BoundaryKind {
    /// Ghost value for a cell whose interior neighbor holds `interior`.
    #[inline]
    pub fn ghost(self, interior: f64) -> f64 {
        match self {
            BoundaryKind::NeumannZero => interior,
            BoundaryKind::DirichletZero => -interior,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
    pub bc: BoundaryKind,
}

impl ScalarField {
    pub fn zeros(grid: Grid, bc: BoundaryKind) -> Self {
        Self::constant(grid, bc, 0.0)
    }

    pub fn constant(grid: Grid, bc: BoundaryKind, value: f64) -> Self {
        ScalarField {
            grid,
            data: vec![value; grid.cells()],
            bc,
        }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, bc: BoundaryKind, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                data.push(f(x, y));
            }
        }
        ScalarField { grid, data, bc }
    }

    pub fn from_data(grid: Grid, bc: BoundaryKind, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.cells() {
            return Err(SimError::InvalidDimensions(format!(
                "scalar data has {} values, grid needs {}",
                data.len(),
                grid.cells()
            )));
        }
        Ok(ScalarField { grid, data, bc })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.grid.nx + i]
    }

    /// Value at `(i, j)` where indices may step one cell outside the grid, in
    /// which case the ghost value for `self.bc` is returned.
    #[inline]
    pub fn ext(&self, i: isize, j: isize) -> f64 {
        let nx = self.grid.nx as isize;
        let ny = self.grid.ny as isize;
        let mut sign_flip = false;
        let ii = if i < 0 {
            sign_flip ^= true;
            0
        } else if i >= nx {
            sign_flip ^= true;
            nx - 1
        } else {
            i
        };
        let jj = if j < 0 {
            sign_flip ^= true;
            0
        } else if j >= ny {
            sign_flip ^= true;
            ny - 1
        } else {
            j
        };
        let v = self.at(ii as usize, jj as usize);
        if sign_flip {
            self.bc.ghost(v)
        } else {
            v
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral over the domain.
    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.area()
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (v, w) in self.data.iter_mut().zip(&other.data) {
            *v += a * w;
        }
    }
}

/// Midpoint-rule integral: `hx * hy * sum(data)`.
pub fn integrate(field: &ScalarField) -> f64 {
    let g = &field.grid;
    let nx = g.nx;
    let total = exec::sum_rows(g.ny, g.cells(), |j| {
        field.data[j * nx..(j + 1) * nx].iter().sum::<f64>()
    });
    total * g.cell_area()
}

/// Face-centered velocity with no-slip walls.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    /// `(nx + 1) * ny` values on x-faces, index `j * (nx + 1) + i`.
    pub ux: Vec<f64>,
    /// `nx * (ny + 1)` values on y-faces, index `j * nx + i`.
    pub uy: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            ux: vec![0.0; (grid.nx + 1) * grid.ny],
            uy: vec![0.0; grid.nx * (grid.ny + 1)],
        }
    }

    /// Samples `(fx, fy)` on the faces; wall faces are left at zero.
    pub fn from_fn(
        grid: Grid,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut v = VectorField::zeros(grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let (x, y) = grid.x_face(i, j);
                v.ux[j * (grid.nx + 1) + i] = fx(x, y);
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.y_face(i, j);
                v.uy[j * grid.nx + i] = fy(x, y);
            }
        }
        v
    }

    #[inline]
    pub fn ux_at(&self, i: usize, j: usize) -> f64 {
        self.ux[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn uy_at(&self, i: usize, j: usize) -> f64 {
        self.uy[j * self.grid.nx + i]
    }

    /// Zeroes every wall-normal face.
    pub fn enforce_no_slip(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for j in 0..ny {
            self.ux[j * (nx + 1)] = 0.0;
            self.ux[j * (nx + 1) + nx] = 0.0;
        }
        for i in 0..nx {
            self.uy[i] = 0.0;
            self.uy[ny * nx + i] = 0.0;
        }
    }

    pub fn satisfies_no_slip(&self) -> bool {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        (0..ny).all(|j| self.ux[j * (nx + 1)] == 0.0 && self.ux[j * (nx + 1) + nx] == 0.0)
            && (0..nx).all(|i| self.uy[i] == 0.0 && self.uy[ny * nx + i] == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.ux.iter().chain(&self.uy).all(|v| v.is_finite())
    }

    /// Largest face-component magnitude.
    pub fn max_abs(&self) -> f64 {
        self.ux
            .iter()
            .chain(&self.uy)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Face-weighted inner product: every face carries one cell area.
    pub fn dot(&self, other: &VectorField) -> f64 {
        (exec::dot(&self.ux, &other.ux) + exec::dot(&self.uy, &other.uy)) * self.grid.cell_area()
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (v, w) in self.ux.iter_mut().zip(&other.ux) {
            *v += a * w;
        }
        for (v, w) in self.uy.iter_mut().zip(&other.uy) {
            *v += a * w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
        assert_eq!(g.hx, 0.25);
        assert_eq!(g.hy, 0.25);
        let g = Grid::new(128, 64, 2.0, 1.0).unwrap();
        assert_eq!(g.hx, 0.015625);
        assert_eq!(g.hy, 0.015625);
    }

    #[test]
    fn too_few_cells_rejected() {
        assert!(matches!(
            Grid::new(3, 4, 1.0, 1.0),
            Err(SimError::InvalidDimensions(_))
        ));
        assert!(Grid::new(4, 4, 0.0, 1.0).is_err());
        assert!(Grid::new(4, 4, 1.0, -2.0).is_err());
        assert!(Grid::new(4, 4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn centers_and_faces() {
        let g = Grid::new(4, 8, 1.0, 2.0).unwrap();
        assert_eq!(g.cell_center(0, 0), (0.125, 0.125));
        assert_eq!(g.x_face(4, 1), (1.0, 0.375));
        assert_eq!(g.y_face(1, 8), (0.375, 2.0));
    }

    #[test]
    fn integrate_constants() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let one = ScalarField::constant(g, BoundaryKind::NeumannZero, 1.0);
        assert!((one.integrate() - 1.0).abs() < 1e-15);
        let zero = ScalarField::zeros(g, BoundaryKind::NeumannZero);
        assert_eq!(zero.integrate(), 0.0);
    }

    #[test]
    fn ghost_extension() {
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, y| x + 10.0 * y);
        assert_eq!(f.ext(-1, 2), f.at(0, 2));
        assert_eq!(f.ext(4, 0), f.at(3, 0));
        let mut d = f.clone();
        d.bc = BoundaryKind::DirichletZero;
        assert_eq!(d.ext(1, -1), -d.at(1, 0));
        assert_eq!(d.ext(1, 4), -d.at(1, 3));
        // corner ghosts reflect twice
        assert_eq!(d.ext(-1, -1), d.at(0, 0));
    }

    #[test]
    fn neumann_ghost_kills_normal_difference() {
        let g = Grid::new(5, 6, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, BoundaryKind::NeumannZero, |x, y| (3.0 * x).sin() * y.exp());
        for j in 0..6 {
            assert_eq!(f.ext(-1, j) - f.ext(0, j), 0.0);
            assert_eq!(f.ext(5, j) - f.ext(4, j), 0.0);
        }
        for i in 0..5 {
            assert_eq!(f.ext(i, -1) - f.ext(i, 0), 0.0);
            assert_eq!(f.ext(i, 6) - f.ext(i, 5), 0.0);
        }
    }

    #[test]
    fn vector_from_fn_respects_walls() {
        let g = Grid::new(6, 5, 1.0, 1.0).unwrap();
        let u = VectorField::from_fn(g, |_, _| 1.0, |_, _| -2.0);
        assert!(u.satisfies_no_slip());
        assert_eq!(u.ux_at(3, 2), 1.0);
        assert_eq!(u.uy_at(3, 2), -2.0);
    }
}
