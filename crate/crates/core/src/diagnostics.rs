//! Integral functionals tracked along a run.
//!
//! Spatial integrals use the midpoint rule. Cell gradients of `c` are centered
//! differences with mirror ghosts. Time integrals of the dissipation terms are
//! kept over a trailing window of width `tau` by left-rectangle accumulation
//! of per-step values.

use std::collections::VecDeque;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::grid::{ScalarField, VectorField};
use crate::model::{Params, SimState};
use crate::operators::{chemotactic_velocity, max_divergence};

/// Exponents of the higher-order functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsOptions {
    /// `(p, q)` in `int n^p c^-q`.
    pub np_cq_p: f64,
    pub np_cq_q: f64,
    /// `p` in `int |grad c|^(2p)`.
    pub grad_c_p: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            np_cq_p: 2.0,
            np_cq_q: 0.5,
            grad_c_p: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_n: f64,
    pub mass_c: f64,
    pub l2_u: f64,
    /// Instantaneous `int |grad u|^2`.
    pub l2_grad_u: f64,
    /// `int_{t-tau}^t int |grad u|^2`.
    pub l2_grad_u_win: f64,
    pub l2_c: f64,
    pub l2_grad_c: f64,
    pub nlogn: f64,
    pub nlogc: f64,
    pub energy_f: f64,
    /// Instantaneous `int n^2 / ln^eta(n + e)`.
    pub dissipation: f64,
    pub dissipation_win: f64,
    pub lp_n_2: f64,
    pub lp_n_4: f64,
    pub np_cq: f64,
    pub grad_c_4: f64,
    pub min_c: f64,
    pub max_n: f64,
    pub linf_grad_c: f64,
    // not part of the CSV schema
    pub min_n: f64,
    pub linf_u: f64,
    pub max_divergence: f64,
}

/// `F = int n ln n - (1/3) int n ln c + (1/2) int |grad c|^2`.
#[inline]
pub fn energy_functional(nlogn: f64, nlogc: f64, l2_grad_c: f64) -> f64 {
    nlogn - nlogc / 3.0 + 0.5 * l2_grad_c
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: [&'static str; 18] = [
        "t",
        "mass_n",
        "mass_c",
        "l2_u",
        "l2_grad_u_win",
        "l2_c",
        "l2_grad_c",
        "nlogn",
        "nlogc",
        "energy_F",
        "dissipation_win",
        "lp_n_2",
        "lp_n_4",
        "np_cq",
        "grad_c_4",
        "min_c",
        "max_n",
        "linf_grad_c",
    ];

    pub fn csv_values(&self) -> [f64; 18] {
        [
            self.t,
            self.mass_n,
            self.mass_c,
            self.l2_u,
            self.l2_grad_u_win,
            self.l2_c,
            self.l2_grad_c,
            self.nlogn,
            self.nlogc,
            self.energy_f,
            self.dissipation_win,
            self.lp_n_2,
            self.lp_n_4,
            self.np_cq,
            self.grad_c_4,
            self.min_c,
            self.max_n,
            self.linf_grad_c,
        ]
    }

    /// One CSV line, 17 significant digits, no trailing newline.
    pub fn csv_row(&self) -> String {
        self.csv_values()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_finite(&self) -> bool {
        self.csv_values().iter().all(|v| v.is_finite())
    }
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Centered cell gradient of `c` with mirror ghosts.
#[inline]
fn cell_grad(c: &ScalarField, i: usize, j: usize) -> (f64, f64) {
    let g = c.grid;
    let (i, j) = (i as isize, j as isize);
    (
        (c.ext(i + 1, j) - c.ext(i - 1, j)) / (2.0 * g.hx),
        (c.ext(i, j + 1) - c.ext(i, j - 1)) / (2.0 * g.hy),
    )
}

/// `int |grad u|^2` from face differences. Derivatives across a no-slip wall
/// span half a cell and carry half the weight.
pub fn grad_u_squared(u: &VectorField) -> f64 {
    let g = u.grid;
    let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx, g.hy);
    let sum = exec::sum_rows(ny + 1, g.cells(), |j| {
        let mut s = 0.0;
        if j < ny {
            for i in 0..nx {
                let dx = (u.ux_at(i + 1, j) - u.ux_at(i, j)) / hx;
                s += dx * dx;
            }
        }
        // d(ux)/dy across horizontal line j
        for i in 1..nx {
            let (d, w) = if j == 0 {
                (2.0 * u.ux_at(i, 0) / hy, 0.5)
            } else if j == ny {
                (-2.0 * u.ux_at(i, ny - 1) / hy, 0.5)
            } else {
                ((u.ux_at(i, j) - u.ux_at(i, j - 1)) / hy, 1.0)
            };
            s += w * d * d;
        }
        s
    });
    let sum_y = exec::sum_rows(ny, g.cells(), |j| {
        let mut s = 0.0;
        for i in 0..nx {
            let dy = (u.uy_at(i, j + 1) - u.uy_at(i, j)) / hy;
            s += dy * dy;
        }
        // d(uy)/dx across vertical lines, rows j of uy faces (interior only)
        if j >= 1 {
            for i in 0..=nx {
                let (d, w) = if i == 0 {
                    (2.0 * u.uy_at(0, j) / hx, 0.5)
                } else if i == nx {
                    (-2.0 * u.uy_at(nx - 1, j) / hx, 0.5)
                } else {
                    ((u.uy_at(i, j) - u.uy_at(i - 1, j)) / hx, 1.0)
                };
                s += w * d * d;
            }
        }
        s
    });
    (sum + sum_y) * g.cell_area()
}

/// `int n^2 / ln^eta(n + e)`.
pub fn dissipation_integral(n: &ScalarField, params: &Params) -> f64 {
    let g = n.grid;
    let nx = g.nx;
    exec::sum_rows(g.ny, g.cells(), |j| {
        n.data[j * nx..(j + 1) * nx]
            .iter()
            .map(|&v| v * v / (v + E).ln().powf(params.eta))
            .sum()
    }) * g.cell_area()
}

/// Evaluates every tracked functional on `state`. Window integrals are taken
/// from `windows` when given.
pub fn snapshot(
    state: &SimState,
    params: &Params,
    windows: Option<&SpaceTimeWindows>,
    opts: &DiagnosticsOptions,
) -> DiagnosticsRecord {
    let g = state.grid();
    let (nx, ny) = (g.nx, g.ny);
    let area = g.cell_area();
    let n = &state.n;
    let c = &state.c;

    // per-row partial sums, combined in row order
    const K: usize = 10;
    let rows: Vec<[f64; K]> = (0..ny)
        .map(|j| {
            let mut acc = [0.0; K];
            for i in 0..nx {
                let nv = n.at(i, j);
                let cv = c.at(i, j);
                let (gx, gy) = cell_grad(c, i, j);
                let g2 = gx * gx + gy * gy;
                acc[0] += nv;
                acc[1] += cv;
                acc[2] += cv * cv;
                acc[3] += g2;
                acc[4] += xlogx(nv);
                acc[5] += nv * cv.ln();
                acc[6] += nv * nv;
                acc[7] += nv.powi(4);
                acc[8] += nv.powf(opts.np_cq_p) * cv.powf(-opts.np_cq_q);
                acc[9] += g2.powf(opts.grad_c_p);
            }
            acc
        })
        .collect();
    let mut tot = [0.0; K];
    for r in &rows {
        for k in 0..K {
            tot[k] += r[k];
        }
    }
    for v in &mut tot {
        *v *= area;
    }

    let l2_u = state.u.dot(&state.u);
    let nlogn = tot[4];
    let nlogc = tot[5];
    let l2_grad_c = tot[3];
    DiagnosticsRecord {
        t: state.t,
        mass_n: tot[0],
        mass_c: tot[1],
        l2_u,
        l2_grad_u: grad_u_squared(&state.u),
        l2_grad_u_win: windows.map_or(0.0, |w| w.grad_u.value()),
        l2_c: tot[2],
        l2_grad_c,
        nlogn,
        nlogc,
        energy_f: energy_functional(nlogn, nlogc, l2_grad_c),
        dissipation: dissipation_integral(n, params),
        dissipation_win: windows.map_or(0.0, |w| w.dissipation.value()),
        lp_n_2: tot[6],
        lp_n_4: tot[7],
        np_cq: tot[8],
        grad_c_4: tot[9],
        min_c: c.min(),
        max_n: n.max(),
        linf_grad_c: linf_face_gradient(c),
        min_n: n.min(),
        linf_u: state.u.max_abs(),
        max_divergence: max_divergence(&state.u),
    }
}

/// Max over interior faces of the full gradient magnitude: the normal part is
/// the face difference, the tangential part averages the centered gradients
/// of the two adjacent cells.
pub fn linf_face_gradient(c: &ScalarField) -> f64 {
    let g = c.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut m: f64 = 0.0;
    for j in 0..ny {
        for i in 1..nx {
            let normal = (c.at(i, j) - c.at(i - 1, j)) / g.hx;
            let tang = 0.5 * (cell_grad(c, i, j).1 + cell_grad(c, i - 1, j).1);
            m = m.max(normal.hypot(tang));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let normal = (c.at(i, j) - c.at(i, j - 1)) / g.hy;
            let tang = 0.5 * (cell_grad(c, i, j).0 + cell_grad(c, i, j - 1).0);
            m = m.max(normal.hypot(tang));
        }
    }
    m
}

/// Max over faces of the chemotactic drift magnitude `chi |grad c| / c^k`.
pub fn linf_drift(c: &ScalarField, params: &Params) -> f64 {
    chemotactic_velocity(c, params).0.max_abs()
}

/// Trailing-window time integral built from per-step rectangles.
#[derive(Debug, Clone)]
pub struct WindowIntegral {
    tau: f64,
    now: f64,
    // (start, end, integral over [start, end])
    segments: VecDeque<(f64, f64, f64)>,
}

impl WindowIntegral {
    pub fn new(tau: f64) -> Self {
        assert!(tau > 0.0);
        WindowIntegral {
            tau,
            now: f64::NEG_INFINITY,
            segments: VecDeque::new(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Adds `value * dt` on `[t, t + dt]`. Times must be non-decreasing.
    pub fn push(&mut self, t: f64, dt: f64, value: f64) {
        debug_assert!(dt >= 0.0);
        if dt == 0.0 {
            return;
        }
        self.now = t + dt;
        self.segments.push_back((t, t + dt, value * dt));
        let start = self.now - self.tau;
        while let Some(&(_, end, _)) = self.segments.front() {
            if end <= start {
                self.segments.pop_front();
            } else {
                break;
            }
        }
    }

    /// Integral over `[now - tau, now]` (or since the first push if shorter).
    pub fn value(&self) -> f64 {
        let start = self.now - self.tau;
        self.segments
            .iter()
            .map(|&(a, b, v)| {
                if a >= start {
                    v
                } else {
                    v * (b - start) / (b - a)
                }
            })
            .sum()
    }
}

/// The two windowed space-time integrals tracked during a run.
#[derive(Debug, Clone)]
pub struct SpaceTimeWindows {
    pub dissipation: WindowIntegral,
    pub grad_u: WindowIntegral,
}

impl SpaceTimeWindows {
    pub fn new(tau: f64) -> Self {
        SpaceTimeWindows {
            dissipation: WindowIntegral::new(tau),
            grad_u: WindowIntegral::new(tau),
        }
    }

    /// Accounts for a step of length `dt` taken from `state`.
    pub fn accumulate(&mut self, state: &SimState, params: &Params, dt: f64) {
        self.dissipation
            .push(state.t, dt, dissipation_integral(&state.n, params));
        self.grad_u.push(state.t, dt, grad_u_squared(&state.u));
    }
}
