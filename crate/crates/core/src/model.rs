//! Model constants, external forcing and the simulation state.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};

/// PDE constants. Diffusivities of n, c and u are all 1; `nu_visc` exists only
/// so convergence studies can vary the viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub r: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub chi: f64,
    pub k: f64,
    pub eta: f64,
    pub nu_visc: f64,
    pub c_floor: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            r: 1.0,
            mu: 1.0,
            alpha: 1.0,
            beta: 1.0,
            chi: 1.0,
            k: 0.5,
            eta: 0.5,
            nu_visc: 1.0,
            c_floor: 1e-12,
        }
    }
}

impl Params {
    /// Checks the hypotheses under which boundedness is expected:
    /// positive rates and `k, eta` in (0, 1).
    pub fn validate(&self) -> Result<()> {
        self.validate_structural()?;
        for (name, v) in [
            ("r", self.r),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("chi", self.chi),
        ] {
            if v <= 0.0 {
                return Err(SimError::validation(name, "must be positive"));
            }
        }
        for (name, v) in [("k", self.k), ("eta", self.eta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SimError::validation(name, "must lie in (0,1)"));
            }
        }
        Ok(())
    }

    /// Weaker check used for exploratory runs outside the admissible
    /// parameter ranges: finite, non-negative rates and a usable floor.
    pub fn validate_structural(&self) -> Result<()> {
        for (name, v) in [
            ("r", self.r),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("chi", self.chi),
            ("k", self.k),
            ("eta", self.eta),
            ("nu_visc", self.nu_visc),
            ("c_floor", self.c_floor),
        ] {
            if !v.is_finite() {
                return Err(SimError::validation(name, "must be finite"));
            }
            if v < 0.0 {
                return Err(SimError::validation(name, "must be non-negative"));
            }
        }
        if self.c_floor <= 0.0 {
            return Err(SimError::validation("c_floor", "must be positive"));
        }
        if self.nu_visc <= 0.0 {
            return Err(SimError::validation("nu_visc", "must be positive"));
        }
        Ok(())
    }

    /// Sub-logistic damping `mu * n^2 / ln^eta(n + e)`.
    #[inline]
    pub fn damping(&self, n: f64) -> f64 {
        self.mu * n * n / (n + std::f64::consts::E).ln().powf(self.eta)
    }

    /// Right-hand side of the space-homogeneous density equation.
    #[inline]
    pub fn reaction(&self, n: f64) -> f64 {
        self.r * n - self.damping(n)
    }
}

pub type VectorSource = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
pub type ScalarSource = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Potential, body force, and optional extra sources for n and c (the latter
/// are only used to inject manufactured-solution residuals).
#[derive(Clone)]
pub struct Forcing {
    pub phi: ScalarField,
    pub f: Option<VectorSource>,
    pub n_source: Option<ScalarSource>,
    pub c_source: Option<ScalarSource>,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("phi_range", &(self.phi.min(), self.phi.max()))
            .field("f", &self.f.is_some())
            .field("n_source", &self.n_source.is_some())
            .field("c_source", &self.c_source.is_some())
            .finish()
    }
}

impl Forcing {
    /// Constant potential, no body force.
    pub fn none(grid: Grid) -> Self {
        Forcing {
            phi: ScalarField::zeros(grid, BoundaryKind::NeumannZero),
            f: None,
            n_source: None,
            c_source: None,
        }
    }

    pub fn with_force(mut self, f: VectorSource) -> Self {
        self.f = Some(f);
        self
    }

    /// Samples `f` on the faces at time `t`. Wall faces stay zero.
    pub fn force_on_faces(&self, t: f64) -> Option<VectorField> {
        let f = self.f.as_ref()?;
        let g = self.phi.grid;
        Some(VectorField::from_fn(
            g,
            |x, y| f(x, y, t)[0],
            |x, y| f(x, y, t)[1],
        ))
    }

    /// Max of `|f|` over cell centers at the given sample times.
    pub fn sampled_sup(&self, times: &[f64]) -> f64 {
        let Some(f) = &self.f else { return 0.0 };
        let g = self.phi.grid;
        let mut m: f64 = 0.0;
        for &t in times {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.cell_center(i, j);
                    let [a, b] = f(x, y, t);
                    m = m.max(a.hypot(b));
                }
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(SimError::validation("potential", "phi must be finite"));
        }
        let probe: Vec<f64> = (0..16).map(|k| k as f64 * 0.37).collect();
        if !self.sampled_sup(&probe).is_finite() {
            return Err(SimError::validation("forcing", "f must be bounded"));
        }
        Ok(())
    }
}

/// `(t, n, c, u)`; the pressure is transient inside the fluid step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub n: ScalarField,
    pub c: ScalarField,
    pub u: VectorField,
}

impl SimState {
    pub fn new(t: f64, n: ScalarField, c: ScalarField, u: VectorField) -> Result<Self> {
        if n.grid != c.grid || n.grid != u.grid {
            return Err(SimError::InvalidDimensions(
                "n, c and u must share one grid".into(),
            ));
        }
        Ok(SimState { t, n, c, u })
    }

    pub fn grid(&self) -> Grid {
        self.n.grid
    }

    /// Checks the state invariants: finite fields, `n >= 0`, `c >= c_floor`,
    /// no-slip walls.
    pub fn validate(&self, params: &Params) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(SimError::validation("t", "must be finite and non-negative"));
        }
        if !self.n.is_finite() || !self.c.is_finite() || !self.u.is_finite() {
            return Err(SimError::validation("state", "non-finite values"));
        }
        let min_n = self.n.min();
        if min_n < 0.0 {
            return Err(SimError::NegativeN { min: min_n });
        }
        let min_c = self.c.min();
        if min_c < params.c_floor {
            return Err(SimError::NegativeC { min: min_c });
        }
        if !self.u.satisfies_no_slip() {
            return Err(SimError::validation("u", "wall faces must be zero"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_in_hypothesis() {
        Params::default().validate().unwrap();
    }

    #[test]
    fn k_outside_unit_interval_rejected() {
        let p = Params {
            k: 1.2,
            ..Params::default()
        };
        match p.validate() {
            Err(SimError::Validation { field, reason }) => {
                assert_eq!(field, "k");
                assert_eq!(reason, "must lie in (0,1)");
            }
            other => panic!("unexpected {other:?}"),
        }
        // still usable for exploratory sweeps
        p.validate_structural().unwrap();
    }

    #[test]
    fn zero_damping_only_structurally_valid() {
        let p = Params {
            mu: 0.0,
            ..Params::default()
        };
        assert!(p.validate().is_err());
        assert!(p.validate_structural().is_ok());
        let p = Params {
            c_floor: 0.0,
            ..Params::default()
        };
        assert!(p.validate_structural().is_err());
    }

    #[test]
    fn reaction_vanishes_at_zero() {
        assert_eq!(Params::default().reaction(0.0), 0.0);
    }
}
