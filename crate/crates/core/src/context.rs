//! Cached solver context for the clamped plate operators.
//!
//! The Airy problem and the inertia operator are solved with the same matrix
//! every time step, so the factorizations are built once per grid and shared
//! by reference. All methods are pure given the immutable context.

use crate::error::{Error, Result};
use crate::field::{Bc, PlateField};
use crate::grid::Grid;
use crate::ops;
use crate::solver::{InteriorSolver, SolverOptions};

/// Plate phase point: displacement, velocity and time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    pub u: PlateField,
    pub v: PlateField,
    pub t: f64,
}

impl PlateState {
    pub fn new(u: PlateField, v: PlateField, t: f64) -> Result<PlateState> {
        u.grid.same_as(&v.grid)?;
        if u.bc != Bc::Clamped {
            return Err(Error::Domain("displacement must be clamped-tagged".into()));
        }
        Ok(PlateState { u, v, t })
    }

    pub fn resting(grid: Grid) -> PlateState {
        PlateState {
            u: PlateField::zeros(grid, Bc::Clamped),
            v: PlateField::zeros(grid, Bc::Clamped),
            t: 0.0,
        }
    }
}

pub struct PlateContext {
    pub grid: Grid,
    biharmonic: InteriorSolver,
    inertia: Option<(f64, InteriorSolver)>,
}

impl PlateContext {
    pub fn new(grid: Grid) -> Result<PlateContext> {
        Self::with_alpha(grid, 0.0)
    }

    /// Context with a factorized (1 - alpha*Laplacian) for `alpha > 0`.
    pub fn with_alpha(grid: Grid, alpha: f64) -> Result<PlateContext> {
        if alpha < 0.0 {
            return Err(Error::Domain(format!(
                "rotational inertia must be nonnegative, got {alpha}"
            )));
        }
        let biharmonic = InteriorSolver::new_spd(
            grid,
            Box::new(ops::biharmonic_apply),
            SolverOptions::default(),
        )?;
        let inertia = if alpha > 0.0 {
            let solver = InteriorSolver::new_spd(
                grid,
                Box::new(move |u| inertia_apply(u, alpha)),
                SolverOptions::default(),
            )?;
            Some((alpha, solver))
        } else {
            None
        };
        Ok(PlateContext {
            grid,
            biharmonic,
            inertia,
        })
    }

    pub fn biharmonic_solver(&self) -> &InteriorSolver {
        &self.biharmonic
    }

    /// Airy stress problem: biharmonic v = -[u1, u2] with clamped v.
    /// Bilinear in (u1, u2); `v(u) = airy_solve(u, u)`.
    pub fn airy_solve(&self, u1: &PlateField, u2: &PlateField) -> Result<PlateField> {
        self.grid.same_as(&u1.grid)?;
        let b = ops::vk_bracket(u1, u2)?;
        self.biharmonic.solve(&b.scale(-1.0))
    }

    /// Nonlinear plate force f(u) = -[u, v(u) + F0].
    pub fn vk_force(&self, u: &PlateField, f0: &PlateField) -> Result<PlateField> {
        let v = self.airy_solve(u, u)?;
        let total = v.add(f0)?;
        Ok(ops::vk_bracket(u, &total)?.scale(-1.0))
    }

    /// Solve (1 - alpha*Laplacian) w = g with homogeneous Dirichlet boundary.
    /// For alpha = 0 this is the identity.
    pub fn inertia_solve(&self, g: &PlateField, alpha: f64) -> Result<PlateField> {
        self.grid.same_as(&g.grid)?;
        if alpha == 0.0 {
            return Ok(interiorize(g));
        }
        match &self.inertia {
            Some((a, solver)) if *a == alpha => solver.solve(g),
            _ => Err(Error::Domain(format!(
                "context was not built for alpha = {alpha}; use PlateContext::with_alpha"
            ))),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.inertia.as_ref().map(|(a, _)| *a).unwrap_or(0.0)
    }
}

/// (1 - alpha*Laplacian) with homogeneous Dirichlet boundary conditions.
pub fn inertia_apply(u: &PlateField, alpha: f64) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Clamped);
    let cx = 1.0 / (g.hx * g.hx);
    let cy = 1.0 / (g.hy * g.hy);
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            // interior stencil touches boundary values only, no ghosts needed
            let lap = cx * (u.get(i + 1, j) - 2.0 * u.get(i, j) + u.get(i - 1, j))
                + cy * (u.get(i, j + 1) - 2.0 * u.get(i, j) + u.get(i, j - 1));
            out.set(i, j, u.get(i, j) - alpha * lap);
        }
    }
    out
}

/// Copy interior values into a clamped field (boundary zeroed).
fn interiorize(g: &PlateField) -> PlateField {
    let grid = g.grid;
    let mut out = PlateField::zeros(grid, Bc::Clamped);
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            out.set(i, j, g.get(i, j));
        }
    }
    out
}
