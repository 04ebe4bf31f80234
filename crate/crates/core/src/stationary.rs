//! Stationary states of the plate under flow: Newton iteration with the
//! analytic Jacobian, and natural-parameter continuation to expose buckling
//! and multiple equilibria.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::aero::{self, DelayQuadrature, ModelParams};
use crate::context::PlateContext;
use crate::error::{Error, Result};
use crate::field::{norm_l2, Bc, PlateField};
use crate::grid::Grid;
use crate::ops;
use crate::solver::{field_to_interior, interior_to_field};

#[derive(Debug, Clone)]
pub struct StationaryOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Include the stationary delayed kernel in the residual. Off by
    /// default: the static piston term -U u_x is the first-order stationary
    /// aerodynamic effect.
    pub stationary_delay: Option<DelayQuadrature>,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tol: 1e-9,
            max_iter: 30,
            stationary_delay: None,
        }
    }
}

/// Residual of the stationary problem:
/// R(u) = biharmonic(u) - [u, v(u) + F0] - p0 + U u_x (+ stationary q).
/// Boundary nodes are zero; only the interior enters norms and solves.
pub fn static_residual(
    u: &PlateField,
    params: &ModelParams,
    ctx: &PlateContext,
    opts: &StationaryOptions,
) -> Result<PlateField> {
    let v = ctx.airy_solve(u, u)?;
    let total = v.add(&params.f0)?;
    let bracket = ops::vk_bracket(u, &total)?;
    let ux = ops::dx(u);
    let mut r = ops::biharmonic_apply(u)
        .axpy(-1.0, &bracket)?
        .axpy(-1.0, &params.p0)?
        .axpy(params.flow_speed, &ux)?;
    if let Some(quad) = &opts.stationary_delay {
        let q = aero::stationary_potential(u, params.flow_speed, quad)?;
        r = r.axpy(1.0, &q)?;
    }
    Ok(clamp_boundary(&r))
}

/// Jacobian action
/// J(u) h = biharmonic(h) - [h, v(u)+F0] - 2 [u, v(u,h)] + U h_x.
pub fn jacobian_apply(
    u: &PlateField,
    h: &PlateField,
    v_total: &PlateField,
    params: &ModelParams,
    ctx: &PlateContext,
    opts: &StationaryOptions,
) -> Result<PlateField> {
    let b1 = ops::vk_bracket(h, v_total)?;
    let v_uh = ctx.airy_solve(u, h)?;
    let b2 = ops::vk_bracket(u, &v_uh)?;
    let hx = ops::dx(h);
    let mut jh = ops::biharmonic_apply(h)
        .axpy(-1.0, &b1)?
        .axpy(-2.0, &b2)?
        .axpy(params.flow_speed, &hx)?;
    if let Some(quad) = &opts.stationary_delay {
        let q = aero::stationary_potential(h, params.flow_speed, quad)?;
        jh = jh.axpy(1.0, &q)?;
    }
    Ok(clamp_boundary(&jh))
}

fn clamp_boundary(f: &PlateField) -> PlateField {
    let grid = f.grid;
    let mut out = PlateField::zeros(grid, Bc::Clamped);
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            out.set(i, j, f.get(i, j));
        }
    }
    out
}

fn assemble_jacobian(
    u: &PlateField,
    params: &ModelParams,
    ctx: &PlateContext,
    opts: &StationaryOptions,
) -> Result<DMatrix<f64>> {
    let grid = ctx.grid;
    let n = grid.interior_len();
    let v = ctx.airy_solve(u, u)?;
    let v_total = v.add(&params.f0)?;
    let mut mat = DMatrix::zeros(n, n);
    let mut basis = PlateField::zeros(grid, Bc::Clamped);
    let mut col = 0;
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            basis.set(i, j, 1.0);
            let jh = jacobian_apply(u, &basis, &v_total, params, ctx, opts)?;
            let values = field_to_interior(&jh);
            for (r, val) in values.iter().enumerate() {
                mat[(r, col)] = *val;
            }
            basis.set(i, j, 0.0);
            col += 1;
        }
    }
    Ok(mat)
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub u: PlateField,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on the stationary residual.
pub fn newton_solve(
    u0: &PlateField,
    params: &ModelParams,
    ctx: &PlateContext,
    opts: &StationaryOptions,
) -> Result<NewtonResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("Newton tolerance must be positive".into()));
    }
    let mut u = clamp_boundary(u0);
    let mut r = static_residual(&u, params, ctx, opts)?;
    let mut res = norm_l2(&r);
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(NewtonResult {
                u,
                residual: res,
                iterations: it,
            });
        }
        let jac = assemble_jacobian(&u, params, ctx, opts)?;
        let lu = jac.lu();
        let rhs = DVector::from_vec(field_to_interior(&r));
        let delta = lu.solve(&rhs).ok_or(Error::NearBifurcation)?;
        let step = interior_to_field(ctx.grid, delta.as_slice());

        // halving line search on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = u.axpy(-lambda, &step)?;
            let r_trial = static_residual(&trial, params, ctx, opts)?;
            let res_trial = norm_l2(&r_trial);
            if res_trial < res {
                u = trial;
                r = r_trial;
                res = res_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Nonconvergence {
                residual: res,
                iterations: it + 1,
            });
        }
    }
    if res <= opts.tol {
        return Ok(NewtonResult {
            u,
            residual: res,
            iterations: opts.max_iter,
        });
    }
    Err(Error::Nonconvergence {
        residual: res,
        iterations: opts.max_iter,
    })
}

/// Smallest real part of the dense linearized spectrum; skipped on grids
/// larger than 33x33.
pub fn stability_indicator(
    u: &PlateField,
    params: &ModelParams,
    ctx: &PlateContext,
    opts: &StationaryOptions,
) -> Result<Option<f64>> {
    let grid = ctx.grid;
    if grid.nx > 33 || grid.ny > 33 {
        return Ok(None);
    }
    let jac = assemble_jacobian(u, params, ctx, opts)?;
    let eig = jac.complex_eigenvalues();
    let min_re = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    Ok(Some(min_re))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// F0 = value * profile with a fixed in-plane load profile.
    LoadAmplitude,
    FlowSpeed,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::LoadAmplitude => "load",
            SweepParam::FlowSpeed => "flow-speed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub value: f64,
    pub u: PlateField,
    pub residual: f64,
    pub newton_iterations: usize,
    pub converged: bool,
    pub stability: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumBranch {
    pub parameter: SweepParam,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub newton: StationaryOptions,
    /// Perturbation added to each predictor so symmetry-broken branches are
    /// reachable; zero follows the current branch strictly.
    pub kick_amplitude: f64,
    pub seed: u64,
    pub retries: usize,
    pub compute_stability: bool,
    pub initial_guess: Option<PlateField>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            newton: StationaryOptions::default(),
            kick_amplitude: 0.0,
            seed: 1,
            retries: 3,
            compute_stability: false,
            initial_guess: None,
        }
    }
}

/// Normalized clamped bump, the default perturbation shape.
pub fn bump(grid: Grid) -> PlateField {
    PlateField::from_fn(grid, Bc::Clamped, |x, y| {
        let sx = x / grid.lx;
        let sy = y / grid.ly;
        256.0 * (sx * (1.0 - sx) * sy * (1.0 - sy)).powi(2)
    })
}

/// Natural-parameter continuation: each equilibrium seeds the next value's
/// Newton solve. Nonconvergent points are recorded and the sweep restarts
/// from a fresh randomized guess.
pub fn continuation(
    base: &ModelParams,
    param: SweepParam,
    profile: &PlateField,
    values: &[f64],
    ctx: &PlateContext,
    opts: &ContinuationOptions,
) -> Result<EquilibriumBranch> {
    let grid = ctx.grid;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let kick = bump(grid);
    let mut guess = opts
        .initial_guess
        .clone()
        .unwrap_or_else(|| PlateField::zeros(grid, Bc::Clamped));
    let mut points = Vec::with_capacity(values.len());

    for &val in values {
        let params = apply_sweep_value(base, param, profile, val)?;
        let mut attempt = guess.axpy(opts.kick_amplitude, &kick)?;
        let mut solved = None;
        for retry in 0..=opts.retries {
            match newton_solve(&attempt, &params, ctx, &opts.newton) {
                Ok(sol) => {
                    solved = Some(sol);
                    break;
                }
                Err(_) if retry < opts.retries => {
                    let amp = 0.1 * 2f64.powi(retry as i32);
                    let r1: f64 = rng.gen_range(-1.0..1.0);
                    let r2: f64 = rng.gen_range(0.5..1.5);
                    attempt = kick.scale(amp * r2).axpy(amp * r1, &guess)?;
                }
                Err(_) => {}
            }
        }
        match solved {
            Some(sol) => {
                let stability = if opts.compute_stability {
                    stability_indicator(&sol.u, &params, ctx, &opts.newton)?
                } else {
                    None
                };
                guess = sol.u.clone();
                points.push(BranchPoint {
                    value: val,
                    u: sol.u,
                    residual: sol.residual,
                    newton_iterations: sol.iterations,
                    converged: true,
                    stability,
                });
            }
            None => {
                let r = static_residual(&attempt, &params, ctx, &opts.newton)?;
                points.push(BranchPoint {
                    value: val,
                    u: attempt.clone(),
                    residual: norm_l2(&r),
                    newton_iterations: opts.newton.max_iter,
                    converged: false,
                    stability: None,
                });
            }
        }
    }
    Ok(EquilibriumBranch { parameter: param, points })
}

pub fn apply_sweep_value(
    base: &ModelParams,
    param: SweepParam,
    profile: &PlateField,
    value: f64,
) -> Result<ModelParams> {
    let mut p = base.clone();
    match param {
        SweepParam::LoadAmplitude => p.f0 = profile.scale(value),
        SweepParam::FlowSpeed => p.flow_speed = value,
    }
    p.validate()?;
    Ok(p)
}

/// Estimate the onset of the nontrivial branch by extrapolating the
/// square-amplitude growth ||u||^2 ~ c (lambda - lambda_c) from the
/// smallest nontrivial points.
pub fn buckling_onset_estimate(
    branch: &EquilibriumBranch,
    trivial_threshold: f64,
) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = branch
        .points
        .iter()
        .filter(|p| p.converged)
        .map(|p| (p.value, norm_l2(&p.u).powi(2)))
        .filter(|(_, n2)| n2.sqrt() > trivial_threshold)
        .collect();
    if pts.len() < 2 {
        return None;
    }
    // use the four smallest amplitudes, closest to the onset
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    pts.truncate(4);
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope.abs() < 1e-30 {
        return None;
    }
    Some(-intercept / slope)
}

/// In-plane load profile of uniform uniaxial compression along x.
pub fn uniaxial_compression_profile(grid: Grid) -> PlateField {
    PlateField::from_fn(grid, Bc::Free, |_, y| -0.5 * y * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::Closure;

    fn params(grid: Grid, flow: f64, load: f64) -> ModelParams {
        ModelParams::new(
            flow,
            0.0,
            0.0,
            PlateField::zeros(grid, Bc::Free),
            uniaxial_compression_profile(grid).scale(load),
            Closure::PistonClassical,
        )
        .unwrap()
    }

    #[test]
    fn flat_state_is_equilibrium_without_pressure() {
        let grid = Grid::unit_square(11).unwrap();
        let ctx = PlateContext::new(grid).unwrap();
        let p = params(grid, 0.0, 20.0);
        let r = static_residual(
            &PlateField::zeros(grid, Bc::Clamped),
            &p,
            &ctx,
            &StationaryOptions::default(),
        )
        .unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn newton_converges_instantly_at_the_flat_state() {
        let grid = Grid::unit_square(9).unwrap();
        let ctx = PlateContext::new(grid).unwrap();
        let p = params(grid, 0.0, 10.0); // subcritical
        let sol = newton_solve(
            &PlateField::zeros(grid, Bc::Clamped),
            &p,
            &ctx,
            &StationaryOptions::default(),
        )
        .unwrap();
        assert!(sol.iterations <= 2);
        assert!(norm_l2(&sol.u) < 1e-12);
    }

    #[test]
    fn residual_is_odd_without_pressure_or_flow() {
        let grid = Grid::unit_square(9).unwrap();
        let ctx = PlateContext::new(grid).unwrap();
        let p = params(grid, 0.0, 30.0);
        let opts = StationaryOptions::default();
        let u = PlateField::from_fn(grid, Bc::Clamped, |x, y| {
            0.4 * (std::f64::consts::PI * x).sin().powi(2)
                * (std::f64::consts::PI * y).sin().powi(2)
        });
        let r_pos = static_residual(&u, &p, &ctx, &opts).unwrap();
        let r_neg = static_residual(&u.scale(-1.0), &p, &ctx, &opts).unwrap();
        let defect = r_pos.add(&r_neg).unwrap().max_abs();
        assert!(defect < 1e-10 * r_pos.max_abs().max(1.0), "defect {defect}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = Grid::unit_square(9).unwrap();
        let ctx = PlateContext::new(grid).unwrap();
        let p = params(grid, 0.5, 15.0);
        let opts = StationaryOptions::default();
        let u = PlateField::from_fn(grid, Bc::Clamped, |x, y| {
            0.2 * (std::f64::consts::PI * x).sin().powi(2)
                * (2.0 * std::f64::consts::PI * y).sin().powi(2)
        });
        let h = PlateField::from_fn(grid, Bc::Clamped, |x, y| {
            0.3 * (2.0 * std::f64::consts::PI * x).sin().powi(2)
                * (std::f64::consts::PI * y).sin().powi(2)
        });
        let v = ctx.airy_solve(&u, &u).unwrap();
        let v_total = v.add(&p.f0).unwrap();
        let jh = jacobian_apply(&u, &h, &v_total, &p, &ctx, &opts).unwrap();

        let mut prev_err = f64::INFINITY;
        for eps in [1e-4, 1e-5] {
            let rp = static_residual(&u.axpy(eps, &h).unwrap(), &p, &ctx, &opts).unwrap();
            let rm = static_residual(&u.axpy(-eps, &h).unwrap(), &p, &ctx, &opts).unwrap();
            let fd = rp.sub(&rm).unwrap().scale(0.5 / eps);
            let err = fd.sub(&jh).unwrap().max_abs() / jh.max_abs().max(1.0);
            assert!(err < prev_err.max(1e-7) * 1.5, "eps {eps}: err {err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-5, "final Jacobian FD error {prev_err}");
    }
}
