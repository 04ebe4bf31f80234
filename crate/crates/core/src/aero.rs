//! Aerodynamic closures: classical piston, low-frequency piston, and the
//! delayed potential with its finite memory horizon.

use crate::context::PlateState;
use crate::error::{Error, Result};
use crate::field::{Bc, PlateField};
use crate::grid::Grid;
use crate::history::HistoryBuffer;
use crate::ops;

/// Internal theta resolution of the delay-horizon sweep.
const HORIZON_THETA_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    PistonClassical,
    PistonLowFreq,
    DelayedPotential,
}

impl Closure {
    pub fn name(&self) -> &'static str {
        match self {
            Closure::PistonClassical => "piston-classical",
            Closure::PistonLowFreq => "piston-lowfreq",
            Closure::DelayedPotential => "delayed-potential",
        }
    }
}

/// Model configuration: flow speed, damping, rotational inertia, static
/// pressure, in-plane load and the aerodynamic closure.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub flow_speed: f64,
    pub damping: f64,
    pub alpha: f64,
    pub p0: PlateField,
    pub f0: PlateField,
    pub closure: Closure,
}

impl ModelParams {
    pub fn new(
        flow_speed: f64,
        damping: f64,
        alpha: f64,
        p0: PlateField,
        f0: PlateField,
        closure: Closure,
    ) -> Result<ModelParams> {
        p0.grid.same_as(&f0.grid)?;
        let params = ModelParams {
            flow_speed,
            damping,
            alpha,
            p0,
            f0,
            closure,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.flow_speed < 0.0 {
            return Err(Error::Domain(format!(
                "flow speed must be nonnegative, got {}",
                self.flow_speed
            )));
        }
        if (self.flow_speed - 1.0).abs() < 1e-12 {
            return Err(Error::DegenerateSpeed);
        }
        if self.damping < 0.0 {
            return Err(Error::Domain(format!(
                "structural damping must be nonnegative, got {}",
                self.damping
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::Domain(format!(
                "rotational inertia must be nonnegative, got {}",
                self.alpha
            )));
        }
        if self.closure == Closure::PistonLowFreq && self.flow_speed <= 1.0 {
            return Err(Error::Domain(format!(
                "low-frequency piston requires U > 1, got U = {}",
                self.flow_speed
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.p0.grid
    }

    /// Coefficient of the -u_t aerodynamic damping term of the closure.
    pub fn aero_damping_coefficient(&self) -> f64 {
        let u = self.flow_speed;
        match self.closure {
            Closure::PistonClassical | Closure::DelayedPotential => 1.0,
            Closure::PistonLowFreq => u * (u * u - 2.0) / (u * u - 1.0).powf(1.5),
        }
    }

    /// Coefficient of the -u_x convection term of the closure.
    pub fn convection_coefficient(&self) -> f64 {
        let u = self.flow_speed;
        match self.closure {
            Closure::PistonClassical | Closure::DelayedPotential => u,
            Closure::PistonLowFreq => u * u / (u * u - 1.0).sqrt(),
        }
    }
}

/// Quadrature of the delayed potential: trapezoid in theta (periodic) times
/// composite trapezoid in s over [0, t*].
#[derive(Debug, Clone, Copy)]
pub struct DelayQuadrature {
    pub n_theta: usize,
    pub n_s: usize,
    pub t_star: f64,
}

impl DelayQuadrature {
    pub fn new(n_theta: usize, n_s: usize, t_star: f64) -> Result<DelayQuadrature> {
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::Domain(format!(
                "n_theta must be even and at least 8, got {n_theta}"
            )));
        }
        if n_s < 4 {
            return Err(Error::Domain(format!("n_s must be at least 4, got {n_s}")));
        }
        if !(t_star > 0.0) {
            return Err(Error::Domain(format!(
                "delay horizon must be positive, got {t_star}"
            )));
        }
        Ok(DelayQuadrature {
            n_theta,
            n_s,
            t_star,
        })
    }

    /// Default rule for a grid and flow speed: 32 theta nodes and an s-step
    /// close to the time step.
    pub fn for_grid(grid: Grid, flow_speed: f64, dt: f64) -> Result<DelayQuadrature> {
        let t_star = delay_horizon(grid, flow_speed)?;
        let n_s = ((t_star / dt).ceil() as usize).max(4);
        DelayQuadrature::new(32, n_s, t_star)
    }
}

/// Smallest time after which every backward flow characteristic launched
/// from the plate has left it.
///
/// Characteristics move with velocity (U + sin(theta), cos(theta)); exit
/// times are analytic per starting point and direction, and the sweep is a
/// brute-force maximum over grid nodes and theta samples.
pub fn delay_horizon(grid: Grid, flow_speed: f64) -> Result<f64> {
    delay_horizon_sampled(grid, flow_speed, HORIZON_THETA_NODES)
}

/// Delay-horizon sweep with an explicit theta resolution.
pub fn delay_horizon_sampled(grid: Grid, flow_speed: f64, n_theta: usize) -> Result<f64> {
    if flow_speed < 0.0 {
        return Err(Error::Domain(format!(
            "flow speed must be nonnegative, got {flow_speed}"
        )));
    }
    if (flow_speed - 1.0).abs() < 1e-12 {
        return Err(Error::DegenerateSpeed);
    }
    let mut t_star: f64 = 0.0;
    for k in 0..n_theta {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
        let vx = flow_speed + theta.sin();
        let vy = theta.cos();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let ex = coord_exit(grid.x(i), grid.lx, vx);
                let ey = coord_exit(grid.y(j), grid.ly, vy);
                t_star = t_star.max(ex.min(ey));
            }
        }
    }
    Ok(t_star)
}

/// Time at which `p - v*s` leaves [0, len]; infinite when v = 0.
#[inline]
fn coord_exit(p: f64, len: f64, v: f64) -> f64 {
    if v > 0.0 {
        p / v
    } else if v < 0.0 {
        (p - len) / v
    } else {
        f64::INFINITY
    }
}

/// Classical piston forcing p0 - u_t - U u_x.
pub fn piston_classical(state: &PlateState, params: &ModelParams) -> Result<PlateField> {
    params.grid().same_as(&state.u.grid)?;
    let ux = ops::dx(&state.u);
    params
        .p0
        .axpy(-1.0, &state.v)?
        .axpy(-params.flow_speed, &ux)
}

/// Low-frequency piston forcing
/// p0 - U/sqrt(U^2-1) * ( (U^2-2)/(U^2-1) u_t + U u_x ), valid for U > 1.
pub fn piston_lowfreq(state: &PlateState, params: &ModelParams) -> Result<PlateField> {
    params.grid().same_as(&state.u.grid)?;
    let u = params.flow_speed;
    if u <= 1.0 {
        return Err(Error::Domain(format!(
            "low-frequency piston requires U > 1, got U = {u}"
        )));
    }
    let c = u / (u * u - 1.0).sqrt();
    let ct = c * (u * u - 2.0) / (u * u - 1.0);
    let cx = c * u;
    let ux = ops::dx(&state.u);
    params.p0.axpy(-ct, &state.v)?.axpy(-cx, &ux)
}

/// Delayed aeroelastic potential
/// q(t) = 1/(2 pi) * int_0^{t*} ds int_0^{2 pi} dtheta
///        [M_theta^2 u_ext](x - (U+sin theta) s, y - s cos theta, t - s),
/// with M_theta = sin(theta) d/dx + cos(theta) d/dy.
///
/// Second derivatives are formed on the plate with clamped ghosts, extended
/// by zero, and sampled at the shifted points by bilinear interpolation;
/// the history is interpolated linearly in time.
pub fn delayed_potential(
    history: &HistoryBuffer,
    t: f64,
    params: &ModelParams,
    quad: &DelayQuadrature,
) -> Result<PlateField> {
    let t_star = quad.t_star;
    if !history.covers(t - t_star, t) {
        return Err(Error::HistoryUnderflow {
            t,
            needed_from: t - t_star,
            have_from: history.earliest().unwrap_or(f64::NAN),
        });
    }
    potential_quadrature(params.grid(), params.flow_speed, quad, |s| {
        history.sample_u(t - s)
    })
}

/// Potential of a constant-in-time history, the stationary kernel of the
/// delayed closure.
pub fn stationary_potential(
    u_bar: &PlateField,
    flow_speed: f64,
    quad: &DelayQuadrature,
) -> Result<PlateField> {
    potential_quadrature(u_bar.grid, flow_speed, quad, |_| Ok(u_bar.clone()))
}

/// Tensor-product quadrature of the delayed kernel against a time sampler
/// `u(t - s)` given as a function of the lag `s`.
fn potential_quadrature(
    grid: Grid,
    flow_speed: f64,
    quad: &DelayQuadrature,
    sample: impl Fn(f64) -> Result<PlateField>,
) -> Result<PlateField> {
    let ds = quad.t_star / quad.n_s as f64;
    let dtheta = 2.0 * std::f64::consts::PI / quad.n_theta as f64;
    let mut out = PlateField::zeros(grid, Bc::Free);

    let dirs: Vec<(f64, f64, f64, f64, f64)> = (0..quad.n_theta)
        .map(|k| {
            let th = k as f64 * dtheta;
            let (s, c) = th.sin_cos();
            (s, c, s * s, 2.0 * s * c, c * c)
        })
        .collect();

    for js in 0..=quad.n_s {
        let s = js as f64 * ds;
        let ws = if js == 0 || js == quad.n_s { 0.5 } else { 1.0 } * ds;
        let u_s = sample(s)?;
        let uxx = ops::dxx(&u_s);
        let uyy = ops::dyy(&u_s);
        let uxy = ops::dxy(&u_s);
        for &(sin_t, cos_t, css, csc, ccc) in &dirs {
            let shift_x = (flow_speed + sin_t) * s;
            let shift_y = cos_t * s;
            for j in 0..grid.ny {
                let py = grid.y(j) - shift_y;
                if py < 0.0 || py > grid.ly {
                    continue;
                }
                for i in 0..grid.nx {
                    let px = grid.x(i) - shift_x;
                    if px < 0.0 || px > grid.lx {
                        continue;
                    }
                    let m2 = css * bilinear(&uxx, px, py)
                        + csc * bilinear(&uxy, px, py)
                        + ccc * bilinear(&uyy, px, py);
                    let k = grid.idx(i, j);
                    out.values_mut()[k] += ws * dtheta * m2;
                }
            }
        }
    }
    Ok(out.scale(1.0 / (2.0 * std::f64::consts::PI)))
}

/// Bilinear interpolation inside the domain; callers clip to the rectangle.
fn bilinear(f: &PlateField, x: f64, y: f64) -> f64 {
    let g = f.grid;
    let gx = (x / g.hx).clamp(0.0, (g.nx - 1) as f64);
    let gy = (y / g.hy).clamp(0.0, (g.ny - 1) as f64);
    let i0 = (gx.floor() as usize).min(g.nx - 2);
    let j0 = (gy.floor() as usize).min(g.ny - 2);
    let fx = gx - i0 as f64;
    let fy = gy - j0 as f64;
    let f00 = f.get(i0, j0);
    let f10 = f.get(i0 + 1, j0);
    let f01 = f.get(i0, j0 + 1);
    let f11 = f.get(i0 + 1, j0 + 1);
    f00 * (1.0 - fx) * (1.0 - fy) + f10 * fx * (1.0 - fy) + f01 * (1.0 - fx) * fy + f11 * fx * fy
}

/// Aerodynamic forcing without the -u_t damping part, which the integrator
/// treats implicitly: p0 - convection * u_x (- q for the delayed closure).
pub fn aero_explicit(
    state: &PlateState,
    history: Option<&HistoryBuffer>,
    params: &ModelParams,
    quad: Option<&DelayQuadrature>,
) -> Result<PlateField> {
    let ux = ops::dx(&state.u);
    let base = params.p0.axpy(-params.convection_coefficient(), &ux)?;
    match params.closure {
        Closure::PistonClassical | Closure::PistonLowFreq => Ok(base),
        Closure::DelayedPotential => {
            let history = history.ok_or_else(|| {
                Error::Domain("delayed closure requires a history buffer".into())
            })?;
            let quad = quad.ok_or_else(|| {
                Error::Domain("delayed closure requires a delay quadrature".into())
            })?;
            let q = delayed_potential(history, state.t, params, quad)?;
            base.axpy(-1.0, &q)
        }
    }
}

/// Full aerodynamic right-hand side of the active closure.
pub fn rhs_assemble(
    state: &PlateState,
    history: Option<&HistoryBuffer>,
    params: &ModelParams,
    quad: Option<&DelayQuadrature>,
) -> Result<PlateField> {
    match params.closure {
        Closure::PistonClassical => piston_classical(state, params),
        Closure::PistonLowFreq => piston_lowfreq(state, params),
        Closure::DelayedPotential => {
            let explicit = aero_explicit(state, history, params, quad)?;
            explicit.axpy(-params.aero_damping_coefficient(), &state.v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::norm_l2;

    fn grid() -> Grid {
        Grid::unit_square(9).unwrap()
    }

    fn params_with(closure: Closure, flow_speed: f64) -> ModelParams {
        let g = grid();
        ModelParams::new(
            flow_speed,
            0.0,
            0.0,
            PlateField::zeros(g, Bc::Free),
            PlateField::zeros(g, Bc::Free),
            closure,
        )
        .unwrap()
    }

    #[test]
    fn transonic_speed_rejected() {
        let g = grid();
        let r = ModelParams::new(
            1.0,
            0.0,
            0.0,
            PlateField::zeros(g, Bc::Free),
            PlateField::zeros(g, Bc::Free),
            Closure::PistonClassical,
        );
        assert!(matches!(r, Err(Error::DegenerateSpeed)));
    }

    #[test]
    fn lowfreq_requires_supersonic() {
        let g = grid();
        let r = ModelParams::new(
            0.5,
            0.0,
            0.0,
            PlateField::zeros(g, Bc::Free),
            PlateField::zeros(g, Bc::Free),
            Closure::PistonLowFreq,
        );
        assert!(r.is_err());
    }

    #[test]
    fn piston_classical_at_rest_returns_static_pressure() {
        let g = grid();
        let p0 = PlateField::from_fn(g, Bc::Free, |x, y| x + 2.0 * y);
        let params = ModelParams::new(
            2.0,
            0.0,
            0.0,
            p0.clone(),
            PlateField::zeros(g, Bc::Free),
            Closure::PistonClassical,
        )
        .unwrap();
        let state = PlateState::resting(g);
        let p = piston_classical(&state, &params).unwrap();
        assert_eq!(norm_l2(&p.sub(&p0).unwrap()), 0.0);
    }

    #[test]
    fn piston_classical_u_zero_is_pressure_minus_velocity() {
        let g = grid();
        let params = params_with(Closure::PistonClassical, 0.0);
        let mut state = PlateState::resting(g);
        state.v = PlateField::from_fn(g, Bc::Clamped, |x, y| x * y * (1.0 - x) * (1.0 - y));
        let p = piston_classical(&state, &params).unwrap();
        let expect = state.v.scale(-1.0);
        assert!(p.sub(&expect).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn lowfreq_damping_coefficient_values() {
        // U = sqrt(2): the u_t coefficient vanishes
        let p = params_with(Closure::PistonLowFreq, std::f64::consts::SQRT_2);
        assert!(p.aero_damping_coefficient().abs() < 1e-14);

        // 1 < U < sqrt(2): negative damping
        let p = params_with(Closure::PistonLowFreq, 1.2);
        assert!(p.aero_damping_coefficient() < 0.0);

        // U = 2: 2*2/3^(3/2)
        let p = params_with(Closure::PistonLowFreq, 2.0);
        let expect = 4.0 / 3.0f64.powf(1.5);
        assert!((p.aero_damping_coefficient() - expect).abs() < 1e-12);
        assert!((expect - 0.7698).abs() < 1e-4);
    }

    #[test]
    fn lowfreq_at_sqrt2_reduces_to_convection_only() {
        let g = grid();
        let u = std::f64::consts::SQRT_2;
        let params = params_with(Closure::PistonLowFreq, u);
        let mut state = PlateState::resting(g);
        state.u = PlateField::from_fn(g, Bc::Clamped, |x, y| {
            (std::f64::consts::PI * x).sin().powi(2) * (std::f64::consts::PI * y).sin().powi(2)
        });
        state.v = PlateField::from_fn(g, Bc::Clamped, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let p = piston_lowfreq(&state, &params).unwrap();
        let ux = ops::dx(&state.u);
        let expect = ux.scale(-u * u / (u * u - 1.0).sqrt());
        assert!(p.sub(&expect).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn delay_horizon_unit_square_u2() {
        let g = Grid::unit_square(17).unwrap();
        let t = delay_horizon(g, 2.0).unwrap();
        assert!(t <= 2.0f64.sqrt() + 1e-9, "t* = {t} exceeds diam/(U-1)");
        // exact maximum for the unit square at theta = 3 pi / 2
        assert!((t - 1.0).abs() < 5e-3, "t* = {t}");
    }

    #[test]
    fn delay_horizon_monotone_in_speed() {
        let g = Grid::unit_square(9).unwrap();
        let mut prev = f64::INFINITY;
        for u in [1.5, 2.0, 4.0, 8.0] {
            let t = delay_horizon(g, u).unwrap();
            assert!(t <= prev + 1e-12, "t*({u}) = {t} not nonincreasing");
            prev = t;
        }
    }

    #[test]
    fn delay_horizon_degenerate_and_tiny_domain() {
        let g = Grid::unit_square(9).unwrap();
        assert!(matches!(
            delay_horizon(g, 1.0),
            Err(Error::DegenerateSpeed)
        ));
        let tiny = Grid::new(5, 5, 1e-9, 1e-9).unwrap();
        let t = delay_horizon(tiny, 2.0).unwrap();
        assert!(t < 1e-8, "t* = {t}");
    }

    #[test]
    fn delayed_potential_zero_history_is_zero() {
        let g = grid();
        let params = params_with(Closure::DelayedPotential, 2.0);
        let dt = 0.05;
        let t_star = delay_horizon(g, 2.0).unwrap();
        let quad = DelayQuadrature::new(16, 8, t_star).unwrap();
        let mut h = HistoryBuffer::new(dt, t_star + 2.0 * dt);
        let n = (t_star / dt).ceil() as usize + 2;
        for m in 0..=n {
            let t = (m as f64 - n as f64) * dt + 1.0;
            h.push(t, PlateField::zeros(g, Bc::Clamped), PlateField::zeros(g, Bc::Clamped));
        }
        let q = delayed_potential(&h, 1.0, &params, &quad).unwrap();
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn delayed_potential_stationary_history_is_time_invariant() {
        let g = Grid::unit_square(13).unwrap();
        let params = ModelParams::new(
            2.0,
            0.0,
            0.0,
            PlateField::zeros(g, Bc::Free),
            PlateField::zeros(g, Bc::Free),
            Closure::DelayedPotential,
        )
        .unwrap();
        let dt = 0.1;
        let t_star = delay_horizon(g, 2.0).unwrap();
        let quad = DelayQuadrature::new(16, 8, t_star).unwrap();
        let shape = PlateField::from_fn(g, Bc::Clamped, |x, y| {
            (std::f64::consts::PI * x).sin().powi(2) * (std::f64::consts::PI * y).sin().powi(2)
        });
        let mut h = HistoryBuffer::new(dt, 100.0);
        for m in 0..40 {
            h.push(m as f64 * dt, shape.clone(), PlateField::zeros(g, Bc::Clamped));
        }
        let qa = delayed_potential(&h, 2.0, &params, &quad).unwrap();
        let qb = delayed_potential(&h, 3.5, &params, &quad).unwrap();
        assert!(qa.sub(&qb).unwrap().max_abs() < 1e-13);
        assert!(qa.max_abs() > 0.0, "stationary potential should not vanish");
    }

    #[test]
    fn delayed_potential_underflow_errors() {
        let g = grid();
        let params = params_with(Closure::DelayedPotential, 2.0);
        let quad = DelayQuadrature::new(16, 8, 1.0).unwrap();
        let mut h = HistoryBuffer::new(0.1, 10.0);
        h.push(0.0, PlateField::zeros(g, Bc::Clamped), PlateField::zeros(g, Bc::Clamped));
        h.push(0.1, PlateField::zeros(g, Bc::Clamped), PlateField::zeros(g, Bc::Clamped));
        assert!(matches!(
            delayed_potential(&h, 0.1, &params, &quad),
            Err(Error::HistoryUnderflow { .. })
        ));
    }

    #[test]
    fn rhs_assembly_matches_parts() {
        let g = grid();
        let p0 = PlateField::from_fn(g, Bc::Free, |x, _| 0.3 * x);
        let params = ModelParams::new(
            2.0,
            0.7,
            0.0,
            p0,
            PlateField::zeros(g, Bc::Free),
            Closure::PistonClassical,
        )
        .unwrap();
        let mut state = PlateState::resting(g);
        state.u = PlateField::from_fn(g, Bc::Clamped, |x, y| x * x * (1.0 - x) * y * (1.0 - y));
        state.v = PlateField::from_fn(g, Bc::Clamped, |x, y| (x - y) * x * (1.0 - x) * y);
        let full = rhs_assemble(&state, None, &params, None).unwrap();
        let explicit = aero_explicit(&state, None, &params, None).unwrap();
        let recombined = explicit
            .axpy(-params.aero_damping_coefficient(), &state.v)
            .unwrap();
        assert!(full.sub(&recombined).unwrap().max_abs() < 1e-14);
    }
}
