//! Semi-implicit time integration of the plate under any closure.
//!
//! Scheme: trapezoidal (Crank-Nicolson) treatment of the biharmonic
//! stiffness and of all damping (structural k plus the closure's -u_t
//! coefficient), with Adams-Bashforth-2 extrapolation of the von Karman
//! force and the remaining aerodynamic terms to the half step. One linear
//! solve with a fixed SPD matrix per step; second order in dt for smooth
//! solutions.

use crate::aero::{self, Closure, DelayQuadrature, ModelParams};
use crate::context::{inertia_apply, PlateContext, PlateState};
use crate::energy::{self, EnergyRecord};
use crate::error::{Error, Result};
use crate::field::{inner, norm_l2, Bc, PlateField};
use crate::grid::Grid;
use crate::history::HistoryBuffer;
use crate::ops;
use crate::solver::{InteriorSolver, SolverOptions};

/// Integrator switches that are not part of the physical model: term
/// toggles for diagnostic scenarios and an optional manufactured source.
pub struct SimOptions {
    pub include_vk_force: bool,
    pub include_aero: bool,
    pub source: Option<Box<dyn Fn(f64, Grid) -> PlateField + Send + Sync>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            include_vk_force: true,
            include_aero: true,
            source: None,
        }
    }
}

impl SimOptions {
    pub fn conservative_plate() -> Self {
        SimOptions {
            include_vk_force: true,
            include_aero: false,
            source: None,
        }
    }

    pub fn linear_damped() -> Self {
        SimOptions {
            include_vk_force: false,
            include_aero: false,
            source: None,
        }
    }
}

/// Prehistory for the delayed closure.
pub enum Prehistory {
    /// eta(s) = u0, prehistory velocity = u1, for s in [-t*-2dt, 0].
    Flat,
    /// Arbitrary prehistory snapshots ending at the initial time.
    Buffer(HistoryBuffer),
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub norm_h2_u: f64,
    pub norm_l2_v: f64,
    pub aero_norm: f64,
    pub energy: EnergyRecord,
}

/// Sampled states at a user stride plus per-step diagnostics records.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub states: Vec<PlateState>,
    pub stride: usize,
}

struct LevelData {
    /// Explicit part of the right-hand side: aero (without -u_t) - f(u) + source.
    explicit: PlateField,
    /// Full aerodynamic forcing plus source, for energy bookkeeping.
    work_field: PlateField,
    energy: EnergyRecord,
}

pub struct Simulator<'a> {
    ctx: &'a PlateContext,
    params: ModelParams,
    opts: SimOptions,
    dt: f64,
    k_eff: f64,
    quad: Option<DelayQuadrature>,
    cn_solver: InteriorSolver,
    state: PlateState,
    history: HistoryBuffer,
    prev_explicit: Option<PlateField>,
    current: LevelData,
    step_index: usize,
    diss_cum: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        ctx: &'a PlateContext,
        params: ModelParams,
        opts: SimOptions,
        dt: f64,
        initial: PlateState,
        prehistory: Prehistory,
    ) -> Result<Simulator<'a>> {
        params.validate()?;
        ctx.grid.same_as(&params.grid())?;
        ctx.grid.same_as(&initial.u.grid)?;
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        if params.alpha > 0.0 && ctx.alpha() != params.alpha {
            return Err(Error::Domain(
                "context alpha does not match model alpha".into(),
            ));
        }

        let delayed = params.closure == Closure::DelayedPotential && opts.include_aero;
        let quad = if delayed {
            let q = DelayQuadrature::for_grid(ctx.grid, params.flow_speed, dt)?;
            if dt > q.t_star / 8.0 + 1e-12 {
                return Err(Error::Domain(format!(
                    "delayed runs require dt <= t*/8 = {:.6}, got dt = {dt}",
                    q.t_star / 8.0
                )));
            }
            Some(q)
        } else {
            None
        };

        let keep_span = match &quad {
            Some(q) => q.t_star + 2.0 * dt,
            None => 2.0 * dt,
        };
        let mut history = match prehistory {
            Prehistory::Flat => {
                let mut h = HistoryBuffer::new(dt, keep_span);
                if delayed {
                    let m = (keep_span / dt).ceil() as usize + 1;
                    for step in (1..=m).rev() {
                        h.push(
                            initial.t - step as f64 * dt,
                            initial.u.clone(),
                            initial.v.clone(),
                        );
                    }
                }
                h
            }
            Prehistory::Buffer(h) => {
                if (h.dt() - dt).abs() > 1e-9 * dt {
                    return Err(Error::Domain(format!(
                        "prehistory step {} does not match dt {dt}",
                        h.dt()
                    )));
                }
                if delayed {
                    let t_star = quad.as_ref().map(|q| q.t_star).unwrap_or(0.0);
                    if !h.covers(initial.t - t_star, initial.t - dt) {
                        return Err(Error::HistoryUnderflow {
                            t: initial.t,
                            needed_from: initial.t - t_star,
                            have_from: h.earliest().unwrap_or(f64::NAN),
                        });
                    }
                }
                h
            }
        };
        history.push(initial.t, initial.u.clone(), initial.v.clone());

        let k_eff = params.damping
            + if opts.include_aero {
                params.aero_damping_coefficient()
            } else {
                0.0
            };
        let cn_solver = build_cn_solver(ctx.grid, params.alpha, dt, k_eff)?;

        let current = compute_level(ctx, &params, &opts, &initial, &history, quad.as_ref())?;
        Ok(Simulator {
            ctx,
            params,
            opts,
            dt,
            k_eff,
            quad,
            cn_solver,
            state: initial,
            history,
            prev_explicit: None,
            current,
            step_index: 0,
            diss_cum: 0.0,
        })
    }

    /// Rebuild a simulator from a saved state and history window. The
    /// previous right-hand side is recomputed from the stored snapshot at
    /// t - dt, so a resumed run reproduces the contiguous run bitwise.
    pub fn from_checkpoint(
        ctx: &'a PlateContext,
        params: ModelParams,
        opts: SimOptions,
        dt: f64,
        state: PlateState,
        history: HistoryBuffer,
        diss_cum: f64,
        step_index: usize,
    ) -> Result<Simulator<'a>> {
        let latest = history.latest().ok_or_else(|| {
            Error::Domain("checkpoint history must contain the current state".into())
        })?;
        if (latest - state.t).abs() > 1e-9 * dt {
            return Err(Error::Domain(format!(
                "checkpoint history ends at {latest}, state is at {}",
                state.t
            )));
        }

        params.validate()?;
        let delayed = params.closure == Closure::DelayedPotential && opts.include_aero;
        let quad = if delayed {
            Some(DelayQuadrature::for_grid(ctx.grid, params.flow_speed, dt)?)
        } else {
            None
        };
        let k_eff = params.damping
            + if opts.include_aero {
                params.aero_damping_coefficient()
            } else {
                0.0
            };
        let cn_solver = build_cn_solver(ctx.grid, params.alpha, dt, k_eff)?;
        let current = compute_level(ctx, &params, &opts, &state, &history, quad.as_ref())?;

        let prev_explicit = match history.at(state.t - dt) {
            Some(snap) => {
                let prev_state = PlateState {
                    u: snap.u.clone(),
                    v: snap.v.clone(),
                    t: snap.t,
                };
                Some(
                    compute_level(ctx, &params, &opts, &prev_state, &history, quad.as_ref())?
                        .explicit,
                )
            }
            None => None,
        };

        Ok(Simulator {
            ctx,
            params,
            opts,
            dt,
            k_eff,
            quad,
            cn_solver,
            state,
            history,
            prev_explicit,
            current,
            step_index,
            diss_cum,
        })
    }

    pub fn state(&self) -> &PlateState {
        &self.state
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn quad(&self) -> Option<&DelayQuadrature> {
        self.quad.as_ref()
    }

    pub fn diss_cum(&self) -> f64 {
        self.diss_cum
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    fn record(&self, residual: f64) -> TrajectoryRecord {
        let mut energy = self.current.energy;
        energy.diss_cum = self.diss_cum;
        energy.balance_residual = residual;
        TrajectoryRecord {
            step: self.step_index,
            t: self.state.t,
            norm_h2_u: ops::norm_h2(&self.state.u),
            norm_l2_v: norm_l2(&self.state.v),
            aero_norm: norm_l2(&self.current.work_field),
            energy,
        }
    }

    /// Advance one step; returns the diagnostics record at the new level.
    pub fn step(&mut self) -> Result<TrajectoryRecord> {
        let dt = self.dt;
        let half_dt2 = 0.25 * dt * dt;
        let half_kdt = 0.5 * self.k_eff * dt;

        // explicit part extrapolated to the half step
        let n_mid = match &self.prev_explicit {
            Some(prev) => self.current.explicit.scale(1.5).axpy(-0.5, prev)?,
            None => self.current.explicit.clone(),
        };

        // [M - dt^2/4 A - k dt/2] v_n - dt A u_n + dt N_mid
        let m_v = inertia_apply(&self.state.v, self.params.alpha);
        let a_v = ops::biharmonic_apply(&self.state.v);
        let a_u = ops::biharmonic_apply(&self.state.u);
        let mut rhs = m_v
            .axpy(-half_dt2, &a_v)?
            .axpy(-half_kdt, &self.state.v)?
            .axpy(-dt, &a_u)?;
        rhs = rhs.axpy(dt, &n_mid)?;

        let v_new = self.cn_solver.solve(&rhs)?;
        let u_new = self
            .state
            .u
            .axpy(0.5 * dt, &self.state.v)?
            .axpy(0.5 * dt, &v_new)?;

        let t_new = self.state.t + dt;
        if !u_new.is_finite() || !v_new.is_finite() {
            return Err(Error::Divergence {
                step: self.step_index + 1,
                t: t_new,
            });
        }

        let v_old = std::mem::replace(&mut self.state.v, v_new);
        let u_old = std::mem::replace(&mut self.state.u, u_new);
        self.state.t = t_new;
        self.step_index += 1;
        self.history
            .push(t_new, self.state.u.clone(), self.state.v.clone());

        let new_level = compute_level(
            self.ctx,
            &self.params,
            &self.opts,
            &self.state,
            &self.history,
            self.quad.as_ref(),
        )?;
        let old_level = std::mem::replace(&mut self.current, new_level);
        self.prev_explicit = Some(old_level.explicit);

        // diagnostics: structural dissipation and the balance defect
        let v_mid = v_old.scale(0.5).axpy(0.5, &self.state.v)?;
        self.diss_cum += self.params.damping * inner(&v_mid, &v_mid) * dt;
        let residual = energy::balance_residual(
            &old_level.energy,
            &self.current.energy,
            &v_old,
            &self.state.v,
            &old_level.work_field,
            &self.current.work_field,
            self.params.damping,
            dt,
        )?;
        let _ = u_old;
        Ok(self.record(residual))
    }

    /// Integrate to `t_end`, recording diagnostics every step and states at
    /// the given stride (0 keeps only the initial and final states).
    pub fn run(&mut self, t_end: f64, stride: usize) -> Result<Trajectory> {
        let n_steps = ((t_end - self.state.t) / self.dt - 0.5).ceil().max(0.0) as usize;
        let mut traj = Trajectory {
            records: Vec::with_capacity(n_steps + 1),
            states: Vec::new(),
            stride,
        };
        traj.records.push(self.record(0.0));
        traj.states.push(self.state.clone());
        for s in 0..n_steps {
            let rec = self.step()?;
            traj.records.push(rec);
            if stride > 0 && (s + 1) % stride == 0 {
                traj.states.push(self.state.clone());
            }
        }
        if traj
            .states
            .last()
            .map(|s| (s.t - self.state.t).abs() > 1e-12)
            .unwrap_or(true)
        {
            traj.states.push(self.state.clone());
        }
        Ok(traj)
    }
}

fn build_cn_solver(grid: Grid, alpha: f64, dt: f64, k_eff: f64) -> Result<InteriorSolver> {
    let half_dt2 = 0.25 * dt * dt;
    let half_kdt = 0.5 * k_eff * dt;
    InteriorSolver::new_spd(
        grid,
        Box::new(move |w| {
            let m = inertia_apply(w, alpha);
            let a = ops::biharmonic_apply(w);
            m.axpy(half_dt2, &a)
                .and_then(|x| x.axpy(half_kdt, w))
                .expect("grids match by construction")
        }),
        SolverOptions::default(),
    )
}

fn compute_level(
    ctx: &PlateContext,
    params: &ModelParams,
    opts: &SimOptions,
    state: &PlateState,
    history: &HistoryBuffer,
    quad: Option<&DelayQuadrature>,
) -> Result<LevelData> {
    let grid = ctx.grid;
    let airy = ctx.airy_solve(&state.u, &state.u)?;

    let mut explicit = PlateField::zeros(grid, Bc::Free);
    let mut work_field = PlateField::zeros(grid, Bc::Free);

    if opts.include_aero {
        let aero_expl = aero::aero_explicit(state, Some(history), params, quad)?;
        work_field =
            aero_expl.axpy(-params.aero_damping_coefficient(), &state.v)?;
        explicit = aero_expl;
    }
    if opts.include_vk_force {
        let total = airy.add(&params.f0)?;
        let f = ops::vk_bracket(&state.u, &total)?.scale(-1.0);
        explicit = explicit.add(&f)?;
    }
    if let Some(src) = &opts.source {
        let s = src(state.t, grid);
        explicit = explicit.add(&s)?;
        work_field = work_field.add(&s)?;
    }

    let energy = energy::plate_energy_with_airy(state, params, &airy)?;
    Ok(LevelData {
        explicit,
        work_field,
        energy,
    })
}
