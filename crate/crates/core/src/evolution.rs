//! Time stepping of the filtered profile `gamma(x, v, t) = mu(x + t v, v, t)`.
//!
//! `gamma` is transported by the divergence-free field `(t E, -E)`, where
//! `E(x, v) = grad phi(x + t v, t)`: along characteristics
//! `dx/dt = t E`, `dv/dt = -E`. Each step is a semi-Lagrangian gather at the
//! backward characteristic feet, with the field frozen at the midpoint time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, EnergyParams, FieldNorms};
use crate::error::{Result, SvpError};
use crate::numerics::spline::{self, SplineAxis, TensorSpline};
use crate::phase_space::{self, density, density_filtered, Frame, PhaseGrid, PhaseProfile};
use crate::screened_poisson::{grow_domain, solve_screened, ScreenedSolution, SpatialGrid};

/// Numerical tolerances shared by the solver stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub boundary_tol: f64,
    pub interp_tol: f64,
    pub spectral_roundoff: f64,
    pub padding_cells: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            boundary_tol: 1e-10,
            interp_tol: 1e-6,
            spectral_roundoff: 1e-12,
            padding_cells: crate::screened_poisson::PADDING_CELLS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FilteredStrang,
    PhysicalReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPlan {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    #[serde(default = "default_cadence")]
    pub field_cadence: usize,
}

fn default_cadence() -> usize {
    1
}

impl StepPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SvpError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SvpError::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.t_end < self.dt {
            return Err(SvpError::Config("t_end must be at least dt".into()));
        }
        if self.field_cadence == 0 {
            return Err(SvpError::Config("field_cadence must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Force field `grad phi(., t)` on a spatial grid, with spline interpolants.
pub struct Field {
    pub t: f64,
    pub solution: ScreenedSolution,
    axes: Vec<SplineAxis>,
    comps: Vec<TensorSpline>,
}

impl Field {
    fn from_solution(t: f64, solution: ScreenedSolution) -> Self {
        let g = *solution.grid();
        let axis = SplineAxis::periodic(g.n, g.coord(0), g.h());
        let axes = vec![axis; g.d];
        let comps = (0..g.d)
            .map(|k| {
                let f = solution.gradient_derivative(&vec![0; g.d], k).expect("first derivative");
                TensorSpline::new(&f.values, &axes)
            })
            .collect();
        Self {
            t,
            solution,
            axes,
            comps,
        }
    }

    /// Field generated by a filtered profile at time `t`, on the grown grid `Omega_t`.
    pub fn from_filtered(gamma: &PhaseProfile, t: f64, tol: &Tolerances) -> Result<Self> {
        let omega = domain_for(&gamma.grid, t);
        let rho = density_filtered(gamma, t, &omega, tol.boundary_tol)?;
        let sol = solve_screened(&rho, tol.padding_cells, tol.boundary_tol)?;
        Ok(Self::from_solution(t, sol))
    }

    /// Field generated by a physical profile, on its own spatial box.
    pub fn from_physical(mu: &PhaseProfile, tol: &Tolerances) -> Result<Self> {
        let rho = density(mu)?;
        let sol = solve_screened(&rho, tol.padding_cells, tol.boundary_tol)?;
        Ok(Self::from_solution(mu.time, sol))
    }

    pub fn grid(&self) -> SpatialGrid {
        *self.solution.grid()
    }

    #[inline]
    pub fn eval(&self, y: [f64; 2]) -> [f64; 2] {
        let d = self.axes.len();
        let mut w = [[0.0f64; 4]; 4];
        let mut off = [[0usize; 4]; 4];
        let strides = self.comps[0].strides();
        for a in 0..d {
            let (wa, ia) = self.axes[a].taps(y[a]);
            for k in 0..4 {
                w[a][k] = wa[k];
                off[a][k] = ia[k].map_or(0, |j| j * strides[a]);
            }
        }
        let mut out = [0.0; 2];
        for (k, c) in self.comps.iter().enumerate() {
            out[k] = spline::gather(c.coefficients(), d, &w, &off);
        }
        out
    }

    pub fn norms(&self) -> FieldNorms {
        diagnostics::field_norms(&self.solution)
    }
}

/// The grown spatial grid used for the density of a filtered profile at time `t`.
pub fn domain_for(grid: &PhaseGrid, t: f64) -> SpatialGrid {
    grow_domain(t, grid.lv, &grid.spatial())
}

/// `grad phi(x + t v, t)` at every phase-space grid point.
pub struct ForceSample {
    pub t: f64,
    /// `values[(ix * nv^d + iv) * d + k]`.
    pub values: Vec<f64>,
}

impl ForceSample {
    pub fn max_abs(&self) -> f64 {
        crate::numerics::sum::max_abs(&self.values)
    }
}

pub fn force_at_phase_points(gamma: &PhaseProfile, t: f64, tol: &Tolerances) -> Result<ForceSample> {
    gamma.expect_frame(Frame::Filtered)?;
    let g = gamma.grid;
    let d = g.d;
    if gamma.is_zero() {
        return Ok(ForceSample {
            t,
            values: vec![0.0; g.len() * d],
        });
    }
    let field = Field::from_filtered(gamma, t, tol)?;
    let nvd = g.n_vel();
    let mut values = vec![0.0; g.len() * d];
    values.par_chunks_mut(d).enumerate().for_each(|(k, out)| {
        let x = g.x_point(k / nvd);
        let v = g.v_point(k % nvd);
        let f = field.eval([x[0] + t * v[0], x[1] + t * v[1]]);
        out.copy_from_slice(&f[..d]);
    });
    Ok(ForceSample { t, values })
}

/// Cubic interpolant of a filtered profile: periodic in `x`, not-a-knot in `v`
/// (zero beyond the velocity box).
fn profile_spline(p: &PhaseProfile) -> TensorSpline {
    let g = p.grid;
    let xa = SplineAxis::periodic(g.nx, g.x(0), g.dx());
    let va = SplineAxis::not_a_knot(g.nv, g.v(0), g.dv());
    let mut axes = vec![xa; g.d];
    axes.extend(std::iter::repeat_n(va, g.d));
    TensorSpline::new(&p.values, &axes)
}

/// Semi-Lagrangian gather over a step of length `h`, with the transport field
/// `(mult E(x + s v), -E(x + s v))` and `s = sample_time`. With `refine`, the
/// field is re-evaluated once at the midpoint of the backward characteristic.
fn advect(src: &TensorSpline, grid: &PhaseGrid, field: &Field, h: f64, mult: f64, sample_time: f64, refine: bool) -> Vec<f64> {
    let d = grid.d;
    let nvd = grid.n_vel();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(nvd).enumerate().for_each(|(ix, row)| {
        let x = grid.x_point(ix);
        let mut z = [0.0; 4];
        for (iv, slot) in row.iter_mut().enumerate() {
            let v = grid.v_point(iv);
            let mut e = field.eval([x[0] + sample_time * v[0], x[1] + sample_time * v[1]]);
            if refine {
                let mut xm = [0.0; 2];
                for a in 0..d {
                    xm[a] = x[a] - 0.5 * h * mult * e[a] + sample_time * (v[a] + 0.5 * h * e[a]);
                }
                e = field.eval(xm);
            }
            for a in 0..d {
                z[a] = x[a] - h * mult * e[a];
                z[d + a] = v[a] + h * e[a];
            }
            *slot = src.eval(&z[..2 * d]);
        }
    });
    out
}

/// Second-order step `gamma(t) -> gamma(t + dt)`.
///
/// A predictor half step with the field at `t` produces the midpoint state,
/// whose field (at `t + dt/2`) drives the full backward-characteristic update.
/// Also returns the midpoint field, for reuse under a field cadence > 1.
pub fn strang_step_full(gamma: &PhaseProfile, t: f64, dt: f64, tol: &Tolerances, field_now: Option<&Field>) -> Result<(PhaseProfile, Option<Field>)> {
    gamma.expect_frame(Frame::Filtered)?;
    phase_space::pad_guard(gamma, tol.boundary_tol)?;
    let mut next = gamma.clone();
    next.time = t + dt;
    if gamma.is_zero() {
        return Ok((next, None));
    }
    let g = gamma.grid;
    let tau = t + 0.5 * dt;
    let owned;
    let field_now = match field_now {
        Some(f) => f,
        None => {
            owned = Field::from_filtered(gamma, t, tol)?;
            &owned
        }
    };
    let src = profile_spline(gamma);
    let mut half = gamma.clone();
    half.values = advect(&src, &g, field_now, 0.5 * dt, tau, t, false);
    half.time = tau;
    let mid = Field::from_filtered(&half, tau, tol)?;
    next.values = advect(&src, &g, &mid, dt, tau, tau, true);
    Ok((next, Some(mid)))
}

pub fn strang_step(gamma: &PhaseProfile, t: f64, dt: f64, tol: &Tolerances) -> Result<PhaseProfile> {
    Ok(strang_step_full(gamma, t, dt, tol, None)?.0)
}

/// Step with a previously computed field held fixed (field cadence > 1).
pub fn frozen_step(gamma: &PhaseProfile, t: f64, dt: f64, tol: &Tolerances, field: &Field) -> Result<PhaseProfile> {
    gamma.expect_frame(Frame::Filtered)?;
    phase_space::pad_guard(gamma, tol.boundary_tol)?;
    let mut next = gamma.clone();
    next.time = t + dt;
    if gamma.is_zero() {
        return Ok(next);
    }
    let tau = t + 0.5 * dt;
    let src = profile_spline(gamma);
    next.values = advect(&src, &gamma.grid, field, dt, tau, tau, true);
    Ok(next)
}

/// Classical split step for `mu` (d = 1): half free streaming, a velocity kick
/// `mu(x, v + E(x) dt)`, half free streaming.
pub fn reference_physical_step(mu: &PhaseProfile, t: f64, dt: f64, tol: &Tolerances) -> Result<PhaseProfile> {
    mu.expect_frame(Frame::Physical)?;
    let g = mu.grid;
    if g.d != 1 {
        return Err(SvpError::Precondition("the physical reference integrator is one-dimensional".into()));
    }
    phase_space::pad_guard(mu, tol.boundary_tol)?;
    let mut half = mu.clone();
    half.values = phase_space::shear(&g, &mu.values, -0.5 * dt);
    half.time = t + 0.5 * dt;
    if !half.is_zero() {
        let field = Field::from_physical(&half, tol)?;
        let kick = field.solution.gradient_derivative(&[0], 0)?;
        let solver = spline::NotAKnotSolver::new(g.nv);
        let va = SplineAxis::not_a_knot(g.nv, g.v(0), g.dv());
        let nv = g.nv;
        let src = half.values.clone();
        half.values.par_chunks_mut(nv).enumerate().for_each(|(ix, row)| {
            let mut c = vec![0.0; nv + 2];
            solver.solve(&src[ix * nv..(ix + 1) * nv], &mut c);
            let line = TensorSpline::from_coefficients(c, &[nv + 2], &[va]);
            let shift = kick.values[ix] * dt;
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = line.eval(&[g.v(j) + shift]);
            }
        });
    }
    let mut out = half.clone();
    out.values = phase_space::shear(&g, &half.values, -0.5 * dt);
    out.time = t + dt;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub plan: StepPlan,
    pub tol: Tolerances,
    /// Record diagnostics every this many steps (and always at the last step).
    pub record_every: usize,
    /// Times at which the state is handed to the sink as a snapshot.
    pub snapshot_times: Vec<f64>,
    pub energy: EnergyParams,
    pub moment_order: f64,
}

pub enum RunEvent<'a> {
    Record(&'a DiagnosticsRecord),
    Snapshot(&'a PhaseProfile),
}

fn field_for(state: &PhaseProfile, t: f64, tol: &Tolerances) -> Result<Option<Field>> {
    if state.is_zero() {
        return Ok(None);
    }
    match state.frame {
        Frame::Filtered => Field::from_filtered(state, t, tol).map(Some),
        Frame::Physical => Field::from_physical(state, tol).map(Some),
    }
}

/// Integrate from `initial` (at `initial.time`, a multiple of `dt`) to `t_end`.
///
/// Times are always `n * dt` for integer `n`, so resuming from a saved state
/// reproduces the uninterrupted trajectory exactly. Records and snapshots are
/// pushed to `sink` as they are produced; on error, everything emitted so far
/// has already been delivered.
pub fn run(initial: PhaseProfile, opts: &RunOptions, sink: &mut dyn FnMut(RunEvent) -> Result<()>) -> Result<PhaseProfile> {
    let plan = opts.plan;
    plan.validate()?;
    let expected = match plan.scheme {
        Scheme::FilteredStrang => Frame::Filtered,
        Scheme::PhysicalReference => Frame::Physical,
    };
    initial.expect_frame(expected)?;
    let dt = plan.dt;
    let n0 = (initial.time / dt).round() as usize;
    let n_end = plan.steps();
    let record_every = opts.record_every.max(1);
    let mut state = initial;
    let mut midfield: Option<Field> = None;
    let mut n = n0;
    loop {
        let t = n as f64 * dt;
        state.time = t;
        let last = n >= n_end;
        let record_due = n % record_every == 0 || last;
        let needs_field = plan.scheme == Scheme::FilteredStrang && (n - n0) % plan.field_cadence == 0 && !last;
        let field = if record_due || needs_field { field_for(&state, t, &opts.tol)? } else { None };
        if record_due {
            let norms = field.as_ref().map(Field::norms).unwrap_or_default();
            let rec = diagnostics::record(&state, t, norms, opts.moment_order, &opts.energy);
            sink(RunEvent::Record(&rec))?;
        }
        if opts.snapshot_times.iter().any(|&s| (s - t).abs() < 0.5 * dt) {
            sink(RunEvent::Snapshot(&state))?;
        }
        if last {
            break;
        }
        state = match plan.scheme {
            Scheme::PhysicalReference => reference_physical_step(&state, t, dt, &opts.tol)?,
            Scheme::FilteredStrang => {
                match &midfield {
                    Some(mid) if (n - n0) % plan.field_cadence != 0 => frozen_step(&state, t, dt, &opts.tol, mid)?,
                    _ => {
                        let (next, mid) = strang_step_full(&state, t, dt, &opts.tol, field.as_ref())?;
                        midfield = mid;
                        next
                    }
                }
            }
        };
        n += 1;
    }
    state.time = n_end as f64 * dt;
    Ok(state)
}
