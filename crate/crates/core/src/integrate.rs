//! Explicit SSP-RK3 time stepping, stability-limited step size, and the
//! trajectory driver that accumulates the running audit integrals.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, AuditRecord, Rates};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::scheme::{boundary_power, rhs_with, total_energy, Forcing, StateDerivative};
use crate::state::{validate_state, FluidState, GasParams, MassGrid, ProblemSetup, DEFAULT_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    pub cfl_hyperbolic: f64,
    pub cfl_parabolic: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub positivity_floor: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl_hyperbolic: 0.5,
            cfl_parabolic: 0.4,
            dt_min: 1e-12,
            dt_max: 0.05,
            positivity_floor: DEFAULT_FLOOR,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        for (key, f) in [
            ("step.cfl_hyperbolic", self.cfl_hyperbolic),
            ("step.cfl_parabolic", self.cfl_parabolic),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config(key, format!("must lie in (0, 1], got {f}")));
            }
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::config(
                "step.dt_min",
                format!(
                    "need 0 < dt_min <= dt_max, got dt_min = {}, dt_max = {}",
                    self.dt_min, self.dt_max
                ),
            ));
        }
        if !(self.positivity_floor > 0.0) {
            return Err(Error::config(
                "step.positivity_floor",
                format!("must be positive, got {}", self.positivity_floor),
            ));
        }
        Ok(())
    }
}

/// Unclamped stability limit: the smaller of the acoustic and the diffusive
/// restriction over all cells.
pub fn stability_limit(
    state: &FluidState,
    grid: &MassGrid,
    params: &GasParams,
    ctrl: &StepControl,
) -> f64 {
    let dm = grid.dm;
    let gamma = params.gamma();
    state
        .v
        .iter()
        .zip(&state.theta)
        .map(|(&v, &theta)| {
            let c = (params.r * theta * gamma).sqrt() / v;
            let diff = (params.mu / v).max(params.kappa / (params.c_v * v));
            let hyper = ctrl.cfl_hyperbolic * dm / c;
            let para = ctrl.cfl_parabolic * dm * dm / (2.0 * diff);
            hyper.min(para)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Stable step clamped to `[dt_min, dt_max]`.
pub fn stable_dt(
    state: &FluidState,
    grid: &MassGrid,
    params: &GasParams,
    ctrl: &StepControl,
) -> Result<f64> {
    let dt = stability_limit(state, grid, params, ctrl);
    if !(dt >= ctrl.dt_min) {
        return Err(Error::Stiffness {
            t: state.t,
            dt,
            dt_min: ctrl.dt_min,
        });
    }
    Ok(dt.min(ctrl.dt_max))
}

/// Everything the stepper needs besides the state itself.
#[derive(Clone, Copy)]
pub struct Model<'a> {
    pub grid: &'a MassGrid,
    pub params: &'a GasParams,
    pub setup: ProblemSetup,
    pub ctrl: &'a StepControl,
    pub forcing: Option<&'a dyn Forcing>,
    pub exec: Exec,
}

impl<'a> Model<'a> {
    pub fn new(
        grid: &'a MassGrid,
        params: &'a GasParams,
        setup: ProblemSetup,
        ctrl: &'a StepControl,
    ) -> Self {
        Model {
            grid,
            params,
            setup,
            ctrl,
            forcing: None,
            exec: Exec::Auto,
        }
    }

    pub fn with_forcing(mut self, forcing: &'a dyn Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn eval(&self, state: &FluidState, t: f64) -> Result<StateDerivative> {
        let src = self.forcing.map(|f| f.sources(self.grid, t));
        rhs_with(
            state,
            self.grid,
            self.params,
            self.setup,
            src.as_ref(),
            self.exec,
        )
    }

    fn power(&self, state: &FluidState) -> f64 {
        boundary_power(state, self.grid, self.params, self.setup)
    }
}

/// `base * a + (stage + dt * d) * b`, field by field.
#[allow(clippy::too_many_arguments)]
fn combine(
    exec: Exec,
    base: &FluidState,
    a: f64,
    stage: &FluidState,
    d: &StateDerivative,
    dt: f64,
    b: f64,
    t: f64,
) -> FluidState {
    let mix = |x: &[f64], y: &[f64], dy: &[f64]| {
        exec.vec(x.len(), |i| a * x[i] + b * (y[i] + dt * dy[i]))
    };
    FluidState {
        t,
        v: mix(&base.v, &stage.v, &d.dv),
        u: mix(&base.u, &stage.u, &d.du),
        theta: mix(&base.theta, &stage.theta, &d.dtheta),
    }
}

/// One step plus the boundary work done over it, integrated with the same
/// stage weights as the update.
fn step_with_work(model: &Model<'_>, state: &FluidState, dt: f64) -> Result<(FluidState, f64)> {
    let floor = model.ctrl.positivity_floor;
    let t = state.t;
    let check = |s: &FluidState, stage: usize| {
        validate_state(s, floor).map_err(|violation| Error::Integration {
            t,
            stage,
            violation,
        })
    };
    check(state, 0)?;
    let ex = model.exec;

    let d0 = model.eval(state, t)?;
    let s1 = combine(ex, state, 0.0, state, &d0, dt, 1.0, t + dt);
    check(&s1, 1)?;

    let d1 = model.eval(&s1, t + dt)?;
    let s2 = combine(ex, state, 0.75, &s1, &d1, dt, 0.25, t + 0.5 * dt);
    check(&s2, 2)?;

    let d2 = model.eval(&s2, t + 0.5 * dt)?;
    let s3 = combine(ex, state, 1.0 / 3.0, &s2, &d2, dt, 2.0 / 3.0, t + dt);
    check(&s3, 3)?;

    let work =
        dt * (model.power(state) / 6.0 + model.power(&s1) / 6.0 + 2.0 * model.power(&s2) / 3.0);
    Ok((s3, work))
}

/// Advances `state` by `dt` with the three-stage strong-stability-preserving
/// Runge-Kutta scheme. Every stage is checked for positivity.
pub fn step(model: &Model<'_>, state: &FluidState, dt: f64) -> Result<FluidState> {
    step_with_work(model, state, dt).map(|(s, _)| s)
}

/// A trajectory with its running space-time integrals.
pub struct Trajectory<'a> {
    pub model: Model<'a>,
    pub levels: Vec<f64>,
    state: FluidState,
    rates: Rates,
    cum_d: f64,
    cum_df8: f64,
    cum_z4: f64,
    energy0: f64,
    boundary_work: f64,
    steps: u64,
}

/// Relative slack when deciding that a step lands on a target time.
const LANDING_SLACK: f64 = 1e-12;

impl<'a> Trajectory<'a> {
    pub fn new(model: Model<'a>, state: FluidState, levels: &[f64]) -> Result<Self> {
        state.check_shape(model.grid)?;
        let rates = diagnostics::rates(&state, model.params, model.grid)?;
        let energy0 = total_energy(&state, model.grid, model.params);
        Ok(Trajectory {
            model,
            levels: levels.to_vec(),
            state,
            rates,
            cum_d: 0.0,
            cum_df8: 0.0,
            cum_z4: 0.0,
            energy0,
            boundary_work: 0.0,
            steps: 0,
        })
    }

    pub fn state(&self) -> &FluidState {
        &self.state
    }

    pub fn into_state(self) -> FluidState {
        self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Total-energy drift net of boundary work, relative to the initial
    /// total energy.
    pub fn energy_balance_residual(&self) -> f64 {
        let now = total_energy(&self.state, self.model.grid, self.model.params);
        (now - self.energy0 - self.boundary_work) / self.energy0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn record(&self) -> Result<AuditRecord> {
        Ok(AuditRecord {
            t: self.state.t,
            now: diagnostics::evaluate(
                &self.state,
                self.model.params,
                self.model.grid,
                &self.levels,
            )?,
            cum_d: self.cum_d,
            cum_df8: self.cum_df8,
            cum_z4: self.cum_z4,
            energy_balance_residual: self.energy_balance_residual(),
        })
    }

    /// Takes one stable step, truncated so as not to pass `target`.
    pub fn step_towards(&mut self, target: f64) -> Result<()> {
        let m = &self.model;
        let t = self.state.t;
        let mut dt = stable_dt(&self.state, m.grid, m.params, m.ctrl)?;
        let landing = t + dt >= target - LANDING_SLACK * target.abs().max(1.0);
        if landing {
            dt = target - t;
        }
        let (mut next, work) = step_with_work(m, &self.state, dt)?;
        if landing {
            next.t = target;
        }
        let rates = diagnostics::rates(&next, m.params, m.grid)?;
        self.cum_d += 0.5 * (self.rates.dissipation + rates.dissipation) * dt;
        self.cum_df8 += 0.5 * (self.rates.df8 + rates.df8) * dt;
        self.cum_z4 += 0.5 * (self.rates.z4 + rates.z4) * dt;
        self.boundary_work += work;
        self.rates = rates;
        self.state = next;
        self.steps += 1;
        Ok(())
    }

    /// Runs to `t_end`, emitting a record now, at every multiple of
    /// `cadence` after the current time, and at `t_end`. Steps land exactly
    /// on each emission time. `observe` sees every record with its state.
    pub fn advance_with<F>(
        &mut self,
        t_end: f64,
        cadence: f64,
        mut observe: F,
    ) -> Result<Vec<AuditRecord>>
    where
        F: FnMut(&FluidState, &AuditRecord),
    {
        let t0 = self.state.t;
        if !(t_end >= t0) {
            return Err(Error::Domain(format!(
                "t_end = {t_end} precedes the current time {t0}"
            )));
        }
        if !(cadence > 0.0) {
            return Err(Error::config(
                "cadence",
                format!("must be positive, got {cadence}"),
            ));
        }
        let mut records = Vec::new();
        let mut emit = |traj: &Self, records: &mut Vec<AuditRecord>| -> Result<()> {
            let rec = traj.record()?;
            observe(&traj.state, &rec);
            records.push(rec);
            Ok(())
        };
        emit(self, &mut records)?;
        let mut k = 1u64;
        while self.state.t < t_end {
            let target = (t0 + k as f64 * cadence).min(t_end);
            while self.state.t < target {
                self.step_towards(target)?;
            }
            emit(self, &mut records)?;
            k += 1;
        }
        Ok(records)
    }

    pub fn advance(&mut self, t_end: f64, cadence: f64) -> Result<Vec<AuditRecord>> {
        self.advance_with(t_end, cadence, |_, _| {})
    }
}

/// Runs a fresh trajectory from `state` to `t_end`.
pub fn advance(
    model: Model<'_>,
    state: FluidState,
    t_end: f64,
    cadence: f64,
    levels: &[f64],
) -> Result<(FluidState, Vec<AuditRecord>)> {
    let mut traj = Trajectory::new(model, state, levels)?;
    let records = traj.advance(t_end, cadence)?;
    Ok((traj.into_state(), records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{entropy_energy, DEFAULT_EXCESS_LEVELS};
    use crate::state::{make_grid, steady_state, SetupKind};
    use approx::assert_relative_eq;

    fn bump(grid: &MassGrid, wall: bool) -> FluidState {
        let mut s = steady_state(grid);
        for (j, x) in grid.cell_centers().into_iter().enumerate() {
            s.v[j] = 1.0 + 0.3 * (-(x - 2.0).powi(2)).exp();
            s.theta[j] = 1.0 + 0.4 * (-(x - 2.5).powi(2)).exp();
        }
        for (i, x) in grid.nodes().into_iter().enumerate() {
            s.u[i] = 0.2 * (x - 2.0) * (-(x - 2.0).powi(2)).exp();
        }
        if wall {
            s.u[0] = 0.0;
        }
        s
    }

    #[test]
    fn stable_dt_example() {
        let g = MassGrid::new(0.0, 1.0, 10).unwrap();
        let ctrl = StepControl {
            cfl_hyperbolic: 0.4,
            cfl_parabolic: 0.4,
            ..Default::default()
        };
        let p = GasParams::default();
        let s = steady_state(&g);
        let expected = (0.4 * 0.1 / 2f64.sqrt()).min(0.4 * 0.01 / 2.0);
        assert_relative_eq!(expected, 0.002, max_relative = 1e-12);
        assert_relative_eq!(
            stable_dt(&s, &g, &p, &ctrl).unwrap(),
            0.002,
            max_relative = 1e-12
        );

        let g2 = MassGrid::new(0.0, 1.0, 20).unwrap();
        let dt2 = stable_dt(&steady_state(&g2), &g2, &p, &ctrl).unwrap();
        assert_relative_eq!(dt2, 0.002 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn stiffness_error_on_tiny_temperature() {
        let g = MassGrid::new(0.0, 1.0, 10).unwrap();
        let mut s = steady_state(&g);
        s.v[3] = 1e-9;
        let ctrl = StepControl {
            dt_min: 1e-6,
            ..Default::default()
        };
        let err = stable_dt(&s, &g, &GasParams::default(), &ctrl).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }));
        assert!(err.failure_time().is_some());
    }

    #[test]
    fn step_keeps_steady_state() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        for kind in SetupKind::ALL {
            let g = make_grid(kind.into(), 4.0, 32).unwrap();
            let m = Model::new(&g, &p, kind.into(), &ctrl);
            let s = steady_state(&g);
            let next = step(&m, &s, 0.37).unwrap();
            assert_eq!((next.v, next.u, next.theta), (s.v, s.u, s.theta));
        }
    }

    #[test]
    fn positivity_failure_names_stage() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::Cauchy.into();
        let g = make_grid(setup, 4.0, 32).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let mut s = steady_state(&g);
        s.u[10] = 50.0;
        let err = step(&m, &s, 1.0).unwrap_err();
        match err {
            Error::Integration { stage, .. } => assert!((1..=3).contains(&stage)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn entropy_does_not_grow_after_velocity_reversal() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::HalfLineInsulated.into();
        let g = make_grid(setup, 8.0, 64).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let s0 = bump(&g, true);
        let e0 = entropy_energy(&s0, &p, &g).unwrap();
        let dt = stable_dt(&s0, &g, &p, &ctrl).unwrap();
        let mut s1 = step(&m, &s0, dt).unwrap();
        s1.u.iter_mut().for_each(|u| *u = -*u);
        let s2 = step(&m, &s1, dt).unwrap();
        assert_ne!(s2.v, s0.v);
        let e2 = entropy_energy(&s2, &p, &g).unwrap();
        assert!(e2 <= e0 * (1.0 + 1e-8), "{e2} > {e0}");
    }

    #[test]
    fn steady_advance_records_zero() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::Cauchy.into();
        let g = make_grid(setup, 4.0, 32).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let mut traj = Trajectory::new(m, steady_state(&g), &DEFAULT_EXCESS_LEVELS).unwrap();
        let recs = traj.advance(1.0, 0.25).unwrap();
        assert_eq!(recs.len(), 5);
        assert_eq!(recs.last().unwrap().t, 1.0);
        for r in &recs {
            assert_eq!(
                (r.now.entropy, r.now.d_visc, r.now.d_heat, r.cum_d),
                (0.0, 0.0, 0.0, 0.0)
            );
            assert_eq!(r.energy_balance_residual, 0.0);
        }
        let again = traj.advance(1.0, 0.25).unwrap();
        assert_eq!(again.len(), 1);
        assert_eq!(traj.state().t, 1.0);
        assert!(traj.advance(0.5, 0.25).is_err());
    }

    #[test]
    fn lands_exactly_on_t_end() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::HalfLineIsothermal.into();
        let g = make_grid(setup, 8.0, 64).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let (s, recs) = advance(m, bump(&g, true), 0.3337, 0.1, &[2.0]).unwrap();
        assert_eq!(s.t, 0.3337);
        let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 5);
        assert_relative_eq!(ts[1], 0.1, max_relative = 1e-15);
        assert_eq!(*ts.last().unwrap(), 0.3337);
        assert_eq!(s.u[0], 0.0);
    }

    #[test]
    fn running_integrals_are_monotone_and_entropy_decays() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::HalfLineInsulated.into();
        let g = make_grid(setup, 12.0, 96).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let mut traj = Trajectory::new(m, bump(&g, true), &[2.0]).unwrap();
        let e0 = entropy_energy(traj.state(), &p, &g).unwrap();
        let tol = 1e-8 * (1.0 + e0);
        let mut prev = e0;
        for _ in 0..400 {
            traj.step_towards(f64::INFINITY).unwrap();
            let e = entropy_energy(traj.state(), &p, &g).unwrap();
            assert!(e <= prev + tol, "entropy grew: {prev} -> {e}");
            prev = e;
        }
        let recs = traj.advance(traj.state().t + 1.0, 0.1).unwrap();
        for w in recs.windows(2) {
            assert!(w[1].cum_d >= w[0].cum_d);
            assert!(w[1].cum_df8 >= w[0].cum_df8);
            assert!(w[1].cum_z4 >= w[0].cum_z4);
        }
    }

    #[test]
    fn step_halving_is_third_order() {
        // dt_max well under the stability limit so it alone sets the step.
        let p = GasParams::default();
        let setup = SetupKind::Cauchy.into();
        let g = make_grid(setup, 6.0, 48).unwrap();
        let s0 = {
            let mut s = steady_state(&g);
            for (j, x) in g.cell_centers().into_iter().enumerate() {
                s.theta[j] = 1.0 + 0.3 * (-x * x).exp();
            }
            s
        };
        let run = |dt_max: f64| {
            let ctrl = StepControl {
                dt_max,
                ..Default::default()
            };
            let m = Model::new(&g, &p, setup, &ctrl);
            advance(m, s0.clone(), 0.5, 0.5, &[]).unwrap().0
        };
        let dts = [0.004, 0.002, 0.001];
        let finals: Vec<FluidState> = dts.iter().map(|&d| run(d)).collect();
        let diff = |a: &FluidState, b: &FluidState| {
            a.v.iter()
                .zip(&b.v)
                .chain(a.theta.iter().zip(&b.theta))
                .chain(a.u.iter().zip(&b.u))
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let d1 = diff(&finals[0], &finals[1]);
        let d2 = diff(&finals[1], &finals[2]);
        let ratio = d1 / d2;
        assert!(ratio > 6.0 && ratio < 10.0, "ratio {ratio}");
    }

    #[test]
    fn deterministic_trajectories() {
        let p = GasParams::default();
        let ctrl = StepControl::default();
        let setup = SetupKind::Cauchy.into();
        let g = make_grid(setup, 6.0, 64).unwrap();
        let m = Model::new(&g, &p, setup, &ctrl);
        let a = advance(m, bump(&g, false), 0.5, 0.1, &[1.5]).unwrap();
        let b = advance(
            m.with_exec(Exec::Sequential),
            bump(&g, false),
            0.5,
            0.1,
            &[1.5],
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
