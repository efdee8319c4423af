use serde::Serialize;

use super::mms::{ManufacturedSolution, MmsForcing, MMS_HALF_LENGTH};
use crate::error::{Error, Result};
use crate::exec::map_jobs;
use crate::integrate::{Model, StepControl, Trajectory};
use crate::state::{make_grid, FluidState, GasParams, MassGrid, ProblemSetup};

/// Minimum fitted order accepted for a second-order scheme.
pub const ORDER_THRESHOLD: f64 = 1.9;

/// Errors below this are round-off; no order is fitted from them.
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionError {
    pub n: usize,
    pub dm: f64,
    pub steps: usize,
    pub err_v: f64,
    pub err_u: f64,
    pub err_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub setup: String,
    pub t_end: f64,
    pub rows: Vec<ResolutionError>,
    /// Fitted orders for `(v, u, theta)`; `None` when the errors are at
    /// round-off level (steady solution).
    pub orders: Option<[f64; 3]>,
    pub threshold: f64,
    pub pass: bool,
}

/// Least-squares slope of `log err` against `log dm`.
pub fn fit_order(dm: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = dm.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn sample(ms: &ManufacturedSolution, grid: &MassGrid, t: f64) -> FluidState {
    let centers = grid.cell_centers();
    FluidState {
        t,
        v: centers.iter().map(|&x| ms.eval(x, t).v).collect(),
        u: grid.nodes().into_iter().map(|x| ms.eval(x, t).u).collect(),
        theta: centers.iter().map(|&x| ms.eval(x, t).theta).collect(),
    }
}

fn l2_diff(a: &[f64], b: &[f64], dm: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dm).sqrt()
}

/// Runs the forced problem from the sampled exact solution to `t_end` on
/// each resolution and measures the L2 error of every field.
pub fn convergence_study(
    ms: &ManufacturedSolution,
    setup: ProblemSetup,
    params: &GasParams,
    ctrl: &StepControl,
    n_list: &[usize],
    t_end: f64,
) -> Result<ConvergenceReport> {
    if n_list.len() < 3 {
        return Err(Error::config(
            "n_list",
            format!("need at least 3 resolutions, got {}", n_list.len()),
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            "n_list",
            "resolutions must be strictly increasing",
        ));
    }
    if !(t_end > 0.0) {
        return Err(Error::config(
            "t_end",
            format!("must be positive, got {t_end}"),
        ));
    }
    let grids = n_list
        .iter()
        .map(|&n| make_grid(setup, MMS_HALF_LENGTH, n))
        .collect::<Result<Vec<_>>>()?;
    let forcing = MmsForcing {
        ms: *ms,
        params: *params,
    };
    let rows = map_jobs(grids, |grid| -> Result<ResolutionError> {
        let model = Model::new(&grid, params, setup, ctrl).with_forcing(&forcing);
        let start = sample(ms, &grid, 0.0);
        let mut traj = Trajectory::new(model, start, &[])?;
        while traj.state().t < t_end {
            traj.step_towards(t_end)?;
        }
        let exact = sample(ms, &grid, t_end);
        let got = traj.state();
        Ok(ResolutionError {
            n: grid.n_cells,
            dm: grid.dm,
            steps: traj.steps() as usize,
            err_v: l2_diff(&got.v, &exact.v, grid.dm),
            err_u: l2_diff(&got.u, &exact.u, grid.dm),
            err_theta: l2_diff(&got.theta, &exact.theta, grid.dm),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let worst = rows
        .iter()
        .map(|r| r.err_v.max(r.err_u).max(r.err_theta))
        .fold(0.0, f64::max);
    let orders = (worst > ROUNDOFF).then(|| {
        let dm: Vec<f64> = rows.iter().map(|r| r.dm).collect();
        let fit = |f: fn(&ResolutionError) -> f64| {
            fit_order(&dm, &rows.iter().map(f).collect::<Vec<_>>())
        };
        [fit(|r| r.err_v), fit(|r| r.err_u), fit(|r| r.err_theta)]
    });
    let pass = orders.is_none_or(|o| o.iter().all(|&p| p >= ORDER_THRESHOLD));
    Ok(ConvergenceReport {
        setup: setup.kind.to_string(),
        t_end,
        rows,
        orders,
        threshold: ORDER_THRESHOLD,
        pass,
    })
}
