//! Functionals audited along a trajectory: the entropy-energy and its two
//! dissipation rates, field bounds, deviation norms from `(1, 0, 1)`,
//! derivative norms, and the super-level-set excess of the temperature.
//!
//! Derivatives are divided differences at their natural stagger location,
//! using interior data only (no ghost values), so every diagnostic depends on
//! the state and grid alone. `u` is averaged to cell centers wherever it is
//! combined with cell quantities.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::strain_rate;
use crate::state::{FluidState, GasParams, MassGrid};

/// Default levels `a` for the truncated excess `int (theta - a)_+^2`.
pub const DEFAULT_EXCESS_LEVELS: [f64; 3] = [1.5, 2.0, 3.0];

/// Level used for the sup-excess column.
pub const SUP_EXCESS_LEVEL: f64 = 1.5;

fn require_positive(state: &FluidState) -> Result<()> {
    let bad = state.v.iter().chain(&state.theta).find(|&&x| !(x > 0.0));
    match bad {
        Some(x) => Err(Error::Domain(format!(
            "diagnostic needs positive v and theta, found {x}"
        ))),
        None => Ok(()),
    }
}

fn phi(s: f64) -> f64 {
    s - s.ln() - 1.0
}

/// `int [u^2/2 + R (v - ln v - 1) + c_v (theta - ln theta - 1)]` by the
/// midpoint rule.
pub fn entropy_energy(state: &FluidState, params: &GasParams, grid: &MassGrid) -> Result<f64> {
    require_positive(state)?;
    let sum: f64 = (0..state.n_cells())
        .map(|j| {
            let u = state.u_cell(j);
            0.5 * u * u + params.r * phi(state.v[j]) + params.c_v * phi(state.theta[j])
        })
        .sum();
    Ok(sum * grid.dm)
}

/// `(mu int u_x^2 / (v theta), kappa int theta_x^2 / (v theta^2))`, the second
/// over interior faces with arithmetic-mean face values.
pub fn dissipation_rates(
    state: &FluidState,
    params: &GasParams,
    grid: &MassGrid,
) -> Result<(f64, f64)> {
    require_positive(state)?;
    let dm = grid.dm;
    let strain = strain_rate(state, grid);
    let visc: f64 = strain
        .iter()
        .zip(state.v.iter().zip(&state.theta))
        .map(|(s, (v, t))| s * s / (v * t))
        .sum();
    let heat: f64 = (1..state.n_cells())
        .map(|i| {
            let tx = (state.theta[i] - state.theta[i - 1]) / dm;
            let vf = 0.5 * (state.v[i] + state.v[i - 1]);
            let tf = 0.5 * (state.theta[i] + state.theta[i - 1]);
            tx * tx / (vf * tf * tf)
        })
        .sum();
    Ok((params.mu * visc * dm, params.kappa * heat * dm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl FieldBounds {
    /// Smallest bracket containing both.
    pub fn hull(self, other: FieldBounds) -> FieldBounds {
        FieldBounds {
            v_min: self.v_min.min(other.v_min),
            v_max: self.v_max.max(other.v_max),
            theta_min: self.theta_min.min(other.theta_min),
            theta_max: self.theta_max.max(other.theta_max),
        }
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn field_bounds(state: &FluidState) -> FieldBounds {
    let (v_min, v_max) = min_max(&state.v);
    let (theta_min, theta_max) = min_max(&state.theta);
    FieldBounds {
        v_min,
        v_max,
        theta_min,
        theta_max,
    }
}

/// `||(v - 1, u, theta - 1)||_{L^p}` with `u` averaged to cells; pass
/// `f64::INFINITY` for the sup norm.
pub fn lp_deviation(state: &FluidState, grid: &MassGrid, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("L^p norm needs p > 1, got {p}")));
    }
    let n = state.n_cells();
    let devs = (0..n).map(|j| {
        (
            (state.v[j] - 1.0).abs(),
            state.u_cell(j).abs(),
            (state.theta[j] - 1.0).abs(),
        )
    });
    if p.is_infinite() {
        return Ok(devs.fold(0.0, |m, (a, b, c)| m.max(a).max(b).max(c)));
    }
    let sum: f64 = devs
        .map(|(a, b, c)| a.powf(p) + b.powf(p) + c.powf(p))
        .sum();
    Ok((sum * grid.dm).powf(1.0 / p))
}

/// L2 norms of first and second divided differences.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Seminorms {
    pub vx: f64,
    pub ux: f64,
    pub thetax: f64,
    pub uxx: f64,
    pub thetaxx: f64,
}

/// `(q[i] - q[i-1]) / dm` on the `n - 1` interior faces.
fn face_gradient(q: &[f64], dm: f64) -> Vec<f64> {
    q.windows(2).map(|w| (w[1] - w[0]) / dm).collect()
}

fn l2(xs: &[f64], dm: f64) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() * dm).sqrt()
}

pub fn h1_seminorms(state: &FluidState, grid: &MassGrid) -> Seminorms {
    let dm = grid.dm;
    let vx = face_gradient(&state.v, dm);
    let tx = face_gradient(&state.theta, dm);
    let ux = strain_rate(state, grid);
    // u_xx at interior nodes, theta_xx at cells with two interior faces.
    let uxx = face_gradient(&ux, dm);
    let txx = face_gradient(&tx, dm);
    Seminorms {
        vx: l2(&vx, dm),
        ux: l2(&ux, dm),
        thetax: l2(&tx, dm),
        uxx: l2(&uxx, dm),
        thetaxx: l2(&txx, dm),
    }
}

/// `(int (theta - a)_+^2, |{theta > a}|)` with the level set measured by
/// counting cells.
pub fn truncated_excess(state: &FluidState, grid: &MassGrid, a: f64) -> Result<(f64, f64)> {
    if !(a > 1.0) {
        return Err(Error::Domain(format!(
            "excess level must exceed 1, got {a}"
        )));
    }
    let (sq, count) = state.theta.iter().fold((0.0, 0usize), |(sq, c), &t| {
        let e = (t - a).max(0.0);
        (sq + e * e, c + usize::from(t > a))
    });
    Ok((sq * grid.dm, count as f64 * grid.dm))
}

/// `sup_x (theta - a)_+^2`.
pub fn sup_excess(state: &FluidState, a: f64) -> f64 {
    state
        .theta
        .iter()
        .map(|&t| (t - a).max(0.0).powi(2))
        .fold(0.0, f64::max)
}

/// Both sides of `sup w^2 <= 2 ||w|| ||w_x||` for a cell field that vanishes
/// beyond the right end: the gradient includes the closing difference to 0.
pub fn sup_embedding_check(field: &[f64], grid: &MassGrid) -> (f64, f64) {
    let dm = grid.dm;
    let lhs = field.iter().map(|w| w * w).fold(0.0, f64::max);
    let mut wx = face_gradient(field, dm);
    if let Some(&last) = field.last() {
        wx.push(-last / dm);
    }
    (lhs, 2.0 * l2(field, dm) * l2(&wx, dm))
}

/// Worst ratio `lhs / rhs` of [`sup_embedding_check`] over `v - 1`, cell `u`
/// and `theta - 1`; 0 for fields that vanish identically.
pub fn sup_embedding_ratio(state: &FluidState, grid: &MassGrid) -> f64 {
    let n = state.n_cells();
    let fields: [Vec<f64>; 3] = [
        state.v.iter().map(|v| v - 1.0).collect(),
        (0..n).map(|j| state.u_cell(j)).collect(),
        state.theta.iter().map(|t| t - 1.0).collect(),
    ];
    fields
        .iter()
        .map(|w| {
            let (lhs, rhs) = sup_embedding_check(w, grid);
            if lhs == 0.0 {
                0.0
            } else {
                lhs / rhs
            }
        })
        .fold(0.0, f64::max)
}

/// `int [(1 + theta + u^2) u_x^2 + theta_x^2]` at one instant.
pub fn df8_rate(state: &FluidState, grid: &MassGrid) -> f64 {
    let dm = grid.dm;
    let strain = strain_rate(state, grid);
    let cells: f64 = (0..state.n_cells())
        .map(|j| {
            let u = state.u_cell(j);
            (1.0 + state.theta[j] + u * u) * strain[j] * strain[j]
        })
        .sum();
    let faces: f64 = face_gradient(&state.theta, dm).iter().map(|x| x * x).sum();
    (cells + faces) * dm
}

/// `int (theta v_x^2 + u_xx^2 + theta_xx^2)` at one instant.
pub fn z4_rate(state: &FluidState, grid: &MassGrid) -> f64 {
    let dm = grid.dm;
    let vx = face_gradient(&state.v, dm);
    let weighted: f64 = vx
        .iter()
        .enumerate()
        .map(|(i, g)| 0.5 * (state.theta[i] + state.theta[i + 1]) * g * g)
        .sum();
    let s = h1_seminorms(state, grid);
    weighted * dm + s.uxx * s.uxx + s.thetaxx * s.thetaxx
}

/// `int u^4` with `u` averaged to cells.
pub fn u4_integral(state: &FluidState, grid: &MassGrid) -> f64 {
    (0..state.n_cells())
        .map(|j| state.u_cell(j).powi(4))
        .sum::<f64>()
        * grid.dm
}

/// Integrands of the running space-time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub dissipation: f64,
    pub df8: f64,
    pub z4: f64,
}

pub fn rates(state: &FluidState, params: &GasParams, grid: &MassGrid) -> Result<Rates> {
    let (visc, heat) = dissipation_rates(state, params, grid)?;
    Ok(Rates {
        dissipation: visc + heat,
        df8: df8_rate(state, grid),
        z4: z4_rate(state, grid),
    })
}

/// Instantaneous diagnostics of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instant {
    pub entropy: f64,
    pub d_visc: f64,
    pub d_heat: f64,
    pub bounds: FieldBounds,
    pub lp2: f64,
    pub linf: f64,
    pub h1: Seminorms,
    pub u4: f64,
    /// `(a, excess, measure)` per requested level.
    pub excess: Vec<(f64, f64, f64)>,
    pub sup_theta_excess: f64,
    pub embed_ratio: f64,
}

pub fn evaluate(
    state: &FluidState,
    params: &GasParams,
    grid: &MassGrid,
    levels: &[f64],
) -> Result<Instant> {
    let (d_visc, d_heat) = dissipation_rates(state, params, grid)?;
    let excess = levels
        .iter()
        .map(|&a| truncated_excess(state, grid, a).map(|(e, m)| (a, e, m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instant {
        entropy: entropy_energy(state, params, grid)?,
        d_visc,
        d_heat,
        bounds: field_bounds(state),
        lp2: lp_deviation(state, grid, 2.0)?,
        linf: lp_deviation(state, grid, f64::INFINITY)?,
        h1: h1_seminorms(state, grid),
        u4: u4_integral(state, grid),
        excess,
        sup_theta_excess: sup_excess(state, SUP_EXCESS_LEVEL),
        embed_ratio: sup_embedding_ratio(state, grid),
    })
}

/// One row of the audit time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub t: f64,
    #[serde(flatten)]
    pub now: Instant,
    pub cum_d: f64,
    pub cum_df8: f64,
    pub cum_z4: f64,
    /// Total-energy drift relative to the initial total energy, net of the
    /// boundary power integrated along the trajectory.
    pub energy_balance_residual: f64,
}

/// Column names, in row order. The excess columns repeat per level.
pub fn csv_header(levels: &[f64]) -> String {
    let mut cols: Vec<String> = [
        "t",
        "E",
        "D_visc",
        "D_heat",
        "cum_D",
        "v_min",
        "v_max",
        "theta_min",
        "theta_max",
        "lp2_dev",
        "linf_dev",
        "vx_l2",
        "ux_l2",
        "thetax_l2",
        "uxx_l2",
        "thetaxx_l2",
        "cum_df8",
        "cum_z4",
        "int_u4",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for a in levels {
        cols.push(format!("excess_a{a}"));
        cols.push(format!("omega_a{a}"));
    }
    cols.extend(
        ["sup_theta_excess", "energy_balance_residual", "embed_ratio"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

impl AuditRecord {
    pub fn csv_row(&self) -> String {
        let n = &self.now;
        let mut vals = vec![
            self.t,
            n.entropy,
            n.d_visc,
            n.d_heat,
            self.cum_d,
            n.bounds.v_min,
            n.bounds.v_max,
            n.bounds.theta_min,
            n.bounds.theta_max,
            n.lp2,
            n.linf,
            n.h1.vx,
            n.h1.ux,
            n.h1.thetax,
            n.h1.uxx,
            n.h1.thetaxx,
            self.cum_df8,
            self.cum_z4,
            n.u4,
        ];
        for &(_, e, m) in &n.excess {
            vals.push(e);
            vals.push(m);
        }
        vals.extend([
            n.sup_theta_excess,
            self.energy_balance_residual,
            n.embed_ratio,
        ]);
        let mut row = String::new();
        for (k, v) in vals.iter().enumerate() {
            if k > 0 {
                row.push(',');
            }
            write!(row, "{v:e}").expect("writing to a String");
        }
        row
    }
}
