//! Discrete gas state on a uniform Lagrangian mass grid.
//!
//! Layout is staggered: specific volume `v` and temperature `theta` live at
//! cell centers, velocity `u` at the `n_cells + 1` nodes. Cell `j` (0-based)
//! lies between nodes `j` and `j + 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lower bound for `v` and `theta` below which a state is rejected.
pub const DEFAULT_FLOOR: f64 = 1e-10;

/// The constant state every setup relaxes to: `(v, u, theta) = (1, 0, 1)`.
pub const FAR_FIELD: (f64, f64, f64) = (1.0, 0.0, 1.0);

/// Physical constants of the perfect polytropic gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasParams {
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(rename = "R", default = "one")]
    pub r: f64,
    #[serde(default = "one")]
    pub c_v: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for GasParams {
    fn default() -> Self {
        GasParams {
            mu: 1.0,
            kappa: 1.0,
            r: 1.0,
            c_v: 1.0,
        }
    }
}

impl GasParams {
    pub fn new(mu: f64, kappa: f64, r: f64, c_v: f64) -> Result<Self> {
        let p = GasParams { mu, kappa, r, c_v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, val) in [
            ("gas.mu", self.mu),
            ("gas.kappa", self.kappa),
            ("gas.R", self.r),
            ("gas.c_v", self.c_v),
        ] {
            if !(val.is_finite() && val > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {val}")));
            }
        }
        Ok(())
    }

    /// Adiabatic exponent `R / c_v + 1`.
    pub fn gamma(&self) -> f64 {
        self.r / self.c_v + 1.0
    }
}

/// Which boundary / far-field configuration is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupKind {
    /// Whole line, far field `(1, 0, 1)` at both ends.
    Cauchy,
    /// Half line with `u(0) = 0`, `theta_x(0) = 0`.
    #[serde(rename = "halfline_insulated")]
    HalfLineInsulated,
    /// Half line with `u(0) = 0`, `theta(0) = 1`.
    #[serde(rename = "halfline_isothermal")]
    HalfLineIsothermal,
}

impl SetupKind {
    pub const ALL: [SetupKind; 3] = [
        SetupKind::Cauchy,
        SetupKind::HalfLineInsulated,
        SetupKind::HalfLineIsothermal,
    ];

    pub fn has_wall(self) -> bool {
        !matches!(self, SetupKind::Cauchy)
    }

    pub fn name(self) -> &'static str {
        match self {
            SetupKind::Cauchy => "cauchy",
            SetupKind::HalfLineInsulated => "halfline_insulated",
            SetupKind::HalfLineIsothermal => "halfline_isothermal",
        }
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A setup kind together with its far-field state. The far field is always
/// `(1, 0, 1)` and is not configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemSetup {
    pub kind: SetupKind,
}

impl ProblemSetup {
    pub fn new(kind: SetupKind) -> Self {
        ProblemSetup { kind }
    }

    pub fn far_field(&self) -> (f64, f64, f64) {
        FAR_FIELD
    }
}

impl From<SetupKind> for ProblemSetup {
    fn from(kind: SetupKind) -> Self {
        ProblemSetup::new(kind)
    }
}

/// Uniform mesh in the Lagrangian mass coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassGrid {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    pub dm: f64,
}

pub const MIN_CELLS: usize = 4;

impl MassGrid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(Error::config(
                "L",
                format!("extents must satisfy x_left < x_right, got [{x_left}, {x_right}]"),
            ));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::config(
                "n",
                format!("need at least {MIN_CELLS} cells, got {n_cells}"),
            ));
        }
        Ok(MassGrid {
            x_left,
            x_right,
            n_cells,
            dm: (x_right - x_left) / n_cells as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn span(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Center of cell `j` (0-based).
    pub fn cell_center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dm
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dm
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.cell_center(j)).collect()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }
}

/// Builds the truncated grid for a setup: `[-L, L]` for the Cauchy problem,
/// `[0, L]` on the half line.
pub fn make_grid(setup: ProblemSetup, half_length: f64, n_cells: usize) -> Result<MassGrid> {
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::config(
            "L",
            format!("half length must be positive, got {half_length}"),
        ));
    }
    match setup.kind {
        SetupKind::Cauchy => MassGrid::new(-half_length, half_length, n_cells),
        SetupKind::HalfLineInsulated | SetupKind::HalfLineIsothermal => {
            MassGrid::new(0.0, half_length, n_cells)
        }
    }
}

/// Fields `(v, u, theta)` at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    /// Specific volume per cell.
    pub v: Vec<f64>,
    /// Velocity per node.
    pub u: Vec<f64>,
    /// Temperature per cell.
    pub theta: Vec<f64>,
}

impl FluidState {
    pub fn n_cells(&self) -> usize {
        self.v.len()
    }

    /// Velocity averaged to cell `j`.
    pub fn u_cell(&self, j: usize) -> f64 {
        0.5 * (self.u[j] + self.u[j + 1])
    }

    pub fn check_shape(&self, grid: &MassGrid) -> Result<()> {
        let n = grid.n_cells;
        if self.v.len() != n || self.theta.len() != n || self.u.len() != n + 1 {
            return Err(Error::Domain(format!(
                "state shape (v {}, u {}, theta {}) does not match grid with {n} cells",
                self.v.len(),
                self.u.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }
}

/// The constant state `(1, 0, 1)` at `t = 0`.
pub fn steady_state(grid: &MassGrid) -> FluidState {
    let n = grid.n_cells;
    FluidState {
        t: 0.0,
        v: vec![FAR_FIELD.0; n],
        u: vec![FAR_FIELD.1; n + 1],
        theta: vec![FAR_FIELD.2; n],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    V,
    U,
    Theta,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::V => "v",
            Field::U => "u",
            Field::Theta => "theta",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    BelowFloor { value: f64, floor: f64 },
}

/// First offending entry found by [`validate_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub field: Field,
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = if self.field == Field::U {
            "node"
        } else {
            "cell"
        };
        match self.kind {
            ViolationKind::NonFinite => {
                write!(f, "non-finite {} at {loc} {}", self.field, self.index)
            }
            ViolationKind::BelowFloor { value, floor } => write!(
                f,
                "{} = {value:e} at {loc} {} is not above the floor {floor:e}",
                self.field, self.index
            ),
        }
    }
}

/// Checks positivity of `v` and `theta` (strictly above `floor`) and
/// finiteness of every entry. Cells are scanned in index order, `v` before
/// `theta` within a cell, then the velocity nodes.
pub fn validate_state(state: &FluidState, floor: f64) -> Result<(), Violation> {
    for j in 0..state.v.len().max(state.theta.len()) {
        for (field, vals) in [(Field::V, &state.v), (Field::Theta, &state.theta)] {
            let Some(&x) = vals.get(j) else { continue };
            if !x.is_finite() {
                return Err(Violation {
                    field,
                    index: j,
                    kind: ViolationKind::NonFinite,
                });
            }
            if x <= floor {
                return Err(Violation {
                    field,
                    index: j,
                    kind: ViolationKind::BelowFloor { value: x, floor },
                });
            }
        }
    }
    if let Some(i) = state.u.iter().position(|x| !x.is_finite()) {
        return Err(Violation {
            field: Field::U,
            index: i,
            kind: ViolationKind::NonFinite,
        });
    }
    Ok(())
}
