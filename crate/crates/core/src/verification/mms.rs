use crate::scheme::{Forcing, Sources};
use crate::state::{GasParams, MassGrid, SetupKind};

/// Spatial profile with closed-form first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `exp(-((x - c) / w)^2)`
    Gauss { center: f64, width: f64 },
    /// `x exp(-(x / w)^2)`, vanishes at 0.
    XGauss { width: f64 },
    /// `x^2 exp(-(x / w)^2)`, vanishes with zero slope at 0.
    X2Gauss { width: f64 },
}

impl Profile {
    /// `(f, f', f'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Gauss { center, width } => {
                let d = x - center;
                let w2 = width * width;
                let g = (-d * d / w2).exp();
                (
                    g,
                    -2.0 * d / w2 * g,
                    (4.0 * d * d / (w2 * w2) - 2.0 / w2) * g,
                )
            }
            Profile::XGauss { width } => {
                let w2 = width * width;
                let g = (-x * x / w2).exp();
                (
                    x * g,
                    g * (1.0 - 2.0 * x * x / w2),
                    g * x / w2 * (4.0 * x * x / w2 - 6.0),
                )
            }
            Profile::X2Gauss { width } => {
                let w2 = width * width;
                let g = (-x * x / w2).exp();
                let x2 = x * x;
                (
                    x2 * g,
                    g * (2.0 * x - 2.0 * x2 * x / w2),
                    g * (2.0 - 10.0 * x2 / w2 + 4.0 * x2 * x2 / (w2 * w2)),
                )
            }
        }
    }
}

/// Exact fields and the partial derivatives the sources need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues {
    pub v: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub theta: f64,
    pub theta_t: f64,
    pub theta_x: f64,
    pub theta_xx: f64,
}

/// `v = 1 + a_v e^{-t} f_v(x)`, `u = a_u e^{-t} f_u(x)`,
/// `theta = 1 + a_theta e^{-t} f_theta(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub amplitude_v: f64,
    pub amplitude_u: f64,
    pub amplitude_theta: f64,
    pub profile_v: Profile,
    pub profile_u: Profile,
    pub profile_theta: Profile,
}

/// Half-length used with [`ManufacturedSolution::for_setup`]; the profiles
/// are below 1e-19 of their peak at the truncation boundary.
pub const MMS_HALF_LENGTH: f64 = 10.0;

impl ManufacturedSolution {
    /// A smooth decaying solution compatible with the wall conditions of
    /// `kind`: `u(0) = 0` on the half line, `theta_x(0) = 0` for the
    /// insulated wall and `theta(0) = 1` for the isothermal wall.
    pub fn for_setup(kind: SetupKind) -> Self {
        let w = 1.5;
        let (profile_v, profile_u, profile_theta) = match kind {
            SetupKind::Cauchy => (
                Profile::Gauss {
                    center: 0.3,
                    width: w,
                },
                Profile::XGauss { width: w },
                Profile::Gauss {
                    center: -0.4,
                    width: w,
                },
            ),
            SetupKind::HalfLineInsulated => (
                Profile::Gauss {
                    center: 1.0,
                    width: w,
                },
                Profile::XGauss { width: w },
                Profile::Gauss {
                    center: 0.0,
                    width: w,
                },
            ),
            SetupKind::HalfLineIsothermal => (
                Profile::Gauss {
                    center: 1.0,
                    width: w,
                },
                Profile::XGauss { width: w },
                Profile::X2Gauss { width: w },
            ),
        };
        ManufacturedSolution {
            amplitude_v: 0.3,
            amplitude_u: 0.3,
            amplitude_theta: 0.4,
            profile_v,
            profile_u,
            profile_theta,
        }
    }

    /// The constant state `(1, 0, 1)`.
    pub fn steady(kind: SetupKind) -> Self {
        ManufacturedSolution {
            amplitude_v: 0.0,
            amplitude_u: 0.0,
            amplitude_theta: 0.0,
            ..Self::for_setup(kind)
        }
    }

    pub fn is_steady(&self) -> bool {
        self.amplitude_v == 0.0 && self.amplitude_u == 0.0 && self.amplitude_theta == 0.0
    }

    pub fn eval(&self, x: f64, t: f64) -> FieldValues {
        let decay = (-t).exp();
        let (fv, fv1, _) = self.profile_v.eval(x);
        let (fu, fu1, fu2) = self.profile_u.eval(x);
        let (ft, ft1, ft2) = self.profile_theta.eval(x);
        let (av, au, at) = (
            self.amplitude_v * decay,
            self.amplitude_u * decay,
            self.amplitude_theta * decay,
        );
        FieldValues {
            v: 1.0 + av * fv,
            v_t: -av * fv,
            v_x: av * fv1,
            u: au * fu,
            u_t: -au * fu,
            u_x: au * fu1,
            u_xx: au * fu2,
            theta: 1.0 + at * ft,
            theta_t: -at * ft,
            theta_x: at * ft1,
            theta_xx: at * ft2,
        }
    }

    /// Residuals `(s_v, s_u, s_theta)` of the three equations at `(x, t)`.
    pub fn sources(&self, params: &GasParams, x: f64, t: f64) -> (f64, f64, f64) {
        let f = self.eval(x, t);
        let GasParams { mu, kappa, r, c_v } = *params;
        let (v, v2) = (f.v, f.v * f.v);
        let p_x = r * (f.theta_x / v - f.theta * f.v_x / v2);
        let visc_x = f.u_xx / v - f.u_x * f.v_x / v2;
        let cond_x = f.theta_xx / v - f.theta_x * f.v_x / v2;
        let s_v = f.v_t - f.u_x;
        let s_u = f.u_t + p_x - mu * visc_x;
        let s_theta =
            c_v * f.theta_t + r * f.theta / v * f.u_x - kappa * cond_x - mu * f.u_x * f.u_x / v;
        (s_v, s_u, s_theta)
    }

    /// Lower bounds of `v` and `theta` over all `x` and `t >= 0`.
    pub fn floors(&self) -> (f64, f64) {
        let lo = |a: f64, p: Profile| {
            let (min, max) = match p {
                Profile::Gauss { .. } | Profile::X2Gauss { .. } => (0.0, p.peak()),
                Profile::XGauss { .. } => (-p.peak(), p.peak()),
            };
            1.0 + (a * min).min(a * max).min(0.0)
        };
        (
            lo(self.amplitude_v, self.profile_v),
            lo(self.amplitude_theta, self.profile_theta),
        )
    }
}

impl Profile {
    fn peak(&self) -> f64 {
        match *self {
            Profile::Gauss { .. } => 1.0,
            Profile::XGauss { width } => width / (2.0f64.sqrt()) * (-0.5f64).exp(),
            Profile::X2Gauss { width } => width * width * (-1.0f64).exp(),
        }
    }
}

/// Samples a manufactured solution's sources on a grid: `s_v`, `s_theta` at
/// cell centers, `s_u` at nodes.
pub struct MmsForcing {
    pub ms: ManufacturedSolution,
    pub params: GasParams,
}

impl Forcing for MmsForcing {
    fn sources(&self, grid: &MassGrid, t: f64) -> Sources {
        let mut s_v = Vec::with_capacity(grid.n_cells);
        let mut s_theta = Vec::with_capacity(grid.n_cells);
        for x in grid.cell_centers() {
            let (sv, _, st) = self.ms.sources(&self.params, x, t);
            s_v.push(sv);
            s_theta.push(st);
        }
        let s_u = grid
            .nodes()
            .into_iter()
            .map(|x| self.ms.sources(&self.params, x, t).1)
            .collect();
        Sources { s_v, s_u, s_theta }
    }
}
