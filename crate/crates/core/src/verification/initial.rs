use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{validate_state, FluidState, MassGrid, ProblemSetup, SetupKind, DEFAULT_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianBump,
    TanhFront,
    RandomSmooth,
}

/// Perturbation of `(1, 0, 1)`. Each field is `far_field + amplitude * shape`
/// with a shape bounded by 1 in magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialDataSpec {
    pub family: Family,
    pub amplitude_v: f64,
    pub amplitude_u: f64,
    pub amplitude_theta: f64,
    pub width: f64,
    pub center: f64,
    pub seed: u64,
    pub modes: usize,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        InitialDataSpec {
            family: Family::GaussianBump,
            amplitude_v: 0.0,
            amplitude_u: 0.0,
            amplitude_theta: 0.0,
            width: 1.0,
            center: 0.0,
            seed: 0,
            modes: 6,
        }
    }
}

/// Random Fourier coefficients of one field.
#[derive(Debug, Clone)]
struct Series {
    cos: Vec<f64>,
    sin: Vec<f64>,
    norm: f64,
}

impl Series {
    fn draw(rng: &mut ChaCha8Rng, modes: usize) -> Self {
        let mut cos = Vec::with_capacity(modes);
        let mut sin = Vec::with_capacity(modes);
        let mut norm = 0.0;
        for k in 1..=modes {
            let decay = (k as f64).powi(-3);
            let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            cos.push(decay * a);
            sin.push(decay * b);
            norm += decay * (f64::abs(a) + f64::abs(b));
        }
        Series { cos, sin, norm }
    }

    fn eval(&self, xi: f64) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let arg = (k + 1) as f64 * std::f64::consts::PI * xi;
                a * arg.cos() + b * arg.sin()
            })
            .sum();
        s / self.norm
    }
}

enum Shape {
    Gaussian {
        center: f64,
        width: f64,
    },
    Tanh {
        center: f64,
        width: f64,
    },
    Random {
        center: f64,
        width: f64,
        series: Series,
    },
}

impl Shape {
    fn nonnegative(&self) -> bool {
        !matches!(self, Shape::Random { .. })
    }

    /// Base profile, `|f| <= 1`, decaying away from `center`.
    fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
            Shape::Tanh { center, width } => {
                let sharp = 0.25 * width;
                let d = x - center;
                0.5 * (((d + width) / sharp).tanh() - ((d - width) / sharp).tanh())
            }
            Shape::Random {
                center,
                width,
                series,
            } => {
                let xi = (x - center) / width;
                (-xi * xi).exp() * series.eval(xi)
            }
        }
    }

    /// Odd extension about the wall: vanishes at `x = 0`.
    fn odd(&self, x: f64) -> f64 {
        let d = self.eval(x) - self.eval(-x);
        if self.nonnegative() {
            d
        } else {
            0.5 * d
        }
    }

    /// Even extension about the wall: zero slope at `x = 0`.
    fn even(&self, x: f64) -> f64 {
        let (a, b) = (self.eval(x), self.eval(-x));
        if self.nonnegative() {
            // Union of the two bumps; stays in [0, 1].
            1.0 - (1.0 - a) * (1.0 - b)
        } else {
            0.5 * (a + b)
        }
    }
}

#[derive(Clone, Copy)]
enum Parity {
    Plain,
    Odd,
    Even,
}

/// Samples the initial fields on `grid`. Wall compatibility is built in:
/// on the half line `u` is the odd extension (so `u(0) = 0`); `theta` is the
/// even extension for the insulated wall and the odd one for the isothermal
/// wall (so `theta(0) = 1`).
pub fn build_initial_data(
    spec: &InitialDataSpec,
    setup: ProblemSetup,
    grid: &MassGrid,
) -> Result<FluidState> {
    if !(spec.width > 0.0 && spec.width.is_finite()) {
        return Err(Error::config(
            "initial.width",
            format!("must be positive, got {}", spec.width),
        ));
    }
    for (key, a) in [
        ("initial.amplitude_v", spec.amplitude_v),
        ("initial.amplitude_u", spec.amplitude_u),
        ("initial.amplitude_theta", spec.amplitude_theta),
    ] {
        if !a.is_finite() {
            return Err(Error::config(key, format!("must be finite, got {a}")));
        }
    }
    let (center, width) = (spec.center, spec.width);
    let shapes: [Shape; 3] = match spec.family {
        Family::GaussianBump => std::array::from_fn(|_| Shape::Gaussian { center, width }),
        Family::TanhFront => std::array::from_fn(|_| Shape::Tanh { center, width }),
        Family::RandomSmooth => {
            if spec.modes == 0 {
                return Err(Error::config("initial.modes", "need at least one mode"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            std::array::from_fn(|_| Shape::Random {
                center,
                width,
                series: Series::draw(&mut rng, spec.modes),
            })
        }
    };
    let [sv, su, st] = &shapes;
    if sv.nonnegative() {
        // The shapes peak at 1, so an amplitude of -1 or below drives the
        // field through zero.
        for (key, a) in [
            ("initial.amplitude_v", spec.amplitude_v),
            ("initial.amplitude_theta", spec.amplitude_theta),
        ] {
            if a <= -1.0 {
                return Err(Error::config(
                    key,
                    format!("amplitude {a} violates inf v0 > 0, inf theta0 > 0"),
                ));
            }
        }
    }

    let (pu, pt) = match setup.kind {
        SetupKind::Cauchy => (Parity::Plain, Parity::Plain),
        SetupKind::HalfLineInsulated => (Parity::Odd, Parity::Even),
        SetupKind::HalfLineIsothermal => (Parity::Odd, Parity::Odd),
    };
    let sample = |shape: &Shape, parity: Parity, x: f64| match parity {
        Parity::Plain => shape.eval(x),
        Parity::Odd => shape.odd(x),
        Parity::Even => shape.even(x),
    };

    let centers = grid.cell_centers();
    let mut state = FluidState {
        t: 0.0,
        v: centers
            .iter()
            .map(|&x| 1.0 + spec.amplitude_v * sv.eval(x))
            .collect(),
        u: grid
            .nodes()
            .into_iter()
            .map(|x| spec.amplitude_u * sample(su, pu, x))
            .collect(),
        theta: centers
            .iter()
            .map(|&x| 1.0 + spec.amplitude_theta * sample(st, pt, x))
            .collect(),
    };
    if setup.kind.has_wall() {
        state.u[0] = 0.0;
    }
    if let Err(v) = validate_state(&state, DEFAULT_FLOOR) {
        return Err(Error::config(
            "initial",
            format!("data violates inf v0 > 0, inf theta0 > 0: {v}"),
        ));
    }
    Ok(state)
}

/// Zeroth-order corner compatibility of sampled data with the wall condition.
pub fn check_compatibility(state: &FluidState, setup: ProblemSetup) -> Result<()> {
    if setup.kind.has_wall() && state.u[0] != 0.0 {
        return Err(Error::config(
            "initial",
            format!("wall velocity must be 0, got {}", state.u[0]),
        ));
    }
    Ok(())
}
