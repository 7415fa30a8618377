//! The four explicit one-step schemes and a path driver.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::SdeProblem;

/// Explicit scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// Euler–Maruyama.
    Em,
    /// Milstein.
    Mil,
    /// Stochastic Heun.
    Sh,
    /// Improved three-stage stochastic Runge–Kutta.
    Rk3,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Em, SchemeId::Mil, SchemeId::Sh, SchemeId::Rk3];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Em => "EM",
            SchemeId::Mil => "MIL",
            SchemeId::Sh => "SH",
            SchemeId::Rk3 => "RK3",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EM" | "EULER" | "EULER-MARUYAMA" => Ok(SchemeId::Em),
            "MIL" | "MILSTEIN" => Ok(SchemeId::Mil),
            "SH" | "HEUN" => Ok(SchemeId::Sh),
            "RK3" => Ok(SchemeId::Rk3),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Gaussian increments for one step. Both components have variance `h`;
/// `dw_tilde` is only read by RK3.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseDraw {
    pub dw: f64,
    pub dw_tilde: f64,
}

impl NoiseDraw {
    pub const ZERO: NoiseDraw = NoiseDraw { dw: 0.0, dw_tilde: 0.0 };

    pub fn new(dw: f64, dw_tilde: f64) -> Self {
        Self { dw, dw_tilde }
    }

    pub fn negated(self) -> Self {
        Self {
            dw: -self.dw,
            dw_tilde: -self.dw_tilde,
        }
    }
}

/// A discrete trajectory on the uniform grid `t_n = n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub scheme: SchemeId,
    pub h: f64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.states.last().expect("path always holds x0")
    }
}

#[inline]
fn finite(scheme: SchemeId, stage: &'static str, x: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow {
            scheme: Some(scheme),
            stage,
            x,
        })
    }
}

/// `F(x) = f(x) - ½ g'(x) g(x)`.
pub fn aux_drift<P: SdeProblem + ?Sized>(problem: &P, x: f64) -> Result<f64> {
    let value = problem.drift(x) - 0.5 * problem.diffusion_deriv(x) * problem.diffusion(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow {
            scheme: None,
            stage: "aux_drift",
            x,
        })
    }
}

/// `(F(x), g(x))` with one evaluation of each of `f`, `g` and `g'`.
#[inline]
fn aux_and_diffusion<P: SdeProblem + ?Sized>(problem: &P, x: f64) -> (f64, f64) {
    let g = problem.diffusion(x);
    (problem.drift(x) - 0.5 * problem.diffusion_deriv(x) * g, g)
}

const INV_TWO_SQRT3: f64 = 0.288_675_134_594_812_9; // 1 / (2√3)

/// One step of `scheme` from `x` with step size `h`.
pub fn step<P: SdeProblem + ?Sized>(
    scheme: SchemeId,
    problem: &P,
    x: f64,
    h: f64,
    noise: NoiseDraw,
) -> Result<f64> {
    let dw = noise.dw;
    let next = match scheme {
        SchemeId::Em => x + problem.drift(x) * h + problem.diffusion(x) * dw,
        SchemeId::Mil => {
            let g = problem.diffusion(x);
            x + problem.drift(x) * h + g * dw + 0.5 * problem.diffusion_deriv(x) * g * (dw * dw - h)
        }
        SchemeId::Sh => {
            let (f1, g1) = aux_and_diffusion(problem, x);
            let y = finite(scheme, "predictor", x, x + f1 * h + g1 * dw)?;
            let (f2, g2) = aux_and_diffusion(problem, y);
            x + 0.5 * (f1 + f2) * h + 0.5 * (g1 + g2) * dw
        }
        SchemeId::Rk3 => {
            let g = problem.diffusion(x);
            let f = problem.drift(x);
            let dg = problem.diffusion_deriv(x);
            let f1 = f - 0.5 * dg * g;
            let g1 = g;
            let y2 = finite(scheme, "stage 2", x, x + (f1 * h + g1 * dw) / 3.0)?;
            let (f2, g2) = aux_and_diffusion(problem, y2);
            let y3 = finite(scheme, "stage 3", x, x + 2.0 * (f2 * h + g2 * dw) / 3.0)?;
            let (f3, g3) = aux_and_diffusion(problem, y3);
            let correction =
                problem.drift_deriv(x) * g - dg * f - 0.5 * problem.diffusion_deriv2(x) * g * g;
            x + 0.25 * (f1 + 3.0 * f3) * h
                + 0.25 * (g1 + 3.0 * g3) * dw
                + INV_TWO_SQRT3 * correction * h * noise.dw_tilde
        }
    };
    finite(scheme, "update", x, next)
}

/// Runs `n_steps` steps from `x0`, drawing one [`NoiseDraw`] per step.
pub fn simulate_path<P, I>(
    scheme: SchemeId,
    problem: &P,
    x0: f64,
    h: f64,
    n_steps: usize,
    noise: I,
) -> Result<Path>
where
    P: SdeProblem + ?Sized,
    I: IntoIterator<Item = NoiseDraw>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    if !x0.is_finite() {
        return Err(Error::Domain(format!("initial state must be finite, got {x0}")));
    }
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(x0);
    let mut draws = noise.into_iter();
    let mut x = x0;
    for n in 0..n_steps {
        let draw = draws
            .next()
            .ok_or_else(|| Error::Domain(format!("noise stream exhausted after {n} draws")))?;
        x = step(scheme, problem, x, h, draw).map_err(|e| e.at_step(n))?;
        times.push((n + 1) as f64 * h);
        states.push(x);
    }
    Ok(Path {
        times,
        states,
        scheme,
        h,
    })
}
