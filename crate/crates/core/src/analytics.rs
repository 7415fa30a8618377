//! Closed-form results for affine scalar SDEs: reduction to dimensionless
//! form, the benchmark equilibrium density and exact moment evolution.

use crate::error::{Error, Result};
use crate::special::stirling_remainder;

/// `dξ = -(α + β ξ) dτ + (γ + δ ξ) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineSde {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl AffineSde {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    pub fn drift(&self, xi: f64) -> f64 {
        -(self.alpha + self.beta * xi)
    }

    pub fn diffusion(&self, xi: f64) -> f64 {
        self.gamma + self.delta * xi
    }
}

/// Change of variables `ξ = A x + B`, `τ = T t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

impl Transform {
    /// Drift and diffusion in `ξ` of the SDE `dx = μ(x) dt + σ(x) dW`.
    pub fn pull_back(
        &self,
        xi: f64,
        drift: impl Fn(f64) -> f64,
        diffusion: impl Fn(f64) -> f64,
    ) -> (f64, f64) {
        let x = (xi - self.b) / self.a;
        (self.a * drift(x) / self.t, self.a * diffusion(x) / self.t.sqrt())
    }
}

/// Dimensionless class of an affine SDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReducedForm {
    /// `dx = s x dt + (1 + η x) dW` with `s = drift_sign`.
    Benchmark {
        eta: f64,
        drift_sign: i8,
        transform: Transform,
    },
    /// `dx = s x dt + η x dW`.
    Gbm {
        eta: f64,
        drift_sign: i8,
        transform: Transform,
    },
    /// `dx = dt + s x dW` with `s = noise_sign`.
    UnitDriftMultiplicative { noise_sign: i8, transform: Transform },
    /// `dξ = -α dτ + γ dW`: a translated Brownian motion.
    TranslatedBrownian,
}

impl ReducedForm {
    pub fn transform(&self) -> Option<Transform> {
        match *self {
            ReducedForm::Benchmark { transform, .. }
            | ReducedForm::Gbm { transform, .. }
            | ReducedForm::UnitDriftMultiplicative { transform, .. } => Some(transform),
            ReducedForm::TranslatedBrownian => None,
        }
    }

    /// Drift and diffusion of the reduced equation, where defined.
    pub fn coefficients(&self, x: f64) -> Option<(f64, f64)> {
        match *self {
            ReducedForm::Benchmark { eta, drift_sign, .. } => {
                Some((f64::from(drift_sign) * x, 1.0 + eta * x))
            }
            ReducedForm::Gbm { eta, drift_sign, .. } => Some((f64::from(drift_sign) * x, eta * x)),
            ReducedForm::UnitDriftMultiplicative { noise_sign, .. } => {
                Some((1.0, f64::from(noise_sign) * x))
            }
            ReducedForm::TranslatedBrownian => None,
        }
    }
}

fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

const DEGENERACY_RTOL: f64 = 1e-12;

/// Classifies an affine SDE and returns the rescaling that produces its
/// dimensionless form.
pub fn reduce(sde: &AffineSde) -> Result<ReducedForm> {
    let AffineSde {
        alpha,
        beta,
        gamma,
        delta,
    } = *sde;
    if ![alpha, beta, gamma, delta].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("affine coefficients must be finite".into()));
    }
    if beta != 0.0 {
        let root = beta.abs().sqrt();
        let det = beta * gamma - alpha * delta;
        let scale = (beta * gamma).abs() + (alpha * delta).abs();
        let b = -alpha / beta;
        let t = 1.0 / beta.abs();
        let eta = delta / root;
        let drift_sign = -sign(beta);
        if det.abs() <= DEGENERACY_RTOL * scale {
            Ok(ReducedForm::Gbm {
                eta,
                drift_sign,
                transform: Transform { a: 1.0, b, t },
            })
        } else {
            Ok(ReducedForm::Benchmark {
                eta,
                drift_sign,
                transform: Transform {
                    a: det / (beta * root),
                    b,
                    t,
                },
            })
        }
    } else if delta != 0.0 {
        if alpha == 0.0 {
            return Err(Error::UnclassifiedDegenerate);
        }
        let t = 1.0 / (delta * delta);
        Ok(ReducedForm::UnitDriftMultiplicative {
            noise_sign: sign(delta),
            transform: Transform {
                a: -alpha * t,
                b: -gamma / delta,
                t,
            },
        })
    } else {
        Ok(ReducedForm::TranslatedBrownian)
    }
}

/// `log1p(u) - u / (1 + u)`, accurate for small `u`.
fn phi(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        // Σ_{k≥2} (-1)^k (k-1)/k u^k
        let mut term = u * u;
        let mut sum = 0.0;
        for k in 2..10 {
            let kf = k as f64;
            sum += term * (kf - 1.0) / kf;
            term *= -u;
        }
        sum
    } else {
        u.ln_1p() - u / (1.0 + u)
    }
}

/// Natural log of the benchmark equilibrium density; `-∞` off the support.
///
/// With `a = 2/η²` and `u = η x` the density is rewritten as
/// `log p = -½ log π - s(a) - a φ(u) - 2 log(1 + u)`, where `s` is the
/// Stirling remainder. This form is exact and free of the `O(1/η²)`
/// cancellation between normaliser and kernel.
pub fn equilibrium_log_pdf(eta: f64, x: f64) -> f64 {
    let gaussian = -x * x - 0.5 * std::f64::consts::PI.ln();
    if eta == 0.0 {
        return gaussian;
    }
    let u = eta * x;
    if !(u > -1.0) {
        return f64::NEG_INFINITY;
    }
    let a = 2.0 / (eta * eta);
    if !a.is_finite() {
        return gaussian;
    }
    -0.5 * std::f64::consts::PI.ln() - stirling_remainder(a) - a * phi(u) - 2.0 * u.ln_1p()
}

/// Benchmark equilibrium density. Negative `η` mirrors `x`; `η = 0` is
/// `N(0, ½)`.
pub fn equilibrium_pdf(eta: f64, x: f64) -> f64 {
    equilibrium_log_pdf(eta, x).exp()
}

/// A moment that may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentValue {
    Finite(f64),
    Infinite,
}

impl MomentValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            MomentValue::Finite(v) => Some(v),
            MomentValue::Infinite => None,
        }
    }
}

/// Whether the `k`-th equilibrium moment exists: `|η| < √(2/(k-1))`.
pub fn moment_exists(eta: f64, k: u32) -> Result<bool> {
    match k {
        0 => Err(Error::Domain("moment order must be at least 1".into())),
        1 => Ok(true),
        _ => Ok(eta * eta * f64::from(k - 1) < 2.0),
    }
}

/// Equilibrium moments in closed form (`k` ∈ {1, 2}).
pub fn equilibrium_moment(eta: f64, k: u32) -> Result<MomentValue> {
    if !moment_exists(eta, k)? {
        return Ok(MomentValue::Infinite);
    }
    match k {
        1 => Ok(MomentValue::Finite(0.0)),
        2 => Ok(MomentValue::Finite(1.0 / (2.0 - eta * eta))),
        _ => Err(Error::Domain(format!("no closed form for moment {k}"))),
    }
}

/// Exact `E[x_t]` for the benchmark: `x0 e^{-t}`.
pub fn benchmark_moment1(t: f64, x0: f64) -> f64 {
    x0 * (-t).exp()
}

const UNIT_ETA_TOL: f64 = 1e-8;

/// `(1 - e^{-c t}) / c`, continuous through `c = 0`.
fn relax(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        t
    } else {
        -(-c * t).exp_m1() / c
    }
}

/// Exact `E[x_t²]` for the benchmark from a deterministic `x0`.
pub fn benchmark_moment2(t: f64, x0: f64, eta: f64) -> f64 {
    let decay = (-t).exp();
    if (eta.abs() - 1.0).abs() <= UNIT_ETA_TOL {
        let s = eta.signum();
        return x0 * x0 * decay + 1.0 - decay + 2.0 * s * x0 * t * decay;
    }
    let c = 2.0 - eta * eta;
    let d = 1.0 - eta * eta;
    // e^{-t} - e^{-ct} = e^{-t} (1 - e^{-dt})
    x0 * x0 * (-c * t).exp() + relax(c, t) + 2.0 * eta * x0 * decay * relax(d, t)
}

/// `lim log μ⁽²⁾(t) / t = η² - 2`.
pub fn moment2_growth_rate(eta: f64) -> f64 {
    eta * eta - 2.0
}

/// `|η|` recovered from a finite asymptotic second moment.
pub fn eta_from_moment2(mu2_inf: f64) -> Result<f64> {
    if !(mu2_inf >= 0.5) || !mu2_inf.is_finite() {
        return Err(Error::Domain(format!(
            "asymptotic second moment must be finite and at least 1/2, got {mu2_inf}"
        )));
    }
    Ok((2.0 - 1.0 / mu2_inf).max(0.0).sqrt())
}

/// Exact GBM moments `x0 e^{-t}` and `x0² e^{-(2-η²) t}`.
pub fn gbm_moment(t: f64, x0: f64, eta: f64, k: u32) -> Result<f64> {
    match k {
        1 => Ok(x0 * (-t).exp()),
        2 => Ok(x0 * x0 * ((eta * eta - 2.0) * t).exp()),
        _ => Err(Error::Domain(format!("GBM moment order must be 1 or 2, got {k}"))),
    }
}
