//! Nonlinear test problem with erf coefficients,
//!
//! ```text
//! f(x) = -A erf((x - x*)/B),    g(x) = C + D erf((x - x*)/E),
//! ```
//!
//! and its stationary density by log-domain trapezoid quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::problem::SdeProblem;
use crate::quadrature::{cumulative_from, trapezoid};
use crate::special::erf;

/// Half-width of the default quadrature domain around the origin.
pub const DOMAIN_HALF_WIDTH: f64 = 100.0;
/// Default quadrature spacing.
pub const DEFAULT_DX: f64 = 0.0025;
/// Gap left between a diffusion zero and the quadrature domain.
pub const ZERO_OFFSET: f64 = 0.01;
/// Normalized density allowed at the domain ends.
pub const TAIL_TOL: f64 = 1e-12;
/// Largest mean change accepted when the grid is refined.
pub const REFINEMENT_TOL: f64 = 1e-5;
/// Halvings [`reference_mean`] may take before giving up.
pub const MAX_HALVINGS: u32 = 4;

/// Stationary mean for [`PorousParams::small_eta`], frozen from
/// [`reference_mean`].
pub const SMALL_ETA_MEAN: f64 = 1.007_900_318_6;
/// Stationary mean for [`PorousParams::large_eta`] on the domain right of
/// the diffusion zero, frozen from [`reference_mean`].
pub const LARGE_ETA_MEAN: f64 = 1.178_527_586_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorousParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub x_star: f64,
}

impl PorousParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, x_star: f64) -> Result<Self> {
        let p = Self { a, b, c, d, e, x_star };
        p.validate()?;
        Ok(p)
    }

    /// `A=2, B=1, C=1, D=0.3, E=4, x*=1`; linearized `η ≈ 0.0563`.
    pub fn small_eta() -> Self {
        Self { a: 2.0, b: 1.0, c: 1.0, d: 0.3, e: 4.0, x_star: 1.0 }
    }

    /// `A=2, B=1, C=1, D=1.5, E=1, x*=1`; linearized `η ≈ 1.127`.
    pub fn large_eta() -> Self {
        Self { a: 2.0, b: 1.0, c: 1.0, d: 1.5, e: 1.0, x_star: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.d, self.e, self.x_star];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("porous parameters must be finite: {self:?}")));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.e > 0.0) {
            return Err(Error::Domain(format!("A, B and E must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// [`SdeProblem`] for a [`PorousParams`] set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorousProblem {
    pub params: PorousParams,
}

pub fn porous_problem(params: PorousParams) -> Result<PorousProblem> {
    params.validate()?;
    Ok(PorousProblem { params })
}

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

impl SdeProblem for PorousProblem {
    fn drift(&self, x: f64) -> f64 {
        let p = &self.params;
        -p.a * erf((x - p.x_star) / p.b)
    }

    fn diffusion(&self, x: f64) -> f64 {
        let p = &self.params;
        p.c + p.d * erf((x - p.x_star) / p.e)
    }

    fn drift_deriv(&self, x: f64) -> f64 {
        let p = &self.params;
        let u = (x - p.x_star) / p.b;
        -p.a * TWO_OVER_SQRT_PI / p.b * (-u * u).exp()
    }

    fn diffusion_deriv(&self, x: f64) -> f64 {
        let p = &self.params;
        let u = (x - p.x_star) / p.e;
        p.d * TWO_OVER_SQRT_PI / p.e * (-u * u).exp()
    }

    fn diffusion_deriv2(&self, x: f64) -> f64 {
        let p = &self.params;
        let u = (x - p.x_star) / p.e;
        -2.0 * p.d * TWO_OVER_SQRT_PI * u / (p.e * p.e) * (-u * u).exp()
    }

    fn label(&self) -> String {
        let p = &self.params;
        format!(
            "porous(A={}, B={}, C={}, D={}, E={}, x*={})",
            p.a, p.b, p.c, p.d, p.e, p.x_star
        )
    }
}

/// `η = g'(x*) / √|f'(x*)| = √(2 B D² / (A E² √π))`, signed like `D`.
pub fn linearized_eta(params: &PorousParams) -> f64 {
    let mag = (2.0 * params.b * params.d * params.d / (params.a * params.e * params.e * PI.sqrt())).sqrt();
    mag.copysign(params.d)
}

/// Stationary density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `ln Z`; `Z` itself may overflow.
    pub log_z: f64,
    pub mean: f64,
}

impl DensityGrid {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Trapezoid `∫ x^k p`.
    pub fn moment(&self, k: i32) -> f64 {
        let y: Vec<f64> = self.x.iter().zip(&self.p).map(|(&x, &p)| x.powi(k) * p).collect();
        trapezoid(&y, self.dx)
    }

    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.p, self.dx)
    }
}

/// `p(x) ∝ g(x)⁻² exp(∫ 2f/g²)` on `[lo, hi]`.
///
/// The inner integral is anchored at the grid point of smallest `|f|` so
/// that it stays O(1) in the bulk, and the log density is shifted by its
/// maximum before exponentiating.
pub fn stationary_density<P: SdeProblem + ?Sized>(problem: &P, lo: f64, hi: f64, dx: f64) -> Result<DensityGrid> {
    if !(dx > 0.0) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("bad quadrature grid lo={lo}, hi={hi}, dx={dx}")));
    }
    let n = ((hi - lo) / dx).round().max(2.0) as usize;
    let dx = (hi - lo) / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + dx * i as f64 }).collect();

    let mut integrand = Vec::with_capacity(x.len());
    let mut log_g2 = Vec::with_capacity(x.len());
    let mut anchor = (0, f64::INFINITY);
    for (i, &xi) in x.iter().enumerate() {
        let g = problem.diffusion(xi);
        if !(g > 0.0) {
            return Err(Error::DiffusionSign { x: xi, g });
        }
        let f = problem.drift(xi);
        if f.abs() < anchor.1 {
            anchor = (i, f.abs());
        }
        integrand.push(2.0 * f / (g * g));
        log_g2.push(2.0 * g.ln());
    }
    let inner = cumulative_from(&integrand, dx, anchor.0);
    let log_p: Vec<f64> = inner.iter().zip(&log_g2).map(|(i, l)| i - l).collect();
    let shift = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_p.iter().map(|l| (l - shift).exp()).collect();
    let mass = trapezoid(&p, dx);
    p.iter_mut().for_each(|v| *v /= mass);

    let (p_lo, p_hi) = (p[0], p[n]);
    if p_lo > TAIL_TOL || p_hi > TAIL_TOL {
        return Err(Error::DomainTooSmall { p_lo, p_hi });
    }
    let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a * b).collect();
    let mean = trapezoid(&xp, dx);
    Ok(DensityGrid {
        lo,
        hi,
        dx,
        x,
        p,
        log_z: shift + mass.ln(),
        mean,
    })
}

/// Root of `g` in `[lo, hi]`, if `g` changes sign there (`g` is monotone).
pub fn diffusion_zero(params: &PorousParams, lo: f64, hi: f64) -> Option<f64> {
    let g = |x: f64| params.c + params.d * erf((x - params.x_star) / params.e);
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(m).signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Mean on `[-100, 100]` with spacing 0.0025, checked against `dx/2`.
pub fn stationary_mean(params: &PorousParams) -> Result<f64> {
    let problem = porous_problem(*params)?;
    validated_mean(&problem, -DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH, DEFAULT_DX)
}

fn validated_mean(problem: &PorousProblem, lo: f64, hi: f64, dx: f64) -> Result<f64> {
    let coarse = stationary_density(problem, lo, hi, dx)?.mean;
    let fine = stationary_density(problem, lo, hi, 0.5 * dx)?.mean;
    if (coarse - fine).abs() > REFINEMENT_TOL {
        return Err(Error::Domain(format!(
            "stationary mean not converged: {coarse} at dx={dx}, {fine} at dx/2"
        )));
    }
    Ok(coarse)
}

/// Stationary mean together with the domain it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMean {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    /// Spacing of the returned value.
    pub dx: f64,
    /// Diffusion zero that forced a truncated domain, if any.
    pub diffusion_zero: Option<f64>,
}

impl ReferenceMean {
    /// One-line description for output metadata.
    pub fn note(&self) -> String {
        match self.diffusion_zero {
            None => format!("stationary mean on [{}, {}] with dx = {}", self.lo, self.hi, self.dx),
            Some(z) => format!(
                "g vanishes at x = {z:.10}; stationary mean on [{:.10}, {:.10}] with dx = {}",
                self.lo, self.hi, self.dx
            ),
        }
    }
}

/// Refinement-validated stationary mean. The grid is halved from
/// [`DEFAULT_DX`] until two successive means agree to [`REFINEMENT_TOL`],
/// and the finer one is returned. If `g` vanishes inside `[-100, 100]` the
/// domain is cut at the zero (offset by [`ZERO_OFFSET`]) on the side where
/// `g > 0`.
pub fn reference_mean(params: &PorousParams) -> Result<ReferenceMean> {
    let problem = porous_problem(*params)?;
    let (mut lo, mut hi) = (-DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH);
    let zero = diffusion_zero(params, lo, hi);
    if let Some(z) = zero {
        if problem.diffusion(hi) > 0.0 {
            lo = z + ZERO_OFFSET;
        } else {
            hi = z - ZERO_OFFSET;
        }
    }
    let mut dx = DEFAULT_DX;
    let mut prev = stationary_density(&problem, lo, hi, dx)?.mean;
    for _ in 0..MAX_HALVINGS {
        dx *= 0.5;
        let mean = stationary_density(&problem, lo, hi, dx)?.mean;
        if (mean - prev).abs() <= REFINEMENT_TOL {
            return Ok(ReferenceMean {
                mean,
                lo,
                hi,
                dx,
                diffusion_zero: zero,
            });
        }
        prev = mean;
    }
    Err(Error::Domain(format!(
        "stationary mean not converged after {MAX_HALVINGS} halvings on [{lo}, {hi}]"
    )))
}
