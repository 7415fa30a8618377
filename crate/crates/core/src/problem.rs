//! Scalar autonomous Itô SDEs `dx = f(x) dt + g(x) dW`.
//!
//! Derivatives are supplied by the problem, not differentiated automatically;
//! [`check_derivatives`] compares them against centred finite differences.

use std::fmt;
use std::sync::Arc;

/// Drift `f`, diffusion `g` and the derivatives the schemes need.
pub trait SdeProblem: Send + Sync {
    fn drift(&self, x: f64) -> f64;
    fn diffusion(&self, x: f64) -> f64;
    fn drift_deriv(&self, x: f64) -> f64;
    fn diffusion_deriv(&self, x: f64) -> f64;
    fn diffusion_deriv2(&self, x: f64) -> f64;

    fn label(&self) -> String;
}

impl<P: SdeProblem + ?Sized> SdeProblem for &P {
    fn drift(&self, x: f64) -> f64 {
        (**self).drift(x)
    }
    fn diffusion(&self, x: f64) -> f64 {
        (**self).diffusion(x)
    }
    fn drift_deriv(&self, x: f64) -> f64 {
        (**self).drift_deriv(x)
    }
    fn diffusion_deriv(&self, x: f64) -> f64 {
        (**self).diffusion_deriv(x)
    }
    fn diffusion_deriv2(&self, x: f64) -> f64 {
        (**self).diffusion_deriv2(x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<P: SdeProblem + ?Sized> SdeProblem for Box<P> {
    fn drift(&self, x: f64) -> f64 {
        (**self).drift(x)
    }
    fn diffusion(&self, x: f64) -> f64 {
        (**self).diffusion(x)
    }
    fn drift_deriv(&self, x: f64) -> f64 {
        (**self).drift_deriv(x)
    }
    fn diffusion_deriv(&self, x: f64) -> f64 {
        (**self).diffusion_deriv(x)
    }
    fn diffusion_deriv2(&self, x: f64) -> f64 {
        (**self).diffusion_deriv2(x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// The benchmark `dx = -x dt + (1 + η x) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub eta: f64,
}

impl Benchmark {
    pub fn new(eta: f64) -> Self {
        Self { eta }
    }
}

impl SdeProblem for Benchmark {
    #[inline]
    fn drift(&self, x: f64) -> f64 {
        -x
    }
    #[inline]
    fn diffusion(&self, x: f64) -> f64 {
        1.0 + self.eta * x
    }
    #[inline]
    fn drift_deriv(&self, _x: f64) -> f64 {
        -1.0
    }
    #[inline]
    fn diffusion_deriv(&self, _x: f64) -> f64 {
        self.eta
    }
    #[inline]
    fn diffusion_deriv2(&self, _x: f64) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        format!("benchmark(eta={})", self.eta)
    }
}

/// Geometric Brownian motion `dx = -x dt + η x dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gbm {
    pub eta: f64,
}

impl Gbm {
    pub fn new(eta: f64) -> Self {
        Self { eta }
    }
}

impl SdeProblem for Gbm {
    #[inline]
    fn drift(&self, x: f64) -> f64 {
        -x
    }
    #[inline]
    fn diffusion(&self, x: f64) -> f64 {
        self.eta * x
    }
    #[inline]
    fn drift_deriv(&self, _x: f64) -> f64 {
        -1.0
    }
    #[inline]
    fn diffusion_deriv(&self, _x: f64) -> f64 {
        self.eta
    }
    #[inline]
    fn diffusion_deriv2(&self, _x: f64) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        format!("gbm(eta={})", self.eta)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An SDE assembled from closures.
#[derive(Clone)]
pub struct FnSde {
    drift: ScalarFn,
    diffusion: ScalarFn,
    drift_deriv: ScalarFn,
    diffusion_deriv: ScalarFn,
    diffusion_deriv2: ScalarFn,
    label: String,
}

impl FnSde {
    pub fn new<F, G, DF, DG, DDG>(
        label: impl Into<String>,
        drift: F,
        diffusion: G,
        drift_deriv: DF,
        diffusion_deriv: DG,
        diffusion_deriv2: DDG,
    ) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        DF: Fn(f64) -> f64 + Send + Sync + 'static,
        DG: Fn(f64) -> f64 + Send + Sync + 'static,
        DDG: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            drift_deriv: Arc::new(drift_deriv),
            diffusion_deriv: Arc::new(diffusion_deriv),
            diffusion_deriv2: Arc::new(diffusion_deriv2),
            label: label.into(),
        }
    }

    /// Affine coefficients `f(x) = a + b x`, `g(x) = c + d x`.
    pub fn affine(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(
            format!("affine({a}, {b}, {c}, {d})"),
            move |x| a + b * x,
            move |x| c + d * x,
            move |_| b,
            move |_| d,
            |_| 0.0,
        )
    }
}

impl fmt::Debug for FnSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSde").field("label", &self.label).finish_non_exhaustive()
    }
}

impl SdeProblem for FnSde {
    fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }
    fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }
    fn drift_deriv(&self, x: f64) -> f64 {
        (self.drift_deriv)(x)
    }
    fn diffusion_deriv(&self, x: f64) -> f64 {
        (self.diffusion_deriv)(x)
    }
    fn diffusion_deriv2(&self, x: f64) -> f64 {
        (self.diffusion_deriv2)(x)
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Worst relative mismatch between supplied derivatives and centred finite
/// differences over `points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub drift_deriv: f64,
    pub diffusion_deriv: f64,
    pub diffusion_deriv2: f64,
}

impl DerivativeCheck {
    pub fn within(&self, first: f64, second: f64) -> bool {
        self.drift_deriv <= first && self.diffusion_deriv <= first && self.diffusion_deriv2 <= second
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    let scale = want.abs().max(1.0);
    (got - want).abs() / scale
}

/// Centred finite-difference self-check of a problem's derivative callables.
///
/// Errors are relative to `max(|derivative|, 1)` so that points where a
/// derivative crosses zero do not dominate.
pub fn check_derivatives<P: SdeProblem + ?Sized>(problem: &P, points: &[f64]) -> DerivativeCheck {
    let mut out = DerivativeCheck {
        drift_deriv: 0.0,
        diffusion_deriv: 0.0,
        diffusion_deriv2: 0.0,
    };
    for &x in points {
        let step = 1e-5 * x.abs().max(1.0);
        let fd = |f: &dyn Fn(f64) -> f64| (f(x + step) - f(x - step)) / (2.0 * step);
        let df = fd(&|y| problem.drift(y));
        let dg = fd(&|y| problem.diffusion(y));
        let ddg = fd(&|y| problem.diffusion_deriv(y));
        out.drift_deriv = out.drift_deriv.max(rel_err(problem.drift_deriv(x), df));
        out.diffusion_deriv = out.diffusion_deriv.max(rel_err(problem.diffusion_deriv(x), dg));
        out.diffusion_deriv2 = out.diffusion_deriv2.max(rel_err(problem.diffusion_deriv2(x), ddg));
    }
    out
}
