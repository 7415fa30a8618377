//! Explicit integrators for scalar Itô SDEs and the analysis of their
//! long-time statistics.
//!
//! The crate is built around the one-parameter benchmark
//!
//! ```text
//! dx = -x dt + (1 + η x) dW
//! ```
//!
//! which every affine scalar SDE reduces to after a rescaling of space and
//! time. For this equation (and for geometric Brownian motion) the first and
//! second moments produced by Euler–Maruyama, Milstein, stochastic Heun and
//! a three-stage stochastic Runge–Kutta scheme obey exact affine recurrences,
//! which gives closed or numerically traced stability regions and the
//! asymptotic bias of each scheme.
//!
//! Modules:
//!
//! - [`problem`] and [`scheme`]: the SDE abstraction and one-step updates.
//! - [`noise`]: counter-based Gaussian increments (Philox4x32-10).
//! - [`analytics`]: affine reduction, equilibrium density, exact moments.
//! - [`moments`]: discrete moment maps, fixed points and biases.
//! - [`atlas`]: stability thresholds, region rasters and crossovers.
//! - [`ensemble`]: reproducible Monte Carlo moments and strong-order fits.
//! - [`stats`]: streaming accumulators and log-log fits.
//! - [`porous`]: the erf-coefficient nonlinear example and its stationary
//!   density by quadrature.

pub mod analytics;
pub mod atlas;
pub mod ensemble;
mod error;
pub mod moments;
pub mod noise;
pub mod porous;
pub mod problem;
#[cfg(test)]
mod properties;
pub mod quadrature;
pub mod scheme;
pub mod special;
pub mod stats;

pub use analytics::{AffineSde, MomentValue, ReducedForm, Transform};
pub use atlas::{RegionGrid, StabilityBoundary, ThresholdScan};
pub use ensemble::{EnsembleConfig, MomentSeries, StrongErrorReport};
pub use error::{Error, Result};
pub use moments::{FixedPoint, LinearModelId, Moment, MomentMap};
pub use noise::{NoiseSource, PhiloxNoise};
pub use porous::{DensityGrid, PorousParams};
pub use problem::{Benchmark, FnSde, Gbm, SdeProblem};
pub use scheme::{NoiseDraw, Path, SchemeId};
