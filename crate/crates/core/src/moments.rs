//! Exact first/second-moment recurrences of the four schemes on the linear
//! models.
//!
//! On the benchmark and on GBM every scheme's update is affine in `x_n` with
//! coefficients that are polynomials in the Gaussian increments, so
//!
//! ```text
//! μ⁽¹⁾ₙ₊₁ = m11 μ⁽¹⁾ₙ + b1
//! μ⁽²⁾ₙ₊₁ = m21 μ⁽¹⁾ₙ + m22 μ⁽²⁾ₙ + b2
//! ```
//!
//! holds exactly. The self-coefficients `m11` and `m22` coincide between
//! the two models; GBM has no affine or coupling terms.

use std::fmt;
use std::str::FromStr;

use crate::analytics::equilibrium_moment;
use crate::error::{Error, Result};
use crate::scheme::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearModelId {
    Benchmark,
    Gbm,
}

impl LinearModelId {
    pub const ALL: [LinearModelId; 2] = [LinearModelId::Benchmark, LinearModelId::Gbm];

    pub fn name(self) -> &'static str {
        match self {
            LinearModelId::Benchmark => "benchmark",
            LinearModelId::Gbm => "gbm",
        }
    }
}

impl fmt::Display for LinearModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinearModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benchmark" | "bench" => Ok(LinearModelId::Benchmark),
            "gbm" => Ok(LinearModelId::Gbm),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Which moment a stability or bias query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Moment {
    First,
    Second,
}

impl Moment {
    pub fn order(self) -> u8 {
        match self {
            Moment::First => 1,
            Moment::Second => 2,
        }
    }
}

impl TryFrom<u8> for Moment {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Moment::First),
            2 => Ok(Moment::Second),
            _ => Err(Error::Domain(format!("moment must be 1 or 2, got {k}"))),
        }
    }
}

impl FromStr for Moment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("moment must be 1 or 2, got `{s}`")))?;
        Moment::try_from(k).map_err(|e| Error::Config(e.to_string()))
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order())
    }
}

/// Affine map on `(μ⁽¹⁾, μ⁽²⁾)` induced by one step of a scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMap {
    pub m11: f64,
    pub b1: f64,
    pub m21: f64,
    pub m22: f64,
    pub b2: f64,
    pub scheme: SchemeId,
    pub model: LinearModelId,
    pub eta: f64,
    pub h: f64,
}

impl MomentMap {
    /// One application of the map.
    #[inline]
    pub fn apply(&self, (mu1, mu2): (f64, f64)) -> (f64, f64) {
        (
            self.m11 * mu1 + self.b1,
            self.m21 * mu1 + self.m22 * mu2 + self.b2,
        )
    }

    pub fn self_coefficient(&self, moment: Moment) -> f64 {
        match moment {
            Moment::First => self.m11,
            Moment::Second => self.m22,
        }
    }
}

/// Evaluates `c[0] + c[1] h + c[2] h² + ...`.
#[inline]
fn poly(h: f64, c: &[f64]) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * h + ci)
}

/// Coefficients `(m11, b1, m21, m22, b2)` on the benchmark.
fn benchmark_coefficients(scheme: SchemeId, eta: f64, h: f64) -> [f64; 5] {
    let e = eta;
    let e2 = e * e;
    let e4 = e2 * e2;
    let e6 = e4 * e2;
    let p = 2.0 + e2;
    let p2 = p * p;
    let p3 = p2 * p;
    let p4 = p2 * p2;
    match scheme {
        SchemeId::Em => [
            1.0 - h,
            0.0,
            2.0 * h * e,
            poly(h, &[1.0, e2 - 2.0, 1.0]),
            h,
        ],
        SchemeId::Mil => [
            1.0 - h,
            0.0,
            poly(h, &[0.0, 2.0 * e, e2 * e]),
            poly(h, &[1.0, e2 - 2.0, 1.0 + 0.5 * e4]),
            poly(h, &[0.0, 1.0, 0.5 * e2]),
        ],
        SchemeId::Sh => [
            poly(h, &[1.0, -1.0, p2 / 8.0]),
            e * p / 8.0 * h * h,
            poly(
                h,
                &[
                    0.0,
                    2.0 * e,
                    -e * (10.0 + 3.0 * e2) / 4.0,
                    e * (2.0 + 5.0 * e2 + 2.0 * e4) / 4.0,
                    e * p3 / 32.0,
                ],
            ),
            poly(
                h,
                &[
                    1.0,
                    -(2.0 - e2),
                    -(p2 - 12.0) / 4.0,
                    (e6 + 3.0 * e4 - 4.0) / 4.0,
                    p4 / 64.0,
                ],
            ),
            poly(
                h,
                &[
                    0.0,
                    1.0,
                    -p / 2.0,
                    (1.0 + e2) * (1.0 + e2) / 4.0,
                    e2 * p2 / 64.0,
                ],
            ),
        ],
        SchemeId::Rk3 => {
            let p5 = p4 * p;
            let p6 = p3 * p3;
            [
                poly(h, &[1.0, -1.0, (4.0 - e4) / 8.0, -p3 / 48.0]),
                poly(h, &[0.0, 0.0, -e * (2.0 + 3.0 * e2) / 24.0, -e * p2 / 48.0]),
                poly(
                    h,
                    &[
                        0.0,
                        2.0 * e,
                        -e * (38.0 - 9.0 * e2) / 12.0,
                        e * (56.0 + 2.0 * e2 - 5.0 * e4) / 24.0,
                        -e * (72.0 + 44.0 * e2 - 50.0 * e4 - 27.0 * e6) / 96.0,
                        e * p3 * (1.0 + 3.0 * e2) / 72.0,
                        e * p5 / 1152.0,
                    ],
                ),
                poly(
                    h,
                    &[
                        1.0,
                        -(2.0 - e2),
                        (8.0 - 8.0 * e2 + e4) / 4.0,
                        -(32.0 - 36.0 * e2 + 3.0 * e6) / 24.0,
                        p2 * (28.0 - 52.0 * e2 + 27.0 * e4) / 192.0,
                        -p4 * (1.0 - 2.0 * e2) / 96.0,
                        p6 / 2304.0,
                    ],
                ),
                poly(
                    h,
                    &[
                        0.0,
                        1.0,
                        -(2.0 - e2) / 2.0,
                        (8.0 - e4) / 12.0,
                        -(32.0 + 20.0 * e2 - 44.0 * e4 - 27.0 * e6) / 192.0,
                        p2 * (2.0 + 7.0 * e2 + 6.0 * e4) / 288.0,
                        e2 * p4 / 2304.0,
                    ],
                ),
            ]
        }
    }
}

/// GBM self-coefficients in the expanded form of the GBM analysis.
fn gbm_coefficients(scheme: SchemeId, eta: f64, h: f64) -> (f64, f64) {
    let e2 = eta * eta;
    let e4 = e2 * e2;
    let e6 = e4 * e2;
    let e8 = e4 * e4;
    match scheme {
        SchemeId::Em => (1.0 - h, (1.0 - h) * (1.0 - h) + e2 * h),
        SchemeId::Mil => (1.0 - h, poly(h, &[1.0, e2 - 2.0, 1.0 + 0.5 * e4])),
        SchemeId::Sh => {
            let q = 1.0 + 0.5 * e2;
            (
                poly(h, &[1.0, -1.0, 0.5 * q * q]),
                poly(
                    h,
                    &[
                        1.0,
                        e2 - 2.0,
                        2.0 - e2 - 0.25 * e4,
                        0.25 * e6 + 0.75 * e4 - 1.0,
                        e8 / 64.0 + e6 / 8.0 + 3.0 * e4 / 8.0 + 0.5 * e2 + 0.25,
                    ],
                ),
            )
        }
        SchemeId::Rk3 => {
            let e10 = e8 * e2;
            let e12 = e6 * e6;
            (
                poly(
                    h,
                    &[
                        1.0,
                        -1.0,
                        0.5 - e4 / 8.0,
                        -(e6 / 48.0 + e4 / 8.0 + e2 / 4.0 + 1.0 / 6.0),
                    ],
                ),
                poly(
                    h,
                    &[
                        1.0,
                        e2 - 2.0,
                        e4 / 4.0 - 2.0 * e2 + 2.0,
                        -e6 / 8.0 + 1.5 * e2 - 4.0 / 3.0,
                        9.0 / 64.0 * e8 + 7.0 / 24.0 * e6 - 3.0 / 8.0 * e4 - 0.5 * e2 + 7.0 / 12.0,
                        e10 / 48.0 + 5.0 / 32.0 * e8 + 5.0 / 12.0 * e6 + 5.0 / 12.0 * e4 - 1.0 / 6.0,
                        e12 / 2304.0
                            + e10 / 192.0
                            + 5.0 / 192.0 * e8
                            + 5.0 / 72.0 * e6
                            + 5.0 / 48.0 * e4
                            + e2 / 12.0
                            + 1.0 / 36.0,
                    ],
                ),
            )
        }
    }
}

/// The exact moment map of `scheme` on `model` at `(η, h)`.
pub fn moment_map(scheme: SchemeId, model: LinearModelId, eta: f64, h: f64) -> MomentMap {
    let (m11, b1, m21, m22, b2) = match model {
        LinearModelId::Benchmark => {
            let [m11, b1, m21, m22, b2] = benchmark_coefficients(scheme, eta, h);
            (m11, b1, m21, m22, b2)
        }
        LinearModelId::Gbm => {
            let (m11, m22) = gbm_coefficients(scheme, eta, h);
            (m11, 0.0, 0.0, m22, 0.0)
        }
    };
    MomentMap {
        m11,
        b1,
        m21,
        m22,
        b2,
        scheme,
        model,
        eta,
        h,
    }
}

/// `(μ⁽¹⁾ₙ, μ⁽²⁾ₙ)` for `n = 0..=steps` from the deterministic start `x0`.
pub fn iterate_moments(map: &MomentMap, x0: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut mu = (x0, x0 * x0);
    out.push(mu);
    for n in 1..=steps {
        mu = map.apply(mu);
        if !(mu.0.is_finite() && mu.1.is_finite()) {
            return Err(Error::RecurrenceOverflow { step: n });
        }
        out.push(mu);
    }
    Ok(out)
}

/// Self-coefficient of `moment`: the amplification factor of the
/// recurrence.
pub fn amplification(scheme: SchemeId, model: LinearModelId, moment: Moment, eta: f64, h: f64) -> f64 {
    moment_map(scheme, model, eta, h).self_coefficient(moment)
}

/// Strict contractivity `|amplification| < 1`.
pub fn is_stable(scheme: SchemeId, model: LinearModelId, moment: Moment, eta: f64, h: f64) -> bool {
    amplification(scheme, model, moment, eta, h).abs() < 1.0
}

/// Limits of the moment recurrence where they exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub mu1_inf: Option<f64>,
    pub mu2_inf: Option<f64>,
    pub contractive1: bool,
    pub contractive2: bool,
}

/// Fixed point of the affine moment map.
pub fn fixed_point(map: &MomentMap) -> FixedPoint {
    let contractive1 = map.m11.abs() < 1.0;
    let contractive2 = contractive1 && map.m22.abs() < 1.0;
    let mu1_inf = contractive1.then(|| map.b1 / (1.0 - map.m11));
    let mu2_inf = mu1_inf
        .filter(|_| contractive2)
        .map(|mu1| (map.m21 * mu1 + map.b2) / (1.0 - map.m22));
    FixedPoint {
        mu1_inf,
        mu2_inf,
        contractive1,
        contractive2,
    }
}

/// Fixed-point moment minus the exact asymptotic moment.
pub fn asymptotic_bias(scheme: SchemeId, model: LinearModelId, moment: Moment, eta: f64, h: f64) -> Result<f64> {
    let fp = fixed_point(&moment_map(scheme, model, eta, h));
    let unstable = || Error::Unstable {
        scheme,
        moment: moment.order(),
        eta,
        h,
    };
    match moment {
        Moment::First => Ok(fp.mu1_inf.ok_or_else(unstable)?),
        Moment::Second => {
            let mu2 = fp.mu2_inf.ok_or_else(unstable)?;
            let exact = match model {
                LinearModelId::Gbm => 0.0,
                LinearModelId::Benchmark => equilibrium_moment(eta, 2)?.finite().ok_or_else(|| {
                    Error::Domain(format!("second equilibrium moment is infinite for eta = {eta}"))
                })?,
            };
            Ok(mu2 - exact)
        }
    }
}
