//! Special functions used by the analytic layer.

pub use libm::{erf, erfc};

/// `ln Γ(a)` for `a > 0`.
pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// Remainder of Stirling's series,
/// `ln Γ(a) - (a - ½) ln a + a - ½ ln 2π`.
///
/// For large `a` an asymptotic expansion is summed directly, which avoids the
/// cancellation between `ln Γ(a)` and `a ln a`.
pub fn stirling_remainder(a: f64) -> f64 {
    if a >= 15.0 {
        let r = 1.0 / a;
        let r2 = r * r;
        r * (1.0 / 12.0
            - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
    } else {
        ln_gamma(a) - (a - 0.5) * a.ln() + a - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}
