//! Uniform-grid trapezoid rules.

/// Composite trapezoid rule for samples `y` on a grid of spacing `dx`.
pub fn trapezoid(y: &[f64], dx: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => dx * (0.5 * (y[0] + y[n - 1]) + y[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral from index `anchor`, signed so that
/// `out[j] = ∫_{x_anchor}^{x_j} y`.
pub fn cumulative_from(y: &[f64], dx: f64, anchor: usize) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for j in anchor + 1..y.len() {
        out[j] = out[j - 1] + 0.5 * dx * (y[j - 1] + y[j]);
    }
    for j in (0..anchor).rev() {
        out[j] = out[j + 1] - 0.5 * dx * (y[j] + y[j + 1]);
    }
    out
}

/// Integrates `f` over `[lo, hi]` with `n` trapezoid panels.
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let dx = (hi - lo) / n as f64;
    let y: Vec<f64> = (0..=n).map(|i| f(lo + dx * i as f64)).collect();
    trapezoid(&y, dx)
}
