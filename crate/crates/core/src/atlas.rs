//! Step-size thresholds, stability rasters and crossover search.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{amplification, LinearModelId, Moment};
use crate::scheme::SchemeId;

/// Spacing of the coarse scan over `h`.
pub const SCAN_STEP: f64 = 1e-3;
/// Number of scan points; the scan covers `(0, SCAN_STEP * SCAN_POINTS]`.
pub const SCAN_POINTS: u32 = 8000;
/// Scan ceiling.
pub const H_CEILING: f64 = SCAN_STEP * SCAN_POINTS as f64;
/// Width at which a boundary bisection stops.
pub const BISECT_TOL: f64 = 1e-9;
/// Width at which a crossover bisection stops.
pub const CROSSOVER_TOL: f64 = 1e-5;

/// Result of scanning one `η` column.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    /// End of the first stable interval `(0, h_max)`; 0 if the scan floor
    /// is already unstable, [`H_CEILING`] if the whole scan is stable.
    pub h_max: f64,
    /// Further stable intervals `(start, end)` disconnected from the first.
    pub islands: Vec<(f64, f64)>,
}

fn grid_h(k: u32) -> f64 {
    k as f64 * SCAN_STEP
}

/// Bisects between a point where `stable` holds and one where it fails.
fn bisect_edge(stable: impl Fn(f64) -> bool, mut inside: f64, mut outside: f64) -> f64 {
    while (outside - inside).abs() > BISECT_TOL {
        let mid = 0.5 * (inside + outside);
        if stable(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Scans `h ∈ (0, 8]` for the stable intervals of one `η` column.
pub fn threshold_scan(scheme: SchemeId, model: LinearModelId, moment: Moment, eta: f64) -> ThresholdScan {
    let stable = |h: f64| amplification(scheme, model, moment, eta, h).abs() < 1.0;

    // Stable runs as (first index, last index) on the scan grid.
    let mut runs: Vec<(u32, u32)> = Vec::new();
    let mut open: Option<u32> = None;
    for k in 1..=SCAN_POINTS {
        match (stable(grid_h(k)), open) {
            (true, None) => open = Some(k),
            (false, Some(start)) => {
                runs.push((start, k - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        runs.push((start, SCAN_POINTS));
    }

    let refine_end = |last: u32| {
        if last == SCAN_POINTS {
            H_CEILING
        } else {
            bisect_edge(stable, grid_h(last), grid_h(last + 1))
        }
    };
    let refine_start = |first: u32| bisect_edge(stable, grid_h(first), grid_h(first - 1));

    let mut iter = runs.into_iter().peekable();
    let h_max = match iter.peek() {
        Some(&(1, last)) => {
            iter.next();
            refine_end(last)
        }
        _ => 0.0,
    };
    let islands = iter.map(|(first, last)| (refine_start(first), refine_end(last))).collect();
    ThresholdScan { h_max, islands }
}

/// Largest `h*` such that every scanned `h ∈ (0, h*)` is stable.
pub fn max_stable_h(scheme: SchemeId, model: LinearModelId, moment: Moment, eta: f64) -> f64 {
    threshold_scan(scheme, model, moment, eta).h_max
}

/// Per-`η` thresholds for one scheme, model and moment.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityBoundary {
    pub scheme: SchemeId,
    pub model: LinearModelId,
    pub moment: Moment,
    pub etas: Vec<f64>,
    pub h_max: Vec<f64>,
    /// Disconnected stable intervals, one entry per `η` that has any.
    pub islands: Vec<(f64, Vec<(f64, f64)>)>,
}

impl StabilityBoundary {
    /// Human-readable lines describing each disconnected island.
    pub fn warnings(&self) -> Vec<String> {
        self.islands
            .iter()
            .flat_map(|(eta, list)| {
                list.iter().map(move |(a, b)| {
                    format!(
                        "{} {} moment {}: disconnected stable interval h in ({a:.6}, {b:.6}) at eta = {eta}",
                        self.scheme, self.model, self.moment
                    )
                })
            })
            .collect()
    }
}

pub fn stability_boundary(scheme: SchemeId, model: LinearModelId, moment: Moment, etas: &[f64]) -> StabilityBoundary {
    let scans: Vec<ThresholdScan> = etas
        .par_iter()
        .map(|&eta| threshold_scan(scheme, model, moment, eta))
        .collect();
    let h_max = scans.iter().map(|s| s.h_max).collect();
    let islands = etas
        .iter()
        .zip(scans)
        .filter(|(_, s)| !s.islands.is_empty())
        .map(|(&eta, s)| (eta, s.islands))
        .collect();
    StabilityBoundary {
        scheme,
        model,
        moment,
        etas: etas.to_vec(),
        h_max,
        islands,
    }
}

/// Uniform grid of `n` points from `lo` to `hi` inclusive.
pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let d = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + d * i as f64 }).collect()
        }
    }
}

/// Pointwise stability raster; `stable[i][j]` is the verdict at
/// `(eta_axis[i], h_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub eta_axis: Vec<f64>,
    pub h_axis: Vec<f64>,
    pub stable: Vec<Vec<bool>>,
}

impl RegionGrid {
    pub fn count_stable(&self) -> usize {
        self.stable.iter().flatten().filter(|&&s| s).count()
    }
}

pub fn region_grid(
    scheme: SchemeId,
    model: LinearModelId,
    moment: Moment,
    eta_range: (f64, f64),
    h_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<RegionGrid> {
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(Error::Domain(format!("grid resolution must be positive, got {resolution:?}")));
    }
    let eta_axis = uniform_axis(eta_range.0, eta_range.1, resolution.0);
    let h_axis = uniform_axis(h_range.0, h_range.1, resolution.1);
    let stable = eta_axis
        .par_iter()
        .map(|&eta| {
            h_axis
                .iter()
                .map(|&h| amplification(scheme, model, moment, eta, h).abs() < 1.0)
                .collect()
        })
        .collect();
    Ok(RegionGrid {
        eta_axis,
        h_axis,
        stable,
    })
}

/// `η` in `bracket` where the thresholds of `a` and `b` coincide.
pub fn crossover_eta(
    a: SchemeId,
    b: SchemeId,
    model: LinearModelId,
    moment: Moment,
    bracket: (f64, f64),
) -> Result<f64> {
    let diff = |eta: f64| max_stable_h(a, model, moment, eta) - max_stable_h(b, model, moment, eta);
    let (mut lo, mut hi) = bracket;
    let mut d_lo = diff(lo);
    let d_hi = diff(hi);
    if d_lo == 0.0 {
        return Ok(lo);
    }
    if d_hi == 0.0 {
        return Ok(hi);
    }
    if d_lo.signum() == d_hi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > CROSSOVER_TOL {
        let mid = 0.5 * (lo + hi);
        let d = diff(mid);
        if d == 0.0 {
            return Ok(mid);
        }
        if d.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
