//! Reproducible Monte Carlo ensembles and strong-order self-convergence.
//!
//! Trajectories are split into fixed blocks of [`BLOCK`] indices. Each
//! block is reduced sequentially and blocks are merged in index order, so
//! the output is bit-identical for any rayon pool size.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{NoiseSource, PhiloxNoise};
use crate::problem::SdeProblem;
use crate::scheme::{step, NoiseDraw, SchemeId};
use crate::stats::{log_log_slope, Accumulator};

/// Trajectories per work item.
pub const BLOCK: u64 = 256;
/// A trajectory with `|x|` above this is terminated as blown up.
pub const BLOWUP: f64 = 1e15;
/// Relative slack when checking that `t_final / h` is an integer.
pub const STEP_COUNT_RTOL: f64 = 1e-9;
/// Reference level of [`strong_order`] relative to the smallest tested `h`.
pub const REFERENCE_REFINEMENT: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub scheme: SchemeId,
    pub x0: f64,
    pub h: f64,
    pub t_final: f64,
    pub n_traj: u64,
    pub seed: u64,
    /// Record every `output_stride`-th step; the final step is always kept.
    pub output_stride: usize,
}

/// Number of steps `t_final / h`, which must be an integer.
pub fn step_count(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!("final time must be non-negative, got {t_final}")));
    }
    let ratio = t_final / h;
    let n = ratio.round();
    if (ratio - n).abs() > STEP_COUNT_RTOL * n.max(1.0) {
        return Err(Error::Domain(format!(
            "t_final = {t_final} is not a whole number of steps of h = {h}"
        )));
    }
    Ok(n as usize)
}

impl EnsembleConfig {
    pub fn n_steps(&self) -> Result<usize> {
        step_count(self.t_final, self.h)
    }

    pub fn validate(&self) -> Result<usize> {
        if self.n_traj == 0 {
            return Err(Error::Domain("n_traj must be at least 1".into()));
        }
        if self.output_stride == 0 {
            return Err(Error::Domain("output_stride must be at least 1".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::Domain(format!("x0 must be finite, got {}", self.x0)));
        }
        self.n_steps()
    }

    /// Step indices at which moments are recorded.
    pub fn recorded_steps(&self) -> Result<Vec<usize>> {
        let n = self.validate()?;
        let mut steps: Vec<usize> = (0..=n).step_by(self.output_stride).collect();
        if *steps.last().unwrap() != n {
            steps.push(n);
        }
        Ok(steps)
    }
}

/// Sample moments of the surviving trajectories at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub se1: Vec<f64>,
    pub se2: Vec<f64>,
    /// Trajectories requested.
    pub n_traj: u64,
    /// Trajectories terminated by overflow and excluded from every estimate.
    pub n_blowups: u64,
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn survivors(&self) -> u64 {
        self.n_traj - self.n_blowups
    }
}

#[derive(Debug, Clone, Default)]
struct BlockStats {
    first: Vec<Accumulator>,
    second: Vec<Accumulator>,
    blowups: u64,
}

impl BlockStats {
    fn new(n: usize) -> Self {
        Self {
            first: vec![Accumulator::default(); n],
            second: vec![Accumulator::default(); n],
            blowups: 0,
        }
    }

    fn merge(&mut self, other: &BlockStats) {
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            a.merge(b);
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            a.merge(b);
        }
        self.blowups += other.blowups;
    }
}

/// Runs one trajectory, writing the recorded states into `out`. Returns
/// false if it blew up.
fn run_trajectory<P, N>(
    problem: &P,
    cfg: &EnsembleConfig,
    noise: &N,
    trajectory: u64,
    record: &[usize],
    out: &mut Vec<f64>,
) -> bool
where
    P: SdeProblem + ?Sized,
    N: NoiseSource,
{
    out.clear();
    let mut x = cfg.x0;
    let mut next = record.iter().peekable();
    let last = *record.last().unwrap();
    for n in 0..=last {
        if next.peek() == Some(&&n) {
            out.push(x);
            next.next();
        }
        if n == last {
            break;
        }
        let draw = noise.draw(trajectory, n as u64, cfg.h);
        match step(cfg.scheme, problem, x, cfg.h, draw) {
            Ok(y) if y.abs() <= BLOWUP => x = y,
            _ => return false,
        }
    }
    true
}

/// Ensemble moments with noise from `PhiloxNoise::new(config.seed)`.
pub fn run_ensemble<P: SdeProblem + ?Sized>(problem: &P, config: &EnsembleConfig) -> Result<MomentSeries> {
    run_ensemble_with(problem, config, &PhiloxNoise::new(config.seed))
}

/// Ensemble moments with an explicit noise source (ignores `config.seed`).
pub fn run_ensemble_with<P, N>(problem: &P, config: &EnsembleConfig, noise: &N) -> Result<MomentSeries>
where
    P: SdeProblem + ?Sized,
    N: NoiseSource,
{
    let record = config.recorded_steps()?;
    let n_rec = record.len();
    let n_blocks = config.n_traj.div_ceil(BLOCK);
    let blocks: Vec<BlockStats> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut stats = BlockStats::new(n_rec);
            let mut states = Vec::with_capacity(n_rec);
            let end = ((b + 1) * BLOCK).min(config.n_traj);
            for traj in b * BLOCK..end {
                if run_trajectory(problem, config, noise, traj, &record, &mut states) {
                    for (i, &x) in states.iter().enumerate() {
                        stats.first[i].push(x);
                        stats.second[i].push(x * x);
                    }
                } else {
                    stats.blowups += 1;
                }
            }
            stats
        })
        .collect();
    let mut total = BlockStats::new(n_rec);
    for b in &blocks {
        total.merge(b);
    }
    if total.blowups == config.n_traj {
        return Err(Error::EnsembleCollapse {
            n_traj: config.n_traj,
        });
    }
    Ok(MomentSeries {
        times: record.iter().map(|&n| n as f64 * config.h).collect(),
        mu1: total.first.iter().map(|a| a.mean).collect(),
        mu2: total.second.iter().map(|a| a.mean).collect(),
        se1: total.first.iter().map(|a| a.standard_error()).collect(),
        se2: total.second.iter().map(|a| a.standard_error()).collect(),
        n_traj: config.n_traj,
        n_blowups: total.blowups,
    })
}

/// Root-mean-square endpoint differences against a finer reference level.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongErrorReport {
    /// Tested step sizes, strictly decreasing by factors of two.
    pub h_values: Vec<f64>,
    pub rms_errors: Vec<f64>,
    /// Least-squares slope of `ln rms` against `ln h`.
    pub fitted_slope: f64,
    /// Step size of the reference level.
    pub h_reference: f64,
}

const TWO_SQRT3: f64 = 3.464_101_615_137_754_6;

/// Brownian data of one step: the increment and the mean-free part of its
/// time integral, `ζ = ∫(W(s) - W(t)) ds - h ΔW / 2`.
#[derive(Debug, Clone, Copy)]
struct Increment {
    dw: f64,
    zeta: f64,
}

impl Increment {
    fn draw(&self, h: f64) -> NoiseDraw {
        NoiseDraw::new(self.dw, TWO_SQRT3 * self.zeta / h)
    }
}

/// Pairs adjacent increments of step `h` into increments of step `2h`.
fn coarsen(fine: &[Increment], h: f64) -> Vec<Increment> {
    fine.chunks_exact(2)
        .map(|p| Increment {
            dw: p[0].dw + p[1].dw,
            zeta: p[0].zeta + p[1].zeta + 0.5 * h * (p[0].dw - p[1].dw),
        })
        .collect()
}

fn endpoint<P: SdeProblem + ?Sized>(
    problem: &P,
    scheme: SchemeId,
    x0: f64,
    h: f64,
    increments: &[Increment],
    trajectory: u64,
) -> Result<f64> {
    let blown = || Error::LevelBlowup { h, trajectory };
    let mut x = x0;
    for inc in increments {
        x = step(scheme, problem, x, h, inc.draw(h)).map_err(|_| blown())?;
        if x.abs() > BLOWUP {
            return Err(blown());
        }
    }
    Ok(x)
}

fn check_dyadic(h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::Domain("strong_order needs at least one step size".into()));
    }
    for w in h.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "step sizes must decrease by factors of two, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Strong self-convergence of `scheme` on `problem`.
///
/// The reference path uses the same scheme at `h_min / REFERENCE_REFINEMENT`
/// and every coarse level is driven by exact sums of the reference
/// increments.
pub fn strong_order<P: SdeProblem + ?Sized>(
    problem: &P,
    scheme: SchemeId,
    x0: f64,
    t_final: f64,
    h_coarse: &[f64],
    n_traj: u64,
    seed: u64,
) -> Result<StrongErrorReport> {
    check_dyadic(h_coarse)?;
    if n_traj == 0 {
        return Err(Error::Domain("n_traj must be at least 1".into()));
    }
    let h_min = *h_coarse.last().unwrap();
    let h_ref = h_min / f64::from(REFERENCE_REFINEMENT);
    let n_ref = step_count(t_final, h_ref)?;
    step_count(t_final, h_coarse[0])?;
    let ref_levels = REFERENCE_REFINEMENT.trailing_zeros() as usize;
    if !REFERENCE_REFINEMENT.is_power_of_two() {
        return Err(Error::Domain("reference refinement must be a power of two".into()));
    }
    let noise = PhiloxNoise::new(seed);
    let n_levels = h_coarse.len();

    let per_traj: Vec<Result<Vec<f64>>> = (0..n_traj)
        .into_par_iter()
        .map(|traj| {
            let mut level: Vec<Increment> = (0..n_ref as u64)
                .map(|n| {
                    let (z0, z1) = noise.standard_pair(traj, n);
                    Increment {
                        dw: h_ref.sqrt() * z0,
                        zeta: h_ref.powf(1.5) / TWO_SQRT3 * z1,
                    }
                })
                .collect();
            let reference = endpoint(problem, scheme, x0, h_ref, &level, traj)?;
            let mut h = h_ref;
            for _ in 0..ref_levels {
                level = coarsen(&level, h);
                h *= 2.0;
            }
            // `level` now has step h_min; walk upward through the tested sizes.
            let mut sq = vec![0.0; n_levels];
            for i in (0..n_levels).rev() {
                if i + 1 < n_levels {
                    level = coarsen(&level, h);
                    h *= 2.0;
                }
                let x = endpoint(problem, scheme, x0, h_coarse[i], &level, traj)?;
                sq[i] = (x - reference) * (x - reference);
            }
            Ok(sq)
        })
        .collect();

    let mut sums = vec![0.0; n_levels];
    for r in per_traj {
        for (s, v) in sums.iter_mut().zip(r?) {
            *s += v;
        }
    }
    let rms_errors: Vec<f64> = sums.iter().map(|s| (s / n_traj as f64).sqrt()).collect();
    let fitted_slope = if n_levels >= 2 {
        log_log_slope(h_coarse, &rms_errors)
    } else {
        f64::NAN
    };
    Ok(StrongErrorReport {
        h_values: h_coarse.to_vec(),
        rms_errors,
        fitted_slope,
        h_reference: h_ref,
    })
}

/// `2^-lo, ..., 2^-hi`.
pub fn dyadic_steps(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}
