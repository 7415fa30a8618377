//! One runner per experiment. Each turns a configuration into tables.

use std::str::FromStr;

use sdestab_core::analytics::{benchmark_moment1, benchmark_moment2, equilibrium_moment, equilibrium_pdf, gbm_moment};
use sdestab_core::atlas::{crossover_eta, region_grid, stability_boundary, uniform_axis};
use sdestab_core::ensemble::{dyadic_steps, run_ensemble, run_ensemble_with, step_count, strong_order};
use sdestab_core::moments::{asymptotic_bias, iterate_moments, moment_map};
use sdestab_core::noise::ZeroNoise;
use sdestab_core::porous::{porous_problem, reference_mean};
use sdestab_core::scheme::simulate_path;
use sdestab_core::stats::log_space;
use sdestab_core::{
    Benchmark, EnsembleConfig, Error, Gbm, LinearModelId, Moment, MomentSeries, NoiseSource, PhiloxNoise,
    PorousParams, SchemeId, SdeProblem,
};

use crate::config::ExperimentConfig;
use crate::csv::Table;
use crate::error::CliError;

pub const MOMENTS_COLS: &[&str] = &["t", "mu1", "se1", "mu2", "se2", "n_blowups"];
pub const PATH_COLS: &[&str] = &["t", "x"];
pub const ACCURACY_COLS: &[&str] = &[
    "h",
    "scheme",
    "eta",
    "moment",
    "exact",
    "fixed_point",
    "abs_bias",
    "t_final",
    "recurrence",
    "recurrence_bias",
];
pub const EVOLUTION_COLS: &[&str] = &["t", "scheme", "eta", "h", "mu", "se", "recurrence", "exact", "rel_err", "n_blowups"];
pub const STABILITY_COLS: &[&str] = &["eta", "h_max", "scheme", "model", "moment"];
pub const REGION_COLS: &[&str] = &["eta", "h", "stable", "scheme", "model", "moment"];
pub const CROSSOVER_COLS: &[&str] = &["scheme_a", "scheme_b", "model", "moment", "eta_lo", "eta_hi", "eta_cross"];
pub const EQUILIBRIUM_COLS: &[&str] = &["x", "pdf"];
pub const POROUS_MEAN_COLS: &[&str] = &["h", "abs_err_mean", "se", "scheme"];
pub const POROUS_PATH_COLS: &[&str] = &["t", "mean", "se", "abs_err", "n_blowups", "scheme", "h"];
pub const STRONG_COLS: &[&str] = &["h", "rms_error", "scheme"];
pub const STRONG_FIT_COLS: &[&str] = &["scheme", "slope", "h_reference"];
pub const GBM_COLS: &[&str] = &["t", "mu2", "se2", "recurrence_mu2", "exact_mu2", "n_blowups", "scheme"];

/// Brackets of the standard RK3 / EM threshold crossovers.
pub const STANDARD_CROSSOVERS: [(Moment, (f64, f64)); 3] = [
    (Moment::First, (0.4, 0.7)),
    (Moment::Second, (0.3, 0.7)),
    (Moment::Second, (1.0, 1.3)),
];

/// Problems `simulate` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModel {
    Linear(LinearModelId),
    PorousSmall,
    PorousLarge,
}

impl FromStr for SimModel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "porous-small" => Ok(SimModel::PorousSmall),
            "porous-large" => Ok(SimModel::PorousLarge),
            other => other
                .parse()
                .map(SimModel::Linear)
                .map_err(|_| CliError::Config(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PorousCase {
    Small,
    Large,
}

impl PorousCase {
    pub fn name(self) -> &'static str {
        match self {
            PorousCase::Small => "small",
            PorousCase::Large => "large",
        }
    }

    pub fn params(self) -> PorousParams {
        match self {
            PorousCase::Small => PorousParams::small_eta(),
            PorousCase::Large => PorousParams::large_eta(),
        }
    }
}

impl FromStr for PorousCase {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "small" => Ok(PorousCase::Small),
            "large" => Ok(PorousCase::Large),
            other => Err(CliError::Config(format!("unknown porous case `{other}`"))),
        }
    }
}

fn problem_for(model: SimModel, eta: f64) -> Result<Box<dyn SdeProblem + Sync>, CliError> {
    Ok(match model {
        SimModel::Linear(LinearModelId::Benchmark) => Box::new(Benchmark::new(eta)),
        SimModel::Linear(LinearModelId::Gbm) => Box::new(Gbm::new(eta)),
        SimModel::PorousSmall => Box::new(porous_problem(PorousParams::small_eta())?),
        SimModel::PorousLarge => Box::new(porous_problem(PorousParams::large_eta())?),
    })
}

fn positive(cfg: &ExperimentConfig, key: &str) -> Result<f64, CliError> {
    let v = cfg.f64(key)?;
    if v <= 0.0 {
        return Err(CliError::Config(format!("`{key}` must be positive")));
    }
    Ok(v)
}

fn count(cfg: &ExperimentConfig, key: &str) -> Result<usize, CliError> {
    let v: usize = cfg.get(key)?;
    if v == 0 {
        return Err(CliError::Config(format!("`{key}` must be at least 1")));
    }
    Ok(v)
}

fn positive_list(cfg: &ExperimentConfig, key: &str) -> Result<Vec<f64>, CliError> {
    let v = cfg.f64_list(key)?;
    if v.is_empty() || v.iter().any(|&x| x <= 0.0) {
        return Err(CliError::Config(format!("`{key}` must list positive values")));
    }
    Ok(v)
}

fn nonempty<T>(v: Vec<T>, key: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("`{key}` is empty")));
    }
    Ok(v)
}

/// Steps between records for a spacing `every` in time units.
fn stride_for(every: f64, h: f64) -> Result<usize, CliError> {
    step_count(every, h).map_err(|e| CliError::Config(format!("record spacing {every} with h = {h}: {e}")))
}

pub fn seeded_config(cfg: &ExperimentConfig) -> Result<u64, CliError> {
    cfg.get("seed")
}

/// `simulate`: one ensemble, plus the trajectory itself when `n_traj = 1`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let model: SimModel = cfg.get("model")?;
    let scheme: SchemeId = cfg.single("scheme")?;
    let eta: f64 = cfg.single("eta")?;
    let h: f64 = cfg.single("h")?;
    let noise_kind: String = cfg.get("noise")?;
    let zero = match noise_kind.as_str() {
        "philox" => false,
        "zero" => true,
        other => return Err(CliError::Config(format!("unknown noise `{other}` (philox or zero)"))),
    };
    let ens = EnsembleConfig {
        scheme,
        x0: cfg.f64("x0")?,
        h,
        t_final: positive(cfg, "t_final")?,
        n_traj: cfg.get("n_traj")?,
        seed: seeded_config(cfg)?,
        output_stride: count(cfg, "output_stride")?,
    };
    let problem = problem_for(model, eta)?;
    let series = if zero {
        run_ensemble_with(&problem, &ens, &ZeroNoise)?
    } else {
        run_ensemble(&problem, &ens)?
    };
    let mut moments = Table::new("moments.csv", MOMENTS_COLS);
    moments.meta("n_traj", ens.n_traj.to_string());
    moments.meta("n_blowups", series.n_blowups.to_string());
    for i in 0..series.len() {
        moments.push(vec![
            series.times[i].into(),
            series.mu1[i].into(),
            series.se1[i].into(),
            series.mu2[i].into(),
            series.se2[i].into(),
            series.n_blowups.into(),
        ]);
    }
    let mut out = vec![moments];
    if ens.n_traj == 1 {
        let n_steps = ens.n_steps()?;
        let path = if zero {
            simulate_path(scheme, &problem, ens.x0, h, n_steps, ZeroNoise.stream(0, h))?
        } else {
            simulate_path(scheme, &problem, ens.x0, h, n_steps, PhiloxNoise::new(ens.seed).stream(0, h))?
        };
        let mut t = Table::new("path.csv", PATH_COLS);
        for (time, x) in path.times.iter().zip(&path.states) {
            t.push(vec![(*time).into(), (*x).into()]);
        }
        out.push(t);
    }
    Ok(out)
}

fn exact_asymptote(model: LinearModelId, moment: Moment, eta: f64) -> Option<f64> {
    match (model, moment) {
        (_, Moment::First) | (LinearModelId::Gbm, Moment::Second) => Some(0.0),
        (LinearModelId::Benchmark, Moment::Second) => equilibrium_moment(eta, 2).ok()?.finite(),
    }
}

/// `moments` / `accuracy`: fixed-point bias against `h`, with the moment
/// recurrence run to `t_final` as a check of the limit.
pub fn accuracy(cfg: &ExperimentConfig, file: &str) -> Result<Vec<Table>, CliError> {
    let model = cfg.model("model")?;
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let etas = nonempty(cfg.f64_list("eta")?, "eta")?;
    let moments = nonempty(cfg.moments("moment")?, "moment")?;
    let (h_lo, h_hi) = (positive(cfg, "h_min")?, positive(cfg, "h_max")?);
    if h_lo > h_hi {
        return Err(CliError::Config("`h_min` exceeds `h_max`".into()));
    }
    let hs = log_space(h_lo, h_hi, count(cfg, "n_h")?);
    let t_final = positive(cfg, "t_final")?;
    let x0 = cfg.f64("x0")?;
    let mut t = Table::new(file, ACCURACY_COLS);
    let mut skipped = 0usize;
    for &s in &schemes {
        for &eta in &etas {
            for &m in &moments {
                let Some(exact) = exact_asymptote(model, m, eta) else {
                    t.meta("note", format!("{model} moment {m} has no finite limit at eta = {eta}"));
                    continue;
                };
                for &h in &hs {
                    let bias = match asymptotic_bias(s, model, m, eta, h) {
                        Ok(b) => b,
                        Err(Error::Unstable { .. }) => {
                            skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let map = moment_map(s, model, eta, h);
                    let n = (t_final / h).ceil() as usize;
                    let (mut mu1, mut mu2) = (x0, x0 * x0);
                    for _ in 0..n {
                        if m == Moment::First {
                            mu1 = map.m11 * mu1 + map.b1;
                        } else {
                            (mu1, mu2) = map.apply((mu1, mu2));
                        }
                    }
                    let rec = if m == Moment::First { mu1 } else { mu2 };
                    t.push(vec![
                        h.into(),
                        s.name().into(),
                        eta.into(),
                        u64::from(m.order()).into(),
                        exact.into(),
                        (exact + bias).into(),
                        bias.abs().into(),
                        (n as f64 * h).into(),
                        rec.into(),
                        (rec - exact).into(),
                    ]);
                }
            }
        }
    }
    if skipped > 0 {
        t.meta("note", format!("{skipped} (scheme, eta, moment, h) points outside the stability region omitted"));
    }
    Ok(vec![t])
}

/// Ensemble moment against recurrence and exact solution over time.
pub fn evolution(cfg: &ExperimentConfig, moment: Moment, file: &str) -> Result<Vec<Table>, CliError> {
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let etas = nonempty(cfg.f64_list("eta")?, "eta")?;
    let hs = positive_list(cfg, "h")?;
    let t_final = positive(cfg, "t_final")?;
    let x0 = cfg.f64("x0")?;
    let n_traj: u64 = cfg.get("n_traj")?;
    let seed = seeded_config(cfg)?;
    let stride = count(cfg, "output_stride")?;
    let mut t = Table::new(file, EVOLUTION_COLS);
    for &s in &schemes {
        for &eta in &etas {
            for &h in &hs {
                let ens = EnsembleConfig {
                    scheme: s,
                    x0,
                    h,
                    t_final,
                    n_traj,
                    seed,
                    output_stride: stride,
                };
                let series = run_ensemble(&Benchmark::new(eta), &ens)?;
                let steps = ens.n_steps()?;
                let rec = iterate_moments(&moment_map(s, LinearModelId::Benchmark, eta, h), x0, steps)?;
                for i in 0..series.len() {
                    let time = series.times[i];
                    let n = (time / h).round() as usize;
                    let (mu, se, r, exact) = match moment {
                        Moment::First => (series.mu1[i], series.se1[i], rec[n].0, benchmark_moment1(time, x0)),
                        Moment::Second => (series.mu2[i], series.se2[i], rec[n].1, benchmark_moment2(time, x0, eta)),
                    };
                    t.push(vec![
                        time.into(),
                        s.name().into(),
                        eta.into(),
                        h.into(),
                        mu.into(),
                        se.into(),
                        r.into(),
                        exact.into(),
                        ((mu - exact) / exact.abs()).into(),
                        series.n_blowups.into(),
                    ]);
                }
            }
        }
    }
    Ok(vec![t])
}

fn eta_axis(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    if cfg.raw("eta").is_some() {
        return nonempty(cfg.f64_list("eta")?, "eta");
    }
    let (lo, hi) = (cfg.f64("eta_min")?, cfg.f64("eta_max")?);
    if lo > hi {
        return Err(CliError::Config("`eta_min` exceeds `eta_max`".into()));
    }
    Ok(uniform_axis(lo, hi, count(cfg, "n_eta")?))
}

/// Threshold curves, optionally with the full stability raster.
pub fn stability(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let model = cfg.model("model")?;
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let moments = nonempty(cfg.moments("moment")?, "moment")?;
    let etas = eta_axis(cfg)?;
    let mut boundary = Table::new("stability.csv", STABILITY_COLS);
    for &s in &schemes {
        for &m in &moments {
            let b = stability_boundary(s, model, m, &etas);
            for w in b.warnings() {
                eprintln!("warning: {w}");
                boundary.meta("warning", w);
            }
            for (eta, h) in b.etas.iter().zip(&b.h_max) {
                boundary.push(vec![
                    (*eta).into(),
                    (*h).into(),
                    s.name().into(),
                    model.name().into(),
                    u64::from(m.order()).into(),
                ]);
            }
        }
    }
    let mut out = vec![boundary];
    if cfg.flag("region")? {
        let (lo, hi) = (positive(cfg, "h_lo")?, positive(cfg, "h_hi")?);
        let (e_lo, e_hi) = (etas[0], etas[etas.len() - 1]);
        let n_h = count(cfg, "n_h")?;
        let mut region = Table::new("stability_region.csv", REGION_COLS);
        for &s in &schemes {
            for &m in &moments {
                let g = region_grid(s, model, m, (e_lo, e_hi), (lo, hi), (etas.len(), n_h))?;
                for (i, eta) in g.eta_axis.iter().enumerate() {
                    for (j, h) in g.h_axis.iter().enumerate() {
                        region.push(vec![
                            (*eta).into(),
                            (*h).into(),
                            u64::from(g.stable[i][j]).into(),
                            s.name().into(),
                            model.name().into(),
                            u64::from(m.order()).into(),
                        ]);
                    }
                }
            }
        }
        out.push(region);
    }
    Ok(out)
}

fn crossover_row(t: &mut Table, a: SchemeId, b: SchemeId, model: LinearModelId, m: Moment, bracket: (f64, f64)) -> Result<(), CliError> {
    let eta = crossover_eta(a, b, model, m, bracket)?;
    t.push(vec![
        a.name().into(),
        b.name().into(),
        model.name().into(),
        u64::from(m.order()).into(),
        bracket.0.into(),
        bracket.1.into(),
        eta.into(),
    ]);
    Ok(())
}

pub fn crossover(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let mut t = Table::new("crossover.csv", CROSSOVER_COLS);
    let bracket = (cfg.f64("eta_lo")?, cfg.f64("eta_hi")?);
    crossover_row(
        &mut t,
        cfg.get("scheme_a")?,
        cfg.get("scheme_b")?,
        cfg.model("model")?,
        cfg.get("moment")?,
        bracket,
    )?;
    Ok(vec![t])
}

/// The three RK3 / EM crossovers on the benchmark.
pub fn standard_crossovers() -> Result<Table, CliError> {
    let mut t = Table::new("crossover.csv", CROSSOVER_COLS);
    for (m, bracket) in STANDARD_CROSSOVERS {
        crossover_row(&mut t, SchemeId::Rk3, SchemeId::Em, LinearModelId::Benchmark, m, bracket)?;
    }
    Ok(t)
}

pub fn equilibrium(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let eta = cfg.f64("eta")?;
    let (lo, hi) = (cfg.f64("x_min")?, cfg.f64("x_max")?);
    let n = count(cfg, "n_points")?;
    if !(lo < hi) {
        return Err(CliError::Config("`x_min` must be below `x_max`".into()));
    }
    let mut t = Table::new("equilibrium.csv", EQUILIBRIUM_COLS);
    match equilibrium_moment(eta, 2)?.finite() {
        Some(v) => t.meta("mu2_inf", crate::csv::format_num(v)),
        None => t.meta("mu2_inf", "inf"),
    }
    for x in uniform_axis(lo, hi, n) {
        t.push(vec![x.into(), equilibrium_pdf(eta, x).into()]);
    }
    Ok(vec![t])
}

pub fn porous_mean(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let cases: Vec<PorousCase> = nonempty(cfg.list("case")?, "case")?;
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let hs = positive_list(cfg, "h")?;
    let t_final = positive(cfg, "t_final")?;
    let n_traj: u64 = cfg.get("n_traj")?;
    let seed = seeded_config(cfg)?;
    let mut out = Vec::new();
    for case in cases {
        let params = case.params();
        let problem = porous_problem(params)?;
        let reference = reference_mean(&params)?;
        let mut t = Table::new(format!("porous_mean_{}.csv", case.name()), POROUS_MEAN_COLS);
        t.meta("reference_mean", crate::csv::format_num(reference.mean));
        t.meta("reference", reference.note());
        for &s in &schemes {
            for &h in &hs {
                let ens = EnsembleConfig {
                    scheme: s,
                    x0: params.x_star,
                    h,
                    t_final,
                    n_traj,
                    seed,
                    output_stride: step_count(t_final, h)?,
                };
                let series = run_ensemble(&problem, &ens)?;
                let last = series.len() - 1;
                if series.n_blowups > 0 {
                    t.meta("note", format!("{s} h = {h}: {} trajectories blew up", series.n_blowups));
                }
                t.push(vec![
                    h.into(),
                    (series.mu1[last] - reference.mean).abs().into(),
                    series.se1[last].into(),
                    s.name().into(),
                ]);
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Mean paths; flags any step size whose final mean error exceeds ten
/// times that of the finest one.
pub fn porous_paths(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let case: PorousCase = cfg.get("case")?;
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let mut hs = positive_list(cfg, "h")?;
    hs.sort_by(f64::total_cmp);
    let t_final = positive(cfg, "t_final")?;
    let n_traj: u64 = cfg.get("n_traj")?;
    let seed = seeded_config(cfg)?;
    let every = positive(cfg, "record_every")?;
    let params = case.params();
    let problem = porous_problem(params)?;
    let reference = reference_mean(&params)?;
    let mut t = Table::new("porous_paths.csv", POROUS_PATH_COLS);
    t.meta("case", case.name());
    t.meta("reference_mean", crate::csv::format_num(reference.mean));
    t.meta("reference", reference.note());
    eprintln!("note: {}", reference.note());
    for &s in &schemes {
        let mut finals: Vec<(f64, f64)> = Vec::new();
        for &h in &hs {
            let ens = EnsembleConfig {
                scheme: s,
                x0: params.x_star,
                h,
                t_final,
                n_traj,
                seed,
                output_stride: stride_for(every, h)?,
            };
            let series: MomentSeries = run_ensemble(&problem, &ens)?;
            for i in 0..series.len() {
                t.push(vec![
                    series.times[i].into(),
                    series.mu1[i].into(),
                    series.se1[i].into(),
                    (series.mu1[i] - reference.mean).abs().into(),
                    series.n_blowups.into(),
                    s.name().into(),
                    h.into(),
                ]);
            }
            finals.push((h, (series.mu1[series.len() - 1] - reference.mean).abs()));
        }
        let (h_fine, e_fine) = finals[0];
        for &(h, e) in &finals[1..] {
            if e > 10.0 * e_fine {
                let msg = format!(
                    "{s} h = {h}: mean error {e:.3e} at t = {t_final} exceeds 10x the h = {h_fine} value {e_fine:.3e}"
                );
                eprintln!("unstable: {msg}");
                t.meta("unstable", msg);
            }
        }
    }
    Ok(vec![t])
}

pub fn strong(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let eta = cfg.f64("eta")?;
    let (k_min, k_max): (i32, i32) = (cfg.get("k_min")?, cfg.get("k_max")?);
    if k_max < k_min + 1 {
        return Err(CliError::Config("need `k_max` > `k_min`".into()));
    }
    let hs = dyadic_steps(k_min, k_max);
    let mut errors = Table::new("strong_order.csv", STRONG_COLS);
    let mut fit = Table::new("strong_order_fit.csv", STRONG_FIT_COLS);
    for &s in &schemes {
        let r = strong_order(
            &Benchmark::new(eta),
            s,
            cfg.f64("x0")?,
            positive(cfg, "t_final")?,
            &hs,
            cfg.get("n_traj")?,
            seeded_config(cfg)?,
        )?;
        for (h, e) in r.h_values.iter().zip(&r.rms_errors) {
            errors.push(vec![(*h).into(), (*e).into(), s.name().into()]);
        }
        fit.push(vec![s.name().into(), r.fitted_slope.into(), r.h_reference.into()]);
    }
    Ok(vec![errors, fit])
}

pub fn gbm(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let schemes = nonempty(cfg.schemes("scheme")?, "scheme")?;
    let eta = cfg.f64("eta")?;
    let h = positive(cfg, "h")?;
    let x0 = cfg.f64("x0")?;
    let mut t = Table::new("gbm.csv", GBM_COLS);
    for &s in &schemes {
        let ens = EnsembleConfig {
            scheme: s,
            x0,
            h,
            t_final: positive(cfg, "t_final")?,
            n_traj: cfg.get("n_traj")?,
            seed: seeded_config(cfg)?,
            output_stride: count(cfg, "output_stride")?,
        };
        let series = run_ensemble(&Gbm::new(eta), &ens)?;
        let rec = iterate_moments(&moment_map(s, LinearModelId::Gbm, eta, h), x0, ens.n_steps()?)?;
        for i in 0..series.len() {
            let time = series.times[i];
            let n = (time / h).round() as usize;
            t.push(vec![
                time.into(),
                series.mu2[i].into(),
                series.se2[i].into(),
                rec[n].1.into(),
                gbm_moment(time, x0, eta, 2)?.into(),
                series.n_blowups.into(),
                s.name().into(),
            ]);
        }
        let last = series.len() - 1;
        let z = (series.mu2[last] - gbm_moment(series.times[last], x0, eta, 2)?).abs() / series.se2[last];
        t.meta("z_final", format!("{s}: |mu2 - exact| / se2 = {z:.3}"));
    }
    Ok(vec![t])
}
