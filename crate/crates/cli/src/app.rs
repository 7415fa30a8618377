//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueHint};
use sdestab_core::Moment;

use crate::config::{Experiment, ExperimentConfig};
use crate::csv::Table;
use crate::error::CliError;
use crate::experiments as exp;
use crate::manifest;

/// Default output directory when neither `--out` nor `out` is given.
pub const OUT_ENV: &str = "SDESTAB_OUT";
pub const DEFAULT_OUT: &str = "sdestab-out";

#[derive(Debug, Parser)]
#[command(name = "sdestab", version, about = "Stability and accuracy experiments for stochastic integrators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration file.
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub config: Option<PathBuf>,

    /// Override one parameter; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Output directory [default: $SDESTAB_OUT or ./sdestab-out].
    #[arg(long, value_hint = ValueHint::DirPath)]
    pub out: Option<PathBuf>,

    /// Seed for experiments that draw noise.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one ensemble and write its moment series.
    Simulate(Common),
    /// Asymptotic moment bias of each scheme against step size.
    Moments(Common),
    /// Largest stable step size against eta.
    Stability(Common),
    /// Eta where two schemes' thresholds cross.
    Crossover(Common),
    /// Benchmark equilibrium density on a grid.
    Equilibrium(Common),
    /// Porous-medium experiments (`--set mode=mean|paths`).
    Porous(Common),
    /// Strong self-convergence slopes.
    StrongOrder(Common),
    /// Write the data bundle of one figure (`--set figure=ID`).
    Reproduce(Common),
}

/// Figure ids accepted by `reproduce`.
pub const FIGURES: [&str; 7] = ["accuracy", "1stMom", "2ndMom", "stab", "porous_mean", "fine_vs_coarse", "gbm"];

fn figure_experiment(figure: &str) -> Result<Experiment, CliError> {
    Ok(match figure {
        "accuracy" => Experiment::AccuracyAsymptotic,
        "1stMom" | "2ndMom" => Experiment::MomentEvolution,
        "stab" => Experiment::StabilityRegion,
        "porous_mean" => Experiment::PorousMean,
        "fine_vs_coarse" => Experiment::PorousPaths,
        "gbm" => Experiment::GbmCheck,
        other => {
            return Err(CliError::Config(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    })
}

/// Figure-level defaults layered over the experiment's own.
fn figure_defaults(figure: &str) -> &'static [(&'static str, &'static str)] {
    match figure {
        "1stMom" | "2ndMom" => &[("scheme", "EM, MIL, SH, RK3"), ("eta", "0.1, 1.41")],
        "stab" => &[("region", "true"), ("n_h", "120")],
        "porous_mean" => &[("case", "small, large")],
        _ => &[],
    }
}

fn split_set(item: &str) -> Result<(&str, &str), CliError> {
    item.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{item}`")))
}

/// Pulls a selector key (`mode`, `figure`) out of the `--set` list.
fn take_selector(common: &mut Common, key: &str) -> Result<Option<String>, CliError> {
    let mut found = None;
    let mut rest = Vec::new();
    for item in common.set.drain(..) {
        let (k, v) = split_set(&item)?;
        if k == key {
            found = Some(v.to_string());
        } else {
            rest.push(item);
        }
    }
    common.set = rest;
    Ok(found)
}

fn build_config(common: &Common, experiment: Experiment, extra: &[(&str, &str)]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let cfg = ExperimentConfig::parse(&text)?;
            if cfg.experiment != experiment {
                return Err(CliError::Config(format!(
                    "{} declares experiment {}, but this command runs {experiment}",
                    path.display(),
                    cfg.experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(experiment),
    };
    for item in &common.set {
        let (k, v) = split_set(item)?;
        cfg.set(k, v)?;
    }
    if let Some(seed) = common.seed {
        if experiment.knows("seed") {
            cfg.set("seed", &seed.to_string())?;
        } else {
            eprintln!("note: {experiment} draws no noise; --seed ignored");
        }
    }
    for (k, v) in extra {
        cfg.set_default(k, v)?;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.raw("out").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Metadata written at the top of every CSV.
fn header(command: &str, cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut h = vec![
        ("tool".to_string(), format!("sdestab {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), command.to_string()),
        ("experiment".to_string(), cfg.experiment.to_string()),
    ];
    if let Some(seed) = cfg.raw("seed") {
        h.push(("seed".to_string(), seed.to_string()));
    }
    for (k, v) in cfg.effective() {
        if k != "out" {
            h.push((format!("param.{k}"), v));
        }
    }
    h
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_all(dir: &Path, command: &str, cfg: &ExperimentConfig, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    create_dir(dir)?;
    let head = header(command, cfg);
    tables.iter().map(|t| t.write(dir, &head)).collect()
}

fn execute(command: Command) -> Result<Vec<PathBuf>, CliError> {
    let (name, mut common) = match command {
        Command::Simulate(c) => ("simulate", c),
        Command::Moments(c) => ("moments", c),
        Command::Stability(c) => ("stability", c),
        Command::Crossover(c) => ("crossover", c),
        Command::Equilibrium(c) => ("equilibrium", c),
        Command::Porous(c) => ("porous", c),
        Command::StrongOrder(c) => ("strong-order", c),
        Command::Reproduce(c) => ("reproduce", c),
    };
    if name == "reproduce" {
        return reproduce(common);
    }
    let experiment = match name {
        "simulate" => Experiment::MomentEvolution,
        "moments" => Experiment::AccuracyAsymptotic,
        "stability" => Experiment::StabilityRegion,
        "crossover" => Experiment::Crossover,
        "equilibrium" => Experiment::Equilibrium,
        "strong-order" => Experiment::StrongOrder,
        _ => match take_selector(&mut common, "mode")?.as_deref() {
            None | Some("mean") => Experiment::PorousMean,
            Some("paths") => Experiment::PorousPaths,
            Some(other) => return Err(CliError::Config(format!("unknown porous mode `{other}` (mean or paths)"))),
        },
    };
    let cfg = build_config(&common, experiment, &[])?;
    let tables = match experiment {
        Experiment::MomentEvolution => exp::simulate(&cfg)?,
        Experiment::AccuracyAsymptotic => exp::accuracy(&cfg, "accuracy.csv")?,
        Experiment::StabilityRegion => exp::stability(&cfg)?,
        Experiment::Crossover => exp::crossover(&cfg)?,
        Experiment::Equilibrium => exp::equilibrium(&cfg)?,
        Experiment::PorousMean => exp::porous_mean(&cfg)?,
        Experiment::PorousPaths => exp::porous_paths(&cfg)?,
        Experiment::StrongOrder => exp::strong(&cfg)?,
        Experiment::GbmCheck => unreachable!("gbm-check only runs through reproduce"),
    };
    write_all(&out_dir(&common, &cfg), name, &cfg, &tables)
}

fn reproduce(mut common: Common) -> Result<Vec<PathBuf>, CliError> {
    let figure = take_selector(&mut common, "figure")?
        .ok_or_else(|| CliError::Config(format!("reproduce needs --set figure=ID ({})", FIGURES.join(", "))))?;
    let experiment = figure_experiment(&figure)?;
    let cfg = build_config(&common, experiment, figure_defaults(&figure))?;
    let mut tables = match figure.as_str() {
        "accuracy" => exp::accuracy(&cfg, "accuracy.csv")?,
        "1stMom" => exp::evolution(&cfg, Moment::First, "moment1_evolution.csv")?,
        "2ndMom" => exp::evolution(&cfg, Moment::Second, "moment2_evolution.csv")?,
        "stab" => {
            let mut t = exp::stability(&cfg)?;
            t.push(exp::standard_crossovers()?);
            t
        }
        "porous_mean" => exp::porous_mean(&cfg)?,
        "fine_vs_coarse" => exp::porous_paths(&cfg)?,
        _ => exp::gbm(&cfg)?,
    };
    for t in &mut tables {
        t.meta("figure", figure.clone());
    }
    let dir = out_dir(&common, &cfg).join(&figure);
    let mut written = write_all(&dir, "reproduce", &cfg, &tables)?;
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest::group_text(&figure)).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
