//! Experiment configuration files.
//!
//! ```text
//! # comment
//! experiment = stability-region
//!
//! [parameters]
//! scheme = EM, RK3
//! moment = 2
//! ```
//!
//! Only `experiment` may appear before the `[parameters]` section, and only
//! keys known to the selected experiment are accepted. Lists are comma
//! separated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sdestab_core::{LinearModelId, Moment, SchemeId};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    AccuracyAsymptotic,
    MomentEvolution,
    StabilityRegion,
    Crossover,
    Equilibrium,
    PorousMean,
    PorousPaths,
    StrongOrder,
    GbmCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::AccuracyAsymptotic,
        Experiment::MomentEvolution,
        Experiment::StabilityRegion,
        Experiment::Crossover,
        Experiment::Equilibrium,
        Experiment::PorousMean,
        Experiment::PorousPaths,
        Experiment::StrongOrder,
        Experiment::GbmCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::AccuracyAsymptotic => "accuracy-asymptotic",
            Experiment::MomentEvolution => "moment-evolution",
            Experiment::StabilityRegion => "stability-region",
            Experiment::Crossover => "crossover",
            Experiment::Equilibrium => "equilibrium",
            Experiment::PorousMean => "porous-mean",
            Experiment::PorousPaths => "porous-paths",
            Experiment::StrongOrder => "strong-order",
            Experiment::GbmCheck => "gbm-check",
        }
    }

    /// Known keys and their desk-scale defaults. An empty default means
    /// "unset".
    pub fn schema(self) -> &'static [(&'static str, &'static str)] {
        const ALL_SCHEMES: &str = "EM, MIL, SH, RK3";
        match self {
            Experiment::AccuracyAsymptotic => &[
                ("model", "benchmark"),
                ("scheme", ALL_SCHEMES),
                ("eta", "0.1, 1.412"),
                ("moment", "1, 2"),
                ("h_min", "0.001"),
                ("h_max", "0.1"),
                ("n_h", "21"),
                ("t_final", "200"),
                ("x0", "1"),
            ],
            Experiment::MomentEvolution => &[
                ("model", "benchmark"),
                ("scheme", "EM"),
                ("eta", "0.1"),
                ("h", "0.025"),
                ("t_final", "20"),
                ("n_traj", "10000"),
                ("x0", "1"),
                ("output_stride", "20"),
                ("noise", "philox"),
                ("seed", "12345"),
            ],
            Experiment::StabilityRegion => &[
                ("model", "benchmark"),
                ("scheme", ALL_SCHEMES),
                ("moment", "1, 2"),
                ("eta", ""),
                ("eta_min", "0"),
                ("eta_max", "1.6"),
                ("n_eta", "161"),
                ("region", "false"),
                ("h_lo", "0.01"),
                ("h_hi", "3"),
                ("n_h", "300"),
            ],
            Experiment::Crossover => &[
                ("scheme_a", "RK3"),
                ("scheme_b", "EM"),
                ("model", "benchmark"),
                ("moment", "1"),
                ("eta_lo", "0.4"),
                ("eta_hi", "0.7"),
            ],
            Experiment::Equilibrium => &[
                ("eta", "0.5"),
                ("x_min", "-5"),
                ("x_max", "10"),
                ("n_points", "3001"),
            ],
            Experiment::PorousMean => &[
                ("case", "small"),
                ("scheme", ALL_SCHEMES),
                ("h", "0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64"),
                ("t_final", "16"),
                ("n_traj", "40000"),
                ("seed", "12345"),
            ],
            Experiment::PorousPaths => &[
                ("case", "large"),
                ("scheme", "SH"),
                ("h", "0.01, 1"),
                ("t_final", "16"),
                ("n_traj", "40000"),
                ("record_every", "1"),
                ("seed", "12345"),
            ],
            Experiment::StrongOrder => &[
                ("scheme", "EM, MIL"),
                ("eta", "0.5"),
                ("x0", "1"),
                ("t_final", "1"),
                ("k_min", "4"),
                ("k_max", "9"),
                ("n_traj", "2000"),
                ("seed", "12345"),
            ],
            Experiment::GbmCheck => &[
                ("scheme", "EM"),
                ("eta", "1"),
                ("h", "0.1"),
                ("t_final", "10"),
                ("n_traj", "10000"),
                ("x0", "1"),
                ("output_stride", "10"),
                ("seed", "12345"),
            ],
        }
    }

    pub fn knows(self, key: &str) -> bool {
        key == "out" || self.schema().iter().any(|(k, _)| *k == key)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// An experiment and its explicitly set parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub parameters: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            parameters: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut experiment = None;
        let mut in_params = false;
        let mut params = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[') {
                let name = section
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {lineno}: unterminated section header")))?
                    .trim();
                if name != "parameters" {
                    return Err(CliError::Config(format!("line {lineno}: unknown section `[{name}]`")));
                }
                if in_params {
                    return Err(CliError::Config(format!("line {lineno}: duplicate [parameters] section")));
                }
                in_params = true;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(CliError::Config(format!("line {lineno}: empty key")));
            }
            if in_params {
                params.push((lineno, key.to_string(), value.to_string()));
            } else if key == "experiment" {
                if experiment.is_some() {
                    return Err(CliError::Config(format!("line {lineno}: experiment given twice")));
                }
                experiment = Some(value.parse::<Experiment>()?);
            } else {
                return Err(CliError::Config(format!(
                    "line {lineno}: `{key}` must be inside [parameters]"
                )));
            }
        }
        let experiment = experiment.ok_or_else(|| CliError::Config("missing `experiment = ...`".into()))?;
        let mut cfg = ExperimentConfig::new(experiment);
        for (lineno, key, value) in params {
            if cfg.parameters.contains_key(&key) {
                return Err(CliError::Config(format!("line {lineno}: `{key}` given twice")));
            }
            cfg.set(&key, &value)
                .map_err(|e| CliError::Config(format!("line {lineno}: {e}")))?;
        }
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("experiment = {}\n\n[parameters]\n", self.experiment);
        for (k, v) in &self.parameters {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Sets a known key, rejecting unknown ones.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        if !self.experiment.knows(key) {
            return Err(CliError::Config(format!(
                "unknown key `{key}` for experiment {}",
                self.experiment
            )));
        }
        if value.contains('\n') {
            return Err(CliError::Config(format!("value for `{key}` spans lines")));
        }
        self.parameters.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Sets `key` only if it has no value yet.
    pub fn set_default(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !self.parameters.contains_key(key) {
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Explicit value, else the schema default; `None` when unset.
    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.parameters.get(key).map(String::as_str).or_else(|| {
            self.experiment
                .schema()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, d)| *d)
        })?;
        (!v.is_empty()).then_some(v)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::Config(format!("parameter `{key}` is not set")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.required(key)?;
        raw.parse()
            .map_err(|_| CliError::Config(format!("bad value `{raw}` for `{key}`")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.required(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Config(format!("bad list item `{s}` for `{key}`")))
            })
            .collect()
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v: Vec<f64> = self.list(key)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        self.get(key)
    }

    pub fn schemes(&self, key: &str) -> Result<Vec<SchemeId>, CliError> {
        self.list(key)
    }

    pub fn moments(&self, key: &str) -> Result<Vec<Moment>, CliError> {
        self.list(key)
    }

    pub fn model(&self, key: &str) -> Result<LinearModelId, CliError> {
        self.get(key)
    }

    /// Value of a key whose list must hold exactly one item.
    pub fn single<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let mut v: Vec<T> = self.list(key)?;
        if v.len() != 1 {
            return Err(CliError::Config(format!("`{key}` takes a single value here")));
        }
        Ok(v.remove(0))
    }

    /// Every key with its effective value, schema order first.
    pub fn effective(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .experiment
            .schema()
            .iter()
            .map(|(k, d)| {
                let v = self.parameters.get(*k).map(String::as_str).unwrap_or(d);
                (k.to_string(), v.to_string())
            })
            .collect();
        if let Some(v) = self.parameters.get("out") {
            out.push(("out".into(), v.clone()));
        }
        out
    }
}
