//! Dotted-key TOML configuration (`cmaes.sigma0 = 0.3`) mapped one-to-one
//! onto [`RelmConfig`].

use std::fmt::Write as _;
use std::path::Path;

use crate::cmaes::{EigenSchedule, StopCriteria};
use crate::environment::SampleSpec;
use crate::evaluator::{DriftSettings, DriftThresholds, FitnessWeights};
use crate::latent::LatentConfig;

use super::ControllerError;

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesConfig {
    pub sigma0: f64,
    /// `None` picks `4 + ⌊3·ln n⌋`.
    pub lambda: Option<usize>,
    pub seed: u64,
    pub max_generations: u64,
    pub target_fitness: Option<f64>,
    pub tol_fun: f64,
    pub sigma_floor: f64,
    pub eigen_schedule: EigenSchedule,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        let stop = StopCriteria::default();
        CmaesConfig {
            sigma0: 0.5,
            lambda: None,
            seed: 42,
            max_generations: 100,
            target_fitness: None,
            tol_fun: stop.tol_fun,
            sigma_floor: stop.sigma_floor,
            eigen_schedule: EigenSchedule::Lazy,
        }
    }
}

impl CmaesConfig {
    pub fn stop_criteria(&self) -> StopCriteria {
        StopCriteria {
            max_generations: self.max_generations,
            target_fitness: self.target_fitness,
            tol_fun: self.tol_fun,
            sigma_floor: self.sigma_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub capacity_periods: u64,
    pub batch_size: usize,
    pub new_fraction: f64,
    pub stratify: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            capacity_periods: 4,
            batch_size: 512,
            new_fraction: 0.5,
            stratify: true,
        }
    }
}

impl EnvConfig {
    pub fn sample_spec(&self, seed: u64) -> SampleSpec {
        SampleSpec {
            batch_size: self.batch_size,
            new_fraction: self.new_fraction,
            stratify: self.stratify,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatorConfig {
    pub thresholds: DriftThresholds,
    pub bin_count: usize,
    pub weights: FitnessWeights,
    /// Probability at or above which label 1 is predicted.
    pub threshold: f64,
    pub log_loss_eps: f64,
    pub eps_prop: f64,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        let d = DriftSettings::default();
        EvaluatorConfig {
            thresholds: d.thresholds,
            bin_count: d.bin_count,
            weights: FitnessWeights::default(),
            threshold: d.decision_threshold,
            log_loss_eps: d.log_loss_eps,
            eps_prop: d.eps_prop,
        }
    }
}

impl EvaluatorConfig {
    pub fn drift_settings(&self) -> DriftSettings {
        DriftSettings {
            thresholds: self.thresholds.clone(),
            bin_count: self.bin_count,
            decision_threshold: self.threshold,
            log_loss_eps: self.log_loss_eps,
            eps_prop: self.eps_prop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecalibrationConfig {
    pub max_generations: u64,
    /// `None` means `0.3 · cmaes.sigma0`.
    pub sigma_restart: Option<f64>,
    pub refit_encoders: bool,
}

impl Default for RecalibrationConfig {
    fn default() -> Self {
        RecalibrationConfig {
            max_generations: 80,
            sigma_restart: None,
            refit_encoders: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelmConfig {
    pub hidden: Vec<usize>,
    pub cmaes: CmaesConfig,
    pub env: EnvConfig,
    pub evaluator: EvaluatorConfig,
    pub latent: LatentConfig,
    pub recalibration: RecalibrationConfig,
    /// Rows per stream step when the stream has no period column.
    pub stream_batch_rows: usize,
    /// Parallel fitness evaluators; 0 uses every available core.
    pub workers: usize,
}

impl Default for RelmConfig {
    fn default() -> Self {
        RelmConfig {
            hidden: vec![45, 15, 6],
            cmaes: CmaesConfig::default(),
            env: EnvConfig::default(),
            evaluator: EvaluatorConfig::default(),
            latent: LatentConfig::default(),
            recalibration: RecalibrationConfig::default(),
            stream_batch_rows: 500,
            workers: 0,
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> ControllerError {
    ControllerError::Config(format!("{key} = '{value}': {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ControllerError> {
    value.parse().map_err(|_| bad(key, value, "not a valid number"))
}

fn real(key: &str, value: &str) -> Result<f64, ControllerError> {
    let v: f64 = num(key, value)?;
    if !v.is_finite() {
        return Err(bad(key, value, "must be finite"));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool, ControllerError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn auto<T>(
    key: &str,
    value: &str,
    parse: impl Fn(&str, &str) -> Result<T, ControllerError>,
) -> Result<Option<T>, ControllerError> {
    if value == "auto" || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn flatten(
    prefix: &str,
    table: &toml::Table,
    out: &mut Vec<(String, String)>,
) -> Result<(), ControllerError> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let text = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|x| match x {
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    _ => Err(ControllerError::Config(format!("{key}: expected a list of integers"))),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            toml::Value::Datetime(_) => {
                return Err(ControllerError::Config(format!("{key}: dates are not accepted")))
            }
        };
        out.push((key, text));
    }
    Ok(())
}

/// TOML spelling of a canonical value: lists for the topology, bare numbers
/// and booleans where TOML can hold them, quoted strings otherwise.
fn toml_literal(key: &str, value: &str) -> String {
    if key == "topology.hidden" {
        return format!("[{}]", value.replace(',', ", "));
    }
    let bare = value == "true"
        || value == "false"
        || value.parse::<i64>().is_ok()
        || (value.parse::<f64>().is_ok() && value.contains('.'));
    if bare {
        value.to_string()
    } else {
        format!("\"{value}\"")
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl RelmConfig {
    /// Every key accepted by [`set`](Self::set), in file order.
    pub const KEYS: &'static [&'static str] = &[
        "topology.hidden",
        "cmaes.sigma0",
        "cmaes.lambda",
        "cmaes.seed",
        "cmaes.max_generations",
        "cmaes.target_fitness",
        "cmaes.tol_fun",
        "cmaes.sigma_floor",
        "cmaes.eigen_schedule",
        "env.capacity_periods",
        "env.batch_size",
        "env.new_fraction",
        "env.stratify",
        "evaluator.psi_warn",
        "evaluator.psi_recalibrate",
        "evaluator.accuracy_drop",
        "evaluator.f1_drop",
        "evaluator.bin_count",
        "evaluator.weight_accuracy",
        "evaluator.weight_f1",
        "evaluator.threshold",
        "evaluator.log_loss_eps",
        "evaluator.eps_prop",
        "latent.latent_dim",
        "latent.rbm_hidden",
        "latent.rbm_epochs",
        "latent.rbm_learning_rate",
        "latent.mute",
        "recalibration.max_generations",
        "recalibration.sigma_restart",
        "recalibration.refit_encoders",
        "stream.batch_rows",
        "runtime.workers",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ControllerError> {
        let value = value.trim();
        match key {
            "topology.hidden" => {
                self.hidden = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|s| num::<usize>(key, s.trim()))
                        .collect::<Result<_, _>>()?
                }
            }
            "cmaes.sigma0" => self.cmaes.sigma0 = real(key, value)?,
            "cmaes.lambda" => self.cmaes.lambda = auto(key, value, num)?,
            "cmaes.seed" => self.cmaes.seed = num(key, value)?,
            "cmaes.max_generations" => self.cmaes.max_generations = num(key, value)?,
            "cmaes.target_fitness" => self.cmaes.target_fitness = auto(key, value, real)?,
            "cmaes.tol_fun" => self.cmaes.tol_fun = real(key, value)?,
            "cmaes.sigma_floor" => self.cmaes.sigma_floor = real(key, value)?,
            "cmaes.eigen_schedule" => {
                self.cmaes.eigen_schedule = EigenSchedule::parse(value)
                    .ok_or_else(|| bad(key, value, "expected every or lazy"))?
            }
            "env.capacity_periods" => self.env.capacity_periods = num(key, value)?,
            "env.batch_size" => self.env.batch_size = num(key, value)?,
            "env.new_fraction" => self.env.new_fraction = real(key, value)?,
            "env.stratify" => self.env.stratify = flag(key, value)?,
            "evaluator.psi_warn" => self.evaluator.thresholds.psi_warn = real(key, value)?,
            "evaluator.psi_recalibrate" => {
                self.evaluator.thresholds.psi_recalibrate = real(key, value)?
            }
            "evaluator.accuracy_drop" => self.evaluator.thresholds.accuracy_drop = real(key, value)?,
            "evaluator.f1_drop" => self.evaluator.thresholds.f1_drop = real(key, value)?,
            "evaluator.bin_count" => self.evaluator.bin_count = num(key, value)?,
            "evaluator.weight_accuracy" => self.evaluator.weights.accuracy = real(key, value)?,
            "evaluator.weight_f1" => self.evaluator.weights.f1 = real(key, value)?,
            "evaluator.threshold" => self.evaluator.threshold = real(key, value)?,
            "evaluator.log_loss_eps" => self.evaluator.log_loss_eps = real(key, value)?,
            "evaluator.eps_prop" => self.evaluator.eps_prop = real(key, value)?,
            "latent.latent_dim" => self.latent.latent_dim = auto(key, value, num)?,
            "latent.rbm_hidden" => self.latent.rbm_hidden = auto(key, value, num)?,
            "latent.rbm_epochs" => self.latent.rbm_epochs = num(key, value)?,
            "latent.rbm_learning_rate" => self.latent.rbm_learning_rate = real(key, value)?,
            "latent.mute" => self.latent.mute = flag(key, value)?,
            "recalibration.max_generations" => {
                self.recalibration.max_generations = num(key, value)?
            }
            "recalibration.sigma_restart" => {
                self.recalibration.sigma_restart = auto(key, value, real)?
            }
            "recalibration.refit_encoders" => self.recalibration.refit_encoders = flag(key, value)?,
            "stream.batch_rows" => self.stream_batch_rows = num(key, value)?,
            "runtime.workers" => self.workers = num(key, value)?,
            _ => return Err(ControllerError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a TOML text whose leaves map onto dotted keys, e.g.
    /// `cmaes.sigma0 = 0.3` or a `[cmaes]` table with `sigma0 = 0.3`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ControllerError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ControllerError::Config(e.to_string()))?;
        let mut leaves = Vec::new();
        flatten("", &table, &mut leaves)?;
        for (key, value) in leaves {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ControllerError> {
        let mut cfg = RelmConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ControllerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ControllerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; `parse(to_kv())` reproduces the config.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let value = match *key {
                "topology.hidden" => self
                    .hidden
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                "cmaes.sigma0" => self.cmaes.sigma0.to_string(),
                "cmaes.lambda" => show_opt(&self.cmaes.lambda),
                "cmaes.seed" => self.cmaes.seed.to_string(),
                "cmaes.max_generations" => self.cmaes.max_generations.to_string(),
                "cmaes.target_fitness" => show_opt(&self.cmaes.target_fitness),
                "cmaes.tol_fun" => self.cmaes.tol_fun.to_string(),
                "cmaes.sigma_floor" => self.cmaes.sigma_floor.to_string(),
                "cmaes.eigen_schedule" => self.cmaes.eigen_schedule.as_str().to_string(),
                "env.capacity_periods" => self.env.capacity_periods.to_string(),
                "env.batch_size" => self.env.batch_size.to_string(),
                "env.new_fraction" => self.env.new_fraction.to_string(),
                "env.stratify" => self.env.stratify.to_string(),
                "evaluator.psi_warn" => self.evaluator.thresholds.psi_warn.to_string(),
                "evaluator.psi_recalibrate" => self.evaluator.thresholds.psi_recalibrate.to_string(),
                "evaluator.accuracy_drop" => self.evaluator.thresholds.accuracy_drop.to_string(),
                "evaluator.f1_drop" => self.evaluator.thresholds.f1_drop.to_string(),
                "evaluator.bin_count" => self.evaluator.bin_count.to_string(),
                "evaluator.weight_accuracy" => self.evaluator.weights.accuracy.to_string(),
                "evaluator.weight_f1" => self.evaluator.weights.f1.to_string(),
                "evaluator.threshold" => self.evaluator.threshold.to_string(),
                "evaluator.log_loss_eps" => self.evaluator.log_loss_eps.to_string(),
                "evaluator.eps_prop" => self.evaluator.eps_prop.to_string(),
                "latent.latent_dim" => show_opt(&self.latent.latent_dim),
                "latent.rbm_hidden" => show_opt(&self.latent.rbm_hidden),
                "latent.rbm_epochs" => self.latent.rbm_epochs.to_string(),
                "latent.rbm_learning_rate" => self.latent.rbm_learning_rate.to_string(),
                "latent.mute" => self.latent.mute.to_string(),
                "recalibration.max_generations" => self.recalibration.max_generations.to_string(),
                "recalibration.sigma_restart" => show_opt(&self.recalibration.sigma_restart),
                "recalibration.refit_encoders" => self.recalibration.refit_encoders.to_string(),
                "stream.batch_rows" => self.stream_batch_rows.to_string(),
                "runtime.workers" => self.workers.to_string(),
                _ => unreachable!("key list and formatter out of sync"),
            };
            let _ = writeln!(out, "{key} = {}", toml_literal(key, &value));
        }
        out
    }

    pub fn sigma_restart(&self) -> f64 {
        self.recalibration
            .sigma_restart
            .unwrap_or(0.3 * self.cmaes.sigma0)
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let fail = |m: String| Err(ControllerError::Config(m));
        if self.hidden.contains(&0) {
            return fail("topology.hidden sizes must be >= 1".into());
        }
        let c = &self.cmaes;
        if !(c.sigma0 > 0.0) {
            return fail(format!("cmaes.sigma0 {} must be > 0", c.sigma0));
        }
        if matches!(c.lambda, Some(l) if l < 2) {
            return fail("cmaes.lambda must be >= 2".into());
        }
        if c.tol_fun < 0.0 || c.sigma_floor < 0.0 {
            return fail("cmaes.tol_fun and cmaes.sigma_floor must be >= 0".into());
        }
        let e = &self.env;
        if e.capacity_periods == 0 {
            return fail("env.capacity_periods must be >= 1".into());
        }
        if e.batch_size == 0 {
            return fail("env.batch_size must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&e.new_fraction) {
            return fail(format!("env.new_fraction {} outside [0, 1]", e.new_fraction));
        }
        let v = &self.evaluator;
        v.thresholds
            .validate()
            .map_err(|err| ControllerError::Config(err.to_string()))?;
        if v.bin_count < 2 {
            return fail("evaluator.bin_count must be >= 2".into());
        }
        if v.weights.accuracy < 0.0 || v.weights.f1 < 0.0 {
            return fail("fitness weights must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&v.threshold) {
            return fail(format!("evaluator.threshold {} outside [0, 1]", v.threshold));
        }
        if !(v.log_loss_eps > 0.0 && v.log_loss_eps < 0.5) {
            return fail("evaluator.log_loss_eps must lie in (0, 0.5)".into());
        }
        if !(v.eps_prop > 0.0 && v.eps_prop < 1.0) {
            return fail("evaluator.eps_prop must lie in (0, 1)".into());
        }
        let l = &self.latent;
        if l.latent_dim == Some(0) || l.rbm_hidden == Some(0) {
            return fail("latent sizes must be >= 1".into());
        }
        if !(l.rbm_learning_rate > 0.0) {
            return fail("latent.rbm_learning_rate must be > 0".into());
        }
        if matches!(self.recalibration.sigma_restart, Some(s) if !(s > 0.0)) {
            return fail("recalibration.sigma_restart must be > 0".into());
        }
        if self.stream_batch_rows == 0 {
            return fail("stream.batch_rows must be >= 1".into());
        }
        Ok(())
    }
}
