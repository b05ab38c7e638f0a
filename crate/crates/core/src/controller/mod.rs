//! The self-learning loop: initial CMA-ES training over replay samples,
//! streaming prediction with drift checks, warm-start recalibration, metrics
//! history and persistence.

mod config;
mod metrics;
mod persist;
mod synth;

use std::collections::VecDeque;
use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cmaes::{should_stop, CmaesError, CmaesState, StopCriteria, StopReason};
use crate::environment::{Entry, EnvironmentError, ReplayWindow};
use crate::evaluator::{
    self, drift_report, fitness_from_predictions, Baselines, Confusion, DriftReport, EvalError,
    Verdict,
};
use crate::ingest::{fit_standardization, Dataset, FeatureSchema, IngestError, Record, StandardizationStats};
use crate::latent::{encode_state, fit_encoders, Encoders, LatentError, StateVector};
use crate::policy::{label_for, Genome, Policy, PolicyError, Topology};

pub use config::{CmaesConfig, EnvConfig, EvaluatorConfig, RecalibrationConfig, RelmConfig};
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRow, Phase, METRICS_HEADER};
pub use persist::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use synth::{generate_synthetic_drift, DriftKind, SynthSpec};

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Latent(#[from] LatentError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("optimizer: {0}")]
    Cmaes(#[from] CmaesError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("training data contains only label {0}; both labels are required")]
    SingleLabel(u8),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("config: {0}")]
    Config(String),
    #[error("synthetic spec: {0}")]
    Synth(String),
    #[error("unsupported model file version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("not a model file: bad magic bytes")]
    BadMagic,
    #[error("model file corrupted: checksum {found:08x} does not match stored {stored:08x}")]
    Checksum { stored: u32, found: u32 },
    #[error("model file malformed: {0}")]
    Persist(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Workers(String),
}

/// Raw records kept alongside the window so encoders can be refit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawHistory {
    pub(crate) entries: VecDeque<(u64, Record)>,
}

impl RawHistory {
    fn push(&mut self, period: u64, rows: &[Record], capacity: u64) {
        self.entries.extend(rows.iter().map(|r| (period, r.clone())));
        while let Some((p, _)) = self.entries.front() {
            if period - p >= capacity {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Result of one [`RelmModel::stream_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub probabilities: Vec<f64>,
    pub predictions: Vec<u8>,
    pub report: DriftReport,
    pub recalibrated: bool,
}

/// Accuracy, F1 and log-loss of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub accuracy: f64,
    pub f1: f64,
    pub log_loss: f64,
}

#[derive(Debug, Clone)]
pub struct RelmModel {
    pub config: RelmConfig,
    pub schema: FeatureSchema,
    pub stats: StandardizationStats,
    pub encoders: Encoders,
    pub topology: Topology,
    /// Deployed genome.
    pub genome: Genome,
    pub cmaes: CmaesState,
    /// States the drift check compares against.
    pub snapshot: Vec<Vec<f64>>,
    pub baselines: Baselines,
    pub window: ReplayWindow,
    pub metrics: Vec<MetricsRow>,
    pub(crate) raw: RawHistory,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) step: u64,
    pub(crate) recalibrations: u64,
    /// Where to save the model whenever the deployed genome improves. Not
    /// persisted.
    pub checkpoint: Option<PathBuf>,
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, ControllerError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ControllerError::Workers(e.to_string()))
}

fn check_labels(data: &Dataset) -> Result<(), ControllerError> {
    let labels = data.labels();
    if labels.is_empty() {
        return Err(IngestError::EmptyDataset.into());
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(ControllerError::SingleLabel(first));
    }
    Ok(())
}

fn encode_all(
    data: &Dataset,
    encoders: &Encoders,
    stats: &StandardizationStats,
    schema: &FeatureSchema,
) -> Result<Vec<StateVector>, ControllerError> {
    data.rows()
        .iter()
        .map(|r| encode_state(r, encoders, stats, schema).map_err(ControllerError::from))
        .collect()
}

/// Fitness of one genome on a shared batch.
fn batch_fitness(
    genome: &[f64],
    topology: &Topology,
    batch: &[&Entry],
    cfg: &EvaluatorConfig,
) -> Result<f64, ControllerError> {
    let mut policy = Policy::new(genome, topology)?;
    let mut preds = Vec::with_capacity(batch.len());
    let mut truths = Vec::with_capacity(batch.len());
    for e in batch {
        preds.push(label_for(policy.forward(e.state.as_slice())?, cfg.threshold));
        truths.push(e.label);
    }
    Ok(fitness_from_predictions(&preds, &truths, cfg.weights)?)
}

fn score(probabilities: &[f64], truths: &[u8], cfg: &EvaluatorConfig) -> Result<Scores, ControllerError> {
    let preds: Vec<u8> = probabilities.iter().map(|&p| label_for(p, cfg.threshold)).collect();
    let confusion = Confusion::from_labels(&preds, truths);
    if confusion.total() == 0 {
        return Err(EvalError::Empty.into());
    }
    Ok(Scores {
        accuracy: confusion.accuracy(),
        f1: confusion.f1(),
        log_loss: evaluator::log_loss(probabilities, truths, cfg.log_loss_eps)?,
    })
}

/// Fits stats and encoders, fills the window at period 0 and runs CMA-ES
/// until a stop criterion fires.
pub fn train_initial(config: &RelmConfig, train: &Dataset) -> Result<RelmModel, ControllerError> {
    train_initial_with_checkpoint(config, train, None)
}

/// [`train_initial`] that also saves the model to `checkpoint` every time the
/// deployed genome improves.
pub fn train_initial_with_checkpoint(
    config: &RelmConfig,
    train: &Dataset,
    checkpoint: Option<PathBuf>,
) -> Result<RelmModel, ControllerError> {
    config.validate()?;
    check_labels(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.cmaes.seed);
    let encoder_seed = rng.next_u64();
    let cmaes_seed = rng.next_u64();

    let schema = train.schema().clone();
    let stats = fit_standardization(train)?;
    let encoders = fit_encoders(train, &stats, &config.latent, encoder_seed)?;
    let states = encode_all(train, &encoders, &stats, &schema)?;
    let topology = Topology::with_hidden(encoders.state_dim(&schema), &config.hidden)?;
    let genome = Genome::zeros(&topology);
    let cmaes = CmaesState::new(
        genome.0.clone(),
        config.cmaes.sigma0,
        config.cmaes.lambda,
        cmaes_seed,
        config.cmaes.eigen_schedule,
    )?;

    let mut window = ReplayWindow::new(config.env.capacity_periods)?;
    window.push_batch(states.into_iter().zip(train.labels()).collect(), 0)?;
    let mut raw = RawHistory::default();
    raw.push(0, train.rows(), config.env.capacity_periods);

    let mut model = RelmModel {
        config: config.clone(),
        schema,
        stats,
        encoders,
        topology,
        genome,
        cmaes,
        snapshot: Vec::new(),
        baselines: Baselines { accuracy: 0.0, f1: 0.0 },
        window,
        metrics: Vec::new(),
        raw,
        rng,
        step: 0,
        recalibrations: 0,
        checkpoint,
    };
    let crit = config.cmaes.stop_criteria();
    model.evolve(Phase::Initial, &crit)?;
    model.freeze()?;
    Ok(model)
}

impl RelmModel {
    pub fn state_dim(&self) -> usize {
        self.topology.input_dim()
    }

    pub fn recalibration_count(&self) -> u64 {
        self.recalibrations
    }

    fn check_schema(&self, data: &Dataset) -> Result<(), ControllerError> {
        if data.schema() != &self.schema {
            return Err(ControllerError::SchemaMismatch(format!(
                "model expects columns [{}], batch has [{}]",
                self.schema.names().join(","),
                data.schema().names().join(",")
            )));
        }
        Ok(())
    }

    pub fn encode(&self, data: &Dataset) -> Result<Vec<StateVector>, ControllerError> {
        self.check_schema(data)?;
        encode_all(data, &self.encoders, &self.stats, &self.schema)
    }

    /// Output probabilities of the deployed genome.
    pub fn probabilities(&self, states: &[StateVector]) -> Result<Vec<f64>, ControllerError> {
        Ok(evaluator::probabilities(
            &self.genome,
            &self.topology,
            states.iter().map(StateVector::as_slice),
        )?)
    }

    /// Probabilities and labels for every row of `data`.
    pub fn predict(&self, data: &Dataset) -> Result<(Vec<f64>, Vec<u8>), ControllerError> {
        let probs = self.probabilities(&self.encode(data)?)?;
        let labels = probs
            .iter()
            .map(|&p| label_for(p, self.config.evaluator.threshold))
            .collect();
        Ok((probs, labels))
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<Scores, ControllerError> {
        let (probs, _) = self.predict(data)?;
        score(&probs, &data.labels(), &self.config.evaluator)
    }

    /// Drift check of `data` against the frozen snapshot and baselines,
    /// without touching the model.
    pub fn drift_check(&self, data: &Dataset) -> Result<DriftReport, ControllerError> {
        let states = self.encode(data)?;
        let probs = self.probabilities(&states)?;
        Ok(drift_report(
            &probs,
            &data.labels(),
            &self.snapshot,
            &states,
            self.baselines,
            &self.config.evaluator.drift_settings(),
        )?)
    }

    /// Scores of the deployed genome on the newest window period.
    fn current_scores(&self) -> Result<Scores, ControllerError> {
        let mut policy = Policy::new(&self.genome.0, &self.topology)?;
        let mut probs = Vec::new();
        let mut truths = Vec::new();
        for e in self.window.current_entries() {
            probs.push(policy.forward(e.state.as_slice())?);
            truths.push(e.label);
        }
        score(&probs, &truths, &self.config.evaluator)
    }

    /// Re-freezes baselines and the drift snapshot on the newest period.
    fn freeze(&mut self) -> Result<(), ControllerError> {
        let s = self.current_scores()?;
        self.baselines = Baselines {
            accuracy: s.accuracy,
            f1: s.f1,
        };
        self.snapshot = self
            .window
            .current_entries()
            .map(|e| e.state.0.clone())
            .collect();
        Ok(())
    }

    fn next_step(&mut self) -> u64 {
        self.step += 1;
        self.step
    }

    /// Ask/evaluate/tell until `crit` fires. Every generation shares one
    /// freshly sampled batch across its candidates and the deployed genome,
    /// which is replaced only by a strictly better candidate.
    fn evolve(&mut self, phase: Phase, crit: &StopCriteria) -> Result<StopReason, ControllerError> {
        let pool = worker_pool(self.config.workers)?;
        let cfg = self.config.evaluator.clone();
        let mut spread = f64::INFINITY;
        loop {
            if let Some(reason) = should_stop(&self.cmaes, crit, spread) {
                return Ok(reason);
            }
            let population = self.cmaes.ask()?;
            let spec = self.config.env.sample_spec(self.rng.next_u64());
            let batch = self.window.sample_refs(&spec)?;
            let topology = &self.topology;
            let fitnesses: Vec<f64> = pool.install(|| {
                population
                    .par_iter()
                    .map(|x| batch_fitness(x.as_slice(), topology, &batch, &cfg))
                    .collect::<Result<_, _>>()
            })?;
            let incumbent = batch_fitness(&self.genome.0, topology, &batch, &cfg)?;
            let report = self.cmaes.tell(&population, &fitnesses)?;
            spread = report.spread;

            let best = (0..fitnesses.len())
                .filter(|&i| fitnesses[i].is_finite())
                .min_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(a.cmp(&b)));
            let improved = matches!(best, Some(i) if fitnesses[i] < incumbent);
            if improved {
                let i = best.expect("improved implies a best candidate");
                self.genome = Genome(population[i].as_slice().to_vec());
            }

            let s = self.current_scores()?;
            let step = self.next_step();
            self.metrics.push(MetricsRow {
                step,
                phase,
                generation: Some(self.cmaes.generation()),
                accuracy: s.accuracy,
                f1: s.f1,
                log_loss: s.log_loss,
                best_fitness: Some(self.cmaes.best_fitness()),
                sigma: Some(self.cmaes.sigma()),
                max_psi: None,
                verdict: None,
            });
            if improved {
                if let Some(path) = self.checkpoint.clone() {
                    save_model(self, &path)?;
                }
            }
        }
    }

    /// Predicts a labelled batch, checks drift, pushes the batch as the next
    /// period and recalibrates when the verdict demands it.
    pub fn stream_step(&mut self, batch: &Dataset) -> Result<StreamOutcome, ControllerError> {
        if batch.is_empty() {
            return Err(IngestError::EmptyDataset.into());
        }
        let states = self.encode(batch)?;
        let probabilities = self.probabilities(&states)?;
        let labels = batch.labels();
        let report = drift_report(
            &probabilities,
            &labels,
            &self.snapshot,
            &states,
            self.baselines,
            &self.config.evaluator.drift_settings(),
        )?;
        let predictions: Vec<u8> = probabilities
            .iter()
            .map(|&p| label_for(p, self.config.evaluator.threshold))
            .collect();

        let period = self.window.current_period().map_or(0, |p| p + 1);
        self.window
            .push_batch(states.into_iter().zip(labels).collect(), period)?;
        self.raw
            .push(period, batch.rows(), self.config.env.capacity_periods);

        let step = self.next_step();
        self.metrics.push(MetricsRow {
            step,
            phase: Phase::Streaming,
            generation: None,
            accuracy: report.accuracy,
            f1: report.f1,
            log_loss: report.log_loss,
            best_fitness: None,
            sigma: None,
            max_psi: Some(report.max_psi),
            verdict: Some(report.verdict),
        });

        let recalibrated = report.verdict == Verdict::Recalibrate;
        if recalibrated {
            self.recalibrate()?;
        }
        Ok(StreamOutcome {
            probabilities,
            predictions,
            report,
            recalibrated,
        })
    }

    /// Re-encodes the window from raw history with freshly fitted stats and
    /// encoders.
    fn refit_encoders(&mut self) -> Result<(), ControllerError> {
        let rows: Vec<Record> = self.raw.entries.iter().map(|(_, r)| r.clone()).collect();
        let periods: Vec<u64> = self.raw.entries.iter().map(|(p, _)| *p).collect();
        let data = Dataset::new(self.schema.clone(), rows, periods)?;
        let stats = fit_standardization(&data)?;
        let encoders = fit_encoders(&data, &stats, &self.config.latent, self.rng.next_u64())?;
        if encoders.state_dim(&self.schema) != self.state_dim() {
            return Err(ControllerError::SchemaMismatch(
                "refit encoders changed the state dimension".into(),
            ));
        }
        let states = encode_all(&data, &encoders, &stats, &self.schema)?;
        let entries: Vec<Entry> = self
            .window
            .entries()
            .zip(states)
            .map(|(e, state)| Entry {
                period: e.period,
                state,
                label: e.label,
            })
            .collect();
        self.window = ReplayWindow::from_parts(
            self.window.capacity_periods(),
            self.window.current_period(),
            self.window.dim(),
            entries,
        );
        self.stats = stats;
        self.encoders = encoders;
        Ok(())
    }

    /// Warm-started CMA-ES run on rehearsal batches from the current window:
    /// mean = deployed genome, `sigma_restart`, identity covariance.
    pub fn recalibrate(&mut self) -> Result<StopReason, ControllerError> {
        if self.window.is_empty() {
            return Err(EnvironmentError::EmptyWindow.into());
        }
        if self.config.recalibration.refit_encoders {
            self.refit_encoders()?;
        }
        self.cmaes = CmaesState::new(
            self.genome.0.clone(),
            self.config.sigma_restart(),
            self.config.cmaes.lambda,
            self.rng.next_u64(),
            self.config.cmaes.eigen_schedule,
        )?;
        let crit = StopCriteria {
            max_generations: self.config.recalibration.max_generations,
            ..self.config.cmaes.stop_criteria()
        };
        let reason = self.evolve(Phase::Recalibrating, &crit)?;
        self.recalibrations += 1;
        self.freeze()?;
        Ok(reason)
    }

    /// Splits a stream into steps: one per period tag when the schema has a
    /// period column, otherwise fixed-size chunks.
    pub fn stream_batches(&self, data: &Dataset) -> Vec<Dataset> {
        if data.schema().timestamp_index().is_some() {
            data.period_groups().into_iter().map(|(_, d)| d).collect()
        } else {
            data.chunks(self.config.stream_batch_rows)
        }
    }

    /// Restarts the controller random stream, e.g. for a seeded stream run.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.config.cmaes.seed = seed;
    }

    /// Current CMA-ES mean as a genome.
    pub fn search_mean(&self) -> Genome {
        Genome(self.cmaes.mean().as_slice().to_vec())
    }
}
