//! Latent state encoders: PCA over standardized continuous columns and a
//! CD-1 trained Restricted Boltzmann Machine over one-hot discrete columns.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use nalgebra::DMatrix;

use crate::ingest::{Dataset, FeatureSchema, IngestError, Record, StandardizationStats, Value};
use crate::linalg::symmetric_eigen;

/// Mini-batch size used by contrastive divergence.
pub const RBM_BATCH_SIZE: usize = 16;
/// Standard deviation of the initial RBM weights.
pub const RBM_INIT_STD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum LatentError {
    #[error("latent dimension {latent} exceeds input dimension {input}")]
    LatentTooLarge { latent: usize, input: usize },
    #[error("latent dimension must be at least 1")]
    ZeroLatent,
    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("column '{column}': unseen category '{value}'")]
    UnseenCategory { column: String, value: String },
    #[error("RBM input must be 0/1 valued (row {row}, unit {unit} is {value})")]
    NonBinary { row: usize, unit: usize, value: f64 },
    #[error("RBM learning rate must be positive, got {0}")]
    LearningRate(f64),
    #[error("RBM needs hidden_dim >= 1 and epochs >= 1")]
    RbmShape,
    #[error("no encoder configured for the dataset's {0} columns")]
    MissingEncoder(&'static str),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Principal component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub mean: Vec<f64>,
    /// Row-major `latent_dim × input_dim`, orthonormal rows.
    pub components: Vec<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, LatentError> {
        if x.len() != self.input_dim {
            return Err(LatentError::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok((0..self.latent_dim)
            .map(|k| {
                self.component(k)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (xi, m))| c * (xi - m))
                    .sum()
            })
            .collect())
    }

    /// Maps latent coordinates back into input space.
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>, LatentError> {
        if z.len() != self.latent_dim {
            return Err(LatentError::DimensionMismatch {
                expected: self.latent_dim,
                found: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (k, zk) in z.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(k)) {
                *o += zk * c;
            }
        }
        Ok(out)
    }
}

/// Fits PCA on the sample covariance (divide by N − 1). Components are
/// ordered by decreasing eigenvalue; each has its largest-magnitude entry
/// positive.
pub fn fit_pca(rows: &[Vec<f64>], latent_dim: usize) -> Result<PcaModel, LatentError> {
    if rows.len() < 2 {
        return Err(LatentError::TooFewRows(rows.len()));
    }
    let d = rows[0].len();
    if latent_dim == 0 {
        return Err(LatentError::ZeroLatent);
    }
    if latent_dim > d {
        return Err(LatentError::LatentTooLarge {
            latent: latent_dim,
            input: d,
        });
    }
    for r in rows {
        if r.len() != d {
            return Err(LatentError::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let centered = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j] - mean[j]);
    let mut cov = centered.transpose() * &centered;
    cov /= n - 1.0;
    let (values, vectors) = symmetric_eigen(&cov);

    let mut components = Vec::with_capacity(latent_dim * d);
    let mut explained_variance = Vec::with_capacity(latent_dim);
    for k in 0..latent_dim {
        let col = d - 1 - k;
        let v = vectors.column(col);
        let mut pivot = 0;
        for j in 1..d {
            if v[j].abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.extend(v.iter().map(|x| sign * x));
        explained_variance.push(values[col].max(0.0));
    }
    Ok(PcaModel {
        input_dim: d,
        latent_dim,
        mean,
        components,
        explained_variance,
    })
}

/// Bernoulli-Bernoulli Restricted Boltzmann Machine.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    pub visible_dim: usize,
    pub hidden_dim: usize,
    /// Row-major `visible_dim × hidden_dim`.
    pub weights: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

impl RbmModel {
    pub fn zeros(visible_dim: usize, hidden_dim: usize) -> Self {
        RbmModel {
            visible_dim,
            hidden_dim,
            weights: vec![0.0; visible_dim * hidden_dim],
            visible_bias: vec![0.0; visible_dim],
            hidden_bias: vec![0.0; hidden_dim],
        }
    }

    /// Zero biases and N(0, 0.01²) weights drawn from `rng`.
    pub fn random(visible_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, RBM_INIT_STD).expect("valid std");
        let mut m = Self::zeros(visible_dim, hidden_dim);
        m.weights.iter_mut().for_each(|w| *w = normal.sample(rng));
        m
    }

    fn w(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.hidden_dim + j]
    }

    pub fn hidden_probs(&self, v: &[f64]) -> Result<Vec<f64>, LatentError> {
        if v.len() != self.visible_dim {
            return Err(LatentError::DimensionMismatch {
                expected: self.visible_dim,
                found: v.len(),
            });
        }
        Ok(self.hidden_probs_unchecked(v))
    }

    fn hidden_probs_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let mut act = self.hidden_bias.clone();
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                let row = &self.weights[i * self.hidden_dim..(i + 1) * self.hidden_dim];
                for (a, w) in act.iter_mut().zip(row) {
                    *a += vi * w;
                }
            }
        }
        act.into_iter().map(sigmoid).collect()
    }

    pub fn visible_probs(&self, h: &[f64]) -> Vec<f64> {
        (0..self.visible_dim)
            .map(|i| {
                let a: f64 = self.visible_bias[i]
                    + h.iter().enumerate().map(|(j, hj)| hj * self.w(i, j)).sum::<f64>();
                sigmoid(a)
            })
            .collect()
    }

    /// Mean squared error of the mean-field reconstruction v → p(h|v) → p(v|h).
    pub fn reconstruction_error(&self, rows: &[Vec<f64>]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let total: f64 = rows
            .iter()
            .map(|v| {
                let recon = self.visible_probs(&self.hidden_probs_unchecked(v));
                v.iter().zip(recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum();
        total / (rows.len() * self.visible_dim) as f64
    }

    /// One epoch of CD-1 over shuffled mini-batches. A zero learning rate
    /// leaves every parameter bit-identical.
    pub fn train_epoch(
        &mut self,
        rows: &[Vec<f64>],
        learning_rate: f64,
        rng: &mut impl Rng,
    ) -> Result<(), LatentError> {
        check_binary(rows, self.visible_dim)?;
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(rng);
        let (nv, nh) = (self.visible_dim, self.hidden_dim);
        for batch in order.chunks(RBM_BATCH_SIZE) {
            let m = batch.len() as f64;
            let mut dw = vec![0.0; nv * nh];
            let mut dvb = vec![0.0; nv];
            let mut dhb = vec![0.0; nh];
            for &r in batch {
                let v0 = &rows[r];
                let ph0 = self.hidden_probs_unchecked(v0);
                let h0: Vec<f64> = ph0
                    .iter()
                    .map(|&p| if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
                    .collect();
                let v1 = self.visible_probs(&h0);
                let ph1 = self.hidden_probs_unchecked(&v1);
                for i in 0..nv {
                    for j in 0..nh {
                        dw[i * nh + j] += v0[i] * ph0[j] - v1[i] * ph1[j];
                    }
                    dvb[i] += v0[i] - v1[i];
                }
                for j in 0..nh {
                    dhb[j] += ph0[j] - ph1[j];
                }
            }
            let step = learning_rate / m;
            for (w, d) in self.weights.iter_mut().zip(&dw) {
                *w += step * d;
            }
            for (b, d) in self.visible_bias.iter_mut().zip(&dvb) {
                *b += step * d;
            }
            for (b, d) in self.hidden_bias.iter_mut().zip(&dhb) {
                *b += step * d;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|v| v.is_finite())
    }
}

fn check_binary(rows: &[Vec<f64>], dim: usize) -> Result<(), LatentError> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(LatentError::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if let Some((u, &v)) = row.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(LatentError::NonBinary {
                row: r,
                unit: u,
                value: v,
            });
        }
    }
    Ok(())
}

/// Trains an RBM with CD-1 from a seeded initialization.
pub fn fit_rbm(
    rows: &[Vec<f64>],
    hidden_dim: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<RbmModel, LatentError> {
    if !(learning_rate > 0.0) {
        return Err(LatentError::LearningRate(learning_rate));
    }
    if hidden_dim == 0 || epochs == 0 {
        return Err(LatentError::RbmShape);
    }
    let visible = rows.first().map_or(0, Vec::len);
    check_binary(rows, visible)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = RbmModel::random(visible, hidden_dim, &mut rng);
    for _ in 0..epochs {
        model.train_epoch(rows, learning_rate, &mut rng)?;
    }
    Ok(model)
}

/// Concatenated one-hot blocks of the record's discrete columns.
pub fn one_hot_encode(record: &Record, schema: &FeatureSchema) -> Result<Vec<f64>, LatentError> {
    let mut out = Vec::with_capacity(schema.one_hot_len());
    for j in schema.discrete_indices() {
        let col = &schema.columns()[j];
        let cats = col.categories.as_deref().unwrap_or_default();
        let value = match &record[j] {
            Value::Cat(s) => s.clone(),
            Value::Num(v) => v.to_string(),
        };
        let hit = cats
            .iter()
            .position(|c| *c == value)
            .ok_or_else(|| LatentError::UnseenCategory {
                column: col.name.clone(),
                value: value.clone(),
            })?;
        out.extend((0..cats.len()).map(|k| if k == hit { 1.0 } else { 0.0 }));
    }
    Ok(out)
}

/// Encoder for one feature kind: either a fitted model or muted passthrough.
#[derive(Debug, Clone, PartialEq)]
pub enum PartEncoder<M> {
    Passthrough,
    Fitted(M),
}

/// The state vector fed to the policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentConfig {
    /// PCA output size; `None` picks ⌈input/2⌉.
    pub latent_dim: Option<usize>,
    /// RBM hidden units; `None` picks ⌈one-hot length/2⌉.
    pub rbm_hidden: Option<usize>,
    pub rbm_epochs: usize,
    pub rbm_learning_rate: f64,
    /// Bypass both encoders and feed raw standardized / one-hot features.
    pub mute: bool,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentConfig {
            latent_dim: None,
            rbm_hidden: None,
            rbm_epochs: 50,
            rbm_learning_rate: 0.1,
            mute: false,
        }
    }
}

/// Encoders for the continuous and discrete parts; `None` where the schema
/// has no columns of that kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoders {
    pub continuous: Option<PartEncoder<PcaModel>>,
    pub discrete: Option<PartEncoder<RbmModel>>,
}

impl Encoders {
    pub fn state_dim(&self, schema: &FeatureSchema) -> usize {
        let c = match &self.continuous {
            Some(PartEncoder::Fitted(p)) => p.latent_dim,
            Some(PartEncoder::Passthrough) => schema.continuous_indices().len(),
            None => 0,
        };
        let d = match &self.discrete {
            Some(PartEncoder::Fitted(r)) => r.hidden_dim,
            Some(PartEncoder::Passthrough) => schema.one_hot_len(),
            None => 0,
        };
        c + d
    }
}

fn ceil_half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Fits both encoders on a raw (unstandardized) dataset using `stats`.
pub fn fit_encoders(
    data: &Dataset,
    stats: &StandardizationStats,
    cfg: &LatentConfig,
    seed: u64,
) -> Result<Encoders, LatentError> {
    let schema = data.schema();
    let n_cont = schema.continuous_indices().len();
    let n_hot = schema.one_hot_len();

    let continuous = if n_cont == 0 {
        None
    } else if cfg.mute {
        Some(PartEncoder::Passthrough)
    } else {
        let rows = data
            .rows()
            .iter()
            .map(|r| stats.standardized_values(r))
            .collect::<Result<Vec<_>, _>>()?;
        let k = cfg.latent_dim.unwrap_or_else(|| ceil_half(n_cont).min(n_cont));
        Some(PartEncoder::Fitted(fit_pca(&rows, k)?))
    };

    let discrete = if n_hot == 0 {
        None
    } else if cfg.mute {
        Some(PartEncoder::Passthrough)
    } else {
        let rows = data
            .rows()
            .iter()
            .map(|r| one_hot_encode(r, schema))
            .collect::<Result<Vec<_>, _>>()?;
        let h = cfg.rbm_hidden.unwrap_or_else(|| ceil_half(n_hot));
        Some(PartEncoder::Fitted(fit_rbm(
            &rows,
            h,
            cfg.rbm_epochs,
            cfg.rbm_learning_rate,
            seed,
        )?))
    };
    Ok(Encoders {
        continuous,
        discrete,
    })
}

/// Standardized continuous part through PCA, one-hot discrete part through
/// the RBM, concatenated in that order.
pub fn encode_state(
    record: &Record,
    encoders: &Encoders,
    stats: &StandardizationStats,
    schema: &FeatureSchema,
) -> Result<StateVector, LatentError> {
    if record.len() != schema.len() {
        return Err(LatentError::DimensionMismatch {
            expected: schema.len(),
            found: record.len(),
        });
    }
    let mut out = Vec::new();
    if !schema.continuous_indices().is_empty() {
        let raw = stats.standardized_values(record)?;
        match &encoders.continuous {
            Some(PartEncoder::Fitted(p)) => out.extend(p.project(&raw)?),
            Some(PartEncoder::Passthrough) => out.extend(raw),
            None => return Err(LatentError::MissingEncoder("continuous")),
        }
    }
    if !schema.discrete_indices().is_empty() {
        let hot = one_hot_encode(record, schema)?;
        match &encoders.discrete {
            Some(PartEncoder::Fitted(r)) => out.extend(r.hidden_probs(&hot)?),
            Some(PartEncoder::Passthrough) => out.extend(hot),
            None => return Err(LatentError::MissingEncoder("discrete")),
        }
    }
    Ok(StateVector(out))
}
