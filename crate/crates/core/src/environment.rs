//! Time-windowed replay store with rehearsal sampling.
//!
//! Entries older than `capacity_periods` periods relative to the newest pushed
//! period are evicted on every push. Sampling mixes the newest period with
//! everything older.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::latent::StateVector;

#[derive(Debug, Error, PartialEq)]
pub enum EnvironmentError {
    #[error("period {period} precedes current period {current}")]
    PeriodRegression { period: u64, current: u64 },
    #[error("state dimension {found} does not match window dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("replay window is empty")]
    EmptyWindow,
    #[error("invalid sample spec: {0}")]
    InvalidSpec(String),
    #[error("window capacity must be at least one period")]
    ZeroCapacity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub period: u64,
    pub state: StateVector,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub batch_size: usize,
    /// Share of the batch drawn from the newest period.
    pub new_fraction: f64,
    /// Balance labels half-and-half within each part when both are present.
    pub stratify: bool,
    pub seed: u64,
}

impl SampleSpec {
    fn validate(&self) -> Result<(), EnvironmentError> {
        if self.batch_size == 0 {
            return Err(EnvironmentError::InvalidSpec("batch_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.new_fraction) {
            return Err(EnvironmentError::InvalidSpec(format!(
                "new_fraction {} outside [0, 1]",
                self.new_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayWindow {
    capacity_periods: u64,
    current_period: Option<u64>,
    dim: Option<usize>,
    /// Non-decreasing in period.
    entries: VecDeque<Entry>,
}

impl ReplayWindow {
    pub fn new(capacity_periods: u64) -> Result<Self, EnvironmentError> {
        if capacity_periods == 0 {
            return Err(EnvironmentError::ZeroCapacity);
        }
        Ok(ReplayWindow {
            capacity_periods,
            current_period: None,
            dim: None,
            entries: VecDeque::new(),
        })
    }

    pub fn capacity_periods(&self) -> u64 {
        self.capacity_periods
    }

    /// Newest period ever pushed; `None` before the first push.
    pub fn current_period(&self) -> Option<u64> {
        self.current_period
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter()
    }

    /// Entries tagged with the newest period.
    pub fn current_entries(&self) -> impl Iterator<Item = &Entry> {
        let split = self.split_point();
        self.entries.range(split..)
    }

    /// Index of the first entry in the newest period.
    fn split_point(&self) -> usize {
        match self.current_period {
            Some(p) => self.entries.partition_point(|e| e.period < p),
            None => 0,
        }
    }

    /// Entry counts per period, oldest first.
    pub fn period_counts(&self) -> Vec<(u64, usize)> {
        let mut out: Vec<(u64, usize)> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some((p, c)) if *p == e.period => *c += 1,
                _ => out.push((e.period, 1)),
            }
        }
        out
    }

    pub fn push_batch(
        &mut self,
        batch: Vec<(StateVector, u8)>,
        period: u64,
    ) -> Result<(), EnvironmentError> {
        if let Some(current) = self.current_period {
            if period < current {
                return Err(EnvironmentError::PeriodRegression { period, current });
            }
        }
        let mut dim = self.dim;
        for (s, _) in &batch {
            match dim {
                Some(d) if d != s.dim() => {
                    return Err(EnvironmentError::DimensionMismatch {
                        expected: d,
                        found: s.dim(),
                    })
                }
                None => dim = Some(s.dim()),
                _ => {}
            }
        }
        self.dim = dim;
        self.current_period = Some(period);
        self.entries.extend(batch.into_iter().map(|(state, label)| Entry {
            period,
            state,
            label,
        }));
        self.evict_stale();
        Ok(())
    }

    /// Drops every entry with `current_period − period ≥ capacity_periods`.
    pub fn evict_stale(&mut self) {
        let Some(current) = self.current_period else {
            return;
        };
        while let Some(front) = self.entries.front() {
            if current - front.period >= self.capacity_periods {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    /// Indices into the window for one rehearsal batch, new part first.
    pub fn sample_indices(&self, spec: &SampleSpec) -> Result<Vec<usize>, EnvironmentError> {
        spec.validate()?;
        if self.entries.is_empty() {
            return Err(EnvironmentError::EmptyWindow);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let split = self.split_point();
        let all = 0..self.entries.len();
        let new_range = if split < self.entries.len() { split..self.entries.len() } else { all.clone() };
        let old_range = if split > 0 { 0..split } else { all };

        let n_new = ((spec.new_fraction * spec.batch_size as f64).ceil() as usize).min(spec.batch_size);
        let n_old = spec.batch_size - n_new;
        let mut out = Vec::with_capacity(spec.batch_size);
        self.draw(new_range, n_new, spec.stratify, &mut rng, &mut out);
        self.draw(old_range, n_old, spec.stratify, &mut rng, &mut out);
        Ok(out)
    }

    fn draw(
        &self,
        range: std::ops::Range<usize>,
        count: usize,
        stratify: bool,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<usize>,
    ) {
        if count == 0 {
            return;
        }
        if stratify {
            let (ones, zeros): (Vec<usize>, Vec<usize>) =
                range.clone().partition(|&i| self.entries[i].label == 1);
            if !ones.is_empty() && !zeros.is_empty() {
                let n_zero = count / 2;
                for _ in 0..n_zero {
                    out.push(zeros[rng.gen_range(0..zeros.len())]);
                }
                for _ in 0..count - n_zero {
                    out.push(ones[rng.gen_range(0..ones.len())]);
                }
                return;
            }
        }
        for _ in 0..count {
            out.push(rng.gen_range(range.clone()));
        }
    }

    pub fn sample_batch(&self, spec: &SampleSpec) -> Result<Vec<(StateVector, u8)>, EnvironmentError> {
        Ok(self
            .sample_indices(spec)?
            .into_iter()
            .map(|i| {
                let e = &self.entries[i];
                (e.state.clone(), e.label)
            })
            .collect())
    }

    /// Borrowing variant of [`sample_batch`](Self::sample_batch).
    pub fn sample_refs(&self, spec: &SampleSpec) -> Result<Vec<&Entry>, EnvironmentError> {
        Ok(self
            .sample_indices(spec)?
            .into_iter()
            .map(|i| &self.entries[i])
            .collect())
    }

    /// Rebuilds a window from raw parts; used by model persistence.
    pub(crate) fn from_parts(
        capacity_periods: u64,
        current_period: Option<u64>,
        dim: Option<usize>,
        entries: Vec<Entry>,
    ) -> Self {
        ReplayWindow {
            capacity_periods,
            current_period,
            dim,
            entries: entries.into(),
        }
    }
}
