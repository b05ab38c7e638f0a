//! Deterministic Gaussian-blob streams whose generating relationship changes
//! at a known period.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::{Column, Dataset, FeatureSchema, Value, PERIOD_COLUMN};

use super::ControllerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    /// Rotates the first two coordinates by `magnitude` degrees.
    Rotation,
    /// Adds `magnitude` to `x0`.
    MeanShift,
    /// Flips each label with probability `magnitude`.
    LabelFlip,
}

impl DriftKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DriftKind::Rotation => "rotation",
            DriftKind::MeanShift => "mean-shift",
            DriftKind::LabelFlip => "label-flip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rotation" => Some(DriftKind::Rotation),
            "mean-shift" => Some(DriftKind::MeanShift),
            "label-flip" => Some(DriftKind::LabelFlip),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Blob `k` sits at angle `2πk/blobs` and carries label `k mod 2`.
    pub blobs: usize,
    pub dims: usize,
    pub rows_per_period: usize,
    pub periods: u64,
    /// First drifted period.
    pub drift_period: u64,
    pub drift: DriftKind,
    pub magnitude: f64,
    /// Distance of every blob center from the origin, in noise units.
    pub separation: f64,
    /// Noise scale along the tangent of each blob, relative to the radial one.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            blobs: 2,
            dims: 2,
            rows_per_period: 1000,
            periods: 4,
            drift_period: 2,
            drift: DriftKind::Rotation,
            magnitude: 0.0,
            separation: 3.0,
            spread: 1.0,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let fail = |m: String| Err(ControllerError::Synth(m));
        if self.blobs < 2 {
            return fail(format!("need at least 2 blobs, got {}", self.blobs));
        }
        if self.dims < 2 {
            return fail(format!("need at least 2 dims, got {}", self.dims));
        }
        if self.rows_per_period == 0 {
            return fail("rows_per_period must be >= 1".into());
        }
        if self.periods < 2 {
            return fail(format!("need at least 2 periods, got {}", self.periods));
        }
        if !(self.magnitude >= 0.0) || !self.magnitude.is_finite() {
            return fail(format!("magnitude {} must be finite and >= 0", self.magnitude));
        }
        if self.drift == DriftKind::LabelFlip && self.magnitude > 1.0 {
            return fail(format!("label-flip probability {} exceeds 1", self.magnitude));
        }
        if !(self.separation >= 0.0) || !(self.spread > 0.0) {
            return fail("separation must be >= 0 and spread > 0".into());
        }
        Ok(())
    }

    pub fn schema(&self) -> FeatureSchema {
        let mut cols: Vec<Column> = (0..self.dims).map(|j| Column::continuous(format!("x{j}"))).collect();
        cols.push(Column::label("label"));
        cols.push(Column::timestamp(PERIOD_COLUMN));
        FeatureSchema::new(cols).expect("synthetic schema is valid")
    }
}

pub fn generate_synthetic_drift(spec: &SynthSpec) -> Result<Dataset, ControllerError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (sin, cos) = (spec.magnitude * PI / 180.0).sin_cos();
    let mut rows = Vec::with_capacity(spec.rows_per_period * spec.periods as usize);
    let mut periods = Vec::with_capacity(rows.capacity());
    for period in 0..spec.periods {
        let drifted = period >= spec.drift_period;
        for _ in 0..spec.rows_per_period {
            let k = rng.gen_range(0..spec.blobs);
            let (u1, u0) = (2.0 * PI * k as f64 / spec.blobs as f64).sin_cos();
            let radial: f64 = StandardNormal.sample(&mut rng);
            let tangent: f64 = StandardNormal.sample(&mut rng);
            let tangent = tangent * spec.spread;
            let mut x = vec![
                spec.separation * u0 + radial * u0 - tangent * u1,
                spec.separation * u1 + radial * u1 + tangent * u0,
            ];
            for _ in 2..spec.dims {
                x.push(StandardNormal.sample(&mut rng));
            }
            let mut label = (k % 2) as u8;
            if drifted {
                match spec.drift {
                    DriftKind::Rotation => {
                        let (a, b) = (x[0], x[1]);
                        x[0] = cos * a - sin * b;
                        x[1] = sin * a + cos * b;
                    }
                    DriftKind::MeanShift => x[0] += spec.magnitude,
                    DriftKind::LabelFlip => {
                        if rng.gen::<f64>() < spec.magnitude {
                            label = 1 - label;
                        }
                    }
                }
            }
            let mut record: Vec<Value> = x.into_iter().map(Value::Num).collect();
            record.push(Value::Num(label as f64));
            record.push(Value::Num(period as f64));
            rows.push(record);
            periods.push(period);
        }
    }
    Ok(Dataset::new(spec.schema(), rows, periods)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::psi;

    fn column(d: &Dataset, j: usize, period: u64) -> Vec<f64> {
        d.rows()
            .iter()
            .zip(d.periods())
            .filter(|(_, &p)| p == period)
            .map(|(r, _)| r[j].as_num().unwrap())
            .collect()
    }

    #[test]
    fn shape_and_determinism() {
        let spec = SynthSpec::default();
        let a = generate_synthetic_drift(&spec).unwrap();
        assert_eq!(a.len(), 4000);
        assert_eq!(a.schema().names(), vec!["x0", "x1", "label", "period"]);
        assert_eq!(a, generate_synthetic_drift(&spec).unwrap());
        let other = generate_synthetic_drift(&SynthSpec { seed: 2, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            SynthSpec { periods: 1, ..Default::default() },
            SynthSpec { blobs: 1, ..Default::default() },
            SynthSpec { magnitude: -1.0, ..Default::default() },
            SynthSpec { drift: DriftKind::LabelFlip, magnitude: 1.5, ..Default::default() },
            SynthSpec { rows_per_period: 0, ..Default::default() },
        ] {
            assert!(generate_synthetic_drift(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn zero_magnitude_is_stationary() {
        let spec = SynthSpec {
            rows_per_period: 10_000,
            periods: 3,
            drift_period: 1,
            seed: 9,
            ..Default::default()
        };
        let d = generate_synthetic_drift(&spec).unwrap();
        for j in 0..2 {
            for p in 0..2 {
                let v = psi(&column(&d, j, p), &column(&d, j, p + 1), 10).unwrap();
                assert!(v < 0.1, "x{j} period {p}: {v}");
            }
        }
    }

    #[test]
    fn quarter_rotation_swaps_axes() {
        let spec = SynthSpec {
            magnitude: 90.0,
            drift_period: 1,
            periods: 2,
            rows_per_period: 4000,
            ..Default::default()
        };
        let d = generate_synthetic_drift(&spec).unwrap();
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let pos = |j: usize, p: u64| {
            let xs: Vec<f64> = d
                .rows()
                .iter()
                .zip(d.periods())
                .filter(|(r, &q)| q == p && r[2] == Value::Num(1.0))
                .map(|(r, _)| r[j].as_num().unwrap())
                .collect();
            mean(xs)
        };
        // label 1 sits at angle π before the drift and at 3π/2 after
        assert!((pos(0, 0) + 3.0).abs() < 0.1);
        assert!(pos(1, 0).abs() < 0.1);
        assert!(pos(0, 1).abs() < 0.1);
        assert!((pos(1, 1) + 3.0).abs() < 0.1);
    }

    #[test]
    fn spread_stretches_the_tangent_axis() {
        let spec = SynthSpec { spread: 3.0, rows_per_period: 5000, ..Default::default() };
        let d = generate_synthetic_drift(&spec).unwrap();
        let x1 = column(&d, 1, 0);
        let var = x1.iter().map(|v| v * v).sum::<f64>() / x1.len() as f64;
        assert!((var - 9.0).abs() < 0.6, "{var}");
    }

    #[test]
    fn label_flip_rate() {
        let spec = SynthSpec {
            drift: DriftKind::LabelFlip,
            magnitude: 0.3,
            drift_period: 1,
            periods: 2,
            rows_per_period: 20_000,
            separation: 6.0,
            ..Default::default()
        };
        let d = generate_synthetic_drift(&spec).unwrap();
        // blob 0 (label 0) sits at +x0
        let (mut flipped, mut n) = (0, 0);
        for (r, &p) in d.rows().iter().zip(d.periods()) {
            if p == 1 {
                n += 1;
                let truth = if r[0].as_num().unwrap() > 0.0 { 0.0 } else { 1.0 };
                if r[2] != Value::Num(truth) {
                    flipped += 1;
                }
            }
        }
        let rate = flipped as f64 / n as f64;
        assert!((rate - 0.3).abs() < 0.02, "{rate}");
    }
}
