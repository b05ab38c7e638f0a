use std::io::{self, Write};

use crate::evaluator::Verdict;

use super::ControllerError;

pub const METRICS_HEADER: [&str; 10] = [
    "step",
    "phase",
    "generation",
    "accuracy",
    "f1",
    "log_loss",
    "best_fitness",
    "sigma",
    "max_psi",
    "verdict",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initial,
    Streaming,
    Recalibrating,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Streaming => "streaming",
            Phase::Recalibrating => "recalibrating",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "initial" => Some(Phase::Initial),
            "streaming" => Some(Phase::Streaming),
            "recalibrating" => Some(Phase::Recalibrating),
            _ => None,
        }
    }
}

/// One line of the metrics history. Training rows carry `generation`,
/// `best_fitness` and `sigma`; streaming rows carry `max_psi` and `verdict`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// Global counter, strictly increasing over the whole history.
    pub step: u64,
    pub phase: Phase,
    /// Generation within the current optimization run, from 1.
    pub generation: Option<u64>,
    pub accuracy: f64,
    pub f1: f64,
    pub log_loss: f64,
    pub best_fitness: Option<f64>,
    pub sigma: Option<f64>,
    pub max_psi: Option<f64>,
    pub verdict: Option<Verdict>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn fields(&self) -> [String; 10] {
        [
            self.step.to_string(),
            self.phase.as_str().to_string(),
            opt(self.generation),
            self.accuracy.to_string(),
            self.f1.to_string(),
            self.log_loss.to_string(),
            opt(self.best_fitness),
            opt(self.sigma),
            opt(self.max_psi),
            opt(self.verdict.map(Verdict::as_str)),
        ]
    }
}

pub fn write_metrics_csv(rows: &[MetricsRow], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{}", METRICS_HEADER.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.fields().join(","))?;
    }
    Ok(())
}

fn parse_verdict(s: &str) -> Option<Verdict> {
    match s {
        "none" => Some(Verdict::None),
        "warn" => Some(Verdict::Warn),
        "recalibrate" => Some(Verdict::Recalibrate),
        _ => None,
    }
}

/// Inverse of [`write_metrics_csv`].
pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, ControllerError> {
    let mut lines = text.lines();
    let bad = |line: usize, what: &str| ControllerError::Persist(format!("metrics line {line}: {what}"));
    if lines.next() != Some(METRICS_HEADER.join(",").as_str()) {
        return Err(bad(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != METRICS_HEADER.len() {
            return Err(bad(n, "wrong field count"));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
        let opt_real = |s: &str| if s.is_empty() { Ok(None) } else { real(s).map(Some) };
        rows.push(MetricsRow {
            step: f[0].parse().map_err(|_| bad(n, "bad step"))?,
            phase: Phase::parse(f[1]).ok_or_else(|| bad(n, "bad phase"))?,
            generation: if f[2].is_empty() {
                None
            } else {
                Some(f[2].parse().map_err(|_| bad(n, "bad generation"))?)
            },
            accuracy: real(f[3])?,
            f1: real(f[4])?,
            log_loss: real(f[5])?,
            best_fitness: opt_real(f[6])?,
            sigma: opt_real(f[7])?,
            max_psi: opt_real(f[8])?,
            verdict: if f[9].is_empty() {
                None
            } else {
                Some(parse_verdict(f[9]).ok_or_else(|| bad(n, "bad verdict"))?)
            },
        });
    }
    Ok(rows)
}
