//! Self-recalibrating binary classifier: latent state encoding, a small
//! feed-forward policy trained by CMA-ES, and PSI-driven drift detection.

pub mod cli;
pub mod cmaes;
pub mod controller;
pub mod environment;
pub mod evaluator;
pub mod ingest;
pub mod latent;
mod linalg;
pub mod policy;
