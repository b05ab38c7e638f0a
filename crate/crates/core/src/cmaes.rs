//! Full-covariance CMA-ES with an ask/tell interface.
//!
//! Fitness is minimized. Strategy constants follow the standard defaults:
//! log-linear positive recombination weights over the best `mu = ⌊λ/2⌋`
//! candidates, cumulative step-size adaptation, and a rank-one plus rank-mu
//! covariance update.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::symmetric_eigen;

/// Eigenvalues below this fraction of the largest are clamped up to it.
pub const EIGEN_FLOOR_RATIO: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum CmaesError {
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("initial step size must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("population size must be at least 2, got {0}")]
    BadLambda(usize),
    #[error("tell without a matching ask")]
    NoPendingAsk,
    #[error("expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("population does not match the last ask")]
    PopulationMismatch,
    #[error("covariance matrix is numerically broken; state is unrecoverable")]
    Unrecoverable,
}

/// When the covariance is re-decomposed into `B·D²·Bᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSchedule {
    EveryGeneration,
    /// Every `max(1, ⌊1 / (10·n·(c_1 + c_mu))⌋)` generations.
    Lazy,
}

impl EigenSchedule {
    pub fn as_str(self) -> &'static str {
        match self {
            EigenSchedule::EveryGeneration => "every",
            EigenSchedule::Lazy => "lazy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "every" => Some(EigenSchedule::EveryGeneration),
            "lazy" => Some(EigenSchedule::Lazy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopCriteria {
    pub max_generations: u64,
    pub target_fitness: Option<f64>,
    /// Stop when the fitness spread of a generation falls below this.
    pub tol_fun: f64,
    pub sigma_floor: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            max_generations: 1000,
            target_fitness: None,
            tol_fun: 0.0,
            sigma_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxGenerations,
    TargetFitness,
    TolFun,
    SigmaFloor,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxGenerations => "max_generations",
            StopReason::TargetFitness => "target_fitness",
            StopReason::TolFun => "tol_fun",
            StopReason::SigmaFloor => "sigma_floor",
        }
    }
}

/// Outcome of one `tell`.
#[derive(Debug, Clone, PartialEq)]
pub struct TellReport {
    pub best_fitness: f64,
    /// max − min over the finite fitnesses of this generation.
    pub spread: f64,
    pub nonfinite: usize,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct CmaesState {
    pub(crate) n: usize,
    pub(crate) mean: DVector<f64>,
    pub(crate) sigma: f64,
    pub(crate) cov: DMatrix<f64>,
    pub(crate) p_sigma: DVector<f64>,
    pub(crate) p_c: DVector<f64>,
    pub(crate) generation: u64,
    pub(crate) lambda: usize,
    pub(crate) mu: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) mu_eff: f64,
    pub(crate) c_sigma: f64,
    pub(crate) d_sigma: f64,
    pub(crate) c_c: f64,
    pub(crate) c_1: f64,
    pub(crate) c_mu: f64,
    pub(crate) chi_n: f64,
    pub(crate) best_ever: Option<(DVector<f64>, f64)>,
    /// Eigenvectors of the last decomposition, as columns.
    pub(crate) basis: DMatrix<f64>,
    /// Square roots of the (clamped) eigenvalues of the last decomposition.
    pub(crate) scales: DVector<f64>,
    pub(crate) eigen_generation: u64,
    pub(crate) schedule: EigenSchedule,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) pending: Option<Vec<DVector<f64>>>,
    pub(crate) clamp_events: u64,
    pub(crate) nonfinite_events: u64,
}

impl CmaesState {
    pub fn new(
        mean0: Vec<f64>,
        sigma0: f64,
        lambda: Option<usize>,
        seed: u64,
        schedule: EigenSchedule,
    ) -> Result<Self, CmaesError> {
        let n = mean0.len();
        if n == 0 {
            return Err(CmaesError::EmptyDimension);
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(CmaesError::BadSigma(sigma0));
        }
        let lambda = lambda.unwrap_or_else(|| default_lambda(n));
        if lambda < 2 {
            return Err(CmaesError::BadLambda(lambda));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let nf = n as f64;
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(CmaesState {
            n,
            mean: DVector::from_vec(mean0),
            sigma: sigma0,
            cov: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            best_ever: None,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            eigen_generation: 0,
            schedule,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
            clamp_events: 0,
            nonfinite_events: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn p_sigma(&self) -> &DVector<f64> {
        &self.p_sigma
    }

    pub fn p_c(&self) -> &DVector<f64> {
        &self.p_c
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu_eff(&self) -> f64 {
        self.mu_eff
    }

    /// `(c_sigma, d_sigma, c_c, c_1, c_mu, chi_n)`.
    pub fn constants(&self) -> (f64, f64, f64, f64, f64, f64) {
        (self.c_sigma, self.d_sigma, self.c_c, self.c_1, self.c_mu, self.chi_n)
    }

    pub fn best_ever(&self) -> Option<(&DVector<f64>, f64)> {
        self.best_ever.as_ref().map(|(x, f)| (x, *f))
    }

    pub fn best_fitness(&self) -> f64 {
        self.best_ever.as_ref().map_or(f64::INFINITY, |(_, f)| *f)
    }

    /// How many decompositions had eigenvalues clamped.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// How many candidates received a non-finite fitness.
    pub fn nonfinite_events(&self) -> u64 {
        self.nonfinite_events
    }

    pub fn schedule(&self) -> EigenSchedule {
        self.schedule
    }

    /// Generations between covariance decompositions.
    pub fn eigen_interval(&self) -> u64 {
        match self.schedule {
            EigenSchedule::EveryGeneration => 1,
            EigenSchedule::Lazy => {
                let g = 1.0 / (10.0 * self.n as f64 * (self.c_1 + self.c_mu));
                (g.floor() as u64).max(1)
            }
        }
    }

    /// Samples `lambda` candidates `mean + sigma·B·D·z`, z ~ N(0, I).
    pub fn ask(&mut self) -> Result<Vec<DVector<f64>>, CmaesError> {
        let (n, lambda) = (self.n, self.lambda);
        let mut z = DMatrix::<f64>::zeros(n, lambda);
        for k in 0..lambda {
            for i in 0..n {
                z[(i, k)] = StandardNormal.sample(&mut self.rng);
            }
        }
        for i in 0..n {
            let d = self.scales[i];
            z.row_mut(i).iter_mut().for_each(|v| *v *= d);
        }
        let y = &self.basis * z;
        let population: Vec<DVector<f64>> = (0..lambda)
            .map(|k| &self.mean + self.sigma * y.column(k))
            .collect();
        if population.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(CmaesError::Unrecoverable);
        }
        self.pending = Some(population.clone());
        Ok(population)
    }

    pub fn tell(
        &mut self,
        population: &[DVector<f64>],
        fitnesses: &[f64],
    ) -> Result<TellReport, CmaesError> {
        let pending = self.pending.as_ref().ok_or(CmaesError::NoPendingAsk)?;
        if population.len() != self.lambda {
            return Err(CmaesError::LengthMismatch {
                expected: self.lambda,
                found: population.len(),
            });
        }
        if fitnesses.len() != self.lambda {
            return Err(CmaesError::LengthMismatch {
                expected: self.lambda,
                found: fitnesses.len(),
            });
        }
        if pending.iter().zip(population).any(|(a, b)| a != b) {
            return Err(CmaesError::PopulationMismatch);
        }

        // Rank ascending; non-finite fitness ranks last, ties by index.
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| {
            let (fa, fb) = (fitnesses[a], fitnesses[b]);
            match (fa.is_finite(), fb.is_finite()) {
                (true, true) => fa.total_cmp(&fb),
                (true, false) => std::cmp::Ordering::Less,
                (false, true) => std::cmp::Ordering::Greater,
                (false, false) => std::cmp::Ordering::Equal,
            }
        });
        let nonfinite = fitnesses.iter().filter(|f| !f.is_finite()).count();
        self.nonfinite_events += nonfinite as u64;

        let n = self.n;
        let old_mean = self.mean.clone();
        let mut new_mean = DVector::zeros(n);
        for (w, &i) in self.weights.iter().zip(&order) {
            new_mean.axpy(*w, &population[i], 1.0);
        }
        let y_w = (&new_mean - &old_mean) / self.sigma;

        // C^{-1/2}·y_w from the decomposition used for sampling.
        let mut rotated = self.basis.tr_mul(&y_w);
        rotated.component_div_assign(&self.scales);
        let whitened = &self.basis * rotated;

        let cs = self.c_sigma;
        self.p_sigma *= 1.0 - cs;
        self.p_sigma
            .axpy((cs * (2.0 - cs) * self.mu_eff).sqrt(), &whitened, 1.0);

        let ps_norm = self.p_sigma.norm();
        let updates = (self.generation + 1) as i32;
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powi(2 * updates)).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * self.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = self.c_c;
        self.p_c *= 1.0 - cc;
        self.p_c
            .axpy(h * (cc * (2.0 - cc) * self.mu_eff).sqrt(), &y_w, 1.0);

        let mut steps = DMatrix::<f64>::zeros(n, self.mu);
        let mut weighted = DMatrix::<f64>::zeros(n, self.mu);
        for (k, (w, &i)) in self.weights.iter().zip(&order).enumerate() {
            let y = (&population[i] - &old_mean) / self.sigma;
            weighted.set_column(k, &(&y * *w));
            steps.set_column(k, &y);
        }
        let delta = (1.0 - h) * cc * (2.0 - cc);
        let keep = 1.0 - self.c_1 - self.c_mu + self.c_1 * delta;
        self.cov.ger(self.c_1, &self.p_c, &self.p_c, keep);
        self.cov.gemm(self.c_mu, &weighted, &steps.transpose(), 1.0);
        symmetrize(&mut self.cov);

        self.sigma *= ((cs / self.d_sigma) * (ps_norm / self.chi_n - 1.0)).exp();
        self.mean = new_mean;
        self.generation += 1;

        let best_idx = order[0];
        let best_fitness = fitnesses[best_idx];
        if best_fitness.is_finite() && best_fitness < self.best_fitness() {
            self.best_ever = Some((population[best_idx].clone(), best_fitness));
        }
        let finite: Vec<f64> = fitnesses.iter().copied().filter(|f| f.is_finite()).collect();
        let spread = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - finite.iter().cloned().fold(f64::INFINITY, f64::min)
        };

        self.pending = None;
        let mut clamped = false;
        if self.generation - self.eigen_generation >= self.eigen_interval() {
            clamped = self.decompose()?;
        }
        Ok(TellReport {
            best_fitness,
            spread,
            nonfinite,
            clamped,
        })
    }

    /// Refreshes `B` and `D` from `C`, clamping tiny eigenvalues. Returns
    /// whether clamping occurred.
    fn decompose(&mut self) -> Result<bool, CmaesError> {
        if self.cov.iter().any(|v| !v.is_finite()) {
            return Err(CmaesError::Unrecoverable);
        }
        let (mut values, vectors) = symmetric_eigen(&self.cov);
        let max = values.max();
        if !(max > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(CmaesError::Unrecoverable);
        }
        let floor = EIGEN_FLOOR_RATIO * max;
        let mut clamped = false;
        for v in values.iter_mut() {
            if *v < floor {
                *v = floor;
                clamped = true;
            }
        }
        if clamped {
            self.clamp_events += 1;
            self.cov = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
            symmetrize(&mut self.cov);
        }
        self.scales = values.map(f64::sqrt);
        self.basis = vectors;
        self.eigen_generation = self.generation;
        Ok(clamped)
    }

    /// Runs ask/tell until a stop criterion fires.
    pub fn optimize(
        &mut self,
        crit: &StopCriteria,
        mut f: impl FnMut(&DVector<f64>) -> f64,
    ) -> Result<StopReason, CmaesError> {
        let mut spread = f64::INFINITY;
        loop {
            if let Some(reason) = should_stop(self, crit, spread) {
                return Ok(reason);
            }
            let pop = self.ask()?;
            let fit: Vec<f64> = pop.iter().map(&mut f).collect();
            spread = self.tell(&pop, &fit)?.spread;
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn default_lambda(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

pub fn should_stop(state: &CmaesState, crit: &StopCriteria, last_fitness_spread: f64) -> Option<StopReason> {
    if state.generation >= crit.max_generations {
        return Some(StopReason::MaxGenerations);
    }
    if let Some(target) = crit.target_fitness {
        if state.best_fitness() <= target {
            return Some(StopReason::TargetFitness);
        }
    }
    if last_fitness_spread < crit.tol_fun {
        return Some(StopReason::TolFun);
    }
    if state.sigma < crit.sigma_floor {
        return Some(StopReason::SigmaFloor);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    #[test]
    fn default_lambda_values() {
        assert_eq!(default_lambda(10), 10);
        assert_eq!(default_lambda(2), 6);
        assert_eq!(default_lambda(928), 24);
    }

    #[test]
    fn fresh_state() {
        let s = CmaesState::new(vec![0.0; 10], 1.0, None, 0, EigenSchedule::EveryGeneration).unwrap();
        assert_eq!(s.lambda(), 10);
        assert_eq!(s.mu(), 5);
        assert_eq!(s.covariance(), &DMatrix::identity(10, 10));
        assert!(s.p_sigma().iter().all(|&v| v == 0.0));
        assert!(s.p_c().iter().all(|&v| v == 0.0));
        let wsum: f64 = s.weights().iter().sum();
        assert!((wsum - 1.0).abs() < 1e-12);
        assert!(s.weights().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn large_covariance_allocation() {
        let s = CmaesState::new(vec![0.0; 2188], 0.5, None, 0, EigenSchedule::Lazy).unwrap();
        assert_eq!(s.covariance().shape(), (2188, 2188));
    }

    #[test]
    fn init_errors() {
        let e = |r: Result<CmaesState, CmaesError>| r.unwrap_err();
        assert_eq!(e(CmaesState::new(vec![], 1.0, None, 0, EigenSchedule::Lazy)), CmaesError::EmptyDimension);
        assert_eq!(e(CmaesState::new(vec![0.0], 0.0, None, 0, EigenSchedule::Lazy)), CmaesError::BadSigma(0.0));
        assert_eq!(e(CmaesState::new(vec![0.0], 1.0, Some(1), 0, EigenSchedule::Lazy)), CmaesError::BadLambda(1));
    }

    #[test]
    fn identity_sampling_has_unit_variance() {
        let mut s = CmaesState::new(vec![1.0, -2.0, 0.5], 0.7, Some(100), 3, EigenSchedule::EveryGeneration).unwrap();
        let mut sums = [0.0; 3];
        let mut sq = [0.0; 3];
        let mut count = 0.0;
        for _ in 0..100 {
            for x in s.ask().unwrap() {
                for i in 0..3 {
                    let u = (x[i] - s.mean()[i]) / s.sigma();
                    sums[i] += u;
                    sq[i] += u * u;
                }
                count += 1.0;
            }
        }
        for i in 0..3 {
            let m = sums[i] / count;
            let var = sq[i] / count - m * m;
            assert!((var - 1.0).abs() < 0.05, "variance {var}");
        }
    }

    #[test]
    fn tiny_sigma_collapses_to_mean() {
        let sigma = 1e-9;
        let mut s = CmaesState::new(vec![2.0; 4], sigma, None, 1, EigenSchedule::EveryGeneration).unwrap();
        for x in s.ask().unwrap() {
            assert!((&x - s.mean()).amax() <= sigma * 10.0);
        }
    }

    #[test]
    fn ask_is_deterministic() {
        let mut a = CmaesState::new(vec![0.0; 5], 1.0, None, 42, EigenSchedule::EveryGeneration).unwrap();
        let mut b = CmaesState::new(vec![0.0; 5], 1.0, None, 42, EigenSchedule::EveryGeneration).unwrap();
        assert_eq!(a.ask().unwrap(), b.ask().unwrap());
    }

    #[test]
    fn identical_parents_keep_the_mean() {
        let mut s = CmaesState::new(vec![0.3, -0.7], 1.0, Some(4), 0, EigenSchedule::EveryGeneration).unwrap();
        let mut pop = s.ask().unwrap();
        let mean = s.mean().clone();
        pop[0] = mean.clone();
        pop[1] = mean.clone();
        s.pending = Some(pop.clone());
        s.tell(&pop, &[0.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((s.mean() - mean).amax() < 1e-12);
    }

    /// Independent recomputation of one generation on n = 2, λ = 4.
    #[test]
    fn one_step_matches_hand_recomputation() {
        let mut s = CmaesState::new(vec![1.0, 2.0], 0.5, Some(4), 17, EigenSchedule::EveryGeneration).unwrap();
        let pop = s.ask().unwrap();
        let fit = [3.0, 1.0, 4.0, 2.0];
        s.tell(&pop, &fit).unwrap();

        // oracle
        let mu = 2usize;
        let raw: Vec<f64> = (1..=mu).map(|i| (2.5f64).ln() - (i as f64).ln()).collect();
        let tot: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|r| r / tot).collect();
        let mu_eff = 1.0 / (w[0] * w[0] + w[1] * w[1]);
        let n = 2.0f64;
        let cs = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let ds = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let cc = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
        let cmu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
        let chi = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        let m0 = [1.0, 2.0];
        let best = [&pop[1], &pop[3]];
        let m1: Vec<f64> = (0..2).map(|i| w[0] * best[0][i] + w[1] * best[1][i]).collect();
        for i in 0..2 {
            assert!((s.mean()[i] - m1[i]).abs() < 1e-12);
        }
        // with C = I the whitening is the identity
        let yw: Vec<f64> = (0..2).map(|i| (m1[i] - m0[i]) / 0.5).collect();
        let k = (cs * (2.0 - cs) * mu_eff).sqrt();
        let ps: Vec<f64> = yw.iter().map(|y| k * y).collect();
        let ps_norm = (ps[0] * ps[0] + ps[1] * ps[1]).sqrt();
        let hs = ps_norm / (1.0 - (1.0 - cs).powi(2)).sqrt() < (1.4 + 2.0 / 3.0) * chi;
        let h = if hs { 1.0 } else { 0.0 };
        let pc: Vec<f64> = yw.iter().map(|y| h * (cc * (2.0 - cc) * mu_eff).sqrt() * y).collect();
        let ys: Vec<Vec<f64>> = best.iter().map(|x| (0..2).map(|i| (x[i] - m0[i]) / 0.5).collect()).collect();
        let delta = (1.0 - h) * cc * (2.0 - cc);
        for i in 0..2 {
            assert!((s.p_sigma()[i] - ps[i]).abs() < 1e-12);
            assert!((s.p_c()[i] - pc[i]).abs() < 1e-12);
            for j in 0..2 {
                let eye = if i == j { 1.0 } else { 0.0 };
                let rank_mu = w[0] * ys[0][i] * ys[0][j] + w[1] * ys[1][i] * ys[1][j];
                let c = (1.0 - c1 - cmu + c1 * delta) * eye + c1 * pc[i] * pc[j] + cmu * rank_mu;
                assert!((s.covariance()[(i, j)] - c).abs() < 1e-12);
            }
        }
        let sigma = 0.5 * ((cs / ds) * (ps_norm / chi - 1.0)).exp();
        assert!((s.sigma() - sigma).abs() < 1e-12);
        assert_eq!(s.best_fitness(), 1.0);
        assert_eq!(s.generation(), 1);
    }

    #[test]
    fn tell_contract_errors() {
        let mut s = CmaesState::new(vec![0.0; 3], 1.0, Some(4), 0, EigenSchedule::EveryGeneration).unwrap();
        assert_eq!(s.tell(&[], &[]), Err(CmaesError::NoPendingAsk));
        let pop = s.ask().unwrap();
        assert!(matches!(s.tell(&pop[..3], &[0.0; 3]), Err(CmaesError::LengthMismatch { .. })));
        assert!(matches!(s.tell(&pop, &[0.0; 3]), Err(CmaesError::LengthMismatch { .. })));
        let mut other = pop.clone();
        other[0][0] += 1.0;
        assert_eq!(s.tell(&other, &[0.0; 4]), Err(CmaesError::PopulationMismatch));
    }

    #[test]
    fn nonfinite_fitness_ranks_last() {
        let mut s = CmaesState::new(vec![0.0; 3], 1.0, Some(6), 8, EigenSchedule::EveryGeneration).unwrap();
        let pop = s.ask().unwrap();
        let r = s.tell(&pop, &[f64::NAN, 1.0, 2.0, f64::INFINITY, 0.5, 3.0]).unwrap();
        assert_eq!(r.nonfinite, 2);
        assert_eq!(s.nonfinite_events(), 2);
        assert_eq!(s.best_fitness(), 0.5);
        assert!(s.mean().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sphere_converges_in_five_dimensions() {
        let mut s = CmaesState::new(vec![3.0; 5], 2.0, None, 1, EigenSchedule::EveryGeneration).unwrap();
        let crit = StopCriteria {
            max_generations: 400,
            target_fitness: Some(1e-10),
            ..Default::default()
        };
        s.optimize(&crit, sphere).unwrap();
        assert!(s.best_fitness() < 1e-10, "best {}", s.best_fitness());
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut s = CmaesState::new(vec![1.0; 6], 1.0, None, 5, EigenSchedule::EveryGeneration).unwrap();
        let ellipsoid = |x: &DVector<f64>| x.iter().enumerate().map(|(i, v)| 10f64.powi(i as i32) * v * v).sum();
        let mut prev = f64::INFINITY;
        for _ in 0..150 {
            let pop = s.ask().unwrap();
            let fit: Vec<f64> = pop.iter().map(ellipsoid).collect();
            s.tell(&pop, &fit).unwrap();
            let c = s.covariance();
            assert!((c - c.transpose()).amax() <= 1e-10);
            let (vals, _) = symmetric_eigen(c);
            assert!(vals.min() > 0.0);
            assert!(s.best_fitness() <= prev);
            prev = s.best_fitness();
        }
    }

    #[test]
    fn lazy_schedule_interval() {
        let small = CmaesState::new(vec![0.0; 10], 1.0, None, 0, EigenSchedule::Lazy).unwrap();
        assert_eq!(small.eigen_interval(), 1);
        let big = CmaesState::new(vec![0.0; 928], 1.0, None, 0, EigenSchedule::Lazy).unwrap();
        assert!(big.eigen_interval() > 1);
        let every = CmaesState::new(vec![0.0; 928], 1.0, None, 0, EigenSchedule::EveryGeneration).unwrap();
        assert_eq!(every.eigen_interval(), 1);
    }

    #[test]
    fn stop_rules() {
        let mut s = CmaesState::new(vec![0.0; 2], 1.0, None, 0, EigenSchedule::EveryGeneration).unwrap();
        let generous = StopCriteria {
            max_generations: 10,
            target_fitness: Some(-1.0),
            tol_fun: 1e-12,
            sigma_floor: 1e-20,
        };
        assert_eq!(should_stop(&s, &generous, f64::INFINITY), None);
        s.generation = 10;
        assert_eq!(should_stop(&s, &generous, 1.0), Some(StopReason::MaxGenerations));
        s.generation = 0;
        s.sigma = 1e-30;
        assert_eq!(should_stop(&s, &generous, 1.0), Some(StopReason::SigmaFloor));
        s.sigma = 1.0;
        assert_eq!(should_stop(&s, &generous, 0.0), Some(StopReason::TolFun));
        s.best_ever = Some((DVector::zeros(2), -2.0));
        assert_eq!(should_stop(&s, &generous, 1.0), Some(StopReason::TargetFitness));
    }
}
