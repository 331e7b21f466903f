//! Seeded Monte Carlo simulation of Gaussian random fields and empirical
//! checks of the kriging variances.
//!
//! Replicates are generated in fixed blocks of [`BLOCK`]; block `b` draws
//! from a ChaCha8 stream selected by `(seed, b)`. Results therefore do not
//! depend on how many threads process the blocks, and block moments are
//! merged in block order so reports are bit-for-bit reproducible.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{coincident_pairs, correlation_matrix, CorrelationModel, Location};
use crate::error::{KrigeError, Result};
use crate::kriging::{predict_full, SampleSet};
use crate::policy::NumericPolicy;

/// Replicates per RNG stream.
pub const BLOCK: usize = 4096;

/// Default cap on the number of normal draws in one run.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Stream reserved for placing random sample locations.
const LAYOUT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    UnitGrid,
    RandomUniform,
}

impl std::str::FromStr for LayoutKind {
    type Err = KrigeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_grid" => Ok(LayoutKind::UnitGrid),
            "random_uniform" => Ok(LayoutKind::RandomUniform),
            _ => Err(KrigeError::InvalidConfig(format!(
                "unknown layout `{s}` (expected unit_grid or random_uniform)"
            ))),
        }
    }
}

/// How sample locations are placed inside an axis-aligned box `[lo, hi]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub kind: LayoutKind,
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            kind: LayoutKind::UnitGrid,
            dim: 2,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

impl Layout {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(KrigeError::UnsupportedDimension(self.dim));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(KrigeError::InvalidConfig(format!(
                "bounding box needs finite lo < hi, got {}:{}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// `n` sample locations. Grid points sit at cell centres of the smallest
    /// k^dim grid holding n points, taken in row-major order; random points
    /// come from a seed-derived stream separate from the field draws.
    pub fn locations(&self, n: usize, seed: u64) -> Result<Vec<Location>> {
        self.validate()?;
        let width = self.hi - self.lo;
        let points: Vec<Vec<f64>> = match self.kind {
            LayoutKind::UnitGrid => {
                let mut k = 1usize;
                while k.pow(self.dim as u32) < n {
                    k += 1;
                }
                (0..n)
                    .map(|idx| {
                        let mut coords = vec![0.0; self.dim];
                        let mut rest = idx;
                        for axis in (0..self.dim).rev() {
                            let i = rest % k;
                            rest /= k;
                            coords[axis] = self.lo + width * (i as f64 + 0.5) / k as f64;
                        }
                        coords
                    })
                    .collect()
            }
            LayoutKind::RandomUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(LAYOUT_STREAM);
                (0..n)
                    .map(|_| {
                        (0..self.dim)
                            .map(|_| self.lo + width * rng.random::<f64>())
                            .collect()
                    })
                    .collect()
            }
        };
        points.into_iter().map(Location::new).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub replicates: usize,
    pub n: usize,
    pub model: CorrelationModel,
    /// The field mean m.
    pub mean: f64,
    pub layout: Layout,
    pub budget: u64,
}

impl SimulationConfig {
    pub fn new(model: CorrelationModel, n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            seed,
            replicates,
            n,
            model,
            mean: 0.0,
            layout: Layout::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Normal draws needed for `points` simulated locations.
    fn check(&self, points: usize) -> Result<()> {
        if self.replicates == 0 {
            return Err(KrigeError::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(KrigeError::InvalidConfig("n must be at least 1".into()));
        }
        if !self.mean.is_finite() {
            return Err(KrigeError::InvalidConfig("field mean must be finite".into()));
        }
        self.layout.validate()?;
        let draws = self.replicates as u128 * points as u128;
        if draws > self.budget as u128 {
            return Err(KrigeError::BudgetExceeded {
                draws,
                budget: self.budget,
            });
        }
        Ok(())
    }

    pub fn sample_locations(&self) -> Result<Vec<Location>> {
        self.layout.locations(self.n, self.seed)
    }
}

/// Draws jointly Gaussian vectors with mean m and covariance σ²·C over a set
/// of locations. A location identical to an earlier one reuses its value.
struct FieldSampler {
    /// Lower Cholesky factor of C over the distinct locations; `None` when C
    /// is the identity.
    factor: Option<DMatrix<f64>>,
    distinct: usize,
    /// For every output column, the distinct location it reads.
    source: Vec<usize>,
    mean: f64,
    sd: f64,
}

impl FieldSampler {
    fn new(model: &CorrelationModel, locations: &[Location], mean: f64) -> Result<Self> {
        let mut distinct: Vec<Location> = Vec::new();
        let mut source = Vec::with_capacity(locations.len());
        for loc in locations {
            match distinct.iter().position(|d| d.coords() == loc.coords()) {
                Some(i) => source.push(i),
                None => {
                    source.push(distinct.len());
                    distinct.push(loc.clone());
                }
            }
        }
        let c = correlation_matrix(model, &distinct)?;
        let is_identity = c == DMatrix::identity(distinct.len(), distinct.len());
        let factor = if is_identity {
            None
        } else {
            let chol = c.cholesky().ok_or_else(|| KrigeError::NotPositiveDefinite {
                coincident: coincident_pairs(locations),
            })?;
            Some(chol.l())
        };
        Ok(Self {
            factor,
            distinct: distinct.len(),
            source,
            mean,
            sd: model.sigma2().sqrt(),
        })
    }

    /// Run `visit` on each of `count` replicates from stream `block`.
    fn block(&self, seed: u64, block: u64, count: usize, mut visit: impl FnMut(&[f64])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let mut z = DVector::zeros(self.distinct);
        let mut out = vec![0.0; self.source.len()];
        for _ in 0..count {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let field = match &self.factor {
                Some(l) => l * &z,
                None => z.clone(),
            };
            for (o, &s) in out.iter_mut().zip(&self.source) {
                *o = self.mean + self.sd * field[s];
            }
            visit(&out);
        }
    }
}

fn blocks(replicates: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let count = replicates.div_ceil(BLOCK);
    (0..count).into_par_iter().map(move |b| {
        let start = b * BLOCK;
        (b as u64, BLOCK.min(replicates - start))
    })
}

/// Simulate `config.replicates` joint draws at `locations`. Row r holds
/// replicate r; when `locations` lists the samples followed by a target, the
/// last column is the target value.
pub fn simulate_field(config: &SimulationConfig, locations: &[Location]) -> Result<DMatrix<f64>> {
    if locations.is_empty() {
        return Err(KrigeError::EmptySamples);
    }
    config.check(locations.len())?;
    let sampler = FieldSampler::new(&config.model, locations, config.mean)?;
    let cols = locations.len();
    let chunks: Vec<Vec<f64>> = blocks(config.replicates)
        .map(|(b, count)| {
            let mut rows = Vec::with_capacity(count * cols);
            sampler.block(config.seed, b, count, |row| rows.extend_from_slice(row));
            rows
        })
        .collect();
    let flat: Vec<f64> = chunks.concat();
    Ok(DMatrix::from_row_slice(config.replicates, cols, &flat))
}

/// Streaming mean and variance, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Mean of (V_j − V̂_j)².
    pub empirical_mse_prediction: f64,
    /// Mean of (V̂_j − m)².
    pub empirical_estimator_variance: f64,
    pub analytic_kriging_variance: f64,
    pub analytic_estimator_variance: f64,
    /// Standard error of `empirical_mse_prediction`.
    pub standard_error: f64,
    /// Standard error of `empirical_estimator_variance`.
    pub estimator_standard_error: f64,
}

fn within(empirical: f64, analytic: f64, se: f64, k: f64) -> bool {
    (empirical - analytic).abs() <= k * se
}

impl McReport {
    pub fn mse_within(&self, k: f64) -> bool {
        within(
            self.empirical_mse_prediction,
            self.analytic_kriging_variance,
            self.standard_error,
            k,
        )
    }

    pub fn estimator_within(&self, k: f64) -> bool {
        within(
            self.empirical_estimator_variance,
            self.analytic_estimator_variance,
            self.estimator_standard_error,
            k,
        )
    }
}

/// Simulate fields at the configured sample layout plus `target`, predict the
/// target from the samples of each replicate, and compare the empirical
/// squared errors with the analytic kriging and estimator variances.
pub fn verify_prediction_variance(
    config: &SimulationConfig,
    target: &Location,
    policy: &NumericPolicy,
) -> Result<McReport> {
    config.check(config.n + 1)?;
    let locations = config.sample_locations()?;
    let samples = SampleSet::new(locations.clone(), vec![0.0; config.n])?;
    // The weights are the same for every replicate.
    let (solution, analytic) = predict_full(&config.model, &samples, target, policy)?;

    let mut all = locations;
    all.push(target.clone());
    let sampler = FieldSampler::new(&config.model, &all, config.mean)?;
    let n = config.n;
    let m = config.mean;
    let weights = &solution.weights;

    let per_block: Vec<(Moments, Moments)> = blocks(config.replicates)
        .map(|(b, count)| {
            let mut err = Moments::default();
            let mut est = Moments::default();
            sampler.block(config.seed, b, count, |row| {
                let estimate: f64 = weights.iter().zip(&row[..n]).map(|(w, v)| w * v).sum();
                err.push((row[n] - estimate).powi(2));
                est.push((estimate - m).powi(2));
            });
            (err, est)
        })
        .collect();
    let (err, est) = per_block
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(a, b), (c, d)| {
            (a.merge(c), b.merge(d))
        });

    Ok(McReport {
        n,
        replicates: config.replicates,
        seed: config.seed,
        empirical_mse_prediction: err.mean,
        empirical_estimator_variance: est.mean,
        analytic_kriging_variance: analytic.kriging_variance,
        analytic_estimator_variance: analytic.estimator_variance,
        standard_error: err.standard_error(),
        estimator_standard_error: est.standard_error(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub reports: Vec<McReport>,
    /// Each empirical estimator variance is below its predecessor, allowing
    /// two combined standard errors of slack.
    pub estimator_variance_decreasing: bool,
    /// Analytic kriging variances decrease strictly while staying above σ²,
    /// and every empirical MSE lies within four standard errors of them.
    pub approaches_field_variance_from_above: bool,
}

/// Run [`verify_prediction_variance`] for each sample count in `schedule`.
pub fn verify_asymptotics(
    base: &SimulationConfig,
    schedule: &[usize],
    target: &Location,
    policy: &NumericPolicy,
) -> Result<AsymptoticsReport> {
    if schedule.is_empty() {
        return Err(KrigeError::InvalidConfig("schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(KrigeError::InvalidConfig(
            "schedule must be strictly increasing".into(),
        ));
    }
    // Fail on the budget before spending time on the smaller runs.
    let largest = SimulationConfig {
        n: *schedule.last().unwrap_or(&1),
        ..*base
    };
    largest.check(largest.n + 1)?;

    let reports = schedule
        .iter()
        .map(|&n| verify_prediction_variance(&SimulationConfig { n, ..*base }, target, policy))
        .collect::<Result<Vec<_>>>()?;

    let estimator_variance_decreasing = reports.windows(2).all(|w| {
        let slack = 2.0 * (w[0].estimator_standard_error.powi(2) + w[1].estimator_standard_error.powi(2)).sqrt();
        w[1].empirical_estimator_variance <= w[0].empirical_estimator_variance + slack
    });
    let sigma2 = base.model.sigma2();
    let approaches_field_variance_from_above = reports
        .windows(2)
        .all(|w| w[1].analytic_kriging_variance < w[0].analytic_kriging_variance)
        && reports
            .iter()
            .all(|r| r.analytic_kriging_variance > sigma2 && r.mse_within(4.0));

    Ok(AsymptoticsReport {
        reports,
        estimator_variance_decreasing,
        approaches_field_variance_from_above,
    })
}
