//! Finite-shot detection statistics and Monte-Carlo error bars.

use povmwalk::qubit::Distribution;
use povmwalk::OutcomeLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};

use crate::error::{LabError, Result};

/// Input distributions must sum to one within this.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Default replica count for [`monte_carlo_errorbars`].
pub const DEFAULT_MC_RUNS: usize = 1000;

/// Detection counts per outcome, in distribution order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    pub labels: Vec<OutcomeLabel>,
    pub counts: Vec<u64>,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, label: &OutcomeLabel) -> Option<u64> {
        self.labels.iter().position(|l| l == label).map(|i| self.counts[i])
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Multinomial draw as a chain of conditional binomials.
fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q).expect("q is clamped to [0, 1]").sample(rng);
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(LabError::Config("cannot sample from an empty distribution".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(-NORMALIZATION_TOLERANCE..=1.0 + NORMALIZATION_TOLERANCE).contains(*p)) {
        return Err(LabError::Config(format!("probability {p} outside [0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(LabError::Config(format!("distribution sums to {total}, not 1")));
    }
    Ok(())
}

/// Draws `shots` detections from `distribution`; deterministic in `seed`.
///
/// `shots = 0` is rejected: use the probabilities directly instead.
pub fn sample_counts(distribution: &Distribution, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(LabError::Config("shots must be at least 1 when sampling".into()));
    }
    check_probabilities(&distribution.probs)?;
    let probs: Vec<f64> = distribution.probs.iter().map(|p| p.max(0.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Counts { labels: distribution.labels.clone(), counts: multinomial(&probs, shots, &mut rng) })
}

/// Sample standard deviations of `derive(frequencies)` over `runs`
/// multinomial resamples of the empirical frequencies of `counts`.
pub fn monte_carlo_errorbars<F>(counts: &Counts, runs: usize, seed: u64, derive: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    monte_carlo_errorbars_joint(&[counts], runs, seed, |f| derive(&f[0]))
}

/// Like [`monte_carlo_errorbars`] for quantities that depend on several
/// independent count sets; every set is resampled in each replica.
///
/// Replica `r` draws from stream `r` of `seed`, so results do not depend
/// on evaluation order.
pub fn monte_carlo_errorbars_joint<F>(sets: &[&Counts], runs: usize, seed: u64, derive: F) -> Result<Vec<f64>>
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
{
    if runs < 2 {
        return Err(LabError::Config(format!("Monte-Carlo error bars need at least 2 runs, got {runs}")));
    }
    if let Some(empty) = sets.iter().position(|c| c.total() == 0) {
        return Err(LabError::Config(format!("count set {empty} is empty")));
    }
    let empirical: Vec<(Vec<f64>, u64)> = sets.iter().map(|c| (c.frequencies(), c.total())).collect();

    // Welford accumulation per quantity.
    let mut mean: Vec<f64> = Vec::new();
    let mut m2: Vec<f64> = Vec::new();
    for r in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let resampled: Vec<Vec<f64>> = empirical
            .iter()
            .map(|(f, n)| multinomial(f, *n, &mut rng).into_iter().map(|k| k as f64 / *n as f64).collect())
            .collect();
        let q = derive(&resampled);
        if r == 0 {
            mean = vec![0.0; q.len()];
            m2 = vec![0.0; q.len()];
        }
        let k = (r + 1) as f64;
        for (i, x) in q.into_iter().enumerate() {
            let d = x - mean[i];
            mean[i] += d / k;
            m2[i] += d * (x - mean[i]);
        }
    }
    Ok(m2.into_iter().map(|s| (s / (runs - 1) as f64).sqrt()).collect())
}
