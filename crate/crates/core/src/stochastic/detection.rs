//! Event-count statistics of jump trajectories and the emergence of Born
//! probabilities from a strong-measurement unraveling.

use serde::{Deserialize, Serialize};

use super::{pdp_ensemble, LindbladModel, PdpOptions};
use crate::linalg::{self, c, CVec};
use crate::measure::{born_instrument, q_probabilities};
use crate::qcore::{DensityOperator, HermitianQuantity};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOptions {
    pub dt: f64,
    /// Channels that count as detections; all channels when `None`.
    pub channels: Option<Vec<usize>>,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        Self { dt: 0.01, channels: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    /// Counts per window, in trajectory order.
    pub counts: Vec<u64>,
    /// `histogram[k]` is the number of windows with `k` events.
    pub histogram: Vec<u64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `variance / mean`; undefined when no events occur.
    pub fano: Option<f64>,
}

/// Counts detection events in a window of length `window` over `n_traj` independent
/// trajectories started from `psi0`.
pub fn detection_statistics(
    model: &LindbladModel,
    psi0: &CVec,
    window: f64,
    n_traj: usize,
    base_seed: u64,
    opts: &DetectionOptions,
) -> Result<DetectionStats> {
    if n_traj < 2 {
        return Err(Error::InvalidArgument("detection statistics need at least two windows".into()));
    }
    if let Some(ch) = &opts.channels {
        if let Some(&bad) = ch.iter().find(|&&k| k >= model.jumps().len()) {
            return Err(Error::InvalidArgument(format!("no jump channel {bad}")));
        }
    }
    let pdp = PdpOptions { dt: opts.dt, record_every: usize::MAX, stop_after_events: None };
    let trajs = pdp_ensemble(model, psi0, window, n_traj, base_seed, &pdp)?;
    let counted = |k: usize| opts.channels.as_ref().is_none_or(|ch| ch.contains(&k));
    let counts: Vec<u64> = trajs.iter().map(|t| t.events.iter().filter(|e| counted(e.channel)).count() as u64).collect();
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; max + 1];
    for &k in &counts {
        histogram[k as usize] += 1;
    }
    let n = n_traj as f64;
    let values: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let mean = linalg::pairwise_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    let variance = linalg::pairwise_sum(&sq) / (n - 1.0);
    let fano = (mean > 0.0).then(|| variance / mean);
    Ok(DetectionStats { counts, histogram, mean, variance, fano })
}

/// Kolmogorov–Smirnov distance between `samples` and Exponential(`rate`).
pub fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = 1.0 - (-rate * x.max(0.0)).exp();
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornEmergence {
    /// Eigenvalues of the measured quantity, one per instrument outcome.
    pub outcomes: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Trajectories with no collapse before the time limit.
    pub uncollapsed: u64,
}

/// Strong measurement of `a` as a jump process: one channel `√rate · P_k` per
/// eigenprojector and no Hamiltonian. The first jump selects the outcome.
pub fn born_emergence(
    a: &HermitianQuantity,
    psi: &CVec,
    rate: f64,
    n_traj: usize,
    base_seed: u64,
) -> Result<BornEmergence> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("measurement rate must be positive, got {rate}")));
    }
    let povm = born_instrument(a)?;
    let probabilities = q_probabilities(&DensityOperator::pure(psi)?, &povm)?;
    let jumps = povm.effects().iter().map(|p| p.matrix() * c(rate.sqrt(), 0.0)).collect();
    let model = LindbladModel::new(HermitianQuantity::zero(a.dim()), jumps)?;
    let opts = PdpOptions { dt: 0.02 / rate, record_every: usize::MAX, stop_after_events: Some(1) };
    let trajs = pdp_ensemble(&model, psi, 40.0 / rate, n_traj, base_seed, &opts)?;
    let mut counts = vec![0u64; povm.len()];
    let mut uncollapsed = 0;
    for t in &trajs {
        match t.events.first() {
            Some(e) => counts[e.channel] += 1,
            None => uncollapsed += 1,
        }
    }
    let frequencies = counts.iter().map(|&k| k as f64 / n_traj as f64).collect();
    let outcomes = povm.outcome_values().unwrap_or_default();
    Ok(BornEmergence { outcomes, probabilities, counts, frequencies, uncollapsed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, from_rows};
    use crate::qcore::random;
    use crate::rng;

    fn pumped(gamma: f64, pump: f64) -> LindbladModel {
        let z = c(0.0, 0.0);
        let down = from_rows(2, &[z, c(gamma.sqrt(), 0.0), z, z]);
        let up = from_rows(2, &[z, z, c(pump.sqrt(), 0.0), z]);
        LindbladModel::new(HermitianQuantity::zero(2), vec![down, up]).unwrap()
    }

    #[test]
    fn no_channels_no_counts() {
        let model = LindbladModel::new(HermitianQuantity::identity(2), vec![]).unwrap();
        let stats = detection_statistics(&model, &basis_vector(2, 0), 1.0, 50, 0, &Default::default()).unwrap();
        assert!(stats.counts.iter().all(|&k| k == 0));
        assert_eq!(stats.fano, None);
    }

    #[test]
    fn constant_rate_is_poissonian() {
        let lambda: f64 = 2.0;
        let l = from_rows(1, &[c(lambda.sqrt(), 0.0)]);
        let model = LindbladModel::new(HermitianQuantity::zero(1), vec![l]).unwrap();
        let stats = detection_statistics(&model, &basis_vector(1, 0), 5.0, 4000, 11, &Default::default()).unwrap();
        assert!((stats.mean - 10.0).abs() < 0.2, "{}", stats.mean);
        let fano = stats.fano.unwrap();
        assert!((0.92..=1.08).contains(&fano), "{fano}");
    }

    #[test]
    fn single_emitter_is_sub_poissonian() {
        let model = pumped(1.0, 0.0);
        let stats = detection_statistics(&model, &basis_vector(2, 1), 2.0, 500, 2, &Default::default()).unwrap();
        assert!(stats.counts.iter().all(|&k| k <= 1));
        assert!(stats.fano.unwrap() < 1.0);
    }

    #[test]
    fn repumped_emitter_counts() {
        let model = pumped(1.0, 100.0);
        let opts = DetectionOptions { dt: 0.002, channels: Some(vec![0]) };
        let stats = detection_statistics(&model, &basis_vector(2, 0), 10.0, 1000, 5, &opts).unwrap();
        // Renewal process with Exp(100) + Exp(1) intervals: rate 100/101.
        assert!((stats.mean - 10.0 * 100.0 / 101.0).abs() < 0.4, "{}", stats.mean);
        let fano = stats.fano.unwrap();
        assert!((0.85..=1.1).contains(&fano), "{fano}");
    }

    #[test]
    fn ks_distance_oracle() {
        // Exact quantiles of the distribution give a distance of 1/n at most.
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| -((1.0 - (i as f64 + 0.5) / n as f64).ln()) / 2.0).collect();
        assert!(ks_exponential(&xs, 2.0) <= 0.5 / n as f64 + 1e-12);
        assert!(ks_exponential(&xs, 1.0) > 0.2);
    }

    #[test]
    fn first_collapse_follows_born_rule() {
        let mut r = rng::seeded(21);
        let a = random::hermitian(3, &mut r);
        let psi = random::unit_vector(3, &mut r);
        let n = 4000;
        let res = born_emergence(&a, &psi, 50.0, n, 8).unwrap();
        assert_eq!(res.uncollapsed, 0);
        for (p, f) in res.probabilities.iter().zip(&res.frequencies) {
            assert!((p - f).abs() <= 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "{p} vs {f}");
        }
        assert_eq!(res.outcomes.len(), 3);
    }
}
