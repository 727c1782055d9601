//! Point-based (Monte Carlo) hypervolume estimate.
//!
//! Samples are drawn uniformly in the box spanned by the ideal point of the
//! set and the reference point; the estimate is the dominated fraction of
//! the samples times the box volume. A sample counts as dominated when some
//! member of the set is `<=` it in every objective.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::pareto::{weakly_dominates_slice, ReferencePoint, SolutionSet};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub num_points: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(num_points: usize, seed: u64) -> Result<Self> {
        if num_points == 0 {
            return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
        }
        Ok(Self { num_points, seed })
    }
}

/// Source of sample locations inside `[lower, upper]`.
pub trait BoxSampler {
    fn sample(&mut self, lower: &[f64], upper: &[f64], out: &mut [f64]);
}

/// Uniform sampling driven by a seeded ChaCha8 stream.
pub struct UniformSampler(Rng);

impl UniformSampler {
    pub fn new(seed: u64) -> Self {
        Self(rng::seeded(seed))
    }

    pub fn from_rng(rng: Rng) -> Self {
        Self(rng)
    }
}

impl BoxSampler for UniformSampler {
    fn sample(&mut self, lower: &[f64], upper: &[f64], out: &mut [f64]) {
        for ((o, lo), hi) in out.iter_mut().zip(lower).zip(upper) {
            *o = lo + (hi - lo) * self.0.random::<f64>();
        }
    }
}

/// Replays a fixed list of sample locations, cycling when exhausted.
pub struct FixedSamples {
    samples: Vec<Vec<f64>>,
    next: usize,
}

impl FixedSamples {
    pub fn new(samples: Vec<Vec<f64>>) -> Self {
        Self { samples, next: 0 }
    }
}

impl BoxSampler for FixedSamples {
    fn sample(&mut self, _lower: &[f64], _upper: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.samples[self.next % self.samples.len()]);
        self.next += 1;
    }
}

/// Lower and upper corners of the sampling box, and its volume.
pub fn sampling_box(set: &SolutionSet, reference: &ReferencePoint) -> (Vec<f64>, Vec<f64>, f64) {
    let lower = set.ideal();
    let upper = reference.coords().to_vec();
    let volume = lower.iter().zip(&upper).map(|(lo, hi)| hi - lo).product();
    (lower, upper, volume)
}

pub fn hv_mc(set: &SolutionSet, reference: &ReferencePoint, cfg: McConfig) -> Result<f64> {
    hv_mc_with(set, reference, cfg.num_points, &mut UniformSampler::new(cfg.seed))
}

/// Monte Carlo estimate using `k` samples from an arbitrary sampler.
pub fn hv_mc_with<S: BoxSampler>(
    set: &SolutionSet,
    reference: &ReferencePoint,
    k: usize,
    sampler: &mut S,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
    }
    reference.check_against(set)?;
    let (lower, upper, volume) = sampling_box(set, reference);
    let mut x = vec![0.0; set.dim()];
    let mut hits = 0usize;
    for _ in 0..k {
        sampler.sample(&lower, &upper, &mut x);
        if set.iter().any(|s| weakly_dominates_slice(s.coords(), &x)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / k as f64 * volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::hv_oracle_incl_excl;

    fn cfg(k: usize, seed: u64) -> McConfig {
        McConfig::new(k, seed).unwrap()
    }

    #[test]
    fn origin_dominates_every_sample() {
        for m in 2..6 {
            let s = SolutionSet::from_rows([vec![0.0; m]]).unwrap();
            for k in [1, 17, 500] {
                assert_eq!(hv_mc(&s, &ReferencePoint::unit(m), cfg(k, 3)).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn injected_samples() {
        let s = SolutionSet::from_rows([[0.5, 0.5]]).unwrap();
        let mut fixed = FixedSamples::new(vec![
            vec![0.25, 0.25],
            vec![0.25, 0.75],
            vec![0.75, 0.25],
            vec![0.75, 0.75],
        ]);
        // Sampling box here is [0.5,1]^2 of volume 0.25; one hit in four.
        let est = hv_mc_with(&s, &ReferencePoint::unit(2), 4, &mut fixed).unwrap();
        assert_eq!(est, 0.25 * 0.25);
    }

    #[test]
    fn injected_samples_over_unit_box() {
        // Ideal point at the origin makes the sampling box [0,1]^2, so the
        // estimate is (hits/k) * 1.
        let s = SolutionSet::from_rows([[0.5, 0.5], [0.0, 0.9], [0.9, 0.0]]).unwrap();
        let mut fixed = FixedSamples::new(vec![
            vec![0.25, 0.25],
            vec![0.25, 0.75],
            vec![0.75, 0.25],
            vec![0.75, 0.75],
        ]);
        let est = hv_mc_with(&s, &ReferencePoint::unit(2), 4, &mut fixed).unwrap();
        assert_eq!(est, 0.25);
    }

    #[test]
    fn boundary_samples_count_as_dominated() {
        let s = SolutionSet::from_rows([[0.5, 0.5]]).unwrap();
        let mut fixed = FixedSamples::new(vec![vec![0.5, 0.5]]);
        let est = hv_mc_with(&s, &ReferencePoint::unit(2), 3, &mut fixed).unwrap();
        assert_eq!(est, 0.25);
    }

    #[test]
    fn large_sample_is_within_three_standard_errors() {
        let s = SolutionSet::from_rows([[0.25, 0.75], [0.75, 0.25]]).unwrap();
        let r = ReferencePoint::unit(2);
        let exact = hv_oracle_incl_excl(&s, &r).unwrap();
        let k = 200_000;
        let (_, _, volume) = sampling_box(&s, &r);
        let p = exact / volume;
        let sigma = (p * (1.0 - p) / k as f64).sqrt() * volume;
        let est = hv_mc(&s, &r, cfg(k, 2024)).unwrap();
        assert!((est - exact).abs() <= 3.0 * sigma, "{est} vs {exact} (sigma {sigma})");
    }

    #[test]
    fn deterministic_and_bounded() {
        let s = SolutionSet::from_rows([[0.1, 0.6, 0.3], [0.5, 0.2, 0.4]]).unwrap();
        let r = ReferencePoint::unit(3);
        let a = hv_mc(&s, &r, cfg(1000, 9)).unwrap();
        let b = hv_mc(&s, &r, cfg(1000, 9)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let (_, _, volume) = sampling_box(&s, &r);
        for seed in 0..20 {
            let est = hv_mc(&s, &r, cfg(50, seed)).unwrap();
            assert!((0.0..=volume).contains(&est));
        }
    }

    #[test]
    fn rejects_zero_samples_and_bad_reference() {
        assert!(McConfig::new(0, 1).is_err());
        let s = SolutionSet::from_rows([[0.5, 0.5]]).unwrap();
        let r = ReferencePoint::new(vec![0.4, 1.0]).unwrap();
        assert!(matches!(hv_mc(&s, &r, cfg(10, 1)), Err(Error::ReferenceViolation { .. })));
    }
}
