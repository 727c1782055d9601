//! Line-based (polar coordinate / R2) hypervolume estimate.
//!
//! Rays leave the reference point towards the set along unit directions in
//! the positive orthant. With `l_i` the length of ray `i` inside the
//! dominated region,
//!
//! ```text
//! HV ~= pi^(m/2) / (m * n * 2^(m-1) * Gamma(m/2)) * sum_i l_i^m
//! l_i = max_{s in S} min_j (r_j - s_j) / lambda_ij
//! ```

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pareto::{ReferencePoint, SolutionSet};
use crate::rng;

const NORM_TOLERANCE: f64 = 1e-12;

/// Unit-norm, non-negative direction vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    seed: Option<u64>,
}

impl DirectionSet {
    /// Wraps explicit directions after checking norms and signs.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::Empty)?.len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if v.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("direction {i} has a negative component")));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvalidArgument(format!("direction {i} has norm {norm}")));
            }
        }
        Ok(Self { vectors, dim, seed: None })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Maps a normal draw `z` to `|z| / ||z||_2`.
pub fn unv_from_normal(z: &[f64]) -> Result<Vec<f64>> {
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument("normal draw has zero or non-finite norm".into()));
    }
    Ok(z.iter().map(|x| x.abs() / norm).collect())
}

/// `n` directions uniform on the positive-orthant unit sphere (unit normal
/// vector method).
pub fn generate_unv_directions(n: usize, m: usize, seed: u64) -> Result<DirectionSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    if m < 2 {
        return Err(Error::TooFewObjectives(m));
    }
    let mut rng = rng::seeded(seed);
    let mut z = vec![0.0; m];
    let mut vectors = Vec::with_capacity(n);
    while vectors.len() < n {
        for x in z.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        // An all-zero draw has probability zero; redraw if it happens.
        if let Ok(v) = unv_from_normal(&z) {
            vectors.push(v);
        }
    }
    Ok(DirectionSet { vectors, dim: m, seed: Some(seed) })
}

/// Length of the segment from `reference` along `direction` that lies in the
/// region dominated by `set`. Zero components drop out of the inner min.
pub fn line_length(set: &SolutionSet, reference: &ReferencePoint, direction: &[f64]) -> Result<f64> {
    if direction.len() != set.dim() || reference.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: if direction.len() != set.dim() { direction.len() } else { reference.dim() },
        });
    }
    if direction.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("direction is all zeros".into()));
    }
    Ok(segment(set, reference.coords(), direction))
}

fn segment(set: &SolutionSet, r: &[f64], direction: &[f64]) -> f64 {
    set.iter()
        .map(|s| {
            s.coords()
                .iter()
                .zip(r)
                .zip(direction)
                .filter(|(_, &d)| d != 0.0)
                .map(|((s, r), d)| (r - s).abs() / d)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// `Gamma(x)` for positive half-integers `x` in {1/2, 1, 3/2, ...}.
pub fn gamma_half_integer(x: f64) -> Result<f64> {
    let twice = 2.0 * x;
    if !(x > 0.0) || twice.fract() != 0.0 || !twice.is_finite() {
        return Err(Error::InvalidArgument(format!("{x} is not a positive half-integer")));
    }
    let (mut g, mut arg) = if (twice as u64).is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while arg < x {
        g *= arg;
        arg += 1.0;
    }
    Ok(g)
}

/// Constant in front of `sum_i l_i^m`.
pub fn line_coefficient(m: usize, n: usize) -> Result<f64> {
    let gamma = gamma_half_integer(m as f64 / 2.0)?;
    let pi_term = std::f64::consts::PI.powf(m as f64 / 2.0);
    Ok(pi_term / (m as f64 * n as f64 * 2f64.powi(m as i32 - 1) * gamma))
}

pub fn hv_line(set: &SolutionSet, reference: &ReferencePoint, dirs: &DirectionSet) -> Result<f64> {
    if dirs.is_empty() {
        return Err(Error::Empty);
    }
    if dirs.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: dirs.dim() });
    }
    if reference.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: reference.dim() });
    }
    let m = set.dim();
    let r = reference.coords();
    let sum: f64 = dirs
        .vectors()
        .iter()
        .map(|d| segment(set, r, d).powi(m as i32))
        .sum();
    Ok(line_coefficient(m, dirs.len())? * sum)
}
