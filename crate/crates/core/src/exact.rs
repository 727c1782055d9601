//! Exact hypervolume.
//!
//! [`hv_exact`] is an exclusive-hypervolume recursion in the WFG family:
//! points are processed worst-first along the last objective, so every
//! point limited against its successors shares that point's last
//! coordinate and the subtracted term collapses into an (m-1)-dimensional
//! problem. Two-dimensional subproblems go to a sort-and-sweep.
//!
//! [`hv_oracle_incl_excl`] and [`hv_exact_2d`] are independent routes kept
//! for cross-checking.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::pareto::{ReferencePoint, SolutionSet};

/// Largest set accepted by the inclusion-exclusion oracle (2^N terms).
pub const INCL_EXCL_LIMIT: usize = 20;

/// Exact hypervolume of `set` with respect to `reference`.
pub fn hv_exact(set: &SolutionSet, reference: &ReferencePoint) -> Result<f64> {
    reference.check_against(set)?;
    let dim = set.dim();
    let flat: Vec<f64> = set.iter().flat_map(|p| p.coords().iter().copied()).collect();
    Ok(wfg(Points::new(flat, dim), reference.coords()))
}

/// Two-objective sweep; errors unless `m == 2`.
pub fn hv_exact_2d(set: &SolutionSet, reference: &ReferencePoint) -> Result<f64> {
    if set.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: set.dim(),
        });
    }
    reference.check_against(set)?;
    let mut pts: Vec<[f64; 2]> = set.iter().map(|p| [p[0], p[1]]).collect();
    Ok(sweep_2d(&mut pts, [reference.coords()[0], reference.coords()[1]]))
}

/// Inclusion-exclusion over all non-empty subsets:
/// `sum_T (-1)^(|T|+1) prod_j (r_j - max_{s in T} s_j)+`.
pub fn hv_oracle_incl_excl(set: &SolutionSet, reference: &ReferencePoint) -> Result<f64> {
    if set.len() > INCL_EXCL_LIMIT {
        return Err(Error::SetTooLarge {
            size: set.len(),
            limit: INCL_EXCL_LIMIT,
        });
    }
    if set.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: reference.dim(),
        });
    }
    let rows: Vec<&[f64]> = set.iter().map(|p| p.coords()).collect();
    let mut upper = vec![f64::NEG_INFINITY; set.dim()];
    Ok(subset_sum(&rows, reference.coords(), 0, &mut upper, 0))
}

fn subset_sum(rows: &[&[f64]], r: &[f64], start: usize, upper: &mut [f64], depth: usize) -> f64 {
    let mut total = 0.0;
    for i in start..rows.len() {
        let saved = upper.to_vec();
        for (u, &x) in upper.iter_mut().zip(rows[i]) {
            *u = u.max(x);
        }
        let volume: f64 = r.iter().zip(upper.iter()).map(|(r, u)| (r - u).max(0.0)).product();
        let sign = if depth.is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * volume;
        if volume > 0.0 {
            total += subset_sum(rows, r, i + 1, upper, depth + 1);
        }
        upper.copy_from_slice(&saved);
    }
    total
}

/// Row-major point buffer with a fixed stride.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn new(data: Vec<f64>, dim: usize) -> Self {
        Self { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn box_volume(p: &[f64], r: &[f64]) -> f64 {
    p.iter().zip(r).map(|(s, r)| r - s).product()
}

fn wfg(pts: Points, r: &[f64]) -> f64 {
    let dim = r.len();
    match pts.len() {
        0 => return 0.0,
        1 => return box_volume(pts.row(0), r),
        _ => {}
    }
    if dim == 2 {
        let mut pairs: Vec<[f64; 2]> = (0..pts.len()).map(|i| [pts.row(i)[0], pts.row(i)[1]]).collect();
        return sweep_2d(&mut pairs, [r[0], r[1]]);
    }

    let last = dim - 1;
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        pts.row(b)[last]
            .partial_cmp(&pts.row(a)[last])
            .unwrap_or(Ordering::Equal)
    });

    let mut total = 0.0;
    let mut limited = Vec::with_capacity(pts.len() * last);
    for (k, &i) in order.iter().enumerate() {
        let p = pts.row(i);
        let inclusive = box_volume(p, r);
        let later = &order[k + 1..];
        if later.is_empty() {
            total += inclusive;
            continue;
        }
        limited.clear();
        for &j in later {
            let q = pts.row(j);
            limited.extend(q[..last].iter().zip(&p[..last]).map(|(a, b)| a.max(*b)));
        }
        let reduced = non_dominated(&limited, last);
        total += inclusive - (r[last] - p[last]) * wfg(reduced, &r[..last]);
    }
    total
}

/// Drops every row weakly dominated by another row (keeps one copy of
/// duplicates).
fn non_dominated(data: &[f64], dim: usize) -> Points {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut keep = Vec::with_capacity(data.len());
    'outer: for i in 0..n {
        let p = row(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = row(j);
            if q.iter().zip(p).all(|(a, b)| a <= b) && (q != p || j < i) {
                continue 'outer;
            }
        }
        keep.extend_from_slice(p);
    }
    Points::new(keep, dim)
}

/// Area dominated by `pts` below `r`; tolerates dominated input points.
fn sweep_2d(pts: &mut [[f64; 2]], r: [f64; 2]) -> f64 {
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap_or(Ordering::Equal)
            .then(a[1].partial_cmp(&b[1]).unwrap_or(Ordering::Equal))
    });
    let mut area = 0.0;
    let mut ceiling = r[1];
    for p in pts.iter() {
        if p[1] < ceiling {
            area += (r[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}
