//! Objective-space primitives: points, Pareto dominance, non-dominated
//! sorting and validated solution sets. Every objective is minimized.

use std::cmp::Ordering;
use std::ops::Index;

use crate::error::{Error, Result};

/// A point in an m-dimensional objective space (m >= 2, finite coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::TooFewObjectives(coords.len()));
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Pareto dominance: `self <= other` everywhere and `<` somewhere.
    pub fn dominates(&self, other: &Point) -> Result<bool> {
        dominates(self, other)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Returns true iff `a` Pareto-dominates `b`. Comparisons are exact.
pub fn dominates(a: &Point, b: &Point) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(dominates_slice(a.coords(), b.coords()))
}

/// Unchecked dominance on raw coordinate slices of equal length.
#[inline]
pub(crate) fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// `a <= b` in every coordinate.
#[inline]
pub(crate) fn weakly_dominates_slice(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Front index (0-based) of every point.
///
/// Points are visited in lexicographic order, which guarantees that no later
/// point dominates an earlier one; each point then joins the first front
/// holding none of its dominators (efficient non-dominated sort, sequential
/// search variant).
pub fn front_ranks<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lexicographic(points[i].as_ref(), points[j].as_ref()));

    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut rank = vec![0; points.len()];
    for &i in &order {
        let p = points[i].as_ref();
        let k = fronts
            .iter()
            .position(|front| {
                !front
                    .iter()
                    .rev()
                    .any(|&j| dominates_slice(points[j].as_ref(), p))
            })
            .unwrap_or(fronts.len());
        if k == fronts.len() {
            fronts.push(Vec::new());
        }
        fronts[k].push(i);
        rank[i] = k;
    }
    rank
}

/// Fronts as index lists; indices within a front keep input order.
pub fn front_indices<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let ranks = front_ranks(points);
    let count = ranks.iter().max().map_or(0, |r| r + 1);
    let mut fronts = vec![Vec::new(); count];
    for (i, &r) in ranks.iter().enumerate() {
        fronts[r].push(i);
    }
    fronts
}

/// Splits `points` into successive non-dominated fronts F1, F2, ...
pub fn non_dominated_sort(points: &[Point]) -> Result<Vec<Vec<Point>>> {
    let first = points.first().ok_or(Error::Empty)?;
    check_dims(points, first.dim())?;
    Ok(front_indices(points)
        .into_iter()
        .map(|front| front.into_iter().map(|i| points[i].clone()).collect())
        .collect())
}

fn check_dims(points: &[Point], dim: usize) -> Result<()> {
    match points.iter().find(|p| p.dim() != dim) {
        Some(p) => Err(Error::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        }),
        None => Ok(()),
    }
}

/// A non-empty, duplicate-free, mutually non-dominated collection of points.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    points: Vec<Point>,
}

/// Validates that `points` form a [`SolutionSet`], naming the first
/// offending pair otherwise.
pub fn validate_solution_set(points: Vec<Point>) -> Result<SolutionSet> {
    let first = points.first().ok_or(Error::Empty)?;
    check_dims(&points, first.dim())?;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (a, b) = (points[i].coords(), points[j].coords());
            if a == b {
                return Err(Error::DuplicatePoint { first: i, second: j });
            }
            if dominates_slice(a, b) {
                return Err(Error::DominatedPair {
                    dominating: i,
                    dominated: j,
                });
            }
            if dominates_slice(b, a) {
                return Err(Error::DominatedPair {
                    dominating: j,
                    dominated: i,
                });
            }
        }
    }
    Ok(SolutionSet { points })
}

impl SolutionSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        validate_solution_set(points)
    }

    /// Builds and validates a set from raw coordinate rows.
    pub fn from_rows<R: Into<Vec<f64>>>(rows: impl IntoIterator<Item = R>) -> Result<Self> {
        let points = rows
            .into_iter()
            .map(|r| Point::new(r.into()))
            .collect::<Result<Vec<_>>>()?;
        validate_solution_set(points)
    }

    /// Skips validation; the caller guarantees the invariants.
    #[cfg(test)]
    pub(crate) fn from_trusted(points: Vec<Point>) -> Self {
        debug_assert!(!points.is_empty());
        Self { points }
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Componentwise minimum over the set.
    pub fn ideal(&self) -> Vec<f64> {
        let mut ideal = self.points[0].coords().to_vec();
        for p in &self.points[1..] {
            for (lo, &x) in ideal.iter_mut().zip(p.coords()) {
                *lo = lo.min(x);
            }
        }
        ideal
    }

    /// Returns a copy with the points reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        Self {
            points: perm.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    pub fn contains_in_unit_box(&self) -> Result<()> {
        for (index, p) in self.points.iter().enumerate() {
            if let Some(&value) = p.coords().iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::OutOfUnitBox { index, value });
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a SolutionSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Upper corner of the measured region; must be strictly dominated by every
/// point of the set it is paired with.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint(Vec<f64>);

impl ReferencePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords).map(|p| Self(p.into_coords()))
    }

    /// The canonical reference point (1, ..., 1).
    pub fn unit(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Checks `r_j > s_j` for every point and objective.
    pub fn check_against(&self, set: &SolutionSet) -> Result<()> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                found: self.dim(),
            });
        }
        for (index, p) in set.iter().enumerate() {
            if let Some(objective) = p.coords().iter().zip(&self.0).position(|(s, r)| s >= r) {
                return Err(Error::ReferenceViolation { index, objective });
            }
        }
        Ok(())
    }
}

impl AsRef<[f64]> for ReferencePoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
