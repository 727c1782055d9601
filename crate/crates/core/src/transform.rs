//! Maps an arbitrary (set, reference point) pair into the canonical frame:
//! points in `[0, 1)^m`, reference point `(1, ..., 1)`.
//!
//! Shifting every point and the reference point by the same vector leaves
//! the hypervolume unchanged; scaling axis `j` by `a_j > 0` multiplies it by
//! `prod_j a_j`. Maximization problems are negated first. Hence
//! `HV(S, r) = c * HV(S'', 1)` with `c = prod_j (r_j - min_j S)`.

use crate::error::{Error, Result};
use crate::hvnet::SetRegressor;
use crate::pareto::{Point, ReferencePoint, SolutionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedProblem {
    /// The set in the canonical frame.
    pub set: SolutionSet,
    /// `HV(S, r) = scale * HV(set, (1, ..., 1))`.
    pub scale: f64,
    /// Added to every (minimization-frame) coordinate before scaling.
    pub shift: Vec<f64>,
    /// Per-axis multipliers applied after the shift.
    pub axis_scale: Vec<f64>,
}

impl NormalizedProblem {
    pub fn reference(&self) -> ReferencePoint {
        ReferencePoint::unit(self.set.dim())
    }
}

pub fn normalize(set: &SolutionSet, reference: &ReferencePoint, orientation: Orientation) -> Result<NormalizedProblem> {
    let (set, reference) = match orientation {
        Orientation::Minimize => (set.clone(), reference.clone()),
        Orientation::Maximize => negate(set, reference)?,
    };
    reference.check_against(&set)?;

    let shift: Vec<f64> = set.ideal().iter().map(|lo| -lo).collect();
    let extent: Vec<f64> = reference.coords().iter().zip(&shift).map(|(r, b)| r + b).collect();
    if let Some(axis) = extent.iter().position(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::DegenerateAxis { axis });
    }
    let points = set
        .iter()
        .map(|p| {
            let coords = p
                .coords()
                .iter()
                .zip(&shift)
                .zip(&extent)
                .map(|((s, b), e)| (s + b) / e)
                .collect();
            Point::new(coords)
        })
        .collect::<Result<Vec<_>>>()?;
    let canonical = SolutionSet::new(points)?;
    Ok(NormalizedProblem {
        set: canonical,
        scale: extent.iter().product(),
        shift,
        axis_scale: extent.iter().map(|e| 1.0 / e).collect(),
    })
}

fn negate(set: &SolutionSet, reference: &ReferencePoint) -> Result<(SolutionSet, ReferencePoint)> {
    let flipped = SolutionSet::from_rows(set.iter().map(|p| p.coords().iter().map(|x| -x).collect::<Vec<_>>()))?;
    let r = ReferencePoint::new(reference.coords().iter().map(|x| -x).collect())?;
    Ok((flipped, r))
}

/// Hypervolume of any problem through a canonical-frame regressor.
pub fn approx_hv_any<M: SetRegressor + ?Sized>(
    model: &M,
    set: &SolutionSet,
    reference: &ReferencePoint,
    orientation: Orientation,
) -> Result<f64> {
    let problem = normalize(set, reference, orientation)?;
    Ok(problem.scale * model.predict(&problem.set)?)
}
