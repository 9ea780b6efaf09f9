use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::PartitionPoint;

const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySegment {
    pub start: f64,
    pub end: f64,
    pub weight: f64,
}

/// Piecewise-constant probability density on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DensitySegment>", into = "Vec<DensitySegment>")]
pub struct Density {
    segments: Vec<DensitySegment>,
}

impl Density {
    pub fn new(segments: Vec<DensitySegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("density needs at least one segment".into()));
        }
        for s in &segments {
            if !(s.start.is_finite() && s.end.is_finite() && s.weight.is_finite()) {
                return Err(Error::InvalidArgument("density segment is not finite".into()));
            }
            if s.start < 0.0 || s.end > 1.0 || s.start >= s.end {
                return Err(Error::InvalidArgument(format!(
                    "density segment [{}, {}] is not a sub-interval of [0, 1]",
                    s.start, s.end
                )));
            }
            if s.weight < 0.0 {
                return Err(Error::InvalidArgument(format!("negative density weight {}", s.weight)));
            }
        }
        let d = Density { segments };
        let total = d.cumulative(1.0);
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("density integrates to {total}, not 1")));
        }
        Ok(d)
    }

    pub fn uniform() -> Density {
        Density {
            segments: vec![DensitySegment { start: 0.0, end: 1.0, weight: 1.0 }],
        }
    }

    /// Density `weight` on `[start, end]` and zero elsewhere; `weight` is
    /// implied by the unit total.
    pub fn block(start: f64, end: f64) -> Result<Density> {
        Density::new(vec![DensitySegment { start, end, weight: 1.0 / (end - start) }])
    }

    pub fn segments(&self) -> &[DensitySegment] {
        &self.segments
    }

    pub fn max_weight(&self) -> f64 {
        self.segments.iter().map(|s| s.weight).fold(0.0, f64::max)
    }

    /// Mass of `[0, t]`.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.weight * (t.clamp(s.start, s.end) - s.start))
            .sum()
    }

    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// Values of all pieces of the partition.
    pub fn piece_values(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        let mut left = 0.0;
        let mut prev = 0.0;
        for (j, &len) in x.iter().enumerate() {
            let right = if j + 1 == x.len() { 1.0 } else { left + len };
            let c = self.cumulative(right);
            out.push(c - prev);
            prev = c;
            left = right;
        }
        out
    }
}

impl TryFrom<Vec<DensitySegment>> for Density {
    type Error = Error;
    fn try_from(v: Vec<DensitySegment>) -> Result<Self> {
        Density::new(v)
    }
}

impl From<Density> for Vec<DensitySegment> {
    fn from(d: Density) -> Self {
        d.segments
    }
}

/// Value of piece `j` (0-based) of partition `x` under `density`.
pub fn piece_value(density: &Density, x: &PartitionPoint, j: usize) -> Result<f64> {
    if j >= x.k() {
        return Err(Error::InvalidArgument(format!("piece {j} out of range for k={}", x.k())));
    }
    Ok(density.piece_values(x.coords())[j])
}
