use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::Density;
use crate::error::{Error, Result};
use crate::pieceset::PieceSet;
use crate::simplex::{lattice_points, SimplexGrid, DEFAULT_ZERO_TOL};

pub const DEFAULT_TIE_TOL: f64 = 1e-6;

fn default_tie() -> f64 {
    DEFAULT_TIE_TOL
}

fn default_free() -> f64 {
    DEFAULT_ZERO_TOL
}

/// One guest's preference model. Indices are 0-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuestSpec {
    /// Prefers the pieces of (near-)maximal value under a density.
    Additive {
        density: Density,
        #[serde(default = "default_tie")]
        tie_tol: f64,
    },
    /// Accepts every piece worth at least `theta`; may reject all pieces.
    ThresholdPicky {
        density: Density,
        theta: f64,
        #[serde(default = "default_tie")]
        tie_tol: f64,
    },
    /// Refuses everything once some piece is longer than `cap`, otherwise
    /// takes a shortest piece.
    MinPieceCapped {
        cap: f64,
        #[serde(default = "default_tie")]
        tie_tol: f64,
    },
    Never,
    /// Tenant with room values `utilities`; partition coordinates are prices.
    RentQuasilinear {
        utilities: Vec<f64>,
        #[serde(default = "default_free")]
        free_tol: f64,
        #[serde(default = "default_tie")]
        tie_tol: f64,
    },
    CustomGrid(CustomGrid),
}

impl GuestSpec {
    pub fn uniform() -> GuestSpec {
        GuestSpec::Additive { density: Density::uniform(), tie_tol: DEFAULT_TIE_TOL }
    }

    pub fn additive(density: Density) -> GuestSpec {
        GuestSpec::Additive { density, tie_tol: DEFAULT_TIE_TOL }
    }

    pub fn threshold(density: Density, theta: f64) -> GuestSpec {
        GuestSpec::ThresholdPicky { density, theta, tie_tol: DEFAULT_TIE_TOL }
    }

    pub fn capped(cap: f64) -> GuestSpec {
        GuestSpec::MinPieceCapped { cap, tie_tol: DEFAULT_TIE_TOL }
    }

    pub fn rent(utilities: Vec<f64>) -> GuestSpec {
        GuestSpec::RentQuasilinear { utilities, free_tol: DEFAULT_ZERO_TOL, tie_tol: DEFAULT_TIE_TOL }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GuestSpec::Additive { .. } => "additive",
            GuestSpec::ThresholdPicky { .. } => "threshold_picky",
            GuestSpec::MinPieceCapped { .. } => "min_piece_capped",
            GuestSpec::Never => "never",
            GuestSpec::RentQuasilinear { .. } => "rent_quasilinear",
            GuestSpec::CustomGrid(_) => "custom_grid",
        }
    }

    pub fn density(&self) -> Option<&Density> {
        match self {
            GuestSpec::Additive { density, .. } | GuestSpec::ThresholdPicky { density, .. } => {
                Some(density)
            }
            _ => None,
        }
    }

    /// Replaces the tie tolerance of every kind that has one.
    pub fn set_tie_tol(&mut self, tol: f64) {
        match self {
            GuestSpec::Additive { tie_tol, .. }
            | GuestSpec::ThresholdPicky { tie_tol, .. }
            | GuestSpec::MinPieceCapped { tie_tol, .. }
            | GuestSpec::RentQuasilinear { tie_tol, .. } => *tie_tol = tol,
            GuestSpec::Never | GuestSpec::CustomGrid(_) => {}
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match self {
            GuestSpec::Additive { tie_tol, .. } => nonneg("tie_tol", *tie_tol),
            GuestSpec::ThresholdPicky { theta, tie_tol, .. } => {
                nonneg("theta", *theta)?;
                nonneg("tie_tol", *tie_tol)
            }
            GuestSpec::MinPieceCapped { cap, tie_tol } => {
                nonneg("cap", *cap)?;
                nonneg("tie_tol", *tie_tol)
            }
            GuestSpec::Never => Ok(()),
            GuestSpec::RentQuasilinear { utilities, free_tol, tie_tol } => {
                if utilities.len() != k {
                    return Err(Error::InvalidArgument(format!(
                        "rent guest has {} utilities for {k} rooms",
                        utilities.len()
                    )));
                }
                if utilities.iter().any(|u| !u.is_finite()) {
                    return Err(Error::InvalidArgument("utilities must be finite".into()));
                }
                nonneg("free_tol", *free_tol)?;
                nonneg("tie_tol", *tie_tol)
            }
            GuestSpec::CustomGrid(g) => {
                if g.k() != k {
                    return Err(Error::InvalidArgument(format!(
                        "custom grid guest is defined for k={}, family has k={k}",
                        g.k()
                    )));
                }
                Ok(())
            }
        }
    }

    /// The guest's preferred pieces at partition `x`.
    pub fn preferred_pieces(&self, x: &[f64]) -> Result<PieceSet> {
        self.preferred_with_slack(x, 0.0)
    }

    /// Preferred pieces with every tolerance loosened by `slack` (value units
    /// for valuations, length units for lengths and prices). Monotone in `slack`.
    pub fn preferred_with_slack(&self, x: &[f64], slack: f64) -> Result<PieceSet> {
        let k = x.len();
        let set = match self {
            GuestSpec::Additive { density, tie_tol } => {
                let v = density.piece_values(x);
                let best = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tol = tie_tol + slack;
                (0..k).filter(|&j| v[j] >= best - tol).collect()
            }
            GuestSpec::ThresholdPicky { density, theta, tie_tol } => {
                let v = density.piece_values(x);
                let floor = theta - tie_tol - slack;
                (0..k).filter(|&j| v[j] >= floor).collect()
            }
            GuestSpec::MinPieceCapped { cap, tie_tol } => {
                let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if max > cap + slack {
                    PieceSet::EMPTY
                } else {
                    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
                    (0..k).filter(|&j| x[j] <= min + tie_tol + slack).collect()
                }
            }
            GuestSpec::Never => PieceSet::EMPTY,
            GuestSpec::RentQuasilinear { utilities, free_tol, tie_tol } => {
                if utilities.len() != k {
                    return Err(Error::InvalidArgument(format!(
                        "rent guest has {} utilities for {k} rooms",
                        utilities.len()
                    )));
                }
                rent_preference(utilities, x, *free_tol, *tie_tol, slack)
            }
            GuestSpec::CustomGrid(g) => g.membership(x)?,
        };
        Ok(set)
    }
}

fn rent_preference(u: &[f64], price: &[f64], free_tol: f64, tie_tol: f64, slack: f64) -> PieceSet {
    let k = price.len();
    let min = price.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = PieceSet::EMPTY;
    // a free room is always acceptable, and while any room is free only free
    // rooms are (closure of the strict-preference regions on each free facet)
    if min <= free_tol + slack {
        out = (0..k).filter(|&j| price[j] <= free_tol + slack).collect();
    }
    if min > free_tol - slack {
        let surplus: Vec<f64> = u.iter().zip(price).map(|(a, p)| a - p).collect();
        let best = surplus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = tie_tol + slack;
        out = out.union((0..k).filter(|&j| surplus[j] >= best - tol).collect());
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CustomMember {
    /// Lattice numerators (non-negative, summing to the grid depth).
    pub point: Vec<i64>,
    pub pieces: PieceSet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CustomGridRaw {
    k: usize,
    depth: u32,
    members: Vec<CustomMember>,
}

/// Explicit membership bits on the lattice of one depth. Between lattice
/// points a piece is preferred iff it is preferred at every vertex of the
/// carrier face, so each preference set is the closed subcomplex spanned by
/// its member vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CustomGridRaw", into = "CustomGridRaw")]
pub struct CustomGrid {
    raw: Arc<CustomGridRaw>,
    grid: Arc<SimplexGrid>,
    bits: Arc<Vec<PieceSet>>,
}

impl CustomGrid {
    pub fn new(k: usize, depth: u32, members: Vec<CustomMember>) -> Result<Self> {
        CustomGrid::try_from(CustomGridRaw { k, depth, members })
    }

    /// Tabulates `f` on the depth-`depth` lattice.
    pub fn from_fn(k: usize, depth: u32, f: impl Fn(&[f64]) -> PieceSet) -> Result<Self> {
        let grid = lattice_points(k, depth)?;
        let members = (0..grid.len())
            .filter_map(|i| {
                let s = f(&grid.point(i));
                (!s.is_empty()).then(|| CustomMember { point: grid.numerators(i).to_vec(), pieces: s })
            })
            .collect();
        CustomGrid::new(k, depth, members)
    }

    pub fn k(&self) -> usize {
        self.raw.k
    }

    pub fn depth(&self) -> u32 {
        self.raw.depth
    }

    pub fn membership(&self, x: &[f64]) -> Result<PieceSet> {
        let carrier = self.grid.locate(x).ok_or_else(|| Error::OffGrid(x.to_vec()))?;
        Ok(carrier
            .iter()
            .fold(PieceSet::full(self.k()), |acc, &(v, _)| acc.intersection(self.bits[v])))
    }
}

impl TryFrom<CustomGridRaw> for CustomGrid {
    type Error = Error;
    fn try_from(raw: CustomGridRaw) -> Result<Self> {
        let grid = lattice_points(raw.k, raw.depth)?;
        let mut bits = vec![PieceSet::EMPTY; grid.len()];
        for m in &raw.members {
            let idx = grid.index_of(&m.point).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "custom grid point {:?} is not on the depth-{} lattice",
                    m.point, raw.depth
                ))
            })?;
            if m.pieces.iter().any(|j| j >= raw.k) {
                return Err(Error::InvalidArgument(format!("piece index out of range at {:?}", m.point)));
            }
            bits[idx] = bits[idx].union(m.pieces);
        }
        Ok(CustomGrid { raw: Arc::new(raw), grid: Arc::new(grid), bits: Arc::new(bits) })
    }
}

impl From<CustomGrid> for CustomGridRaw {
    fn from(g: CustomGrid) -> Self {
        (*g.raw).clone()
    }
}
