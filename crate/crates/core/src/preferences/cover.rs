use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::PreferenceOracle;
use crate::error::{Error, Result};
use crate::pieceset::PieceSet;
use crate::simplex::SimplexGrid;

/// Default ceiling on the number of guest subsets a weak-cover check may
/// stand for.
pub const DEFAULT_SUBSET_CAP: u128 = 1 << 24;

/// Reports keep at most this many witnesses; `violation_count` has the total.
pub const MAX_WITNESSES: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    /// No set indexed by a vertex of the point's face contains the point.
    Uncovered,
    /// `piece` is accepted on the facet opposite `facet` although the piece
    /// itself has positive size there.
    FacetLeak { piece: usize, facet: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverWitness {
    pub point: Vec<f64>,
    /// Minimal face of the checked domain containing the point.
    pub face: PieceSet,
    /// Guests whose union fails (a single entry for per-guest checks).
    pub guests: Vec<usize>,
    #[serde(flatten)]
    pub kind: WitnessKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub passed: bool,
    pub witnesses: Vec<CoverWitness>,
    pub violation_count: usize,
    pub grid_depth: u32,
}

impl CoverReport {
    fn from_witnesses(all: Vec<CoverWitness>, grid_depth: u32) -> Self {
        let violation_count = all.len();
        let mut witnesses = all;
        witnesses.truncate(MAX_WITNESSES);
        CoverReport { passed: violation_count == 0, witnesses, violation_count, grid_depth }
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn grid_face(grid: &SimplexGrid, idx: usize) -> PieceSet {
    let lower = grid.lower();
    grid.numerators(idx)
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > lower)
        .map(|(j, _)| j)
        .collect()
}

fn check_dims(oracle_k: usize, grid: &SimplexGrid) -> Result<()> {
    if oracle_k != grid.k() {
        return Err(Error::InvalidArgument(format!(
            "family has k={oracle_k} but grid has k={}",
            grid.k()
        )));
    }
    Ok(())
}

/// Per-point scan collecting witnesses in grid order.
fn scan<F>(grid: &SimplexGrid, f: F) -> Result<Vec<CoverWitness>>
where
    F: Fn(usize, Vec<f64>) -> Result<Vec<CoverWitness>> + Sync,
{
    let per_point: Vec<Vec<CoverWitness>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| f(idx, grid.point(idx)))
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// Wraps a single membership function as a one-guest oracle.
struct SingleSets<F> {
    k: usize,
    sets: F,
}

impl<F: Fn(&[f64]) -> Result<PieceSet> + Sync> PreferenceOracle for SingleSets<F> {
    fn k(&self) -> usize {
        self.k
    }
    fn guest_count(&self) -> usize {
        1
    }
    fn preferred(&self, _guest: usize, x: &[f64], _slack: f64) -> Result<PieceSet> {
        (self.sets)(x)
    }
}

/// KKM property of the sets `(A_0, ..., A_{k-1})` given as a membership
/// function: every grid point is in some `A_j` with `j` in its minimal face.
pub fn check_kkm_cover<F>(sets: F, grid: &SimplexGrid) -> Result<CoverReport>
where
    F: Fn(&[f64]) -> Result<PieceSet> + Sync,
{
    check_weakly_kkm(&SingleSets { k: grid.k(), sets }, 1, grid, DEFAULT_SUBSET_CAP)
}

/// Every union over `n - alpha + 1` guests is a KKM cover.
///
/// A subset `C` fails at a point exactly when no guest of `C` covers the
/// point's face, so the check runs once per point and names the
/// lexicographically first failing subset.
pub fn check_weakly_kkm(
    family: &(impl PreferenceOracle + ?Sized),
    alpha: usize,
    grid: &SimplexGrid,
    cap: u128,
) -> Result<CoverReport> {
    check_dims(family.k(), grid)?;
    let n = family.guest_count();
    if alpha == 0 || alpha > n {
        return Err(Error::InvalidArgument(format!("alpha={alpha} outside 1..={n}")));
    }
    let size = n - alpha + 1;
    let count = binomial(n, size);
    if count > cap {
        return Err(Error::TooManySubsets { count, cap });
    }
    let witnesses = scan(grid, |idx, x| {
        let face = grid_face(grid, idx);
        let sets = family.preferred_all(&x, 0.0)?;
        let idle: Vec<usize> =
            (0..n).filter(|&i| sets[i].intersection(face).is_empty()).collect();
        Ok(if idle.len() >= size {
            vec![CoverWitness {
                point: x,
                face,
                guests: idle[..size].to_vec(),
                kind: WitnessKind::Uncovered,
            }]
        } else {
            Vec::new()
        })
    })?;
    Ok(CoverReport::from_witnesses(witnesses, grid.depth()))
}

/// Dual KKM property: the sets cover the simplex and `A_j` meets the facet
/// opposite `j'` only where piece `j` is empty too.
pub fn check_dual_kkm<F>(sets: F, grid: &SimplexGrid, zero_tol: f64) -> Result<CoverReport>
where
    F: Fn(&[f64]) -> Result<PieceSet> + Sync,
{
    check_weakly_dual_kkm(&SingleSets { k: grid.k(), sets }, 1, grid, zero_tol, DEFAULT_SUBSET_CAP)
}

/// Every union over `n - alpha + 1` guests is a dual KKM cover.
pub fn check_weakly_dual_kkm(
    family: &(impl PreferenceOracle + ?Sized),
    alpha: usize,
    grid: &SimplexGrid,
    zero_tol: f64,
    cap: u128,
) -> Result<CoverReport> {
    check_dims(family.k(), grid)?;
    let n = family.guest_count();
    if alpha == 0 || alpha > n {
        return Err(Error::InvalidArgument(format!("alpha={alpha} outside 1..={n}")));
    }
    let size = n - alpha + 1;
    let count = binomial(n, size);
    if count > cap {
        return Err(Error::TooManySubsets { count, cap });
    }
    let k = grid.k();
    let witnesses = scan(grid, |idx, x| {
        let face = grid_face(grid, idx);
        let sets = family.preferred_all(&x, 0.0)?;
        let mut out = Vec::new();
        let idle: Vec<usize> = (0..n).filter(|&i| sets[i].is_empty()).collect();
        if idle.len() >= size {
            out.push(CoverWitness {
                point: x.clone(),
                face,
                guests: idle[..size].to_vec(),
                kind: WitnessKind::Uncovered,
            });
        }
        // a leak by one guest spoils every union containing that guest
        for (i, s) in sets.iter().enumerate() {
            for facet in (0..k).filter(|&f| x[f] <= zero_tol) {
                for piece in s.iter().filter(|&j| j != facet && x[j] > zero_tol) {
                    out.push(CoverWitness {
                        point: x.clone(),
                        face,
                        guests: vec![i],
                        kind: WitnessKind::FacetLeak { piece, facet },
                    });
                }
            }
        }
        Ok(out)
    })?;
    Ok(CoverReport::from_witnesses(witnesses, grid.depth()))
}

/// `(guest, piece)` pairs whose set reaches the facet where that piece is empty.
pub fn facet_contacts(
    family: &(impl PreferenceOracle + ?Sized),
    grid: &SimplexGrid,
    zero_tol: f64,
) -> Result<Vec<(usize, usize)>> {
    check_dims(family.k(), grid)?;
    let n = family.guest_count();
    let k = family.k();
    let hits: Vec<Vec<(usize, usize)>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let empty: PieceSet = (0..k).filter(|&j| x[j] <= zero_tol).collect();
            if empty.is_empty() {
                return Ok(Vec::new());
            }
            let mut out = Vec::new();
            for i in 0..n {
                for j in family.preferred(i, &x, 0.0)?.intersection(empty).iter() {
                    out.push((i, j));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut pairs: Vec<(usize, usize)> = hits.into_iter().flatten().collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}

/// No guest ever accepts an empty piece on the grid.
pub fn is_facet_avoiding(
    family: &(impl PreferenceOracle + ?Sized),
    grid: &SimplexGrid,
    zero_tol: f64,
) -> Result<bool> {
    Ok(facet_contacts(family, grid, zero_tol)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::{Density, GuestSpec, PreferenceFamily};
    use crate::simplex::lattice_points;

    fn fam(k: usize, guests: Vec<GuestSpec>) -> PreferenceFamily {
        PreferenceFamily::hungry(k, guests).unwrap()
    }

    #[test]
    fn hungry_guest_is_kkm() {
        let g = GuestSpec::uniform();
        let grid = lattice_points(3, 16).unwrap();
        let r = check_kkm_cover(|x| g.preferred_pieces(x), &grid).unwrap();
        assert!(r.passed);
        assert_eq!(r.grid_depth, 16);
    }

    #[test]
    fn capped_and_threshold_cover_only_together() {
        let grid = lattice_points(3, 16).unwrap();
        let picky = GuestSpec::threshold(Density::uniform(), 0.4);
        let capped = GuestSpec::capped(0.45);
        let r2 = check_kkm_cover(|x| picky.preferred_pieces(x), &grid).unwrap();
        assert!(!r2.passed);
        assert!(r2.witnesses.iter().any(|w| w.point.iter().all(|&c| c < 0.4)));
        let r1 = check_kkm_cover(|x| capped.preferred_pieces(x), &grid).unwrap();
        assert!(!r1.passed);
        let union = check_kkm_cover(
            |x| Ok(picky.preferred_pieces(x)?.union(capped.preferred_pieces(x)?)),
            &grid,
        )
        .unwrap();
        assert!(union.passed, "{:?}", union.witnesses);
    }

    #[test]
    fn weakly_kkm_examples() {
        let grid2 = lattice_points(2, 64).unwrap();
        let two = fam(2, vec![GuestSpec::uniform(); 2]);
        assert!(check_weakly_kkm(&two, 2, &grid2, DEFAULT_SUBSET_CAP).unwrap().passed);

        let front = GuestSpec::additive(Density::block(0.0, 0.25).unwrap());
        let mixed = fam(2, vec![GuestSpec::uniform(), front, GuestSpec::Never]);
        assert!(check_weakly_kkm(&mixed, 2, &grid2, DEFAULT_SUBSET_CAP).unwrap().passed);

        let starved = fam(2, vec![GuestSpec::Never, GuestSpec::Never, GuestSpec::uniform()]);
        let r = check_weakly_kkm(&starved, 2, &grid2, DEFAULT_SUBSET_CAP).unwrap();
        assert!(!r.passed);
        assert!(r.witnesses.iter().all(|w| w.guests == vec![0, 1]));

        assert!(matches!(
            check_weakly_kkm(&starved, 2, &grid2, 2),
            Err(Error::TooManySubsets { count: 3, cap: 2 })
        ));
    }

    #[test]
    fn dual_kkm_examples() {
        let grid = lattice_points(3, 16).unwrap();
        let facets = check_dual_kkm(
            |x: &[f64]| Ok((0..3).filter(|&j| x[j] <= 1e-9).collect()),
            &grid,
            1e-9,
        )
        .unwrap();
        assert!(!facets.passed);
        assert!(facets.witnesses.iter().all(|w| w.kind == WitnessKind::Uncovered));

        let tenant = GuestSpec::rent(vec![1.0 / 3.0; 3]);
        assert!(check_dual_kkm(|x| tenant.preferred_pieces(x), &grid, 1e-9).unwrap().passed);

        let greedy = check_dual_kkm(|_: &[f64]| Ok(PieceSet::singleton(0)), &grid, 1e-9).unwrap();
        assert!(!greedy.passed);
        assert!(greedy
            .witnesses
            .iter()
            .any(|w| w.kind == WitnessKind::FacetLeak { piece: 0, facet: 1 }));
    }

    #[test]
    fn facet_avoidance() {
        let grid = lattice_points(2, 8).unwrap();
        assert!(is_facet_avoiding(&fam(2, vec![GuestSpec::uniform(); 2]), &grid, 1e-9).unwrap());
        let never = PreferenceFamily::new(2, vec![GuestSpec::Never; 2], 1).unwrap();
        assert!(is_facet_avoiding(&never, &grid, 1e-9).unwrap());
        let tenant = fam(2, vec![GuestSpec::rent(vec![0.5, 0.5]); 2]);
        // a free room is accepted where it is empty
        assert_eq!(facet_contacts(&tenant, &grid, 1e-9).unwrap(), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }
}
