use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fields::{build_distance_fields, DistanceFieldSet, FieldRole};
use super::params::SolverParams;
use crate::error::{Error, Result};
use crate::matching::DemandMatrix;
use crate::preferences::{ExtendedCover, PreferenceOracle};
use crate::simplex::{extended_grid, lattice_points, Cell};

/// Residuals below this are treated as exact and not polished further.
const EXACT: f64 = 1e-13;
const WEIGHT_FLOOR: f64 = -1e-12;

/// The guests whose fields drive the search, and the domain they live on.
pub struct FieldProblem<'a> {
    pub oracle: &'a dyn PreferenceOracle,
    pub roles: Vec<FieldRole>,
    /// Work on the doubled simplex with the projection-based extension.
    pub extended: bool,
    pub zero_tol: f64,
}

impl FieldProblem<'_> {
    pub fn build(&self, depth: u32, tau: f64) -> Result<DistanceFieldSet> {
        let k = self.oracle.k();
        if self.extended {
            let grid = Arc::new(extended_grid(k, depth)?);
            let cover = ExtendedCover::new(self.oracle, self.zero_tol);
            build_distance_fields(&cover, grid, tau, &self.roles)
        } else {
            build_distance_fields(self.oracle, Arc::new(lattice_points(k, depth)?), tau, &self.roles)
        }
    }
}

/// A point where total demand is (nearly) equal across pieces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalancedPoint {
    /// Coordinates in the search domain; may leave the simplex only on the
    /// doubled-simplex fallback.
    pub point: Vec<f64>,
    pub matrix: DemandMatrix,
    /// `max_j |f_j - 1/k|`.
    pub residual: f64,
    /// Depth of the grid whose fields produced `matrix`.
    pub depth: u32,
    /// Best residual after the initial scan and after each refinement level.
    pub history: Vec<f64>,
    /// Whether the point came from solving inside a triangulation cell
    /// rather than from a grid point.
    pub cell_solved: bool,
}

struct Candidate {
    point: Vec<f64>,
    matrix: DemandMatrix,
    residual: f64,
    depth: u32,
    cell_solved: bool,
}

/// Normalized row sums of a demand matrix; `None` when it vanishes.
pub fn normalized_row_sums(m: &DemandMatrix) -> Option<Vec<f64>> {
    let rows = m.row_sums();
    let total: f64 = rows.iter().sum();
    (total > 0.0).then(|| rows.iter().map(|r| r / total).collect())
}

fn residual_of(m: &DemandMatrix) -> Option<f64> {
    let f = normalized_row_sums(m)?;
    let c = 1.0 / f.len() as f64;
    Some(f.iter().map(|v| (v - c).abs()).fold(0.0, f64::max))
}

/// `f_epsilon` at grid point `idx`: the normalized row sums of the demand matrix.
pub fn f_epsilon(fields: &DistanceFieldSet, idx: usize, epsilon: f64) -> Result<Vec<f64>> {
    normalized_row_sums(&fields.demand_matrix(idx, epsilon)).ok_or_else(|| {
        Error::HypothesisViolation(format!(
            "demand matrix vanishes at {:?}: no guest is near any preference set",
            fields.grid().point(idx)
        ))
    })
}

/// Demand matrix at an arbitrary point of the field domain, interpolated
/// linearly from the vertices of its triangulation cell.
pub fn demand_matrix_at(fields: &DistanceFieldSet, x: &[f64], epsilon: f64) -> Result<DemandMatrix> {
    let carrier = fields
        .grid()
        .locate(x)
        .ok_or_else(|| Error::InvalidArgument(format!("{x:?} is outside the field domain")))?;
    let parts: Vec<(DemandMatrix, f64)> =
        carrier.iter().map(|&(v, w)| (fields.demand_matrix(v, epsilon), w)).collect();
    Ok(blend(&parts))
}

fn blend(parts: &[(DemandMatrix, f64)]) -> DemandMatrix {
    let (k, n) = (parts[0].0.k(), parts[0].0.n());
    let mut entries = vec![0.0; k * n];
    for (m, w) in parts {
        for j in 0..k {
            for i in 0..n {
                entries[j * n + i] += w * m.get(j, i);
            }
        }
    }
    DemandMatrix::new(k, n, entries).expect("convex combination of demand matrices")
}

fn best_grid_point(fields: &DistanceFieldSet, candidates: &[usize], epsilon: f64) -> Option<Candidate> {
    let (res, idx) = candidates
        .par_iter()
        .filter_map(|&idx| residual_of(&fields.demand_matrix(idx, epsilon)).map(|r| (r, idx)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
    Some(Candidate {
        point: fields.grid().point(idx),
        matrix: fields.demand_matrix(idx, epsilon),
        residual: res,
        depth: fields.grid().depth(),
        cell_solved: false,
    })
}

fn window(fields: &DistanceFieldSet, center: &[f64], radius: f64) -> Vec<usize> {
    let grid = fields.grid();
    (0..grid.len())
        .filter(|&idx| grid.in_base_simplex(idx))
        .filter(|&idx| {
            grid.point(idx).iter().zip(center).all(|(a, b)| (a - b).abs() <= radius + 1e-12)
        })
        .collect()
}

/// Solves for the point of `cell` where the interpolated demand is balanced.
fn solve_cell(fields: &DistanceFieldSet, cell: &Cell, epsilon: f64) -> Option<Candidate> {
    let k = fields.k();
    let mats: Vec<DemandMatrix> = cell.vertices.iter().map(|&v| fields.demand_matrix(v, epsilon)).collect();
    let sums: Vec<(Vec<f64>, f64)> = mats
        .iter()
        .map(|m| {
            let r = m.row_sums();
            let t = r.iter().sum();
            (r, t)
        })
        .collect();
    let c = 1.0 / k as f64;
    let a = DMatrix::from_fn(k, k, |row, v| {
        if row + 1 == k {
            1.0
        } else {
            sums[v].0[row] - sums[v].1 * c
        }
    });
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let w = a.svd(true, true).solve(&b, 1e-14).ok()?;
    if w.iter().any(|&x| !x.is_finite() || x < WEIGHT_FLOOR) {
        return None;
    }
    let total: f64 = w.iter().map(|x| x.max(0.0)).sum();
    let w: Vec<f64> = w.iter().map(|x| x.max(0.0) / total).collect();
    let parts: Vec<(DemandMatrix, f64)> = mats.into_iter().zip(w.iter().copied()).collect();
    let matrix = blend(&parts);
    let residual = residual_of(&matrix)?;
    let grid = fields.grid();
    let mut point = vec![0.0; k];
    for (&v, wv) in cell.vertices.iter().zip(&w) {
        for (p, x) in point.iter_mut().zip(grid.point(v)) {
            *p += wv * x;
        }
    }
    Some(Candidate { point, matrix, residual, depth: grid.depth(), cell_solved: true })
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Best cell solution: exact solutions nearest to `center`, else the smallest residual.
fn pick(solutions: Vec<Candidate>, center: &[f64]) -> Option<Candidate> {
    let exact = solutions.iter().any(|s| s.residual <= EXACT);
    solutions
        .into_iter()
        .filter(|s| !exact || s.residual <= EXACT)
        .min_by(|a, b| {
            if exact {
                linf(&a.point, center).total_cmp(&linf(&b.point, center))
            } else {
                a.residual.total_cmp(&b.residual)
            }
        })
}

fn polish(fields: &DistanceFieldSet, center: &[f64], epsilon: f64, base_only: bool) -> Option<Candidate> {
    let grid = fields.grid();
    let keep = |c: &Cell| !base_only || c.vertices.iter().all(|&v| grid.in_base_simplex(v));
    let radius = 3.0 / grid.depth() as f64;
    let mut local: Vec<Cell> = window(fields, center, radius)
        .into_iter()
        .flat_map(|idx| grid.cells_around(idx))
        .filter(|c| keep(c))
        .collect();
    local.sort();
    local.dedup();
    let solve_all = |cells: &[Cell]| -> Vec<Candidate> {
        cells.par_iter().filter_map(|c| solve_cell(fields, c, epsilon)).collect()
    };
    if let Some(best) = pick(solve_all(&local), center) {
        if best.residual <= EXACT {
            return Some(best);
        }
    }
    let all: Vec<Cell> = grid.cells().into_iter().filter(|c| keep(c)).collect();
    pick(solve_all(&all), center)
}

/// Searches the field domain for a point where `f_epsilon` is the barycenter:
/// a full scan at the initial depth, `refine_levels` rounds of doubling the
/// depth inside a window of radius `3 / depth` around the incumbent, and a
/// final solve inside the triangulation cells of the finest grid.
///
/// The search stays inside the standard simplex; on the doubled simplex it
/// falls back to the whole domain only when the simplex holds no solution.
pub fn find_balanced_point(problem: &FieldProblem, params: &SolverParams) -> Result<BalancedPoint> {
    params.validate()?;
    let tau = params.tau();
    let eps = params.epsilon;
    let mut depth = params.grid_depth;
    let mut fields = problem.build(depth, tau)?;
    let base: Vec<usize> = (0..fields.grid().len()).filter(|&i| fields.grid().in_base_simplex(i)).collect();
    let mut best = best_grid_point(&fields, &base, eps).ok_or_else(|| {
        Error::HypothesisViolation(
            "demand matrix vanishes at every grid point: no guest accepts any piece".into(),
        )
    })?;
    let mut history = vec![best.residual];
    for _ in 0..params.refine_levels {
        depth *= 2;
        fields = problem.build(depth, tau)?;
        let local = window(&fields, &best.point, 3.0 / depth as f64);
        if let Some(c) = best_grid_point(&fields, &local, eps) {
            if c.residual < best.residual {
                best = c;
            }
        }
        history.push(best.residual);
    }
    if best.residual > EXACT {
        let mut polished = polish(&fields, &best.point, eps, true);
        if problem.extended && polished.as_ref().is_none_or(|p| p.residual > params.residual_tol) {
            polished = polish(&fields, &best.point, eps, false);
        }
        if let Some(p) = polished {
            if p.residual < best.residual {
                best = p;
            }
        }
    }
    if best.residual > params.residual_tol {
        return Err(Error::NoConvergence {
            best_point: best.point,
            residual: best.residual,
            diagnosis: format!(
                "no balanced point within {:.1e} at depth {depth}; the fields may be too coarse \
                 for tau={tau:.3e} or epsilon={eps:.1e} (try a larger depth or tau)",
                params.residual_tol
            ),
        });
    }
    Ok(BalancedPoint {
        point: best.point,
        matrix: best.matrix,
        residual: best.residual,
        depth: best.depth,
        history,
        cell_solved: best.cell_solved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::{Density, GuestSpec, PreferenceFamily};

    fn problem(fam: &PreferenceFamily) -> FieldProblem<'_> {
        FieldProblem {
            oracle: fam,
            roles: vec![FieldRole::Preferences; fam.n()],
            extended: false,
            zero_tol: 1e-9,
        }
    }

    #[test]
    fn symmetric_pair_balances_at_half() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::uniform(); 2]).unwrap();
        let bp = find_balanced_point(&problem(&fam), &SolverParams::default()).unwrap();
        assert_eq!(bp.residual, 0.0);
        assert!((bp.point[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn barycenter_is_fixed_for_symmetric_families() {
        let fam = PreferenceFamily::hungry(3, vec![GuestSpec::uniform(); 3]).unwrap();
        let fields = problem(&fam).build(30, 2.0 / 30.0).unwrap();
        let idx = fields.grid().index_of(&[10, 10, 10]).unwrap();
        let f = f_epsilon(&fields, idx, 1e-4).unwrap();
        assert!(f.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn residual_history_is_monotone_and_small() {
        let front = GuestSpec::additive(Density::block(0.0, 0.25).unwrap());
        let fam = PreferenceFamily::hungry(3, vec![GuestSpec::uniform(), front.clone(), front]).unwrap();
        let bp = find_balanced_point(&problem(&fam), &SolverParams::default()).unwrap();
        assert!(bp.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(bp.residual <= 1e-6);
    }

    #[test]
    fn all_never_is_a_hypothesis_violation() {
        let fam = PreferenceFamily::new(2, vec![GuestSpec::Never; 2], 1).unwrap();
        let err = find_balanced_point(&problem(&fam), &SolverParams::default()).unwrap_err();
        assert!(err.is_hypothesis_violation());
    }
}
