use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::DemandMatrix;
use crate::pieceset::PieceSet;
use crate::preferences::PreferenceOracle;
use crate::simplex::SimplexGrid;

/// How a guest's distance fields are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    /// Distance to the complement of the tau-neighborhood of each preference set.
    #[default]
    Preferences,
    /// Distance to the facet where the piece vanishes, standing in for a
    /// guest whose preferences are unknown.
    FacetDistance,
}

/// Per guest and piece, the lattice distance from every grid point to the
/// complement `B` of the tau-neighborhood of the guest's preference set.
#[derive(Debug)]
pub struct DistanceFieldSet {
    grid: Arc<SimplexGrid>,
    n: usize,
    k: usize,
    tau: f64,
    steps: Vec<u32>,
}

impl DistanceFieldSet {
    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<SimplexGrid> {
        Arc::clone(&self.grid)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Distance (lattice units, one edge = `1/depth`) of point `idx` to `B` of
    /// guest `i`, piece `j`.
    pub fn value(&self, i: usize, j: usize, idx: usize) -> f64 {
        self.steps[(i * self.k + j) * self.grid.len() + idx] as f64 / self.grid.depth() as f64
    }

    /// The `k × n` matrix `m_ji = d_ji / max(epsilon, sum_h d_hi)` at a grid point.
    pub fn demand_matrix(&self, idx: usize, epsilon: f64) -> DemandMatrix {
        let (k, n) = (self.k, self.n);
        let mut entries = vec![0.0; k * n];
        for i in 0..n {
            let col: Vec<f64> = (0..k).map(|j| self.value(i, j, idx)).collect();
            let denom = col.iter().sum::<f64>().max(epsilon);
            for j in 0..k {
                entries[j * n + i] = col[j] / denom;
            }
        }
        DemandMatrix::new(k, n, entries).expect("normalized distances form a demand matrix")
    }
}

fn bfs(grid: &SimplexGrid, sources: impl Iterator<Item = usize>) -> Vec<u32> {
    let mut dist = vec![u32::MAX; grid.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in grid.neighbors(v) {
            let w = w as usize;
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Builds the distance fields of every guest on `grid`.
///
/// A point belongs to the tau-neighborhood of a preference set when its
/// lattice distance to a member is below `tau`. Fails with `FacetContact` when
/// some neighborhood reaches the domain facet on which its piece vanishes.
pub fn build_distance_fields(
    oracle: &(impl PreferenceOracle + ?Sized),
    grid: Arc<SimplexGrid>,
    tau: f64,
    roles: &[FieldRole],
) -> Result<DistanceFieldSet> {
    let (n, k, len) = (oracle.guest_count(), oracle.k(), grid.len());
    if grid.k() != k || roles.len() != n {
        return Err(Error::InvalidArgument("field roles or grid do not match the family".into()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let reach = tau * grid.depth() as f64;

    // preference sets of every guest, per grid point
    let prefs: Vec<Vec<PieceSet>> = (0..len)
        .into_par_iter()
        .map(|idx| oracle.preferred_all(&grid.point(idx), 0.0))
        .collect::<Result<_>>()?;

    let per_field: Vec<(Vec<u32>, bool)> = (0..n * k)
        .into_par_iter()
        .map(|f| {
            let (i, j) = (f / k, f % k);
            match roles[i] {
                FieldRole::FacetDistance => {
                    let steps = (0..len).map(|idx| grid.numerators(idx)[j].max(0) as u32).collect();
                    (steps, false)
                }
                FieldRole::Preferences => {
                    let to_a = bfs(&grid, (0..len).filter(|&idx| prefs[idx][i].contains(j)));
                    let near = |idx: usize| to_a[idx] != u32::MAX && (to_a[idx] as f64) < reach;
                    let contact = (0..len).any(|idx| near(idx) && grid.on_domain_facet(idx, j));
                    let steps = bfs(&grid, (0..len).filter(|&idx| !near(idx)));
                    (steps, contact)
                }
            }
        })
        .collect();

    let pairs: Vec<(usize, usize)> = per_field
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| *c)
        .map(|(f, _)| (f / k, f % k))
        .collect();
    if !pairs.is_empty() {
        return Err(Error::FacetContact { pairs });
    }
    let steps = per_field.into_iter().flat_map(|(s, _)| s).collect();
    Ok(DistanceFieldSet { grid, n, k, tau, steps })
}
