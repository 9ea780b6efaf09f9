//! Independent checks: certificate verification of divisions, brute-force
//! oracles over grids and matchings, and random test instances.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{exclusion_size, max_matching, DemandMatrix};
use crate::pieceset::PieceSet;
use crate::preferences::{GuestSpec, PreferenceFamily, PreferenceOracle};
use crate::simplex::lattice_points;

pub const DEFAULT_BUDGET: Duration = Duration::from_secs(60);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub guest: usize,
    pub piece: usize,
    /// Pieces the guest accepts at the partition under the checked slack.
    pub preferred: PieceSet,
    /// Piece values for guests with a density.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub slack: f64,
}

/// Checks that guest `pi[j]` accepts piece `j` for every piece, with every
/// tolerance loosened by `slack`.
pub fn verify_division(family: &PreferenceFamily, partition: &[f64], pi: &[usize], slack: f64) -> VerifyReport {
    verify_division_except(family, partition, pi, slack, &[])
}

/// As [`verify_division`], but does not judge the guests in `skip`.
pub fn verify_division_except(
    family: &PreferenceFamily,
    partition: &[f64],
    pi: &[usize],
    slack: f64,
    skip: &[usize],
) -> VerifyReport {
    let k = family.k();
    let mut violations = Vec::new();
    let mut structural = |detail: String| {
        violations.push(Violation {
            guest: usize::MAX,
            piece: usize::MAX,
            preferred: PieceSet::EMPTY,
            values: None,
            detail,
        })
    };
    if partition.len() != k || pi.len() != k {
        structural(format!("expected {k} pieces, got partition {} and assignment {}", partition.len(), pi.len()));
        return VerifyReport { passed: false, violations, slack };
    }
    let sum: f64 = partition.iter().sum();
    if partition.iter().any(|&x| x.is_nan() || x < -1e-9) || (sum - 1.0).abs() > 1e-9 {
        structural(format!("partition {partition:?} is not a point of the simplex"));
    }
    if pi.iter().any(|&i| i >= family.n()) || !pi.iter().all_unique() {
        structural(format!("assignment {pi:?} is not an injective map into the guests"));
    }
    if !violations.is_empty() {
        return VerifyReport { passed: false, violations, slack };
    }
    for (j, &i) in pi.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        let guest = family.guest(i);
        let values = guest.density().map(|d| d.piece_values(partition));
        match guest.preferred_with_slack(partition, slack) {
            Ok(pref) if pref.contains(j) => {}
            Ok(pref) => violations.push(Violation {
                guest: i,
                piece: j,
                preferred: pref,
                detail: match &values {
                    Some(v) => format!(
                        "piece value {:.6} is below the best value {:.6} beyond tolerance",
                        v[j],
                        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    ),
                    None => format!("guest does not accept piece {j}"),
                },
                values,
            }),
            Err(e) => violations.push(Violation {
                guest: i,
                piece: j,
                preferred: PieceSet::EMPTY,
                values,
                detail: e.to_string(),
            }),
        }
    }
    VerifyReport { passed: violations.is_empty(), violations, slack }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Variant {
    Standard,
    /// Envy-free for every choice of `ceil((r - k) / k)` absent guests.
    Robust { r: usize },
    /// Rooms priced by the partition; matching on the tenants' accepted rooms.
    Rent,
}

fn preference_graph(sets: &[PieceSet], k: usize, absent: &[usize]) -> Vec<Vec<usize>> {
    (0..k)
        .map(|j| {
            (0..sets.len())
                .filter(|i| !absent.contains(i) && sets[*i].contains(j))
                .collect()
        })
        .collect()
}

fn has_perfect_matching(adj: &[Vec<usize>], n: usize) -> bool {
    max_matching(adj, n).iter().all(Option::is_some)
}

/// Every grid partition at which the guests (judged with tolerances loosened
/// by `slack`) admit an envy-free assignment of the requested kind.
pub fn brute_force_solve(
    family: &PreferenceFamily,
    depth: u32,
    variant: Variant,
    slack: f64,
    budget: Duration,
) -> Result<Vec<Vec<f64>>> {
    let (k, n) = (family.k(), family.n());
    let exclusions: Vec<Vec<usize>> = match variant {
        Variant::Robust { r } => {
            if r < k || r > n {
                return Err(Error::InvalidArgument(format!("r={r} outside {k}..={n}")));
            }
            (0..n).combinations(exclusion_size(r, k)).collect()
        }
        Variant::Standard | Variant::Rent => vec![Vec::new()],
    };
    let grid = lattice_points(k, depth)?;
    let start = Instant::now();
    let mut feasible = Vec::new();
    let chunk = 4096;
    for lo in (0..grid.len()).step_by(chunk) {
        if start.elapsed() > budget {
            return Err(Error::BudgetExceeded { scanned: lo, total: grid.len() });
        }
        let hi = (lo + chunk).min(grid.len());
        let found: Vec<Option<Vec<f64>>> = (lo..hi)
            .into_par_iter()
            .map(|idx| {
                let x = grid.point(idx);
                let sets = family.preferred_all(&x, slack)?;
                let ok = exclusions
                    .iter()
                    .all(|c| has_perfect_matching(&preference_graph(&sets, k, c), n));
                Ok(ok.then_some(x))
            })
            .collect::<Result<_>>()?;
        feasible.extend(found.into_iter().flatten());
    }
    Ok(feasible)
}

/// Every injective piece → guest map along entries above `positivity_tol`,
/// honoring the pin and avoiding the `absent` guests.
pub fn brute_force_matching(
    x: &DemandMatrix,
    pin: Option<(usize, usize)>,
    absent: &[usize],
    positivity_tol: f64,
) -> Vec<Vec<usize>> {
    let guests: Vec<usize> = (0..x.n()).filter(|i| !absent.contains(i)).collect();
    guests
        .into_iter()
        .permutations(x.k())
        .filter(|pi| pi.iter().enumerate().all(|(j, &i)| x.get(j, i) > positivity_tol))
        .filter(|pi| pin.is_none_or(|(j0, i0)| pi[j0] == i0))
        .collect()
}

/// Transportation plan filling columns in the given order (northwest-corner rule).
fn northwest_corner(row_target: f64, k: usize, cols: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    let mut row = 0;
    let mut row_left = row_target;
    for &(i, s) in cols {
        let mut col_left = s;
        while col_left > 1e-15 && row < k {
            let a = row_left.min(col_left);
            out[row * n + i] += a;
            row_left -= a;
            col_left -= a;
            if row_left <= 1e-15 {
                row += 1;
                row_left = row_target;
            }
        }
    }
    out
}

/// A random `k × n` demand matrix with equal row sums, column sums at most
/// one and at least `full` columns summing to exactly one.
///
/// Column sums are drawn first (zero, partial or full); the entries are a
/// random convex mixture of northwest-corner plans over shuffled column
/// orders, so the margins hold by construction.
pub fn random_valid_demand_matrix(k: usize, n: usize, full: usize, seed: u64) -> Result<DemandMatrix> {
    if k == 0 || full < k || full > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= full <= n, got k={k}, full={full}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<usize> = (0..n).collect();
    cols.shuffle(&mut rng);
    let sums: Vec<(usize, f64)> = cols
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let s = if rank < full {
                1.0
            } else if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            };
            (i, s)
        })
        .collect();
    let total: f64 = sums.iter().map(|(_, s)| s).sum();
    let row_target = total / k as f64;
    let plans = rng.gen_range(1..=3);
    let mut weights: Vec<f64> = (0..plans).map(|_| rng.gen_range(0.2..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    let mut entries = vec![0.0; k * n];
    for w in weights {
        let mut order = sums.clone();
        order.shuffle(&mut rng);
        for (e, p) in entries.iter_mut().zip(northwest_corner(row_target, k, &order, n)) {
            *e += w * p;
        }
    }
    // float dust from the corner rule is not a real edge
    entries.iter_mut().filter(|e| **e < 1e-12).for_each(|e| *e = 0.0);
    DemandMatrix::new(k, n, entries)
}

/// `n` additive guests with random piecewise-constant densities of full
/// support (test generator).
pub fn random_additive_guests(n: usize, segments: usize, seed: u64) -> Vec<GuestSpec> {
    use crate::preferences::{Density, DensitySegment};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..segments).map(|_| rng.gen_range(0.2..2.0)).collect();
            let mass: f64 = raw.iter().sum::<f64>() / segments as f64;
            let segs = raw
                .iter()
                .enumerate()
                .map(|(s, w)| DensitySegment {
                    start: s as f64 / segments as f64,
                    end: (s + 1) as f64 / segments as f64,
                    weight: w / mass,
                })
                .collect();
            GuestSpec::additive(Density::new(segs).expect("normalized density"))
        })
        .collect()
}
