//! Envy-free divisions from balanced points of the demand map.
//!
//! Every guest's preference sets are thickened by `tau`; distances to the
//! complements of the thickened sets give a demand matrix at each partition,
//! and a partition where total demand is equal across pieces carries a
//! positive matching that assigns each piece to a guest who (within the
//! tolerances) prefers it.

mod fields;
mod knife;
mod params;
mod search;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

pub use fields::{build_distance_fields, DistanceFieldSet, FieldRole};
pub use knife::moving_knife_k2;
pub use params::SolverParams;
pub use search::{demand_matrix_at, f_epsilon, find_balanced_point, normalized_row_sums, BalancedPoint, FieldProblem};

use crate::error::{Error, Result};
use crate::matching::{exclusion_size, match_positive, max_matching, DemandMatrix};
use crate::pieceset::PieceSet;
use crate::preferences::{
    check_weakly_dual_kkm, check_weakly_kkm, CoverReport, CyclicShift, GuestSpec, PreferenceFamily,
    PreferenceOracle, WitnessKind, DEFAULT_SUBSET_CAP,
};
use crate::simplex::{lattice_points, project_coords, PartitionPoint};
use crate::verify::{verify_division_except, VerifyReport};

/// What a guest was promised: the piece, and what they accept at the partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub piece: usize,
    pub guest: usize,
    /// Accepted pieces at the partition, without slack.
    pub preferred: PieceSet,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<f64>>,
}

/// Injective map from pieces to guests with its envy-freeness certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `pi[j]` is the guest receiving piece `j`.
    pub pi: Vec<usize>,
    /// Tolerance loosening under which the certificate was checked.
    pub slack: f64,
    pub certificate: Vec<CertificateEntry>,
}

impl Assignment {
    fn certify(family: &PreferenceFamily, partition: &[f64], pi: Vec<usize>, slack: f64) -> Result<Self> {
        let certificate = pi
            .iter()
            .enumerate()
            .map(|(piece, &guest)| {
                let g = family.guest(guest);
                Ok(CertificateEntry {
                    piece,
                    guest,
                    preferred: g.preferred_pieces(partition)?,
                    values: g.density().map(|d| d.piece_values(partition)),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Assignment { pi, slack, certificate })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BalancedPoint,
    MovingKnife,
}

/// An envy-free division (for rent problems the partition is the price vector
/// and pieces are rooms).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Division {
    pub partition: PartitionPoint,
    pub assignment: Assignment,
    pub method: Method,
    /// `max_j |f_j - 1/k|` at the balanced point; absent for the moving knife.
    pub residual: Option<f64>,
    /// Certificate slack bound: the requested tau.
    pub tau: f64,
    /// Neighborhood radius of the preference sets that produced the point
    /// (at most `tau`; smaller after retries).
    pub radius: f64,
    /// Depth of the grid the balanced point was found on.
    pub depth: u32,
    /// Whether the search ran on the doubled simplex.
    pub extended: bool,
    /// Demand matrix at the balanced point (guest order as in the family).
    pub matrix: Option<DemandMatrix>,
}

/// One partition with a pinned assignment for each piece the secretive guest
/// might pick.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecretDivision {
    pub partition: PartitionPoint,
    pub alice: usize,
    /// `assignments[j]` gives piece `j` to the secretive guest.
    pub assignments: Vec<Assignment>,
    /// The secretive guest's demand column; all positive at an interior point.
    pub alice_column: Vec<f64>,
    /// Smallest piece of the partition.
    pub min_coordinate: f64,
    pub residual: f64,
    pub tau: f64,
    pub radius: f64,
    pub depth: u32,
    pub extended: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Exclusion {
    pub absent: Vec<usize>,
    pub assignment: Assignment,
}

/// One partition that stays envy-free whichever small set of guests is absent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobustDivision {
    pub partition: PartitionPoint,
    pub r: usize,
    pub assignments: Vec<Exclusion>,
    pub residual: f64,
    pub tau: f64,
    pub radius: f64,
    pub depth: u32,
    pub extended: bool,
}

fn effective_family(family: &PreferenceFamily, params: &SolverParams) -> PreferenceFamily {
    match params.tie_tol {
        Some(t) => family.with_tie_tol(t),
        None => family.clone(),
    }
}

fn describe(report: &CoverReport, what: &str) -> String {
    let Some(w) = report.witnesses.first() else {
        return format!("{what} check passed");
    };
    let face: Vec<usize> = w.face.iter().collect();
    let reason = match w.kind {
        WitnessKind::Uncovered => format!("guests {:?} leave the point uncovered on face {face:?}", w.guests),
        WitnessKind::FacetLeak { piece, facet } => format!(
            "guest {:?} accepts piece {piece} where piece {facet} is free but piece {piece} is not",
            w.guests
        ),
    };
    format!(
        "{what} fails at depth {} with {} violations; first at {:?}: {reason}",
        report.grid_depth, report.violation_count, w.point
    )
}

fn require_weakly_kkm(family: &PreferenceFamily, alpha: usize, params: &SolverParams) -> Result<()> {
    if !params.check_hypotheses {
        return Ok(());
    }
    let grid = lattice_points(family.k(), params.grid_depth)?;
    let report = check_weakly_kkm(family, alpha, &grid, DEFAULT_SUBSET_CAP)?;
    if !report.passed {
        return Err(Error::HypothesisViolation(describe(&report, &format!("{alpha}-weakly KKM"))));
    }
    Ok(())
}

/// Balanced point for `oracle`, moving to the doubled simplex when some
/// thickened preference set touches the facet where its piece is empty.
fn balance(
    oracle: &dyn PreferenceOracle,
    roles: Vec<FieldRole>,
    params: &SolverParams,
) -> Result<(BalancedPoint, bool)> {
    let mut problem = FieldProblem { oracle, roles, extended: false, zero_tol: params.zero_tol };
    match find_balanced_point(&problem, params) {
        Err(Error::FacetContact { .. }) => {
            problem.extended = true;
            find_balanced_point(&problem, params).map(|b| (b, true))
        }
        other => other.map(|b| (b, false)),
    }
}

fn to_partition(point: &[f64], zero_tol: f64) -> Result<PartitionPoint> {
    let p = if point.iter().all(|&c| c >= -zero_tol) {
        let clamped: Vec<f64> = point.iter().map(|c| c.max(0.0)).collect();
        let s: f64 = clamped.iter().sum();
        clamped.iter().map(|c| c / s).collect()
    } else {
        project_coords(point)
    };
    PartitionPoint::new(p)
}

/// Matching on entries that are positive in `matrix` and accepted by the
/// judged guests, first at the guests' own tolerance and then loosened by `tau`.
#[allow(clippy::too_many_arguments)]
fn extract(
    matrix: &DemandMatrix,
    partition: &[f64],
    judge: &dyn PreferenceOracle,
    pin: Option<(usize, usize)>,
    absent: &[usize],
    exempt: Option<usize>,
    tau: f64,
    positivity_tol: f64,
) -> Result<(Vec<usize>, f64)> {
    let (k, n) = (matrix.k(), matrix.n());
    for slack in [0.0, tau] {
        let sets = judge.preferred_all(partition, slack)?;
        let usable = |j: usize, i: usize| {
            !absent.contains(&i)
                && matrix.get(j, i) > positivity_tol
                && (Some(i) == exempt || sets[i].contains(j))
        };
        let adj: Vec<Vec<usize>> = (0..k)
            .map(|j| match pin {
                Some((j0, i0)) if j == j0 => [i0].into_iter().filter(|&i| usable(j, i)).collect(),
                Some((_, i0)) => (0..n).filter(|&i| i != i0 && usable(j, i)).collect(),
                None => (0..n).filter(|&i| usable(j, i)).collect(),
            })
            .collect();
        if let Some(pi) = max_matching(&adj, n).into_iter().collect::<Option<Vec<usize>>>() {
            return Ok((pi, slack));
        }
    }
    let rows = matrix.rows();
    if match_positive(matrix, pin, absent, positivity_tol).is_some() {
        Err(Error::CertificateFailure {
            point: partition.to_vec(),
            details: format!(
                "the demand matrix {rows:?} has a positive matching (pin {pin:?}, absent {absent:?}) \
                 but none where every guest accepts their piece within tau={tau:.3e}"
            ),
        })
    } else {
        Err(Error::ToleranceDiagnosis(format!(
            "no positive matching (pin {pin:?}, absent {absent:?}) in the demand matrix {rows:?} at {partition:?}"
        )))
    }
}

fn ensure_verified(report: VerifyReport, partition: &[f64]) -> Result<()> {
    if report.passed {
        Ok(())
    } else {
        Err(Error::CertificateFailure {
            point: partition.to_vec(),
            details: format!("verification failed: {:?}", report.violations),
        })
    }
}

/// Runs `attempt`, halving the neighborhood radius after each certificate
/// failure. The grid depth doubles along with it so the radius stays the same
/// number of lattice steps; certificates are still judged at the requested tau.
fn with_tau_retries<T>(params: &SolverParams, attempt: impl Fn(&SolverParams) -> Result<T>) -> Result<T> {
    params.validate()?;
    let mut p = params.clone();
    p.tau = Some(params.tau());
    for round in 0..=params.tau_retries {
        match attempt(&p) {
            Err(Error::CertificateFailure { .. }) if round < params.tau_retries => {
                p.tau = Some(p.tau() / 2.0);
                p.grid_depth *= 2;
            }
            other => return other,
        }
    }
    unreachable!("the last round returns")
}

/// Envy-free division for a `k`-hungry family: `k` distinct guests each get a
/// piece they prefer.
pub fn solve_envy_free(family: &PreferenceFamily, params: &SolverParams) -> Result<Division> {
    params.validate()?;
    let fam = effective_family(family, params);
    let k = fam.k();
    require_weakly_kkm(&fam, k, params)?;
    let tau = params.tau();
    with_tau_retries(params, |p| {
        let (bp, extended) = balance(&fam, vec![FieldRole::Preferences; fam.n()], p)?;
        let partition = to_partition(&bp.point, p.zero_tol)?;
        let x = partition.coords();
        let (pi, slack) = extract(&bp.matrix, x, &fam, None, &[], None, tau, p.positivity_tol)?;
        ensure_verified(verify_division_except(&fam, x, &pi, slack, &[]), x)?;
        Ok(Division {
            assignment: Assignment::certify(&fam, x, pi, slack)?,
            partition,
            method: Method::BalancedPoint,
            residual: Some(bp.residual),
            tau,
            radius: p.tau(),
            depth: bp.depth,
            extended,
            matrix: Some(bp.matrix),
        })
    })
}

/// Envy-free division that survives the absence of any
/// `ceil((r - k) / k)` guests of an `r`-hungry family.
pub fn solve_robust(family: &PreferenceFamily, r: usize, params: &SolverParams) -> Result<RobustDivision> {
    params.validate()?;
    let fam = effective_family(family, params);
    let (k, n) = (fam.k(), fam.n());
    if r < k || r > n {
        return Err(Error::InvalidArgument(format!("r={r} outside {k}..={n}")));
    }
    require_weakly_kkm(&fam, r, params)?;
    let exclusions: Vec<Vec<usize>> = (0..n).combinations(exclusion_size(r, k)).collect();
    let tau = params.tau();
    with_tau_retries(params, |p| {
        let (bp, extended) = balance(&fam, vec![FieldRole::Preferences; n], p)?;
        let partition = to_partition(&bp.point, p.zero_tol)?;
        let x = partition.coords();
        let assignments = exclusions
            .iter()
            .map(|absent| {
                let (pi, slack) = extract(&bp.matrix, x, &fam, None, absent, None, tau, p.positivity_tol)
                    .map_err(|e| match e {
                        Error::ToleranceDiagnosis(d) => {
                            Error::ToleranceDiagnosis(format!("absent guests {absent:?}: {d}"))
                        }
                        other => other,
                    })?;
                ensure_verified(verify_division_except(&fam, x, &pi, slack, &[]), x)?;
                Ok(Exclusion { absent: absent.clone(), assignment: Assignment::certify(&fam, x, pi, slack)? })
            })
            .collect::<Result<_>>()?;
        Ok(RobustDivision {
            partition,
            r,
            assignments,
            residual: bp.residual,
            tau,
            radius: p.tau(),
            depth: bp.depth,
            extended,
        })
    })
}

/// Division that works whichever piece guest `alice` turns out to want.
///
/// Her preferences are never consulted: her fields are distances to the
/// facets, so her demand column is positive at every interior partition.
/// `alice_hungry` decides how she counts in the cover-hypothesis check.
pub fn solve_secret(
    family: &PreferenceFamily,
    alice: usize,
    alice_hungry: bool,
    params: &SolverParams,
) -> Result<SecretDivision> {
    params.validate()?;
    let fam = effective_family(family, params);
    let (k, n) = (fam.k(), fam.n());
    if alice >= n {
        return Err(Error::InvalidArgument(format!("alice={alice} is not a guest index below {n}")));
    }
    if params.check_hypotheses {
        let mut modeled = fam.guests().to_vec();
        modeled[alice] = if alice_hungry { GuestSpec::uniform() } else { GuestSpec::Never };
        require_weakly_kkm(&PreferenceFamily::new(k, modeled, k)?, k, params)?;
    }
    let mut roles = vec![FieldRole::Preferences; n];
    roles[alice] = FieldRole::FacetDistance;
    let tau = params.tau();
    with_tau_retries(params, |p| {
        let (bp, extended) = balance(&fam, roles.clone(), p)?;
        let partition = to_partition(&bp.point, p.zero_tol)?;
        let x = partition.coords();
        let alice_column = bp.matrix.column(alice);
        if alice_column.iter().any(|&m| m <= p.positivity_tol) {
            return Err(Error::ToleranceDiagnosis(format!(
                "balanced point {x:?} is not interior at the positivity threshold: the secretive guest's \
                 column is {alice_column:?}; refine the grid or lower tau"
            )));
        }
        let assignments = (0..k)
            .map(|j| {
                let (pi, slack) =
                    extract(&bp.matrix, x, &fam, Some((j, alice)), &[], Some(alice), tau, p.positivity_tol)?;
                ensure_verified(verify_division_except(&fam, x, &pi, slack, &[alice]), x)?;
                Assignment::certify(&fam, x, pi, slack)
            })
            .collect::<Result<_>>()?;
        Ok(SecretDivision {
            min_coordinate: x.iter().cloned().fold(f64::INFINITY, f64::min),
            partition,
            alice,
            assignments,
            alice_column,
            residual: bp.residual,
            tau,
            radius: p.tau(),
            depth: bp.depth,
            extended,
        })
    })
}

/// Rent division: prices (summing to the total rent, normalized to one) at
/// which `k` tenants accept distinct rooms. The tenants' room sets must form
/// a `k`-weakly dual KKM family.
pub fn solve_rent(family: &PreferenceFamily, params: &SolverParams) -> Result<Division> {
    params.validate()?;
    let fam = effective_family(family, params);
    let k = fam.k();
    if params.check_hypotheses {
        let grid = lattice_points(k, params.grid_depth)?;
        let report = check_weakly_dual_kkm(&fam, k, &grid, params.zero_tol, DEFAULT_SUBSET_CAP)?;
        if !report.passed {
            return Err(Error::HypothesisViolation(describe(&report, &format!("{k}-weakly dual KKM"))));
        }
    }
    let shifted = CyclicShift::new(&fam);
    let tau = params.tau();
    with_tau_retries(params, |p| {
        let (bp, extended) = balance(&shifted, vec![FieldRole::Preferences; fam.n()], p)?;
        let prices = to_partition(&bp.point, p.zero_tol)?;
        let x = prices.coords();
        let (pi_shifted, slack) = extract(&bp.matrix, x, &shifted, None, &[], None, tau, p.positivity_tol)?;
        let mut pi = vec![0; k];
        for (j, &guest) in pi_shifted.iter().enumerate() {
            pi[shifted.unshift(j)] = guest;
        }
        ensure_verified(verify_division_except(&fam, x, &pi, slack, &[]), x)?;
        Ok(Division {
            assignment: Assignment::certify(&fam, x, pi, slack)?,
            partition: prices,
            method: Method::BalancedPoint,
            residual: Some(bp.residual),
            tau,
            radius: p.tau(),
            depth: bp.depth,
            extended,
            matrix: Some(bp.matrix),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::Density;
    use crate::verify::verify_division;

    fn front() -> GuestSpec {
        GuestSpec::additive(Density::block(0.0, 0.25).unwrap())
    }

    #[test]
    fn uniform_pair() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::uniform(); 2]).unwrap();
        let d = solve_envy_free(&fam, &SolverParams::default()).unwrap();
        assert_eq!(d.partition.coords(), &[0.5, 0.5]);
        assert!(verify_division(&fam, d.partition.coords(), &d.assignment.pi, 0.0).passed);
    }

    #[test]
    fn mixed_pair_skips_never_guest() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::uniform(), front(), GuestSpec::Never]).unwrap();
        let d = solve_envy_free(&fam, &SolverParams::default()).unwrap();
        assert!(!d.assignment.pi.contains(&2));
        assert!(verify_division(&fam, d.partition.coords(), &d.assignment.pi, d.tau).passed);
    }

    #[test]
    fn all_never_fails_hypotheses() {
        let fam = PreferenceFamily::new(2, vec![GuestSpec::Never; 2], 2).unwrap();
        let err = solve_envy_free(&fam, &SolverParams::default()).unwrap_err();
        assert!(err.is_hypothesis_violation(), "{err}");
    }

    #[test]
    fn secret_pair_pins_both_pieces() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::Never, GuestSpec::uniform()]).unwrap();
        let s = solve_secret(&fam, 0, true, &SolverParams::default()).unwrap();
        assert!((s.partition.coords()[0] - 0.5).abs() < 1e-9);
        assert_eq!(s.assignments[0].pi, vec![0, 1]);
        assert_eq!(s.assignments[1].pi, vec![1, 0]);
    }

    #[test]
    fn rent_pair() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::rent(vec![0.5, 0.5]); 2]).unwrap();
        let d = solve_rent(&fam, &SolverParams::default()).unwrap();
        assert!((d.partition.coords()[0] - 0.5).abs() < 1e-6, "{:?}", d.partition);
    }

    #[test]
    fn robust_uniform_quartet() {
        let fam = PreferenceFamily::new(2, vec![GuestSpec::uniform(); 4], 4).unwrap();
        let d = solve_robust(&fam, 4, &SolverParams::default()).unwrap();
        assert_eq!(d.partition.coords(), &[0.5, 0.5]);
        assert_eq!(d.assignments.len(), 4);
    }
}
