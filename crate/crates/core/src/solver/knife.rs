use super::{effective_family, Assignment, Division, Method, SolverParams};
use crate::error::{Error, Result};
use crate::preferences::PreferenceFamily;
use crate::simplex::PartitionPoint;
use crate::verify::verify_division;

const COARSE_STEPS: usize = 1024;
const BISECT_ITERS: usize = 50;

/// Moving-knife division of a cake into two pieces.
///
/// Among the first `n - 1` guests, finds the leftmost cut at which someone
/// prefers the left piece; just before it they all preferred the right one.
/// If two different guests want the two pieces they take them; if a single
/// guest wants both, any other guest with a preference at the cut shares the
/// cake with them.
pub fn moving_knife_k2(family: &PreferenceFamily, params: &SolverParams) -> Result<Division> {
    params.validate()?;
    let fam = effective_family(family, params);
    if fam.k() != 2 {
        return Err(Error::InvalidArgument(format!("the moving knife needs k=2, got k={}", fam.k())));
    }
    let n = fam.n();
    let selected: Vec<usize> = (0..n - 1).collect();
    let prefs = |i: usize, t: f64| fam.guest(i).preferred_pieces(&[t, 1.0 - t]);
    let someone_left = |t: f64| -> Result<bool> {
        for &i in &selected {
            if prefs(i, t)?.contains(0) {
                return Ok(true);
            }
        }
        Ok(false)
    };

    let cut = if someone_left(0.0)? {
        0.0
    } else {
        let mut hi = None;
        for s in 1..=COARSE_STEPS {
            let t = s as f64 / COARSE_STEPS as f64;
            if someone_left(t)? {
                hi = Some(t);
                break;
            }
        }
        let mut hi = hi.ok_or_else(|| {
            Error::HypothesisViolation(
                "no selected guest ever prefers the left piece: the family is not 2-hungry".into(),
            )
        })?;
        let mut lo = hi - 1.0 / COARSE_STEPS as f64;
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if someone_left(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let at_cut: Vec<_> = (0..n).map(|i| prefs(i, cut)).collect::<Result<_>>()?;
    let left: Vec<usize> = selected.iter().copied().filter(|&i| at_cut[i].contains(0)).collect();
    let right: Vec<usize> = selected.iter().copied().filter(|&i| at_cut[i].contains(1)).collect();
    let pair = left
        .iter()
        .flat_map(|&a| right.iter().map(move |&b| (a, b)))
        .find(|(a, b)| a != b)
        .or_else(|| {
            // one guest wants both pieces: poll everybody else
            let a = *left.first()?;
            (0..n).filter(|&g| g != a).find_map(|g| {
                if at_cut[g].contains(0) {
                    Some((g, a))
                } else if at_cut[g].contains(1) {
                    Some((a, g))
                } else {
                    None
                }
            })
        })
        .ok_or_else(|| {
            Error::HypothesisViolation(format!(
                "at the cut {cut} no second guest accepts a piece: the family is not 2-hungry"
            ))
        })?;

    let x = [cut, 1.0 - cut];
    let pi = vec![pair.0, pair.1];
    let report = verify_division(&fam, &x, &pi, 0.0);
    if !report.passed {
        return Err(Error::CertificateFailure {
            point: x.to_vec(),
            details: format!("moving-knife assignment fails verification: {:?}", report.violations),
        });
    }
    Ok(Division {
        partition: PartitionPoint::new(x.to_vec())?,
        assignment: Assignment::certify(&fam, &x, pi, 0.0)?,
        method: Method::MovingKnife,
        residual: None,
        tau: 0.0,
        radius: 0.0,
        depth: 0,
        extended: false,
        matrix: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::{Density, GuestSpec};

    #[test]
    fn uniform_pair_cuts_in_half() {
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::uniform(); 2]).unwrap();
        let d = moving_knife_k2(&fam, &SolverParams::default()).unwrap();
        assert!((d.partition.coords()[0] - 0.5).abs() < 1e-5);
        assert_ne!(d.assignment.pi[0], d.assignment.pi[1]);
    }

    #[test]
    fn front_loaded_guest_moves_first() {
        let front = GuestSpec::additive(Density::block(0.0, 0.25).unwrap());
        let fam = PreferenceFamily::hungry(2, vec![GuestSpec::uniform(), front.clone()]).unwrap();
        // only guest 0 is selected; polled guest 1 pairs up
        let d = moving_knife_k2(&fam, &SolverParams::default()).unwrap();
        assert!((d.partition.coords()[0] - 0.5).abs() < 1e-5);

        let fam = PreferenceFamily::hungry(2, vec![front, GuestSpec::uniform(), GuestSpec::uniform()]).unwrap();
        let d = moving_knife_k2(&fam, &SolverParams::default()).unwrap();
        assert!((d.partition.coords()[0] - 0.125).abs() < 1e-5);
        assert_eq!(d.assignment.pi[0], 0);
    }

    #[test]
    fn rejects_non_hungry() {
        let fam = PreferenceFamily::new(2, vec![GuestSpec::Never; 2], 2).unwrap();
        assert!(moving_knife_k2(&fam, &SolverParams::default()).unwrap_err().is_hypothesis_violation());
    }
}
