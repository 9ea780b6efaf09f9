//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero if any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use cakecut::matching::{
    birkhoff_decompose, complete_to_square, exclusion_size, find_matching_avoiding, find_positive_matching,
    DEFAULT_POSITIVITY_TOL, DEFAULT_TOL_COL,
};
use cakecut::preferences::{
    check_dual_kkm, check_kkm_cover, check_weakly_kkm, CyclicShift, Density, DensitySegment, GuestSpec,
    PreferenceFamily, PreferenceOracle, DEFAULT_SUBSET_CAP,
};
use cakecut::simplex::lattice_points;
use cakecut::solver::{
    moving_knife_k2, normalized_row_sums, solve_envy_free, solve_rent, solve_robust, solve_secret, FieldProblem,
    FieldRole, SolverParams,
};
use cakecut::verify::{
    brute_force_matching, brute_force_solve, random_additive_guests, random_valid_demand_matrix,
    verify_division, verify_division_except, Variant,
};
use cakecut::Error;
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn block(a: f64, b: f64) -> GuestSpec {
    GuestSpec::additive(Density::block(a, b).unwrap())
}

fn steps(parts: &[(f64, f64, f64)]) -> GuestSpec {
    let segs = parts
        .iter()
        .map(|&(start, end, weight)| DensitySegment { start, end, weight })
        .collect();
    GuestSpec::additive(Density::new(segs).unwrap())
}

fn picky(d: Density, theta: f64) -> GuestSpec {
    GuestSpec::threshold(d, theta)
}

fn rand_guests(n: usize, seed: u64) -> Vec<GuestSpec> {
    random_additive_guests(n, 5, seed)
}

fn cat(parts: Vec<Vec<GuestSpec>>) -> Vec<GuestSpec> {
    parts.into_iter().flatten().collect()
}

fn family(k: usize, guests: Vec<GuestSpec>) -> PreferenceFamily {
    PreferenceFamily::hungry(k, guests).unwrap()
}

fn matrix_grid() -> Vec<(usize, usize)> {
    (2..=4).flat_map(|k| (k.max(2)..=7).map(move |n| (k, n))).collect()
}

// ---------------------------------------------------------------------------

fn matching_suite() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, n) in matrix_grid() {
        for s in 0..500u64 {
            let full = rng.gen_range(k..=n);
            let x = random_valid_demand_matrix(k, n, full, s * 131 + (k * 10 + n) as u64).map_err(|e| e.to_string())?;
            let found = find_positive_matching(&x, None, DEFAULT_POSITIVITY_TOL, DEFAULT_TOL_COL)
                .map_err(|e| format!("k={k} n={n} seed {s}: {e}"))?;
            if !found.iter().all_unique() || found.iter().enumerate().any(|(j, &i)| x.get(j, i) <= 0.0) {
                return Err(format!("k={k} n={n} seed {s}: invalid matching {found:?}"));
            }
            if brute_force_matching(&x, None, &[], DEFAULT_POSITIVITY_TOL).is_empty() {
                return Err(format!("k={k} n={n} seed {s}: brute force disagrees on feasibility"));
            }
            let positive: Vec<(usize, usize)> = (0..k)
                .cartesian_product(0..n)
                .filter(|&(j, i)| x.get(j, i) > DEFAULT_POSITIVITY_TOL)
                .collect();
            let pin = positive[rng.gen_range(0..positive.len())];
            let pinned = find_positive_matching(&x, Some(pin), DEFAULT_POSITIVITY_TOL, DEFAULT_TOL_COL)
                .map_err(|e| format!("k={k} n={n} seed {s} pin {pin:?}: {e}"))?;
            if pinned[pin.0] != pin.1 || brute_force_matching(&x, Some(pin), &[], DEFAULT_POSITIVITY_TOL).is_empty() {
                return Err(format!("k={k} n={n} seed {s}: pinned matching disagrees"));
            }
            count += 1;
        }
    }
    let t = start.elapsed();
    if t > Duration::from_secs(30) {
        return Err(format!("{count} instances took {t:.1?} (limit 30 s)"));
    }
    Ok(format!("{count} matrices, plain and pinned matchings found, brute force agrees, {t:.1?}"))
}

fn completion_exactness() -> Outcome {
    let mut worst_sum = 0.0f64;
    let mut worst_rec = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, n) in matrix_grid() {
        for s in 0..500u64 {
            let full = rng.gen_range(k..=n);
            let x = random_valid_demand_matrix(k, n, full, s * 131 + (k * 10 + n) as u64).unwrap();
            // keep the generator stream aligned with the matching suite
            let positive = (0..k).cartesian_product(0..n).filter(|&(j, i)| x.get(j, i) > DEFAULT_POSITIVITY_TOL).count();
            let _ = rng.gen_range(0..positive);
            let target = x.row_sum();
            let sq = complete_to_square(&x, DEFAULT_TOL_COL).map_err(|e| format!("k={k} n={n} seed {s}: {e}"))?;
            for r in &sq {
                worst_sum = worst_sum.max((r.iter().sum::<f64>() - target).abs());
            }
            for c in 0..n {
                worst_sum = worst_sum.max((sq.iter().map(|r| r[c]).sum::<f64>() - target).abs());
            }
            let parts = birkhoff_decompose(&sq).map_err(|e| format!("k={k} n={n} seed {s}: {e}"))?;
            let mut rebuilt = vec![vec![0.0; n]; n];
            for (w, perm) in &parts {
                for (r, &c) in perm.iter().enumerate() {
                    rebuilt[r][c] += w;
                }
            }
            for (a, b) in rebuilt.iter().flatten().zip(sq.iter().flatten()) {
                worst_rec = worst_rec.max((a - b).abs());
            }
        }
    }
    let msg = format!("max margin error {worst_sum:.2e} (tol 1e-12), max reconstruction error {worst_rec:.2e} (tol 1e-9)");
    if worst_sum <= 1e-12 && worst_rec <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hall_robust_suite() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for (k, r) in [(2, 4), (2, 5), (3, 6)] {
        for s in 0..100u64 {
            let x = random_valid_demand_matrix(k, r, r, 9000 + s * 7 + r as u64).unwrap();
            for absent in (0..r).combinations(exclusion_size(r, k)) {
                let pi = find_matching_avoiding(&x, r, &absent, DEFAULT_POSITIVITY_TOL, DEFAULT_TOL_COL)
                    .map_err(|e| format!("k={k} r={r} seed {s} absent {absent:?}: {e}"))?;
                if pi.iter().any(|i| absent.contains(i))
                    || brute_force_matching(&x, None, &absent, DEFAULT_POSITIVITY_TOL).is_empty()
                {
                    return Err(format!("k={k} r={r} seed {s} absent {absent:?}: disagreement"));
                }
                checked += 1;
            }
        }
    }
    let t = start.elapsed();
    if t > Duration::from_secs(60) {
        return Err(format!("took {t:.1?} (limit 60 s)"));
    }
    Ok(format!("{checked} exclusion sets matched and cross-checked, {t:.1?}"))
}

fn cover_predicates() -> Outcome {
    let grid = lattice_points(3, 16).unwrap();
    let capped = GuestSpec::capped(0.45);
    let threshold = picky(Density::uniform(), 0.4);
    let first = check_kkm_cover(|x| capped.preferred_pieces(x), &grid).unwrap();
    let second = check_kkm_cover(|x| threshold.preferred_pieces(x), &grid).unwrap();
    let union =
        check_kkm_cover(|x| Ok(capped.preferred_pieces(x)?.union(threshold.preferred_pieces(x)?)), &grid).unwrap();
    let msg = format!(
        "capped alone passed={}, threshold alone passed={}, union passed={}",
        first.passed, second.passed, union.passed
    );
    if !first.passed && !second.passed && union.passed {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn end_to_end_instances() -> Vec<(usize, Vec<GuestSpec>)> {
    let u = GuestSpec::uniform;
    let never = || GuestSpec::Never;
    let d = Density::uniform;
    vec![
        (2, vec![u(), u()]),
        (2, vec![u(), block(0.0, 0.5)]),
        (2, vec![block(0.2, 0.9), block(0.0, 0.4), never()]),
        (2, vec![picky(Density::block(0.0, 0.6).unwrap(), 0.5), u()]),
        (2, vec![u(), block(0.5, 1.0), GuestSpec::capped(0.6)]),
        (2, cat(vec![rand_guests(2, 1), vec![picky(d(), 0.55)]])),
        (2, vec![u(), block(0.0, 0.3), never(), never()]),
        (2, cat(vec![rand_guests(2, 2), vec![GuestSpec::capped(0.7), picky(d(), 0.6)]])),
        (
            2,
            cat(vec![
                rand_guests(2, 3),
                vec![never(), GuestSpec::capped(0.55), picky(Density::block(0.3, 1.0).unwrap(), 0.5)],
            ]),
        ),
        (2, vec![picky(d(), 0.5), block(0.1, 0.6), never(), never(), never()]),
        (3, vec![u(), block(0.0, 0.5), block(0.5, 1.0)]),
        (3, rand_guests(3, 4)),
        (3, vec![picky(d(), 0.3), u(), block(0.2, 0.8)]),
        (3, cat(vec![vec![u()], rand_guests(2, 5), vec![never()]])),
        (3, vec![u(), block(0.0, 0.6), picky(d(), 0.4), GuestSpec::capped(0.45)]),
        (3, cat(vec![rand_guests(3, 6), vec![GuestSpec::capped(0.5)]])),
        (3, cat(vec![rand_guests(3, 7), vec![never(), picky(d(), 0.45)]])),
        (3, vec![u(), block(0.3, 1.0), picky(d(), 0.4), GuestSpec::capped(0.45), never()]),
        (3, cat(vec![rand_guests(3, 8), vec![never(), never(), GuestSpec::capped(0.5)]])),
        (
            3,
            vec![
                u(),
                block(0.0, 0.4),
                block(0.6, 1.0),
                picky(Density::block(0.0, 0.5).unwrap(), 0.5),
                GuestSpec::capped(0.6),
                never(),
            ],
        ),
    ]
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let params = SolverParams { grid_depth: 64, refine_levels: 2, ..SolverParams::default() };
    let mut worst = 0.0f64;
    for (t, (k, guests)) in end_to_end_instances().into_iter().enumerate() {
        let n = guests.len();
        let fam = family(k, guests);
        let pre = check_weakly_kkm(&fam, k, &lattice_points(k, 16).unwrap(), DEFAULT_SUBSET_CAP).unwrap();
        if !pre.passed {
            return Err(format!("instance {t} (k={k}, n={n}) is not {k}-hungry at depth 16"));
        }
        let d = solve_envy_free(&fam, &params).map_err(|e| format!("instance {t} (k={k}, n={n}): {e}"))?;
        let residual = d.residual.unwrap_or(f64::NAN);
        worst = worst.max(residual);
        if residual.is_nan() || residual > 0.02 {
            return Err(format!("instance {t}: residual {residual:.3e} above 0.02"));
        }
        let x = d.partition.coords();
        let report = verify_division(&fam, x, &d.assignment.pi, d.tau);
        if !report.passed {
            return Err(format!("instance {t}: verification failed {:?}", report.violations));
        }
        let depth = if k == 2 { 512 } else { 60 };
        let feasible = brute_force_solve(&fam, depth, Variant::Standard, d.tau, Duration::from_secs(60))
            .map_err(|e| format!("instance {t}: brute force {e}"))?;
        let reach = 2.0 / depth as f64 + 1e-12;
        if !feasible.iter().any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= reach)) {
            return Err(format!(
                "instance {t}: no feasible depth-{depth} partition within 2/depth of {x:?} ({} feasible)",
                feasible.len()
            ));
        }
    }
    let el = start.elapsed();
    if el > Duration::from_secs(300) {
        return Err(format!("suite took {el:.1?} (limit 5 min)"));
    }
    Ok(format!("20/20 solved and verified at slack tau, brute force confirms, max residual {worst:.2e}, {el:.1?}"))
}

fn two_block(m: f64, left: f64, right: f64) -> GuestSpec {
    // half the mass just left of m, half just right: m is the unique median
    steps(&[(m - left, m, 0.5 / left), (m, m + right, 0.5 / right)])
}

fn knife_instances() -> Vec<Vec<GuestSpec>> {
    let split = |m: f64| steps(&[(0.0, m, 0.5 / m), (m, 1.0, 0.5 / (1.0 - m))]);
    vec![
        vec![GuestSpec::uniform(), split(0.5)],
        vec![split(0.3), two_block(0.3, 0.2, 0.1)],
        vec![split(0.62), two_block(0.62, 0.1, 0.3)],
        vec![block(0.2, 0.8), GuestSpec::uniform()],
        vec![split(0.71), two_block(0.71, 0.5, 0.05)],
        vec![two_block(0.37, 0.3, 0.2), split(0.37)],
        vec![block(0.1, 0.5), two_block(0.3, 0.05, 0.05)],
        vec![split(0.45), two_block(0.45, 0.45, 0.1), split(0.45)],
        vec![block(0.55, 0.95), split(0.75)],
        vec![split(0.2), block(0.1, 0.3)],
    ]
}

fn moving_knife_agreement() -> Outcome {
    let params = SolverParams { refine_levels: 5, ..SolverParams::default() };
    let mut worst = 0.0f64;
    for (t, guests) in knife_instances().into_iter().enumerate() {
        let fam = family(2, guests);
        let knife = moving_knife_k2(&fam, &params).map_err(|e| format!("instance {t}: knife {e}"))?;
        let solved = solve_envy_free(&fam, &params).map_err(|e| format!("instance {t}: solver {e}"))?;
        let gap = (knife.partition.coords()[0] - solved.partition.coords()[0]).abs();
        worst = worst.max(gap);
        if gap > 1e-3 {
            return Err(format!(
                "instance {t}: knife cut {} vs solver cut {}",
                knife.partition.coords()[0],
                solved.partition.coords()[0]
            ));
        }
    }
    Ok(format!("10 instances, max |cut difference| {worst:.2e} (tol 1e-3)"))
}

fn secret_instances() -> Vec<(usize, Vec<GuestSpec>, usize)> {
    let u = GuestSpec::uniform;
    vec![
        (2, vec![u(), u()], 1),
        (2, vec![block(0.0, 0.5), block(0.3, 1.0), GuestSpec::Never], 2),
        (3, vec![u(), block(0.0, 0.5), block(0.4, 1.0)], 2),
        (3, cat(vec![vec![block(0.0, 0.2)], rand_guests(3, 21)]), 0),
        (3, vec![u(), GuestSpec::Never, block(0.5, 1.0), u()], 3),
    ]
}

fn secret_variant() -> Outcome {
    let params = SolverParams::default();
    let mut min_entry = f64::INFINITY;
    for (t, (k, guests, alice)) in secret_instances().into_iter().enumerate() {
        let fam = family(k, guests);
        let s = solve_secret(&fam, alice, true, &params).map_err(|e| format!("instance {t}: {e}"))?;
        if s.assignments.len() != k {
            return Err(format!("instance {t}: {} assignments for {k} pieces", s.assignments.len()));
        }
        let x = s.partition.coords();
        for (j, a) in s.assignments.iter().enumerate() {
            if a.pi[j] != alice {
                return Err(format!("instance {t}: assignment {j} does not pin the secretive guest"));
            }
            let report = verify_division_except(&fam, x, &a.pi, s.tau, &[alice]);
            if !report.passed {
                return Err(format!("instance {t}, piece {j}: {:?}", report.violations));
            }
        }
        let m = s.alice_column.iter().cloned().fold(f64::INFINITY, f64::min);
        min_entry = min_entry.min(m);
        if m <= params.positivity_tol {
            return Err(format!("instance {t}: secretive column {:?} not interior", s.alice_column));
        }
    }
    Ok(format!("5 instances, k pinned verified assignments each, min secretive entry {min_entry:.3e}"))
}

fn robust_instances() -> Vec<(usize, Vec<GuestSpec>)> {
    let u = GuestSpec::uniform;
    vec![
        (2, vec![u(), block(0.0, 0.5), block(0.5, 1.0)]),
        (2, cat(vec![rand_guests(3, 11), vec![GuestSpec::Never]])),
        (3, cat(vec![vec![u(), block(0.0, 0.5), block(0.5, 1.0)], rand_guests(1, 12)])),
        (3, rand_guests(4, 13)),
        (3, cat(vec![rand_guests(4, 14), vec![GuestSpec::capped(0.45)]])),
    ]
}

fn robust_variant() -> Outcome {
    let params = SolverParams::default();
    let mut total = 0;
    for (t, (k, guests)) in robust_instances().into_iter().enumerate() {
        let n = guests.len();
        let r = k + 1;
        let fam = PreferenceFamily::new(k, guests, r).unwrap();
        let d = solve_robust(&fam, r, &params).map_err(|e| format!("instance {t}: {e}"))?;
        let x = d.partition.coords();
        for absent in (0..n).combinations(1) {
            let Some(e) = d.assignments.iter().find(|e| e.absent == absent) else {
                return Err(format!("instance {t}: no assignment without guest {absent:?}"));
            };
            let report = verify_division(&fam, x, &e.assignment.pi, d.tau);
            if !report.passed || e.assignment.pi.iter().any(|i| absent.contains(i)) {
                return Err(format!("instance {t}, absent {absent:?}: {:?}", report.violations));
            }
            total += 1;
        }
    }
    Ok(format!("5 instances, {total} single-guest exclusions certified at a common partition"))
}

fn rent_instances() -> Vec<(usize, Vec<GuestSpec>)> {
    let r = GuestSpec::rent;
    vec![
        (2, vec![r(vec![0.5, 0.5]), r(vec![0.8, 0.2])]),
        (2, vec![r(vec![0.3, 0.7]), r(vec![0.6, 0.4]), r(vec![0.5, 0.5])]),
        (3, vec![r(vec![0.4, 0.3, 0.3]), r(vec![0.2, 0.5, 0.3]), r(vec![1.0 / 3.0; 3])]),
        (3, vec![r(vec![0.6, 0.2, 0.2]), r(vec![0.5, 0.4, 0.1]), r(vec![0.1, 0.3, 0.6]), GuestSpec::Never]),
        (3, vec![r(vec![0.9, 0.5, 0.1]), r(vec![0.3, 0.3, 0.4]), r(vec![0.2, 0.6, 0.2])]),
    ]
}

fn rent_variant() -> Outcome {
    let params = SolverParams::default();
    let grid = |k| lattice_points(k, 16).unwrap();
    for (t, (k, guests)) in rent_instances().into_iter().enumerate() {
        let fam = family(k, guests);
        let g = grid(k);
        for i in (0..fam.n()).filter(|&i| !matches!(fam.guest(i), GuestSpec::Never)) {
            let guest = fam.guest(i);
            if !check_dual_kkm(|x| guest.preferred_pieces(x), &g, params.zero_tol).unwrap().passed {
                return Err(format!("instance {t}: guest {i} is not a dual KKM cover"));
            }
            let shifted = CyclicShift::new(&fam);
            if !check_kkm_cover(|x| shifted.preferred(i, x, 0.0), &g).unwrap().passed {
                return Err(format!("instance {t}: shifted guest {i} is not a KKM cover"));
            }
        }
        let d = solve_rent(&fam, &params).map_err(|e| format!("instance {t}: {e}"))?;
        let prices = d.partition.coords();
        let pi = &d.assignment.pi;
        let report = verify_division(&fam, prices, pi, d.tau);
        if !report.passed || !pi.iter().all_unique() {
            return Err(format!("instance {t}: prices {prices:?}, tenants {pi:?}: {:?}", report.violations));
        }
    }
    Ok("5 instances: dual covers, shifted covers, tenants accept distinct rooms".into())
}

fn invariant_corpus() -> Vec<(String, PreferenceFamily, Vec<FieldRole>, bool)> {
    let mut out = Vec::new();
    for (t, (k, g)) in end_to_end_instances().into_iter().enumerate() {
        let n = g.len();
        out.push((format!("envy-free {t}"), family(k, g), vec![FieldRole::Preferences; n], false));
    }
    for (t, (k, g)) in robust_instances().into_iter().enumerate() {
        let n = g.len();
        out.push((format!("robust {t}"), family(k, g), vec![FieldRole::Preferences; n], false));
    }
    for (t, (k, g, alice)) in secret_instances().into_iter().enumerate() {
        let mut roles = vec![FieldRole::Preferences; g.len()];
        roles[alice] = FieldRole::FacetDistance;
        out.push((format!("secret {t}"), family(k, g), roles, false));
    }
    for (t, (k, g)) in rent_instances().into_iter().enumerate() {
        let n = g.len();
        out.push((format!("rent {t}"), family(k, g), vec![FieldRole::Preferences; n], true));
    }
    out
}

fn analytic_invariants() -> Outcome {
    let params = SolverParams::default();
    let depth = 32;
    let mut boundary_points = 0;
    let mut grid_points = 0;
    for (name, fam, roles, shifted) in invariant_corpus() {
        let shift = CyclicShift::new(&fam);
        let oracle: &dyn PreferenceOracle = if shifted { &shift } else { &fam };
        let (k, n) = (fam.k(), fam.n());
        let mut problem = FieldProblem { oracle, roles, extended: false, zero_tol: params.zero_tol };
        let fields = match problem.build(depth, params.tau()) {
            Err(Error::FacetContact { .. }) => {
                problem.extended = true;
                problem.build(depth, params.tau())
            }
            other => other,
        }
        .map_err(|e| format!("{name}: {e}"))?;
        let grid = fields.grid();
        for idx in 0..grid.len() {
            let m = fields.demand_matrix(idx, params.epsilon);
            let zero = (0..n).filter(|&i| m.column(i).iter().all(|&e| e == 0.0)).count();
            if zero > n - k {
                return Err(format!("{name}: {zero} zero columns at {:?}", grid.point(idx)));
            }
            grid_points += 1;
            if grid.on_domain_boundary(idx) {
                let f = normalized_row_sums(&m).ok_or_else(|| format!("{name}: f undefined at {:?}", grid.point(idx)))?;
                let nums = grid.numerators(idx);
                if (0..k).any(|j| f[j] > 0.0 && nums[j] <= grid.lower()) {
                    return Err(format!("{name}: f={f:?} leaves the face of {:?}", grid.point(idx)));
                }
                boundary_points += 1;
            }
        }
    }
    Ok(format!(
        "face preservation at {boundary_points} boundary points, zero-column bound at {grid_points} points"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let problem = serde_json::json!({
        "k": 3,
        "variant": "standard",
        "guests": [
            {"kind": "additive", "density": [{"start": 0.0, "end": 1.0, "weight": 1.0}]},
            {"kind": "additive", "density": [{"start": 0.0, "end": 0.5, "weight": 2.0}]},
            {"kind": "threshold_picky", "density": [{"start": 0.0, "end": 1.0, "weight": 1.0}], "theta": 0.3},
            {"kind": "never"}
        ]
    });
    let input = dir.path().join("problem.json");
    std::fs::write(&input, problem.to_string()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("result{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_cakecut"))
            .arg("solve")
            .arg(&input)
            .arg("--output")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run {run} exited with {status}"));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    if outputs[0] == outputs[1] {
        Ok(format!("two runs wrote identical {}-byte results", outputs[0].len()))
    } else {
        Err("result files differ".into())
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("matching lemma suite", matching_suite),
        ("completion exactness", completion_exactness),
        ("hall-robust suite", hall_robust_suite),
        ("cover predicates", cover_predicates),
        ("end-to-end envy-free", end_to_end),
        ("moving-knife agreement", moving_knife_agreement),
        ("secret variant", secret_variant),
        ("robust variant", robust_variant),
        ("rent variant", rent_variant),
        ("analytic invariants", analytic_invariants),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (no, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.unwrap_or_else(|e| e);
        println!("criterion {:>2} {tag} {name} [{:.1?}]: {detail}", no + 1, start.elapsed());
        if tag == "FAIL" {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
