//! Command-line front end: JSON problem files in, JSON results, CSV field
//! dumps and cover reports out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::Error;
use crate::matching::DemandMatrix;
use crate::preferences::{
    check_weakly_dual_kkm, check_weakly_kkm, CoverReport, GuestSpec, PreferenceFamily, DEFAULT_SUBSET_CAP,
};
use crate::simplex::lattice_points;
use crate::solver::{
    moving_knife_k2, normalized_row_sums, solve_envy_free, solve_rent, solve_robust, solve_secret, Assignment,
    FieldProblem, FieldRole, SolverParams,
};
use crate::verify::{brute_force_solve, random_valid_demand_matrix, verify_division_except, Variant};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("cover check failed")]
    CoverFailed,
}

impl CliError {
    /// 0 success, 1 I/O, schema or invalid input, 2 violated hypotheses or
    /// failed checks, 3 numerical failure (no convergence, certificate,
    /// tolerance).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Schema { .. } => 1,
            CliError::VerifyFailed(_) | CliError::CoverFailed => 2,
            CliError::Solver(e) if e.is_hypothesis_violation() => 2,
            CliError::Solver(
                Error::NoConvergence { .. } | Error::CertificateFailure { .. } | Error::ToleranceDiagnosis(_),
            ) => 3,
            CliError::Solver(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Schema { .. } => "schema",
            CliError::VerifyFailed(_) => "verify_failed",
            CliError::CoverFailed => "cover_failed",
            CliError::Solver(e) if e.is_hypothesis_violation() => "hypothesis_violation",
            CliError::Solver(Error::NoConvergence { .. }) => "no_convergence",
            CliError::Solver(Error::CertificateFailure { .. }) => "certificate_failure",
            CliError::Solver(Error::ToleranceDiagnosis(_)) => "tolerance_diagnosis",
            CliError::Solver(_) => "invalid_input",
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemVariant {
    Standard,
    Secret,
    Robust,
    Rent,
    MovingKnife,
}

/// A division problem as read from disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub k: usize,
    pub variant: ProblemVariant,
    pub guests: Vec<GuestSpec>,
    /// Secretive guest (secret variant only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_hungry: Option<bool>,
    /// Hungriness level (robust variant only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default)]
    pub params: SolverParams,
}

impl ProblemFile {
    pub fn family(&self) -> crate::Result<PreferenceFamily> {
        let alpha = self.r.unwrap_or(self.k).min(self.guests.len()).max(1);
        PreferenceFamily::new(self.k, self.guests.clone(), alpha)
    }

    fn check_variant_fields(&self) -> std::result::Result<(), String> {
        let secret = self.variant == ProblemVariant::Secret;
        let robust = self.variant == ProblemVariant::Robust;
        match (secret, self.alice.is_some()) {
            (true, false) => return Err("variant \"secret\" requires field `alice`".into()),
            (false, true) => return Err("field `alice` is only allowed for variant \"secret\"".into()),
            _ => {}
        }
        if !secret && self.alice_hungry.is_some() {
            return Err("field `alice_hungry` is only allowed for variant \"secret\"".into());
        }
        match (robust, self.r.is_some()) {
            (true, false) => Err("variant \"robust\" requires field `r`".into()),
            (false, true) => Err("field `r` is only allowed for variant \"robust\"".into()),
            _ => Ok(()),
        }
    }
}

/// One assignment of a result, labelled by the scenario it covers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultAssignment {
    /// Piece the secretive guest takes in this scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_piece: Option<usize>,
    /// Guests assumed absent in this scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absent: Option<Vec<usize>>,
    #[serde(flatten)]
    pub assignment: Assignment,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub variant: ProblemVariant,
    pub k: usize,
    pub partition: Vec<f64>,
    /// Room prices (rent variant; equal to the partition).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
    pub assignments: Vec<ResultAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Certificate slack bound.
    pub tau: f64,
    /// Neighborhood radius that produced the partition.
    pub radius: f64,
    pub depth: u32,
    pub extended: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_column: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_coordinate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_matrix: Option<Vec<Vec<f64>>>,
    pub params: SolverParams,
}

#[derive(Debug, Parser)]
#[command(name = "cakecut", version, about = "Envy-free cake cutting and rent division")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ParamFlags {
    /// Initial lattice depth.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Neighborhood radius of the preference sets.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Floor of the demand normalization.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Tie tolerance applied to every guest.
    #[arg(long)]
    pub tie_tol: Option<f64>,
    #[arg(long)]
    pub refine_levels: Option<u32>,
}

impl ParamFlags {
    fn apply(&self, p: &mut SolverParams) {
        if let Some(d) = self.depth {
            p.grid_depth = d;
        }
        if self.tau.is_some() {
            p.tau = self.tau;
        }
        if let Some(e) = self.epsilon {
            p.epsilon = e;
        }
        if let Some(r) = self.residual_tol {
            p.residual_tol = r;
        }
        if self.tie_tol.is_some() {
            p.tie_tol = self.tie_tol;
        }
        if let Some(l) = self.refine_levels {
            p.refine_levels = l;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write the certified result.
    Solve {
        input: PathBuf,
        /// Result path; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Check the (weak, possibly dual) KKM cover property on a grid.
    CheckCover {
        input: PathBuf,
        /// Hungriness level; defaults to `r` or `k` from the problem.
        #[arg(long)]
        alpha: Option<usize>,
        #[arg(long, default_value_t = 16)]
        depth: u32,
        /// Check the dual property (default for rent problems).
        #[arg(long)]
        dual: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tabulate f_epsilon and its residual at every grid point as CSV.
    FieldDump {
        input: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check a result file against its problem.
    Verify {
        input: PathBuf,
        result: PathBuf,
        /// Tolerance loosening; defaults to the result's tau.
        #[arg(long)]
        slack: Option<f64>,
        /// Also confirm a feasible grid partition near the result by exhaustive
        /// scan at this depth.
        #[arg(long)]
        oracle_depth: Option<u32>,
        #[arg(long, default_value_t = 60)]
        budget_seconds: u64,
    },
    /// Print a random valid demand matrix (test generator).
    RandomMatrix {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        full: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: path.into(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

pub fn read_problem(path: &Path) -> CliResult<ProblemFile> {
    let problem: ProblemFile = read_json(path)?;
    problem
        .check_variant_fields()
        .map_err(|message| CliError::Schema { path: path.into(), message })?;
    Ok(problem)
}

fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// JSON with every float rounded to 12 significant digits.
pub fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("results serialize");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
        Some(path) => {
            let io = |source| CliError::Io { path: path.into(), source };
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn plain(assignment: Assignment) -> ResultAssignment {
    ResultAssignment { alice_piece: None, absent: None, assignment }
}

/// Solves a parsed problem.
pub fn solve_problem(problem: &ProblemFile) -> CliResult<ResultFile> {
    let family = problem.family()?;
    let params = problem.params.clone();
    let n = family.n();
    let out = match problem.variant {
        ProblemVariant::Standard | ProblemVariant::Rent | ProblemVariant::MovingKnife => {
            let d = match problem.variant {
                ProblemVariant::Standard => solve_envy_free(&family, &params)?,
                ProblemVariant::Rent => solve_rent(&family, &params)?,
                _ => moving_knife_k2(&family, &params)?,
            };
            let partition = d.partition.coords().to_vec();
            ResultFile {
                variant: problem.variant,
                k: problem.k,
                prices: (problem.variant == ProblemVariant::Rent).then(|| partition.clone()),
                partition,
                assignments: vec![plain(d.assignment)],
                residual: d.residual,
                tau: d.tau,
                radius: d.radius,
                depth: d.depth,
                extended: d.extended,
                alice: None,
                alice_column: None,
                min_coordinate: None,
                demand_matrix: d.matrix.as_ref().map(DemandMatrix::rows),
                params,
            }
        }
        ProblemVariant::Secret => {
            let alice = problem.alice.expect("checked with the schema");
            if alice >= n {
                return Err(Error::InvalidArgument(format!("alice={alice} is not a guest index below {n}")).into());
            }
            let s = solve_secret(&family, alice, problem.alice_hungry.unwrap_or(true), &params)?;
            ResultFile {
                variant: problem.variant,
                k: problem.k,
                partition: s.partition.coords().to_vec(),
                prices: None,
                assignments: s
                    .assignments
                    .into_iter()
                    .enumerate()
                    .map(|(j, a)| ResultAssignment { alice_piece: Some(j), absent: None, assignment: a })
                    .collect(),
                residual: Some(s.residual),
                tau: s.tau,
                radius: s.radius,
                depth: s.depth,
                extended: s.extended,
                alice: Some(alice),
                alice_column: Some(s.alice_column),
                min_coordinate: Some(s.min_coordinate),
                demand_matrix: None,
                params,
            }
        }
        ProblemVariant::Robust => {
            let r = problem.r.expect("checked with the schema");
            let d = solve_robust(&family, r, &params)?;
            ResultFile {
                variant: problem.variant,
                k: problem.k,
                partition: d.partition.coords().to_vec(),
                prices: None,
                assignments: d
                    .assignments
                    .into_iter()
                    .map(|e| ResultAssignment { alice_piece: None, absent: Some(e.absent), assignment: e.assignment })
                    .collect(),
                residual: Some(d.residual),
                tau: d.tau,
                radius: d.radius,
                depth: d.depth,
                extended: d.extended,
                alice: None,
                alice_column: None,
                min_coordinate: None,
                demand_matrix: None,
                params,
            }
        }
    };
    Ok(out)
}

/// Checks every assignment of a result against the problem.
pub fn verify_result(problem: &ProblemFile, result: &ResultFile, slack: f64) -> CliResult<()> {
    let family = problem.family()?;
    let skip: Vec<usize> = result.alice.into_iter().collect();
    let mut failures = Vec::new();
    if result.assignments.is_empty() {
        failures.push("result has no assignments".to_string());
    }
    for (idx, a) in result.assignments.iter().enumerate() {
        let report = verify_division_except(&family, &result.partition, &a.assignment.pi, slack, &skip);
        if !report.passed {
            failures.push(format!("assignment {idx}: {:?}", report.violations));
        }
        if let Some(absent) = &a.absent {
            if a.assignment.pi.iter().any(|i| absent.contains(i)) {
                failures.push(format!("assignment {idx} uses an absent guest"));
            }
        }
        if let (Some(j), Some(alice)) = (a.alice_piece, result.alice) {
            if a.assignment.pi.get(j) != Some(&alice) {
                failures.push(format!("assignment {idx} does not give piece {j} to guest {alice}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failures.join("; ")))
    }
}

fn cover_report(problem: &ProblemFile, alpha: Option<usize>, depth: u32, dual: bool) -> CliResult<CoverReport> {
    let family = problem.family()?;
    let alpha = alpha.unwrap_or(family.alpha());
    let grid = lattice_points(problem.k, depth)?;
    let dual = dual || problem.variant == ProblemVariant::Rent;
    let report = if dual {
        check_weakly_dual_kkm(&family, alpha, &grid, problem.params.zero_tol, DEFAULT_SUBSET_CAP)?
    } else {
        check_weakly_kkm(&family, alpha, &grid, DEFAULT_SUBSET_CAP)?
    };
    Ok(report)
}

/// CSV of `f_epsilon` over the simplex grid, in lexicographic point order.
pub fn field_dump_csv(problem: &ProblemFile, params: &SolverParams) -> CliResult<String> {
    params.validate()?;
    let family = problem.family()?;
    let k = problem.k;
    let mut roles = vec![FieldRole::Preferences; family.n()];
    if let (ProblemVariant::Secret, Some(a)) = (problem.variant, problem.alice) {
        if a < roles.len() {
            roles[a] = FieldRole::FacetDistance;
        }
    }
    let shifted = crate::preferences::CyclicShift::new(&family);
    let oracle: &dyn crate::preferences::PreferenceOracle =
        if problem.variant == ProblemVariant::Rent { &shifted } else { &family };
    let mut fp = FieldProblem { oracle, roles, extended: false, zero_tol: params.zero_tol };
    let fields = match fp.build(params.grid_depth, params.tau()) {
        Err(Error::FacetContact { .. }) => {
            fp.extended = true;
            fp.build(params.grid_depth, params.tau())?
        }
        other => other?,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    header.extend((0..k).map(|j| format!("f{j}")));
    header.push("residual".into());
    let csv_err = |e: csv::Error| CliError::Io { path: "<csv>".into(), source: e.into() };
    w.write_record(&header).map_err(csv_err)?;
    let grid = fields.grid();
    for idx in (0..grid.len()).filter(|&i| grid.in_base_simplex(i)) {
        let mut row: Vec<String> = grid.point(idx).iter().map(|v| round_sig(*v).to_string()).collect();
        match normalized_row_sums(&fields.demand_matrix(idx, params.epsilon)) {
            Some(f) => {
                let c = 1.0 / k as f64;
                let res = f.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
                row.extend(f.iter().map(|v| round_sig(*v).to_string()));
                row.push(round_sig(res).to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), k + 1)),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Solve { input, output, params } => {
            let mut problem = read_problem(&input)?;
            params.apply(&mut problem.params);
            let result = solve_problem(&problem)?;
            emit(output.as_deref(), &to_json_text(&result))?;
            Ok(0)
        }
        Command::CheckCover { input, alpha, depth, dual, output } => {
            let problem = read_problem(&input)?;
            let report = cover_report(&problem, alpha, depth, dual)?;
            emit(output.as_deref(), &to_json_text(&report))?;
            if report.passed {
                Ok(0)
            } else {
                Err(CliError::CoverFailed)
            }
        }
        Command::FieldDump { input, depth, tau, epsilon, output } => {
            let problem = read_problem(&input)?;
            let mut params = problem.params.clone();
            ParamFlags { depth, tau, epsilon, ..Default::default() }.apply(&mut params);
            emit(output.as_deref(), &field_dump_csv(&problem, &params)?)?;
            Ok(0)
        }
        Command::Verify { input, result, slack, oracle_depth, budget_seconds } => {
            let problem = read_problem(&input)?;
            let res: ResultFile = read_json(&result)?;
            verify_result(&problem, &res, slack.unwrap_or(res.tau))?;
            if let Some(depth) = oracle_depth {
                let family = problem.family()?;
                let variant = match problem.variant {
                    ProblemVariant::Robust => Variant::Robust { r: problem.r.unwrap_or(problem.k) },
                    ProblemVariant::Rent => Variant::Rent,
                    _ => Variant::Standard,
                };
                let feasible = brute_force_solve(
                    &family,
                    depth,
                    variant,
                    slack.unwrap_or(res.tau),
                    Duration::from_secs(budget_seconds),
                )?;
                let near = feasible.iter().any(|x| {
                    x.iter().zip(&res.partition).all(|(a, b)| (a - b).abs() <= 2.0 / depth as f64 + 1e-12)
                });
                if !near {
                    return Err(CliError::VerifyFailed(format!(
                        "no feasible depth-{depth} grid partition within 2/depth of the result ({} feasible)",
                        feasible.len()
                    )));
                }
            }
            Ok(0)
        }
        Command::RandomMatrix { k, n, full, seed } => {
            let m = random_valid_demand_matrix(k, n, full, seed)?;
            emit(None, &to_json_text(&m.rows()))?;
            Ok(0)
        }
    }
}
