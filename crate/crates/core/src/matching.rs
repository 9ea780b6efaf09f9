//! Matchings extracted from demand matrices: Birkhoff completion of
//! non-square matrices, pinned positive matchings and matchings that survive
//! the absence of some guests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-9;
pub const DEFAULT_TOL_COL: f64 = 1e-6;

const ENTRY_FLOOR: f64 = -1e-12;
const COL_SUM_CEIL: f64 = 1.0 + 1e-9;
const ROW_BALANCE_TOL: f64 = 1e-9;

/// A `k × n` matrix with non-negative entries whose columns sum to at most one.
///
/// Rows are expected to share a common sum; the lemma entry points check that
/// together with the number of full columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix {
    k: usize,
    n: usize,
    entries: Vec<f64>,
}

impl DemandMatrix {
    pub fn new(k: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 || n == 0 || entries.len() != k * n {
            return Err(Error::InvalidArgument(format!(
                "demand matrix needs {k}x{n} = {} entries, got {}",
                k * n,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| !e.is_finite() || **e < ENTRY_FLOOR) {
            return Err(Error::InvalidArgument(format!("demand matrix entry {bad} is negative or not finite")));
        }
        let m = DemandMatrix { k, n, entries };
        if let Some((i, s)) = m.col_sums().into_iter().enumerate().find(|(_, s)| *s > COL_SUM_CEIL) {
            return Err(Error::InvalidArgument(format!("column {i} sums to {s} > 1")));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("demand matrix rows differ in length".into()));
        }
        DemandMatrix::new(k, n, rows.concat())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.entries[j * self.n + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j * self.n..(j + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|j| self.row(j).to_vec()).collect()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.k).map(|j| self.get(j, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.k).map(|j| self.row(j).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.k).map(|j| self.get(j, i)).sum()).collect()
    }

    /// Mean row sum, the common value `p / k` for balanced matrices.
    pub fn row_sum(&self) -> f64 {
        self.row_sums().iter().sum::<f64>() / self.k as f64
    }

    pub fn row_spread(&self) -> f64 {
        let r = self.row_sums();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Columns summing to one within `tol_col`.
    pub fn full_columns(&self, tol_col: f64) -> Vec<usize> {
        self.col_sums()
            .iter()
            .enumerate()
            .filter(|(_, s)| (*s - 1.0).abs() <= tol_col)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn zero_columns(&self, positivity_tol: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| (0..self.k).all(|j| self.get(j, i) <= positivity_tol))
            .collect()
    }

    /// Guests `i` with a positive entry in row `j`.
    pub fn positive_guests(&self, j: usize, positivity_tol: f64) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(j, i) > positivity_tol).collect()
    }

    /// Rows balanced and at least `needed` full columns.
    fn check_lemma(&self, needed: usize, tol_col: f64) -> Result<()> {
        let scale = self.row_sum().abs().max(1.0);
        if self.row_spread() > ROW_BALANCE_TOL * scale {
            return Err(Error::HypothesisViolation(format!(
                "row sums differ by {:.3e}",
                self.row_spread()
            )));
        }
        let full = self.full_columns(tol_col).len();
        if full < needed {
            return Err(Error::HypothesisViolation(format!(
                "{full} full columns, at least {needed} required"
            )));
        }
        Ok(())
    }
}

/// Maximum bipartite matching by augmenting paths. `adj[r]` lists the columns
/// row `r` may use, in preference order. Returns each row's column.
pub(crate) fn max_matching(adj: &[Vec<usize>], cols: usize) -> Vec<Option<usize>> {
    fn augment(r: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &c in &adj[r] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if owner[c].is_none_or(|o| augment(o, adj, seen, owner)) {
                owner[c] = Some(r);
                return true;
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; cols];
    for r in 0..adj.len() {
        let mut seen = vec![false; cols];
        augment(r, adj, &mut seen, &mut owner);
    }
    let mut rows = vec![None; adj.len()];
    for (c, o) in owner.iter().enumerate() {
        if let Some(r) = *o {
            rows[r] = Some(c);
        }
    }
    rows
}

/// Perfect matching of pieces into guests on the positive entries of `x`,
/// honoring an optional `(piece, guest)` pin and skipping `excluded` guests.
/// No hypothesis checks.
pub fn match_positive(
    x: &DemandMatrix,
    pin: Option<(usize, usize)>,
    excluded: &[usize],
    positivity_tol: f64,
) -> Option<Vec<usize>> {
    let mut blocked = vec![false; x.n];
    excluded.iter().for_each(|&i| blocked[i] = true);
    if let Some((j0, i0)) = pin {
        if blocked[i0] || x.get(j0, i0) <= positivity_tol {
            return None;
        }
        blocked[i0] = true;
    }
    let adj: Vec<Vec<usize>> = (0..x.k)
        .map(|j| match pin {
            Some((j0, i0)) if j == j0 => vec![i0],
            _ => (0..x.n).filter(|&i| !blocked[i] && x.get(j, i) > positivity_tol).collect(),
        })
        .collect();
    max_matching(&adj, x.n).into_iter().collect()
}

fn diagnose_failure(x: &DemandMatrix, what: &str, positivity_tol: f64) -> Error {
    let near_zero = x
        .entries
        .iter()
        .filter(|&&e| e > 0.0 && e <= positivity_tol)
        .count();
    Error::ToleranceDiagnosis(format!(
        "no {what} on entries above {positivity_tol:e} although the hypotheses hold; \
         {near_zero} entries are positive but at or below the positivity threshold"
    ))
}

fn check_pin(x: &DemandMatrix, pin: (usize, usize), positivity_tol: f64) -> Result<()> {
    let (j0, i0) = pin;
    if j0 >= x.k || i0 >= x.n {
        return Err(Error::InvalidArgument(format!("pin {pin:?} out of range")));
    }
    let e = x.get(j0, i0);
    if e <= 0.0 {
        return Err(Error::HypothesisViolation(format!("pinned entry {pin:?} is {e}, not positive")));
    }
    if e <= positivity_tol {
        return Err(Error::ToleranceDiagnosis(format!(
            "pinned entry {pin:?} = {e:e} is positive but below the positivity threshold {positivity_tol:e}"
        )));
    }
    Ok(())
}

/// Injective piece → guest map along positive entries, optionally sending
/// piece `pin.0` to guest `pin.1`. Requires balanced rows and `k` full columns.
pub fn find_positive_matching(
    x: &DemandMatrix,
    pin: Option<(usize, usize)>,
    positivity_tol: f64,
    tol_col: f64,
) -> Result<Vec<usize>> {
    x.check_lemma(x.k, tol_col)?;
    if let Some(p) = pin {
        check_pin(x, p, positivity_tol)?;
    }
    match_positive(x, pin, &[], positivity_tol)
        .ok_or_else(|| diagnose_failure(x, "positive matching", positivity_tol))
}

/// Size of the exclusion sets an `r`-hungry family can absorb.
pub fn exclusion_size(r: usize, k: usize) -> usize {
    (r.saturating_sub(k)).div_ceil(k)
}

/// Injective piece → guest map along positive entries that avoids the guests
/// in `absent`. Requires balanced rows, `r` full columns and
/// `|absent| = ceil((r - k) / k)`.
pub fn find_matching_avoiding(
    x: &DemandMatrix,
    r: usize,
    absent: &[usize],
    positivity_tol: f64,
    tol_col: f64,
) -> Result<Vec<usize>> {
    if r < x.k || r > x.n {
        return Err(Error::InvalidArgument(format!("r={r} outside {}..={}", x.k, x.n)));
    }
    let want = exclusion_size(r, x.k);
    if absent.len() != want || absent.iter().any(|&i| i >= x.n) {
        return Err(Error::InvalidArgument(format!(
            "exclusion set {absent:?} must hold {want} distinct guest indices"
        )));
    }
    x.check_lemma(r, tol_col)?;
    match_positive(x, None, absent, positivity_tol)
        .ok_or_else(|| diagnose_failure(x, &format!("matching avoiding {absent:?}"), positivity_tol))
}

/// Appends `n - k` rows so that every row and column sums to `p / k`, the
/// common row sum: the new entries of column `i` are `(p/k - s_i) / (n - k)`.
pub fn complete_to_square(x: &DemandMatrix, tol_col: f64) -> Result<Vec<Vec<f64>>> {
    x.check_lemma(x.k, tol_col)?;
    let mut out = x.rows();
    if x.n == x.k {
        return Ok(out);
    }
    let target = x.row_sum();
    let sums = x.col_sums();
    if let Some((i, s)) = sums.iter().enumerate().find(|(_, s)| **s > target + tol_col) {
        return Err(Error::HypothesisViolation(format!(
            "column {i} sums to {s}, above the row sum {target}"
        )));
    }
    let extra = (x.n - x.k) as f64;
    let row: Vec<f64> = sums.iter().map(|s| (target - s) / extra).collect();
    out.extend(std::iter::repeat_n(row, x.n - x.k));
    Ok(out)
}

/// Writes a square matrix with equal row and column sums as a positive
/// combination of permutation matrices; `perm[r]` is the column of row `r`.
pub fn birkhoff_decompose(m: &[Vec<f64>]) -> Result<Vec<(f64, Vec<usize>)>> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("birkhoff_decompose needs a non-empty square matrix".into()));
    }
    if m.iter().flatten().any(|e| !e.is_finite() || *e < ENTRY_FLOOR) {
        return Err(Error::InvalidArgument("matrix has negative or non-finite entries".into()));
    }
    let rows: Vec<f64> = m.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..n).map(|c| m.iter().map(|r| r[c]).sum()).collect();
    let target = rows[0];
    if rows.iter().chain(&cols).any(|s| (s - target).abs() > 1e-9) {
        return Err(Error::InvalidArgument("row and column sums are not all equal".into()));
    }
    let mut rest: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|e| e.max(0.0)).collect()).collect();
    let floor = 1e-13 * target.abs().max(1.0);
    let mut terms = Vec::new();
    let mut remaining = target;
    while remaining > floor {
        let adj: Vec<Vec<usize>> =
            rest.iter().map(|r| (0..n).filter(|&c| r[c] > floor).collect()).collect();
        let Some(perm) = max_matching(&adj, n).into_iter().collect::<Option<Vec<usize>>>() else {
            break;
        };
        let coef = (0..n).map(|r| rest[r][perm[r]]).fold(f64::INFINITY, f64::min);
        for (r, &c) in perm.iter().enumerate() {
            rest[r][c] -= coef;
            if rest[r][c] <= floor {
                rest[r][c] = 0.0;
            }
        }
        remaining -= coef;
        terms.push((coef, perm));
    }
    Ok(terms)
}
