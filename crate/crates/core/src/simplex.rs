//! Geometry of the standard simplex and of its dilation about the centroid.
//!
//! A partition of the unit interval into `k` consecutive pieces is the vector
//! of piece lengths, i.e. a point of the standard simplex in `R^k`. Lattice
//! grids of depth `d` hold the points `m / d` for integer vectors `m` summing
//! to `d`; the extended grid additionally admits negative numerators down to
//! `-floor(d / k)`, which covers (a slightly shrunken copy of) the simplex
//! dilated by two about its centroid.

use std::sync::OnceLock;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pieceset::{PieceSet, MAX_PIECES};

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-9;

/// Barycentric piece lengths of a partition of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PartitionPoint(Vec<f64>);

impl PartitionPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("partition has non-finite coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|&&c| c < -1e-12) {
            return Err(Error::InvalidArgument(format!("partition has negative coordinate {c}")));
        }
        let s: f64 = coords.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("partition coordinates sum to {s}, not 1")));
        }
        Ok(PartitionPoint(coords.into_iter().map(|c| c.max(0.0)).collect()))
    }

    pub fn barycenter(k: usize) -> Result<Self> {
        check_dimension(k)?;
        Ok(PartitionPoint(vec![1.0 / k as f64; k]))
    }

    pub fn vertex(k: usize, j: usize) -> Result<Self> {
        check_dimension(k)?;
        if j >= k {
            return Err(Error::InvalidArgument(format!("vertex {j} out of range for k={k}")));
        }
        let mut v = vec![0.0; k];
        v[j] = 1.0;
        Ok(PartitionPoint(v))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Cut positions `x_1, x_1 + x_2, ...` (k - 1 of them).
    pub fn cuts(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.0[..self.0.len() - 1]
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for PartitionPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PartitionPoint::new(v)
    }
}

impl From<PartitionPoint> for Vec<f64> {
    fn from(p: PartitionPoint) -> Vec<f64> {
        p.0
    }
}

/// Affine-barycentric coordinates of a point of the doubled simplex: the
/// coordinates sum to one and each is at least `-1/k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedPoint(Vec<f64>);

impl ExtendedPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let k = coords.len();
        check_dimension(k)?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("point has non-finite coordinates".into()));
        }
        let s: f64 = coords.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("coordinates sum to {s}, not 1")));
        }
        let floor = -1.0 / k as f64 - SUM_TOL;
        if let Some(c) = coords.iter().find(|&&c| c < floor) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {c} lies outside the doubled simplex (minimum {})",
                -1.0 / k as f64
            )));
        }
        Ok(ExtendedPoint(coords))
    }

    /// Image of a simplex point under the dilation by two about the centroid.
    pub fn dilate(x: &PartitionPoint) -> ExtendedPoint {
        let k = x.k() as f64;
        ExtendedPoint(x.coords().iter().map(|&c| 2.0 * c - 1.0 / k).collect())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn in_simplex(&self, tol: f64) -> bool {
        self.0.iter().all(|&c| c >= -tol)
    }
}

/// A face of the simplex, named by the vertices spanning it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Face {
    support: PieceSet,
}

impl Face {
    pub fn new(support: PieceSet) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::DegeneratePoint);
        }
        Ok(Face { support })
    }

    /// The facet opposite vertex `j`.
    pub fn facet(k: usize, j: usize) -> Face {
        let mut s = PieceSet::full(k);
        s.remove(j);
        Face { support: s }
    }

    pub fn support(&self) -> PieceSet {
        self.support
    }

    pub fn contains_vertex(&self, j: usize) -> bool {
        self.support.contains(j)
    }
}

fn check_dimension(k: usize) -> Result<()> {
    if k == 0 || k > MAX_PIECES {
        return Err(Error::InvalidArgument(format!(
            "piece count must be in 1..={MAX_PIECES}, got {k}"
        )));
    }
    Ok(())
}

/// Smallest face containing `x`: the coordinates above `zero_tol`.
pub fn minimal_face(x: &[f64], zero_tol: f64) -> Result<Face> {
    let support: PieceSet = x
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > zero_tol)
        .map(|(j, _)| j)
        .collect();
    Face::new(support)
}

/// Euclidean nearest point of the simplex to `z`, by sort-and-threshold.
pub fn project_to_simplex(z: &ExtendedPoint, zero_tol: f64) -> Result<(PartitionPoint, Face)> {
    project_hyperplane_point(z.coords(), zero_tol)
}

/// Same as [`project_to_simplex`] for any point of the hyperplane `sum = 1`,
/// including points beyond the doubled simplex.
pub fn project_hyperplane_point(z: &[f64], zero_tol: f64) -> Result<(PartitionPoint, Face)> {
    check_dimension(z.len())?;
    let s: f64 = z.iter().sum();
    if !s.is_finite() || (s - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidArgument(format!("coordinates sum to {s}, not 1")));
    }
    let p = PartitionPoint::new(project_coords(z))?;
    let face = minimal_face(p.coords(), zero_tol)?;
    Ok((p, face))
}

pub(crate) fn project_coords(z: &[f64]) -> Vec<f64> {
    if z.iter().all(|&c| c >= 0.0) {
        return z.to_vec();
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut lambda = 0.0;
    for (r, &u) in sorted.iter().enumerate() {
        cum += u;
        let candidate = (cum - 1.0) / (r + 1) as f64;
        if u - candidate > 0.0 {
            lambda = candidate;
        }
    }
    let mut p: Vec<f64> = z.iter().map(|&c| (c - lambda).max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|c| *c /= s);
    }
    p
}

/// Continues the ray from `x0` through `z` until it meets the boundary of the
/// doubled simplex.
pub fn radial_boundary_point(x0: &PartitionPoint, z: &ExtendedPoint) -> Result<ExtendedPoint> {
    let k = z.k();
    if x0.k() != k {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    if z.in_simplex(1e-12) {
        return Err(Error::NoRay(z.coords().to_vec()));
    }
    let floor = -1.0 / k as f64;
    let dir: Vec<f64> = z.coords().iter().zip(x0.coords()).map(|(a, b)| a - b).collect();
    let mut t = f64::INFINITY;
    let mut hit = 0;
    for (j, &d) in dir.iter().enumerate() {
        if d < 0.0 {
            let tj = (floor - x0.coords()[j]) / d;
            if tj < t {
                t = tj;
                hit = j;
            }
        }
    }
    if !t.is_finite() || t < 1.0 - 1e-9 {
        return Err(Error::InvalidArgument(
            "ray does not leave the doubled simplex beyond z".into(),
        ));
    }
    let t = t.max(1.0);
    let mut out: Vec<f64> = x0.coords().iter().zip(&dir).map(|(a, d)| a + t * d).collect();
    out[hit] = floor;
    ExtendedPoint::new(out)
}

/// A full-dimensional cell of the Freudenthal triangulation of a grid,
/// given by its `k` vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub vertices: Vec<usize>,
}

/// Lattice points `m / depth` with `sum(m) = depth` and every `m_j >= lower`.
#[derive(Debug)]
pub struct SimplexGrid {
    k: usize,
    depth: u32,
    lower: i64,
    shifted_sum: usize,
    // compositions[r][s]: number of ways to write s as an ordered sum of r
    // non-negative parts
    compositions: Vec<Vec<u64>>,
    numerators: Vec<i64>,
    adjacency: OnceLock<(Vec<usize>, Vec<u32>)>,
}

/// Grid on the standard simplex.
pub fn lattice_points(k: usize, depth: u32) -> Result<SimplexGrid> {
    SimplexGrid::new(k, depth, 0)
}

/// Grid on the doubled simplex: numerators bounded below by `-floor(depth/k)`.
/// Exactly the doubled simplex when `k` divides `depth`.
pub fn extended_grid(k: usize, depth: u32) -> Result<SimplexGrid> {
    check_dimension(k)?;
    if (depth as usize) < k {
        return Err(Error::InvalidArgument(format!(
            "extended grid needs depth >= k (depth={depth}, k={k})"
        )));
    }
    SimplexGrid::new(k, depth, -((depth as usize / k) as i64))
}

impl SimplexGrid {
    pub fn new(k: usize, depth: u32, lower: i64) -> Result<Self> {
        check_dimension(k)?;
        if depth == 0 {
            return Err(Error::InvalidArgument("grid depth must be positive".into()));
        }
        if lower > 0 {
            return Err(Error::InvalidArgument("lower numerator bound must be <= 0".into()));
        }
        let shifted = depth as i64 - k as i64 * lower;
        let shifted_sum = shifted as usize;
        let mut compositions = vec![vec![0u64; shifted_sum + 1]; k + 1];
        compositions[0][0] = 1;
        for r in 1..=k {
            let mut acc = 0u64;
            compositions[r] = compositions[r - 1]
                .iter()
                .map(|&c| {
                    acc = acc.saturating_add(c);
                    acc
                })
                .collect();
        }
        let count = compositions[k][shifted_sum];
        if count > 50_000_000 {
            return Err(Error::InvalidArgument(format!("grid with {count} points is too large")));
        }
        let mut numerators = Vec::with_capacity(count as usize * k);
        let mut current = vec![0i64; k];
        enumerate_lex(&mut current, 0, shifted_sum, &mut numerators);
        for v in numerators.iter_mut() {
            *v += lower;
        }
        Ok(SimplexGrid {
            k,
            depth,
            lower,
            shifted_sum,
            compositions,
            numerators,
            adjacency: OnceLock::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn lower(&self) -> i64 {
        self.lower
    }

    pub fn is_extended(&self) -> bool {
        self.lower < 0
    }

    pub fn len(&self) -> usize {
        self.numerators.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn numerators(&self, idx: usize) -> &[i64] {
        &self.numerators[idx * self.k..(idx + 1) * self.k]
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let d = self.depth as f64;
        self.numerators(idx).iter().map(|&m| m as f64 / d).collect()
    }

    /// Whether the point lies in the standard simplex (all numerators >= 0).
    pub fn in_base_simplex(&self, idx: usize) -> bool {
        self.numerators(idx).iter().all(|&m| m >= 0)
    }

    /// Whether the point lies on the facet of the grid's domain opposite `j`.
    pub fn on_domain_facet(&self, idx: usize, j: usize) -> bool {
        self.numerators(idx)[j] == self.lower
    }

    pub fn on_domain_boundary(&self, idx: usize) -> bool {
        self.numerators(idx).contains(&self.lower)
    }

    /// Index of the lattice point with the given numerators, if it belongs to the grid.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        if m.len() != self.k
            || m.iter().any(|&v| v < self.lower)
            || m.iter().sum::<i64>() != self.depth as i64
        {
            return None;
        }
        let mut rank = 0u64;
        let mut rem = self.shifted_sum;
        for (pos, &v) in m[..self.k - 1].iter().enumerate() {
            let a = (v - self.lower) as usize;
            let parts_after = self.k - pos - 1;
            // lex-smaller vectors put 0..a at this position; compositions[p + 1]
            // is the running sum of compositions[p]
            let cum = &self.compositions[parts_after + 1];
            rank += cum[rem] - cum[rem - a];
            rem -= a;
        }
        Some(rank as usize)
    }

    /// Index of the lattice point equal to `x` (within 1e-9 per numerator).
    pub fn index_of_point(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.k {
            return None;
        }
        let d = self.depth as f64;
        let mut m = Vec::with_capacity(self.k);
        for &c in x {
            let v = c * d;
            let r = v.round();
            if (v - r).abs() > 1e-6 {
                return None;
            }
            m.push(r as i64);
        }
        self.index_of(&m)
    }

    /// Lattice neighbours: move one unit of numerator between two coordinates.
    pub fn neighbors(&self, idx: usize) -> &[u32] {
        let (offsets, flat) = self.adjacency.get_or_init(|| self.build_adjacency());
        &flat[offsets[idx]..offsets[idx + 1]]
    }

    fn build_adjacency(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut flat = Vec::with_capacity(n * self.k * (self.k - 1).max(1));
        let mut buf = vec![0i64; self.k];
        offsets.push(0);
        for idx in 0..n {
            buf.copy_from_slice(self.numerators(idx));
            for a in 0..self.k {
                for b in 0..self.k {
                    if a == b || buf[b] - 1 < self.lower {
                        continue;
                    }
                    buf[a] += 1;
                    buf[b] -= 1;
                    if let Some(nb) = self.index_of(&buf) {
                        flat.push(nb as u32);
                    }
                    buf[a] -= 1;
                    buf[b] += 1;
                }
            }
            offsets.push(flat.len());
        }
        (offsets, flat)
    }

    /// Cut coordinates (cumulative shifted numerators, `k - 1` of them).
    fn cuts_of(&self, idx: usize) -> Vec<i64> {
        let mut acc = 0;
        self.numerators(idx)[..self.k - 1]
            .iter()
            .map(|&m| {
                acc += m - self.lower;
                acc
            })
            .collect()
    }

    fn index_from_cuts(&self, cuts: &[i64]) -> Option<usize> {
        let mut m = Vec::with_capacity(self.k);
        let mut prev = 0;
        for &c in cuts {
            m.push(c - prev + self.lower);
            prev = c;
        }
        m.push(self.shifted_sum as i64 - prev + self.lower);
        self.index_of(&m)
    }

    fn cell_from(&self, base: &[i64], perm: &[usize]) -> Option<Cell> {
        let mut cur = base.to_vec();
        let mut vertices = Vec::with_capacity(self.k);
        vertices.push(self.index_from_cuts(&cur)?);
        for &p in perm {
            cur[p] += 1;
            vertices.push(self.index_from_cuts(&cur)?);
        }
        Some(Cell { vertices })
    }

    /// All cells of the Freudenthal triangulation (in cut coordinates) of the domain.
    pub fn cells(&self) -> Vec<Cell> {
        if self.k == 1 {
            return vec![Cell { vertices: vec![0] }];
        }
        let perms: Vec<Vec<usize>> = (0..self.k - 1).permutations(self.k - 1).collect();
        let mut out = Vec::new();
        for idx in 0..self.len() {
            let base = self.cuts_of(idx);
            for p in &perms {
                if let Some(c) = self.cell_from(&base, p) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Cells having `idx` as a vertex.
    pub fn cells_around(&self, idx: usize) -> Vec<Cell> {
        if self.k == 1 {
            return vec![Cell { vertices: vec![0] }];
        }
        let dim = self.k - 1;
        let perms: Vec<Vec<usize>> = (0..dim).permutations(dim).collect();
        let v = self.cuts_of(idx);
        let mut out = Vec::new();
        for mask in 0u32..(1 << dim) {
            let base: Vec<i64> = v
                .iter()
                .enumerate()
                .map(|(i, &c)| c - ((mask >> i) & 1) as i64)
                .collect();
            for p in &perms {
                // the vertex is reached after stepping through exactly the masked axes
                let steps = mask.count_ones() as usize;
                if p[..steps].iter().any(|&a| (mask >> a) & 1 == 0) {
                    continue;
                }
                if let Some(c) = self.cell_from(&base, p) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Carrier of `x`: the vertices of the smallest triangulation face that
    /// contains it, with their (positive) barycentric weights.
    pub fn locate(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        if x.len() != self.k {
            return None;
        }
        if self.k == 1 {
            return Some(vec![(0, 1.0)]);
        }
        let d = self.depth as f64;
        let mut cuts = Vec::with_capacity(self.k - 1);
        let mut acc = 0.0;
        for &c in &x[..self.k - 1] {
            acc += c * d - self.lower as f64;
            let snapped = if (acc - acc.round()).abs() < 1e-9 { acc.round() } else { acc };
            cuts.push(snapped);
        }
        let base: Vec<i64> = cuts.iter().map(|c| c.floor() as i64).collect();
        let frac: Vec<f64> = cuts.iter().zip(&base).map(|(c, &b)| c - b as f64).collect();
        let mut order: Vec<usize> = (0..self.k - 1).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
        let mut weights = Vec::with_capacity(self.k);
        weights.push(1.0 - frac[order[0]]);
        for s in 1..self.k - 1 {
            weights.push(frac[order[s - 1]] - frac[order[s]]);
        }
        weights.push(frac[order[self.k - 2]]);

        let mut cur = base.clone();
        let mut out = Vec::with_capacity(self.k);
        for (s, &w) in weights.iter().enumerate() {
            if s > 0 {
                cur[order[s - 1]] += 1;
            }
            if w > 1e-12 {
                out.push((self.index_from_cuts(&cur)?, w));
            }
        }
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        out.iter_mut().for_each(|(_, w)| *w /= total);
        Some(out)
    }
}

fn enumerate_lex(current: &mut Vec<i64>, pos: usize, rem: usize, out: &mut Vec<i64>) {
    let k = current.len();
    if pos == k - 1 {
        current[pos] = rem as i64;
        out.extend_from_slice(current);
        return;
    }
    for v in 0..=rem {
        current[pos] = v as i64;
        enumerate_lex(current, pos + 1, rem - v, out);
    }
}
