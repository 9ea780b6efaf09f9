use serde::{Deserialize, Serialize};

use super::guest::GuestSpec;
use crate::error::{Error, Result};
use crate::pieceset::{PieceSet, MAX_PIECES};
use crate::simplex::{project_coords, ExtendedPoint};

/// Anything that can say which pieces guest `i` prefers at a point.
///
/// Points are coordinate vectors summing to one; only extended oracles accept
/// points outside the standard simplex. `slack` loosens every tolerance of the
/// underlying model and must act monotonically.
pub trait PreferenceOracle: Sync {
    fn k(&self) -> usize;
    fn guest_count(&self) -> usize;
    fn preferred(&self, guest: usize, x: &[f64], slack: f64) -> Result<PieceSet>;

    /// Preferences of every guest at `x`.
    fn preferred_all(&self, x: &[f64], slack: f64) -> Result<Vec<PieceSet>> {
        (0..self.guest_count()).map(|i| self.preferred(i, x, slack)).collect()
    }
}

/// `n` guests sharing a cake cut into `k` pieces, declared `alpha`-hungry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreferenceFamily {
    k: usize,
    guests: Vec<GuestSpec>,
    alpha: usize,
}

impl PreferenceFamily {
    pub fn new(k: usize, guests: Vec<GuestSpec>, alpha: usize) -> Result<Self> {
        let n = guests.len();
        if k == 0 || k > MAX_PIECES {
            return Err(Error::InvalidArgument(format!("piece count {k} outside 1..={MAX_PIECES}")));
        }
        if n < k {
            return Err(Error::InvalidArgument(format!("{n} guests cannot share {k} pieces")));
        }
        if alpha == 0 || alpha > n {
            return Err(Error::InvalidArgument(format!("alpha={alpha} outside 1..={n}")));
        }
        for (i, g) in guests.iter().enumerate() {
            g.validate(k)
                .map_err(|e| Error::InvalidArgument(format!("guest {i}: {e}")))?;
        }
        Ok(PreferenceFamily { k, guests, alpha })
    }

    /// Family declared `k`-hungry, the level envy-free division needs.
    pub fn hungry(k: usize, guests: Vec<GuestSpec>) -> Result<Self> {
        PreferenceFamily::new(k, guests, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.guests.len()
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn guests(&self) -> &[GuestSpec] {
        &self.guests
    }

    pub fn guest(&self, i: usize) -> &GuestSpec {
        &self.guests[i]
    }

    pub fn with_alpha(&self, alpha: usize) -> Result<Self> {
        PreferenceFamily::new(self.k, self.guests.clone(), alpha)
    }

    /// Same family with the tie tolerance of every guest replaced.
    pub fn with_tie_tol(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.guests.iter_mut().for_each(|g| g.set_tie_tol(tol));
        out
    }
}

impl PreferenceOracle for PreferenceFamily {
    fn k(&self) -> usize {
        self.k
    }

    fn guest_count(&self) -> usize {
        self.guests.len()
    }

    fn preferred(&self, guest: usize, x: &[f64], slack: f64) -> Result<PieceSet> {
        self.guests[guest].preferred_with_slack(x, slack)
    }
}

/// Extension of a family from the simplex to its doubled copy: outside the
/// simplex a guest prefers piece `j` iff they prefer it at the nearest point
/// `p` of the simplex and `j` lies in the support of `p`. The extension avoids
/// every facet of the doubled simplex.
pub struct ExtendedCover<'a, O: ?Sized> {
    inner: &'a O,
    zero_tol: f64,
}

impl<'a, O: PreferenceOracle + ?Sized> ExtendedCover<'a, O> {
    pub fn new(inner: &'a O, zero_tol: f64) -> Self {
        ExtendedCover { inner, zero_tol }
    }
}

impl<O: PreferenceOracle + ?Sized> PreferenceOracle for ExtendedCover<'_, O> {
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn guest_count(&self) -> usize {
        self.inner.guest_count()
    }

    fn preferred(&self, guest: usize, z: &[f64], slack: f64) -> Result<PieceSet> {
        if z.iter().all(|&c| c >= 0.0) {
            return self.inner.preferred(guest, z, slack);
        }
        let p = project_coords(z);
        let support: PieceSet = (0..p.len()).filter(|&j| p[j] > self.zero_tol).collect();
        Ok(self.inner.preferred(guest, &p, slack)?.intersection(support))
    }
}

/// Membership of `z` in the extension of guest `i`'s set for piece `j`.
pub fn extend_cover(
    family: &impl PreferenceOracle,
    z: &ExtendedPoint,
    i: usize,
    j: usize,
    zero_tol: f64,
) -> Result<bool> {
    if z.k() != family.k() || i >= family.guest_count() || j >= family.k() {
        return Err(Error::InvalidArgument("extend_cover index out of range".into()));
    }
    Ok(ExtendedCover::new(family, zero_tol).preferred(i, z.coords(), 0.0)?.contains(j))
}

/// Cyclic relabelling used for rent division: shifted piece `j` stands for
/// original piece `(j + 1) % k`.
pub struct CyclicShift<'a, O: ?Sized> {
    inner: &'a O,
}

impl<'a, O: PreferenceOracle + ?Sized> CyclicShift<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        CyclicShift { inner }
    }

    /// Original piece behind shifted piece `j`.
    pub fn unshift(&self, j: usize) -> usize {
        (j + 1) % self.inner.k()
    }
}

impl<O: PreferenceOracle + ?Sized> PreferenceOracle for CyclicShift<'_, O> {
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn guest_count(&self) -> usize {
        self.inner.guest_count()
    }

    fn preferred(&self, guest: usize, x: &[f64], slack: f64) -> Result<PieceSet> {
        Ok(self.inner.preferred(guest, x, slack)?.rotate_down(1, self.k()))
    }
}

/// Restriction of a family to a subset of its guests, in the given order.
pub struct GuestSubset<'a, O: ?Sized> {
    inner: &'a O,
    guests: Vec<usize>,
}

impl<'a, O: PreferenceOracle + ?Sized> GuestSubset<'a, O> {
    pub fn new(inner: &'a O, guests: Vec<usize>) -> Self {
        GuestSubset { inner, guests }
    }
}

impl<O: PreferenceOracle + ?Sized> PreferenceOracle for GuestSubset<'_, O> {
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn guest_count(&self) -> usize {
        self.guests.len()
    }

    fn preferred(&self, guest: usize, x: &[f64], slack: f64) -> Result<PieceSet> {
        self.inner.preferred(self.guests[guest], x, slack)
    }
}
