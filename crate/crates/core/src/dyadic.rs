//! Dyadic grids on [-1, 1), discrete measures on them and the norms used for estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pos, Scalar};

/// Largest scale accepted by [`DyadicGrid::new`].
pub const MAX_SCALE: u32 = 20;

/// The points `i / 2^K` for `-2^K <= i < 2^K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    k: u32,
}

impl DyadicGrid {
    pub fn new(k: u32) -> Result<Self> {
        Self::with_cap(k, 1usize << (MAX_SCALE + 1))
    }

    /// Grid at scale `k`, refusing if the dimension `2^(k+1)` exceeds `cap`.
    pub fn with_cap(k: u32, cap: usize) -> Result<Self> {
        if k > MAX_SCALE || (1usize << (k + 1)) > cap {
            return Err(Error::ScaleTooLarge { k, cap });
        }
        Ok(Self { k })
    }

    pub fn scale(&self) -> u32 {
        self.k
    }

    /// Number of points `d = 2^(K+1)`.
    pub fn len(&self) -> usize {
        1usize << (self.k + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing `2^-K` between consecutive points.
    pub fn spacing<T: Scalar>(&self) -> T {
        T::one() / T::from_usize_exact(1usize << self.k)
    }

    /// The `idx`-th point in increasing order.
    pub fn point<T: Scalar>(&self, idx: usize) -> T {
        let half = 1i64 << self.k;
        let i = idx as i64 - half;
        T::from_i64(i).unwrap() / T::from_i64(half).unwrap()
    }

    pub fn points<T: Scalar>(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Bin `[k, k + 2^-K)` containing `x`, with the last bin closed at 1.
    pub fn bin_of<T: Scalar>(&self, x: T) -> usize {
        let half = T::from_usize_exact(1usize << self.k);
        let raw = ((x + T::one()) * half).floor();
        let idx = raw.to_i64().unwrap_or(0).max(0) as usize;
        idx.min(self.len() - 1)
    }
}

/// A finite non-negative measure made of atoms and piecewise-constant densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MeasureSpec<T: Scalar> {
    /// `(location, weight)` pairs.
    #[serde(default)]
    pub atoms: Vec<(T, T)>,
    /// `(a, b, value)`: constant density `value` on `[a, b]`.
    #[serde(default)]
    pub density: Vec<(T, T, T)>,
}

impl<T: Scalar> Default for MeasureSpec<T> {
    fn default() -> Self {
        Self {
            atoms: Vec::new(),
            density: Vec::new(),
        }
    }
}

impl<T: Scalar> MeasureSpec<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(location: T, weight: T) -> Self {
        Self {
            atoms: vec![(location, weight)],
            density: Vec::new(),
        }
    }

    /// Constant density on `[a, b]`.
    pub fn uniform(a: T, b: T, value: T) -> Self {
        Self {
            atoms: Vec::new(),
            density: vec![(a, b, value)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= -T::one() && x <= T::one();
        for &(loc, w) in &self.atoms {
            if !unit(loc) {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {loc} outside [-1, 1]"
                )));
            }
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {w} is not a finite non-negative number"
                )));
            }
        }
        for &(a, b, v) in &self.density {
            if !unit(a) || !unit(b) || !(a < b) {
                return Err(Error::InvalidMeasure(format!(
                    "density piece [{a}, {b}] is not an interval in [-1, 1]"
                )));
            }
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "density value {v} is not a finite non-negative number"
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> T {
        let atoms: T = self.atoms.iter().map(|&(_, w)| w).sum();
        let dens: T = self.density.iter().map(|&(a, b, v)| (b - a) * v).sum();
        atoms + dens
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == T::zero()
    }
}

/// Weight vector `x` on a grid, standing for `d^-1 Σ x_k δ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DiscreteMeasure<T: Scalar> {
    grid: DyadicGrid,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(grid: DyadicGrid, weights: Vec<T>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        if let Some((index, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= T::zero()))
        {
            return Err(Error::NegativeEntry {
                index,
                value: w.to_f64_lossy(),
            });
        }
        Ok(Self { grid, weights })
    }

    pub fn zeros(grid: DyadicGrid) -> Self {
        Self {
            grid,
            weights: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }

    pub fn total_mass(&self) -> T {
        norm_l1(&self.weights)
    }

    /// Atoms `(location, mass)` of the represented measure, zero weights skipped.
    pub fn atoms(&self) -> Vec<(T, T)> {
        let d = T::from_usize_exact(self.grid.len());
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(|(k, &w)| (self.grid.point(k), w / d))
            .collect()
    }

    /// The represented measure as a [`MeasureSpec`].
    pub fn to_spec(&self) -> MeasureSpec<T> {
        MeasureSpec {
            atoms: self.atoms(),
            density: Vec::new(),
        }
    }

    /// CSV rows `k,weight` with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,weight\n");
        for (k, w) in self.weights.iter().enumerate() {
            s.push_str(&format!("{k},{:.16e}\n", w.to_f64_lossy()));
        }
        s
    }
}

/// Projects `spec` onto the grid at scale `k`: `x_k = d · μ[k, k + 2^-K)`, last bin closed.
pub fn project_measure<T: Scalar>(
    spec: &MeasureSpec<T>,
    grid: DyadicGrid,
) -> Result<DiscreteMeasure<T>> {
    spec.validate()?;
    let d = grid.len();
    let dt = T::from_usize_exact(d);
    let h = grid.spacing::<T>();
    let mut mass = vec![T::zero(); d];
    for &(loc, w) in &spec.atoms {
        mass[grid.bin_of(loc)] += w;
    }
    for &(a, b, v) in &spec.density {
        let first = grid.bin_of(a);
        let last = grid.bin_of(b);
        for (k, m) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
            let lo = grid.point::<T>(k);
            let hi = lo + h;
            let overlap = b.min(hi) - a.max(lo);
            if overlap > T::zero() {
                *m += overlap * v;
            }
        }
    }
    let weights = mass.into_iter().map(|m| m * dt).collect();
    DiscreteMeasure::new(grid, weights)
}

fn check_scales(len: usize, from: u32, to: u32, finer_expected: bool) -> Result<()> {
    let ok = if finer_expected { to > from } else { to < from };
    if !ok {
        return Err(Error::ScaleOrder { from, to });
    }
    let expected = 1usize << (from + 1);
    if len != expected {
        return Err(Error::DimensionMismatch { expected, got: len });
    }
    Ok(())
}

/// Block repetition from scale `k` to the finer scale `k_to`.
pub fn lift<T: Scalar>(x: &[T], k: u32, k_to: u32) -> Result<Vec<T>> {
    check_scales(x.len(), k, k_to, true)?;
    let r = 1usize << (k_to - k);
    Ok(x.iter()
        .flat_map(|&v| std::iter::repeat_n(v, r))
        .collect())
}

/// Block average from scale `k` to the coarser scale `k_to`.
///
/// Done as repeated pairwise halving so that constant blocks are reproduced bit-exactly.
pub fn coarsen<T: Scalar>(x: &[T], k: u32, k_to: u32) -> Result<Vec<T>> {
    check_scales(x.len(), k, k_to, false)?;
    let half = T::c(0.5);
    let mut cur = x.to_vec();
    for _ in k_to..k {
        cur = cur.chunks_exact(2).map(|p| (p[0] + p[1]) * half).collect();
    }
    Ok(cur)
}

/// Normalized ℓ¹ norm `d^-1 Σ |x_k|`.
pub fn norm_l1<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let s: T = x.iter().map(|v| v.abs()).sum();
    s / T::from_usize_exact(x.len())
}

/// Dual norm `d · max |y_k|`.
pub fn norm_l1_star<T: Scalar>(y: &[T]) -> T {
    let m = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    m * T::from_usize_exact(y.len())
}

fn same_grid<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<()> {
    if mu.grid != nu.grid {
        return Err(Error::GridMismatch(mu.grid.scale(), nu.grid.scale()));
    }
    Ok(())
}

/// Total variation distance between two discrete measures on one grid.
pub fn tv_distance<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<T> {
    same_grid(mu, nu)?;
    let (mut p, mut n) = (T::zero(), T::zero());
    for (&a, &b) in mu.weights.iter().zip(&nu.weights) {
        p += pos(a - b);
        n += pos(b - a);
    }
    Ok(p.max(n) / T::from_usize_exact(mu.grid.len()))
}

/// One-dimensional Wasserstein distance between equal-mass discrete measures.
pub fn wasserstein<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<T> {
    same_grid(mu, nu)?;
    let (ma, mb) = (mu.total_mass(), nu.total_mass());
    if (ma - mb).abs() > T::c(1e-12) {
        return Err(Error::MassMismatch(ma.to_f64_lossy(), mb.to_f64_lossy()));
    }
    let d = T::from_usize_exact(mu.grid.len());
    let h = mu.grid.spacing::<T>();
    let mut diff = T::zero();
    let mut total = T::zero();
    let n = mu.grid.len();
    for k in 0..n - 1 {
        diff += (mu.weights[k] - nu.weights[k]) / d;
        total += diff.abs() * h;
    }
    Ok(total)
}
