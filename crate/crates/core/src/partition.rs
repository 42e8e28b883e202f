//! Exact lattice-path partition counts.
//!
//! `counts(alpha)` is the number of length-N sequences of lattice points of
//! P summing to alpha. Computed by N-fold sparse convolution of the
//! indicator vector of the lattice points of P over the bounding box of
//! `N*P`, in exact big-integer arithmetic. These counts are the expansion
//! coefficients of the N-th power of the pullback kernel in the lifted
//! monomial basis, which is why the kernels module consumes them under the
//! `power_expansion_coefficients` name.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polytope::{csv_header, LatticePointSet, LatticePolytope};

/// Default cap on the dense DP box, in cells.
pub const DEFAULT_DP_CAP: usize = 16_000_000;

/// Exact table `alpha -> count` over the lattice points of `N*P`.
#[derive(Debug, Clone)]
pub struct PartitionTable {
    dilation: u32,
    support: LatticePointSet,
    counts: Vec<BigUint>,
}

impl PartitionTable {
    pub fn dilation(&self) -> u32 {
        self.dilation
    }

    pub fn support(&self) -> &LatticePointSet {
        &self.support
    }

    /// Count for a lattice point of `N*P`; `None` if the point is outside.
    pub fn count(&self, alpha: &[i64]) -> Option<&BigUint> {
        self.support.position(alpha).map(|i| &self.counts[i])
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &BigUint)> {
        self.support
            .points()
            .iter()
            .map(|p| p.as_slice())
            .zip(self.counts.iter())
    }

    /// Sum of all counts; equals `(#P)^N` by the sum rule.
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    /// Lattice points of `N*P` with count zero, i.e. points that do not
    /// decompose as a length-N sum. Empty for Delzant P.
    pub fn zero_points(&self) -> Vec<Vec<i64>> {
        self.iter()
            .filter(|(_, c)| c.is_zero())
            .map(|(p, _)| p.to_vec())
            .collect()
    }

    /// Exact convolution of two tables (used by the semigroup tests):
    /// the result counts length-(N1+N2) sequences.
    pub fn convolve(&self, other: &PartitionTable, poly: &LatticePolytope) -> Result<Self> {
        let n = self.dilation + other.dilation;
        let support = poly.lattice_points(n)?;
        let mut counts = vec![BigUint::zero(); support.len()];
        for (a, ca) in self.iter() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in other.iter() {
                let sum: Vec<i64> = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
                let idx = support
                    .position(&sum)
                    .expect("sum of dilate points lies in the joint dilate");
                counts[idx] += ca * cb;
            }
        }
        Ok(PartitionTable {
            dilation: n,
            support,
            counts,
        })
    }

    /// CSV export: `alpha_1..alpha_m,count` with decimal count strings.
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.support.dim(), &["count"]);
        for (p, c) in self.iter() {
            for x in p {
                let _ = write!(out, "{x},");
            }
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

/// Count length-`n` sequences of lattice points of P by dense convolution.
pub fn partition_counts(poly: &LatticePolytope, n: u32) -> Result<PartitionTable> {
    partition_counts_with_cap(poly, n, DEFAULT_DP_CAP)
}

pub fn partition_counts_with_cap(
    poly: &LatticePolytope,
    n: u32,
    cap: usize,
) -> Result<PartitionTable> {
    if n == 0 {
        return Err(Error::Validation("dilation must be >= 1".into()));
    }
    let dim = poly.dim();
    let base = poly.lattice_points(1)?;
    let (lo, hi) = poly.box_bounds(n as i64);
    let sizes: Vec<usize> = (0..dim).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
    let cells: usize = sizes.iter().try_fold(1usize, |acc, &s| {
        acc.checked_mul(s)
            .filter(|&c| c <= cap)
            .ok_or_else(|| Error::Capacity(format!("DP box exceeds cap of {cap} cells")))
    })?;
    // strides for row-major flattening, last coordinate fastest
    let mut strides = vec![1usize; dim];
    for j in (0..dim.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sizes[j + 1];
    }
    let flat = |p: &[i64]| -> usize {
        (0..dim)
            .map(|j| (p[j] - lo[j]) as usize * strides[j])
            .sum()
    };
    let mut cur = vec![BigUint::zero(); cells];
    for b in base.iter() {
        cur[flat(b)] = BigUint::one();
    }
    let mut scratch = vec![0i64; dim];
    for _layer in 1..n {
        let mut next = vec![BigUint::zero(); cells];
        for (idx, c) in cur.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // decode the flat index back to coordinates once per source cell
            let mut rem = idx;
            for j in 0..dim {
                scratch[j] = (rem / strides[j]) as i64 + lo[j];
                rem %= strides[j];
            }
            for b in base.iter() {
                let mut ok = true;
                let mut target = 0usize;
                for j in 0..dim {
                    let t = scratch[j] + b[j];
                    if t < lo[j] || t > hi[j] {
                        ok = false;
                        break;
                    }
                    target += (t - lo[j]) as usize * strides[j];
                }
                if ok {
                    next[target] += c;
                }
            }
        }
        cur = next;
    }

    let support = poly.lattice_points(n)?;
    let counts = support.points().iter().map(|p| cur[flat(p)].clone()).collect();
    Ok(PartitionTable {
        dilation: n,
        support,
        counts,
    })
}

/// Lattice points of `N*P` that admit no length-N decomposition.
pub fn decomposability_check(poly: &LatticePolytope, n: u32) -> Result<Vec<Vec<i64>>> {
    Ok(partition_counts(poly, n)?.zero_points())
}

/// The counts viewed as expansion coefficients of the N-th kernel power.
///
/// Alias of [`partition_counts`]; the kernels module depends on this name so
/// that its contract reads off the expansion identity rather than the
/// combinatorial definition.
pub fn power_expansion_coefficients(poly: &LatticePolytope, n: u32) -> Result<PartitionTable> {
    partition_counts(poly, n)
}
