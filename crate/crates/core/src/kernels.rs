//! Szego kernels, the diagonal Fourier multiplier, and the exact
//! factorization check.
//!
//! Two routes to the same kernel are compared at random orbit points:
//!
//! - the direct spectral sum over monomials weighted by `1 / Q_N(alpha)`,
//! - the N-th power of the pulled-back rank-one kernel, expanded in the
//!   monomial basis through the partition table and rescaled by the
//!   multiplier eigenvalues `1 / (P_N Q_N)`.
//!
//! The two paths share the norm table but route the combinatorics
//! differently, so their residual isolates the expansion counts and
//! floating error. All kernel sums are evaluated with a common exponent
//! shift so large dilations stay inside f64 range.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{KahlerPotential, OrbitPoint};
use crate::norming::{norm_table, NormTable, QuadratureConfig};
use crate::partition::{partition_counts, PartitionTable};
use crate::polytope::{LatticePointSet, LatticePolytope};

/// Eigenvalues `1 / (P_N(alpha) Q_N(alpha))` of the Fourier multiplier,
/// defined on the lattice points with a positive partition count.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    dilation: u32,
    support: LatticePointSet,
    entries: Vec<Option<MultiplierEntry>>,
    excluded: Vec<Vec<i64>>,
}

#[derive(Debug, Clone)]
pub struct MultiplierEntry {
    pub eigenvalue: f64,
    /// Exact value when the norm table came from the rational fast path.
    pub exact: Option<BigRational>,
}

impl MultiplierTable {
    pub fn dilation(&self) -> u32 {
        self.dilation
    }

    pub fn support(&self) -> &LatticePointSet {
        &self.support
    }

    pub fn entries(&self) -> &[Option<MultiplierEntry>] {
        &self.entries
    }

    pub fn eigenvalue(&self, alpha: &[i64]) -> Option<f64> {
        self.support
            .position(alpha)
            .and_then(|i| self.entries[i].as_ref())
            .map(|e| e.eigenvalue)
    }

    /// Points of `N*P` with partition count zero (no multiplier eigenvalue).
    pub fn excluded(&self) -> &[Vec<i64>] {
        &self.excluded
    }
}

/// Entrywise `1 / (P * Q)`, with the count converted to float last.
pub fn multiplier_table(
    partition: &PartitionTable,
    norms: &NormTable,
) -> Result<MultiplierTable> {
    if partition.dilation() != norms.dilation() {
        return Err(Error::Validation(format!(
            "partition table is at N={}, norm table at N={}",
            partition.dilation(),
            norms.dilation()
        )));
    }
    if partition.support().points() != norms.support().points() {
        return Err(Error::Validation(
            "partition and norm tables have different supports".into(),
        ));
    }
    let mut entries = Vec::with_capacity(norms.support().len());
    let mut excluded = Vec::new();
    for ((alpha, count), (_, norm)) in partition.iter().zip(norms.iter()) {
        if count.is_zero() {
            excluded.push(alpha.to_vec());
            entries.push(None);
            continue;
        }
        let count_f = count.to_f64().ok_or_else(|| {
            Error::Numeric(format!("partition count at {alpha:?} exceeds f64 range"))
        })?;
        let eigenvalue = 1.0 / (count_f * norm.value);
        let exact = norm.exact.as_ref().map(|q| {
            let p = BigRational::from(num_bigint::BigInt::from(count.clone()));
            (p * q).recip()
        });
        entries.push(Some(MultiplierEntry { eigenvalue, exact }));
    }
    Ok(MultiplierTable {
        dilation: norms.dilation(),
        support: norms.support().clone(),
        entries,
        excluded,
    })
}

/// Pullback of the rank-one projective kernel under the monomial embedding:
/// the weighted lifted-monomial pairing between two orbit points. Modulus
/// is at most one, with equality on the diagonal up to fiber phase.
pub fn pullback_base(pot: &KahlerPotential, x: &OrbitPoint, y: &OrbitPoint) -> Complex64 {
    let m = pot.dim();
    debug_assert!(x.rho.len() == m && y.rho.len() == m, "orbit point dimension");
    let rho_mid: Vec<f64> = (0..m).map(|j| 0.5 * (x.rho[j] + y.rho[j])).collect();
    let dphi: Vec<f64> = (0..m).map(|j| x.phi[j] - y.phi[j]).collect();
    let mut log_terms = Vec::with_capacity(pot.points().len());
    for beta in pot.points() {
        let lw2 = 2.0 * pot.polytope().weight(beta).ln();
        let e: f64 = beta
            .iter()
            .zip(&rho_mid)
            .map(|(&b, &r)| b as f64 * r)
            .sum();
        log_terms.push(lw2 + e);
    }
    let shift = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = Complex64::zero();
    for (beta, lt) in pot.points().iter().zip(&log_terms) {
        let phase: f64 = beta.iter().zip(&dphi).map(|(&b, &p)| b as f64 * p).sum();
        s += Complex64::from_polar((lt - shift).exp(), phase);
    }
    let log_scale = shift - 0.5 * (pot.value(&x.rho) + pot.value(&y.rho));
    s * Complex64::from_polar(log_scale.exp(), x.theta - y.theta)
}

/// N-th power of [`pullback_base`], evaluated in polar form.
pub fn pullback_kernel_n(
    pot: &KahlerPotential,
    n: u32,
    x: &OrbitPoint,
    y: &OrbitPoint,
) -> Complex64 {
    let base = pullback_base(pot, x, y);
    let (r, arg) = base.to_polar();
    Complex64::from_polar(r.powi(n as i32), n as f64 * arg)
}

/// Stable weighted sum of level-N section pairings:
/// `sum_k coeff[k] chi_k(x) conj(chi_k(y))`.
///
/// Coefficients enter linearly; identical coefficient arrays therefore give
/// bitwise identical sums, which the factorization residual relies on.
fn section_pair_sum(
    pot: &KahlerPotential,
    n: u32,
    support: &[Vec<i64>],
    coeff: &[f64],
    x: &OrbitPoint,
    y: &OrbitPoint,
) -> Complex64 {
    let m = pot.dim();
    debug_assert!(x.rho.len() == m && y.rho.len() == m, "orbit point dimension");
    let rho_mid: Vec<f64> = (0..m).map(|j| 0.5 * (x.rho[j] + y.rho[j])).collect();
    let dphi: Vec<f64> = (0..m).map(|j| x.phi[j] - y.phi[j]).collect();
    let mut log_terms = Vec::with_capacity(support.len());
    for (alpha, &c) in support.iter().zip(coeff) {
        if c > 0.0 {
            let e: f64 = alpha
                .iter()
                .zip(&rho_mid)
                .map(|(&a, &r)| a as f64 * r)
                .sum();
            log_terms.push(c.ln() + e);
        } else {
            log_terms.push(f64::NEG_INFINITY);
        }
    }
    let shift = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Complex64::zero();
    }
    let mut s = Complex64::zero();
    for (alpha, lt) in support.iter().zip(&log_terms) {
        if *lt == f64::NEG_INFINITY {
            continue;
        }
        let phase: f64 = alpha.iter().zip(&dphi).map(|(&a, &p)| a as f64 * p).sum();
        s += Complex64::from_polar((lt - shift).exp(), phase);
    }
    let log_scale = shift - 0.5 * n as f64 * (pot.value(&x.rho) + pot.value(&y.rho));
    s * Complex64::from_polar(log_scale.exp(), n as f64 * (x.theta - y.theta))
}

/// Reciprocal norm coefficients, routed through the exact rationals when
/// the table carries them so that algebraically equal coefficient products
/// collapse to the same floats.
fn reciprocal_norm_coeffs(norms: &NormTable) -> Vec<f64> {
    norms
        .entries()
        .iter()
        .map(|e| match &e.exact {
            Some(q) => q.recip().to_f64().unwrap_or(1.0 / e.value),
            None => 1.0 / e.value,
        })
        .collect()
}

/// Direct spectral sum for the Szego kernel: monomial pairings weighted by
/// the reciprocal norms.
pub fn szego_kernel(
    pot: &KahlerPotential,
    norms: &NormTable,
    x: &OrbitPoint,
    y: &OrbitPoint,
) -> Complex64 {
    let coeff = reciprocal_norm_coeffs(norms);
    section_pair_sum(
        pot,
        norms.dilation(),
        norms.support().points(),
        &coeff,
        x,
        y,
    )
}

/// Closed-form Szego kernel of projective m-space at level N, pulled back
/// to the sphere coordinates of two orbit points:
/// `((N+m)!/N!) <iota(x), conj(iota(y))>^N`. Reference oracle for the
/// standard simplex with unit weights.
pub fn projective_szego(m: usize, n: u32, x: &OrbitPoint, y: &OrbitPoint) -> Complex64 {
    let mut inner = Complex64::new(1.0, 0.0); // the constant monomial
    for j in 0..m {
        inner += Complex64::from_polar(
            (0.5 * (x.rho[j] + y.rho[j])).exp(),
            x.phi[j] - y.phi[j],
        );
    }
    let norm_x = 1.0 + x.rho.iter().map(|&r| r.exp()).sum::<f64>();
    let norm_y = 1.0 + y.rho.iter().map(|&r| r.exp()).sum::<f64>();
    let base = inner / (norm_x * norm_y).sqrt() * Complex64::from_polar(1.0, x.theta - y.theta);
    let (r, arg) = base.to_polar();
    let mut prefactor = 1.0; // (N+m)!/N! = (N+1)...(N+m)
    for k in 1..=m as u32 {
        prefactor *= (n + k) as f64;
    }
    Complex64::from_polar(prefactor * r.powi(n as i32), n as f64 * arg)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

/// One sampled pair in a factorization report.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSample {
    pub x: OrbitPoint,
    pub y: OrbitPoint,
    pub pi_direct: ComplexJson,
    pub pi_factored: ComplexJson,
    /// Value of the N-th kernel power at the pair; not part of the wire
    /// format but recorded for diagnostics.
    #[serde(skip_serializing)]
    pub pi_power: Complex64,
    pub resid_abs: f64,
    pub resid_rel: f64,
}

/// Residual report for the factorization identity at seeded random pairs.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub seed: u64,
    pub pairs: Vec<KernelSample>,
    pub max_resid_rel: f64,
}

/// Seeded sample of orbit points whose moment images fall in the middle 60%
/// of P; torus and fiber angles uniform.
pub fn random_orbit_points(
    poly: &LatticePolytope,
    pot: &KahlerPotential,
    count: usize,
    seed: u64,
) -> Result<Vec<OrbitPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = poly.dim();
    let (lo, hi) = poly.box_bounds(1);
    let bary = poly.barycenter();
    let tau = std::f64::consts::TAU;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u: Vec<f64> = (0..m)
            .map(|j| rng.random_range(lo[j] as f64..=hi[j] as f64))
            .collect();
        let inside = poly
            .facets()
            .iter()
            .all(|f| {
                f.normal
                    .iter()
                    .zip(&u)
                    .map(|(&a, &x)| a as f64 * x)
                    .sum::<f64>()
                    <= f.offset as f64
            });
        if !inside {
            continue;
        }
        let target: Vec<f64> = (0..m).map(|j| bary[j] + 0.6 * (u[j] - bary[j])).collect();
        let rho = pot.invert_moment(&target, 1e-10, 200)?;
        let phi: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..tau)).collect();
        let theta = rng.random_range(0.0..tau);
        out.push(OrbitPoint::new(rho, phi, theta)?);
    }
    Ok(out)
}

/// Verify the exact factorization of the Szego kernel through the Fourier
/// multiplier at seeded random pairs.
///
/// Requires unit weights (the factorization identity is stated for the
/// embedding with all coefficients one) and a Delzant polytope (so every
/// lattice point of `N*P` carries a positive count).
pub fn verify_factorization(
    poly: &LatticePolytope,
    n: u32,
    samples: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<KernelReport> {
    factorization_preconditions(poly)?;
    let partition = partition_counts(poly, n)?;
    let norms = norm_table(poly, n, cfg)?;
    verify_factorization_with(poly, &partition, &norms, samples, seed)
}

/// Refuse before any table is built: the identity is stated for unit
/// weights on a Delzant polytope.
pub fn factorization_preconditions(poly: &LatticePolytope) -> Result<()> {
    if !poly.has_unit_weights() {
        return Err(Error::Validation(
            "factorization verifier requires unit weights c = 1".into(),
        ));
    }
    let cert = poly.is_delzant();
    if !cert.delzant {
        let bad = cert
            .vertices
            .iter()
            .find(|c| !c.ok)
            .map(|c| format!("vertex {:?}: |det| = {:?}", c.vertex, c.det.map(i64::abs)))
            .unwrap_or_default();
        return Err(Error::Validation(format!(
            "polytope is not Delzant ({bad}); the factorization requires projective normality"
        )));
    }
    Ok(())
}

/// [`verify_factorization`] against caller-supplied tables.
pub fn verify_factorization_with(
    poly: &LatticePolytope,
    partition: &PartitionTable,
    norms: &NormTable,
    samples: usize,
    seed: u64,
) -> Result<KernelReport> {
    let n = norms.dilation();
    factorization_preconditions(poly)?;
    let mult = multiplier_table(partition, norms)?;
    let pot = KahlerPotential::new(poly)?;
    let points = random_orbit_points(poly, &pot, 2 * samples, seed)?;

    // factored route: expansion coefficient P_N(alpha) from the table times
    // the multiplier eigenvalue from the joined table; on the rational fast
    // path the product is carried out exactly before the float conversion
    let support = norms.support().points();
    let factored_coeff: Vec<f64> = partition
        .counts()
        .iter()
        .zip(mult.entries())
        .map(|(count, entry)| match entry {
            Some(e) => match &e.exact {
                Some(lambda) => {
                    let p = BigRational::from(num_bigint::BigInt::from(count.clone()));
                    (p * lambda).to_f64().unwrap_or(0.0)
                }
                None => count.to_f64().unwrap_or(f64::INFINITY) * e.eigenvalue,
            },
            None => 0.0,
        })
        .collect();
    let direct_coeff = reciprocal_norm_coeffs(norms);

    let mut pairs = Vec::with_capacity(samples);
    let mut max_resid_rel: f64 = 0.0;
    for k in 0..samples {
        let (x, y) = (&points[2 * k], &points[2 * k + 1]);
        let direct = section_pair_sum(&pot, n, support, &direct_coeff, x, y);
        let factored = section_pair_sum(&pot, n, support, &factored_coeff, x, y);
        let power = pullback_kernel_n(&pot, n, x, y);
        let resid_abs = (direct - factored).norm();
        let resid_rel = resid_abs / direct.norm().max(1e-300);
        max_resid_rel = max_resid_rel.max(resid_rel);
        pairs.push(KernelSample {
            x: x.clone(),
            y: y.clone(),
            pi_direct: direct.into(),
            pi_factored: factored.into(),
            pi_power: power,
            resid_abs,
            resid_rel,
        });
    }
    Ok(KernelReport {
        n,
        seed,
        pairs,
        max_resid_rel,
    })
}

/// One point of the diagonal symbol sequence `N^m P_N(alpha_N) Q_N(alpha_N)`
/// along an interior ray.
#[derive(Debug, Clone)]
pub struct SymbolRatioPoint {
    pub n: u32,
    pub alpha: Vec<i64>,
    pub ratio: f64,
    /// Exact rational value when the norm fast path applies.
    pub exact: Option<BigRational>,
    /// Set when the rounded ray point fell outside `N*P`.
    pub flagged: bool,
}

/// Evaluate the multiplier symbol sequence along the ray `N * ray_point`,
/// rounding to the nearest lattice point of `N*P`.
pub fn symbol_ratio(
    poly: &LatticePolytope,
    ray_point: &[f64],
    n_list: &[u32],
    cfg: &QuadratureConfig,
) -> Result<Vec<SymbolRatioPoint>> {
    if ray_point.len() != poly.dim() {
        return Err(Error::Validation("ray point has wrong dimension".into()));
    }
    if !poly.interior_f64(ray_point) {
        return Err(Error::Validation(format!(
            "ray point {ray_point:?} is not interior to P"
        )));
    }
    let m = poly.dim() as u32;
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::Validation("dilations must be >= 1".into()));
        }
        let alpha: Vec<i64> = ray_point.iter().map(|&r| (n as f64 * r).round() as i64).collect();
        if !poly.contains_dilated(&alpha, n as i64) {
            out.push(SymbolRatioPoint {
                n,
                alpha,
                ratio: f64::NAN,
                exact: None,
                flagged: true,
            });
            continue;
        }
        let count = partition_counts(poly, n)?
            .count(&alpha)
            .cloned()
            .unwrap_or_else(BigUint::zero);
        let norm = crate::norming::monomial_norm(poly, n, &alpha, cfg)?;
        let nm = (n as f64).powi(m as i32);
        let ratio = nm * count.to_f64().unwrap_or(f64::INFINITY) * norm.value;
        let exact = norm.exact.as_ref().map(|q| {
            let mut npow = BigRational::from(num_bigint::BigInt::from(1));
            for _ in 0..m {
                npow *= BigRational::from(num_bigint::BigInt::from(n));
            }
            npow * BigRational::from(num_bigint::BigInt::from(count.clone())) * q
        });
        out.push(SymbolRatioPoint {
            n,
            alpha,
            ratio,
            exact,
            flagged: count.is_zero(),
        });
    }
    Ok(out)
}

/// First differences of the unflagged ratio sequence.
pub fn ratio_differences(points: &[SymbolRatioPoint]) -> Vec<f64> {
    points
        .windows(2)
        .filter(|w| !w[0].flagged && !w[1].flagged)
        .map(|w| w[1].ratio - w[0].ratio)
        .collect()
}
