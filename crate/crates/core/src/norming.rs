//! Monomial norming function: squared L^2 norms of monomial sections.
//!
//! After the fiber and torus integrals cancel, the defining integral over
//! the variety reduces to an m-dimensional Laplace-type integral in log
//! coordinates:
//!
//! ```text
//!     Q_N(alpha) = int_{R^m} exp(<alpha, rho> - N f(rho)) det grad^2 f(rho) drho
//! ```
//!
//! centered at the critical point where the moment map hits `alpha / N`.
//! The reduction and the volume normalization are pinned by the projective
//! calibration suite: on the standard simplex with unit weights the
//! quadrature must reproduce the Fubini-Study closed form
//! `p! / ((p+m)! binom(p, alpha))` entry for entry.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::KahlerPotential;
use crate::polytope::{csv_header, LatticePointSet, LatticePolytope};
use crate::quadrature::{adaptive_box, extend_window};

/// Tolerances and window policy for the norm quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    /// Relative tolerance per entry.
    pub rel_tol: f64,
    /// Segment cap per 1-D pass.
    pub max_segments: usize,
    /// Truncation radius in Hessian-scaled standard deviations.
    pub window_sigmas: f64,
    /// Seed recorded by randomized consumers (kernel sampling, sweeps).
    pub seed: u64,
    /// Skip the exact fast path; used by the calibration suite.
    pub force_quadrature: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            max_segments: 4000,
            window_sigmas: 12.0,
            seed: 0,
            force_quadrature: false,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::Validation(format!(
                "relative tolerance must lie in (0, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if self.window_sigmas < 6.0 {
            return Err(Error::Validation(format!(
                "truncation radius must be >= 6 sigma, got {}",
                self.window_sigmas
            )));
        }
        if self.max_segments < 16 {
            return Err(Error::Validation("segment cap too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    ClosedForm,
    Quadrature,
}

impl NormMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMethod::ClosedForm => "closed-form",
            NormMethod::Quadrature => "quadrature",
        }
    }
}

/// One norm value with its error estimate and provenance.
#[derive(Debug, Clone)]
pub struct NormEntry {
    pub value: f64,
    pub err: f64,
    pub method: NormMethod,
    /// True when `alpha / N` lies on the boundary of P, where the Laplace
    /// center is shifted inward and the window widened.
    pub boundary: bool,
    /// False when the quadrature failed to meet its tolerance.
    pub converged: bool,
    /// Exact value on the rational fast path.
    pub exact: Option<BigRational>,
}

/// Table of norms over the lattice points of `N*P`.
#[derive(Debug, Clone)]
pub struct NormTable {
    dilation: u32,
    support: LatticePointSet,
    entries: Vec<NormEntry>,
}

impl NormTable {
    pub fn dilation(&self) -> u32 {
        self.dilation
    }

    pub fn support(&self) -> &LatticePointSet {
        &self.support
    }

    pub fn entries(&self) -> &[NormEntry] {
        &self.entries
    }

    pub fn entry(&self, alpha: &[i64]) -> Option<&NormEntry> {
        self.support.position(alpha).map(|i| &self.entries[i])
    }

    pub fn value(&self, alpha: &[i64]) -> Option<f64> {
        self.entry(alpha).map(|e| e.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &NormEntry)> {
        self.support
            .points()
            .iter()
            .map(|p| p.as_slice())
            .zip(self.entries.iter())
    }

    pub fn any_flagged(&self) -> bool {
        self.entries.iter().any(|e| !e.converged)
    }

    /// CSV export: `alpha_1..alpha_m,Q,err,method,boundary_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.support.dim(), &["Q", "err", "method", "boundary_flag"]);
        for (p, e) in self.iter() {
            for x in p {
                let _ = write!(out, "{x},");
            }
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{}",
                e.value,
                e.err,
                e.method.as_str(),
                u8::from(e.boundary)
            );
        }
        out
    }
}

/// Multinomial coefficient `p! / ((p - |alpha|)! prod alpha_j!)`.
pub fn multinomial(p: i64, alpha: &[i64]) -> Result<BigUint> {
    let total: i64 = alpha.iter().sum();
    if alpha.iter().any(|&a| a < 0) || total > p {
        return Err(Error::Validation(format!(
            "multinomial requires 0 <= |alpha| <= p, got alpha={alpha:?}, p={p}"
        )));
    }
    let mut num = BigUint::one();
    for k in (p - total + 1)..=p {
        num *= BigUint::from(k as u64);
    }
    for &a in alpha {
        for k in 1..=a {
            num /= BigUint::from(k as u64);
        }
    }
    Ok(num)
}

/// Exact Fubini-Study squared norm of a degree-p monomial on projective
/// m-space: `p! / ((p+m)! binom(p, alpha))`.
pub fn closed_form_projective_norm(m: usize, p: i64, alpha: &[i64]) -> Result<BigRational> {
    if alpha.len() != m {
        return Err(Error::Validation(
            "alpha length must match the dimension".into(),
        ));
    }
    let binom = multinomial(p, alpha)?;
    // p!/(p+m)! = 1/((p+1)...(p+m))
    let mut denom = BigUint::from(1u32);
    for k in p + 1..=p + m as i64 {
        denom *= BigUint::from(k as u64);
    }
    Ok(BigRational::new(
        BigInt::from(1),
        BigInt::from(denom * binom),
    ))
}

/// The Fubini-Study embedding weights `c* = sqrt(binom(p, beta))` for the
/// dilated simplex `p * Sigma_m`.
pub fn binomial_weights(dim: usize, p: i64) -> Vec<(Vec<i64>, f64)> {
    let poly = LatticePolytope::standard_simplex(dim, p).expect("valid simplex");
    let pts = poly.lattice_points(1).expect("small scan");
    pts.points()
        .iter()
        .map(|beta| {
            let c = multinomial(p, beta)
                .expect("beta in p*Sigma")
                .to_f64()
                .expect("small coefficient")
                .sqrt();
            (beta.clone(), c)
        })
        .collect()
}

/// Detect the exact-path geometry: P = p*Sigma_m with Fubini-Study weights.
/// For p = 1 the weights c* are identically one, so the plain simplex with
/// default weights qualifies.
fn fubini_study_scale(poly: &LatticePolytope) -> Option<i64> {
    let p = poly.simplex_scale()?;
    let pts = poly.lattice_points(1).ok()?;
    for beta in pts.iter() {
        let expect = multinomial(p, beta).ok()?.to_f64()?;
        let have = poly.weight(beta).powi(2);
        if (have - expect).abs() > 1e-12 * expect {
            return None;
        }
    }
    Some(p)
}

/// Exact norm on the fast path: `p^m (pN)! / ((pN+m)! binom(pN, alpha))`.
fn fast_path_norm(m: usize, p: i64, n: u32, alpha: &[i64]) -> Result<BigRational> {
    let base = closed_form_projective_norm(m, p * n as i64, alpha)?;
    let mut scale = BigInt::from(1);
    for _ in 0..m {
        scale *= BigInt::from(p);
    }
    Ok(base * BigRational::from(scale))
}

/// Norm of a single monomial section of the N-th bundle power.
pub fn monomial_norm(
    poly: &LatticePolytope,
    n: u32,
    alpha: &[i64],
    cfg: &QuadratureConfig,
) -> Result<NormEntry> {
    cfg.validate()?;
    if !poly.contains_dilated(alpha, n as i64) {
        return Err(Error::Validation(format!(
            "{alpha:?} is not a lattice point of {n}*P"
        )));
    }
    if !cfg.force_quadrature {
        if let Some(p) = fubini_study_scale(poly) {
            let exact = fast_path_norm(poly.dim(), p, n, alpha)?;
            let value = exact.to_f64().ok_or_else(|| {
                Error::Numeric("closed-form norm does not fit in f64".into())
            })?;
            return Ok(NormEntry {
                value,
                err: 0.0,
                method: NormMethod::ClosedForm,
                boundary: !poly.strictly_interior_dilated(alpha, n as i64),
                converged: true,
                exact: Some(exact),
            });
        }
    }
    let pot = KahlerPotential::new(poly)?;
    quadrature_norm(poly, &pot, n, alpha, cfg)
}

fn quadrature_norm(
    poly: &LatticePolytope,
    pot: &KahlerPotential,
    n: u32,
    alpha: &[i64],
    cfg: &QuadratureConfig,
) -> Result<NormEntry> {
    let m = poly.dim();
    let nf = n as f64;
    let interior = poly.strictly_interior_dilated(alpha, n as i64);
    let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
    let target: Vec<f64> = if interior {
        alpha_f.iter().map(|&a| a / nf).collect()
    } else {
        // no finite critical point for boundary alpha; center half a lattice
        // step toward the barycenter instead and widen the window
        let bary = poly.barycenter();
        let to_center: Vec<f64> = (0..m).map(|j| nf * bary[j] - alpha_f[j]).collect();
        let dist = to_center.iter().map(|d| d * d).sum::<f64>().sqrt();
        let s = (0.5 / dist).min(0.5);
        (0..m)
            .map(|j| (alpha_f[j] + s * to_center[j]) / nf)
            .collect()
    };
    let center = pot.invert_moment(&target, 1e-10, 200)?;
    let sigmas = pot.laplace_sigmas(&center, nf)?;
    let radius = cfg.window_sigmas * if interior { 1.0 } else { 2.0 };
    let mut window: Vec<(f64, f64)> = (0..m)
        .map(|j| (center[j] - radius * sigmas[j], center[j] + radius * sigmas[j]))
        .collect();
    let log_integrand = |rho: &[f64]| {
        pot.log_section_sq(alpha, n, rho) + pot.hessian_det(rho).max(f64::MIN_POSITIVE).ln()
    };
    let window_ok = extend_window(&log_integrand, &center, &mut window, -34.5, 10);

    // normalize the exponent so the peak is O(1)
    let log_peak = pot.log_section_sq(alpha, n, &center);
    let integrand = move |rho: &[f64]| -> f64 {
        (pot.log_section_sq(alpha, n, rho) - log_peak).exp() * pot.hessian_det(rho)
    };
    let scale_estimate = pot.hessian_det(&center)
        * sigmas
            .iter()
            .map(|s| (2.0 * std::f64::consts::PI).sqrt() * s)
            .product::<f64>();
    let res = adaptive_box(
        &integrand,
        &window,
        cfg.rel_tol * scale_estimate * 0.3,
        cfg.rel_tol,
        cfg.max_segments,
    );
    let rescale = log_peak.exp();
    Ok(NormEntry {
        value: res.value * rescale,
        err: res.err * rescale,
        method: NormMethod::Quadrature,
        boundary: !interior,
        converged: res.converged && window_ok,
        exact: None,
    })
}

/// Norms of every monomial of the N-th power, computed in parallel; each
/// entry is an independent pure computation, so results do not depend on
/// the thread count.
pub fn norm_table(poly: &LatticePolytope, n: u32, cfg: &QuadratureConfig) -> Result<NormTable> {
    cfg.validate()?;
    let support = poly.lattice_points(n)?;
    let fast = if cfg.force_quadrature {
        None
    } else {
        fubini_study_scale(poly)
    };
    let pot = KahlerPotential::new(poly)?;
    let entries: Result<Vec<NormEntry>> = support
        .points()
        .par_iter()
        .map(|alpha| match fast {
            Some(p) => {
                let exact = fast_path_norm(poly.dim(), p, n, alpha)?;
                Ok(NormEntry {
                    value: exact.to_f64().ok_or_else(|| {
                        Error::Numeric("closed-form norm does not fit in f64".into())
                    })?,
                    err: 0.0,
                    method: NormMethod::ClosedForm,
                    boundary: !poly.strictly_interior_dilated(alpha, n as i64),
                    converged: true,
                    exact: Some(exact),
                })
            }
            None => quadrature_norm(poly, &pot, n, alpha, cfg),
        })
        .collect();
    Ok(NormTable {
        dilation: n,
        support,
        entries: entries?,
    })
}

/// Comparison of the integrated volume density against the exact Euclidean
/// volume of P; pins the volume normalization.
#[derive(Debug, Clone)]
pub struct VolumeCheck {
    pub quadrature: f64,
    pub err: f64,
    pub exact: BigRational,
    pub gap: f64,
    pub converged: bool,
}

/// Integrate `det grad^2 f` over R^m and compare with the polytope volume.
pub fn total_volume_check(poly: &LatticePolytope, cfg: &QuadratureConfig) -> Result<VolumeCheck> {
    cfg.validate()?;
    let pot = KahlerPotential::new(poly)?;
    let bary = poly.barycenter();
    let center = pot.invert_moment(&bary, 1e-10, 200)?;
    let m = poly.dim();
    let sigmas = pot.laplace_sigmas(&center, 1.0)?;
    let mut window: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let w = (cfg.window_sigmas * sigmas[j]).max(40.0);
            (center[j] - w, center[j] + w)
        })
        .collect();
    let log_density = |rho: &[f64]| pot.hessian_det(rho).max(f64::MIN_POSITIVE).ln();
    let window_ok = extend_window(&log_density, &center, &mut window, -37.0, 10);
    let exact = poly.euclidean_volume();
    let vol_f = exact.to_f64().expect("desk-scale volume");
    let density = |rho: &[f64]| pot.hessian_det(rho);
    let res = adaptive_box(
        &density,
        &window,
        cfg.rel_tol * vol_f * 0.3,
        cfg.rel_tol,
        cfg.max_segments,
    );
    let gap = (res.value - vol_f).abs() / vol_f;
    Ok(VolumeCheck {
        quadrature: res.value,
        err: res.err,
        exact,
        gap,
        converged: res.converged && window_ok,
    })
}
