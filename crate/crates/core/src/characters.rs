//! Torus characters of the section spaces, by three routes.
//!
//! - exact: the lattice sum `sum_{alpha in N*P} e^{i <phi, alpha>}`;
//! - trace: the diagonal kernel integral, which reweights every monomial by
//!   `1 / Q_N(alpha)` and so cross-checks the whole norm table at once;
//! - leading: `N^m` times the twisted diagonal integral of the N-th kernel
//!   power, the principal term of the oscillatory character formula. The
//!   subleading symbol and smoothing corrections are dropped, so agreement
//!   improves like 1/N rather than being exact.
//!
//! Torus angles are reduced modulo the f64 circle constant before any
//! phase accumulates, which makes the exact path literally periodic.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::Result;
use crate::geometry::KahlerPotential;
use crate::norming::{NormTable, QuadratureConfig};
use crate::polytope::LatticePolytope;
use crate::quadrature::{adaptive_box, extend_window};

/// A quadrature-backed character value with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct PathValue {
    pub value: Complex64,
    pub err: f64,
    pub converged: bool,
}

/// All character paths evaluated at one angle.
#[derive(Debug, Clone)]
pub struct CharacterValue {
    pub dilation: u32,
    pub phi: Vec<f64>,
    pub exact: Complex64,
    pub trace: Option<PathValue>,
    pub leading: Option<PathValue>,
    /// `|trace - exact| / |exact|`.
    pub gap_trace: Option<f64>,
    /// `|exact - leading| / |leading|` (the Ehrhart-style normalization).
    pub gap_leading: Option<f64>,
}

fn reduce_angles(phi: &[f64]) -> Vec<f64> {
    phi.iter()
        .map(|&p| p.rem_euclid(std::f64::consts::TAU))
        .collect()
}

/// Exact lattice sum `sum_{alpha in N*P cap Z^m} e^{i <phi, alpha>}`.
pub fn character_exact(poly: &LatticePolytope, n: u32, phi: &[f64]) -> Result<Complex64> {
    let reduced = reduce_angles(phi);
    let pts = poly.lattice_points(n)?;
    let mut s = Complex64::zero();
    for alpha in pts.iter() {
        let phase: f64 = alpha
            .iter()
            .zip(&reduced)
            .map(|(&a, &p)| a as f64 * p)
            .sum();
        s += Complex64::from_polar(1.0, phase);
    }
    Ok(s)
}

struct BulkWindow {
    window: Vec<(f64, f64)>,
    ok: bool,
}

/// Shared bulk window for diagonal integrals: centered where the moment map
/// hits the barycenter, extended until the supplied magnitude has decayed.
fn bulk_window(
    pot: &KahlerPotential,
    log_magnitude: &dyn Fn(&[f64]) -> f64,
    sigmas_scale: f64,
    cfg: &QuadratureConfig,
) -> Result<BulkWindow> {
    let poly = pot.polytope();
    let center = pot.invert_moment(&poly.barycenter(), 1e-10, 200)?;
    let sigmas = pot.laplace_sigmas(&center, 1.0)?;
    let mut window: Vec<(f64, f64)> = (0..poly.dim())
        .map(|j| {
            let w = (cfg.window_sigmas * sigmas[j] * sigmas_scale).max(40.0);
            (center[j] - w, center[j] + w)
        })
        .collect();
    let ok = extend_window(log_magnitude, &center, &mut window, -36.0, 10);
    Ok(BulkWindow { window, ok })
}

/// Character as the trace of the twisted Szego kernel:
/// `int sum_alpha e^{i <phi, alpha>} |chi_alpha|^2 / Q_N(alpha) dVol`.
pub fn character_trace(
    pot: &KahlerPotential,
    norms: &NormTable,
    phi: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PathValue> {
    cfg.validate()?;
    let n = norms.dilation();
    let reduced = reduce_angles(phi);
    let support = norms.support().points();
    let phases: Vec<Complex64> = support
        .iter()
        .map(|alpha| {
            let ph: f64 = alpha
                .iter()
                .zip(&reduced)
                .map(|(&a, &p)| a as f64 * p)
                .sum();
            Complex64::from_polar(1.0, ph)
        })
        .collect();
    let inv_q: Vec<f64> = norms.entries().iter().map(|e| 1.0 / e.value).collect();

    // diagonal density at phi = 0 dominates the integrand termwise
    let log_density = |rho: &[f64]| -> f64 {
        let det = pot.hessian_det(rho).max(f64::MIN_POSITIVE);
        let mut peak = f64::NEG_INFINITY;
        for (alpha, q) in support.iter().zip(&inv_q) {
            let l = pot.log_section_sq(alpha, n, rho) + q.ln();
            peak = peak.max(l);
        }
        peak + det.ln()
    };
    let bw = bulk_window(pot, &log_density, 1.0, cfg)?;

    let integrand = |rho: &[f64]| -> Complex64 {
        let det = pot.hessian_det(rho);
        let mut s = Complex64::zero();
        for ((alpha, q), ph) in support.iter().zip(&inv_q).zip(&phases) {
            let w = pot.log_section_sq(alpha, n, rho).exp() * q;
            s += ph * w;
        }
        s * det
    };
    let count = support.len() as f64;
    let res = adaptive_box(
        &integrand,
        &bw.window,
        cfg.rel_tol * count * 0.3,
        cfg.rel_tol,
        cfg.max_segments,
    );
    Ok(PathValue {
        value: res.value,
        err: res.err,
        converged: res.converged && bw.ok,
    })
}

/// Leading-order oscillatory character:
/// `N^m int [sum_beta w_beta(rho) e^{i <phi, beta>}]^N det grad^2 f drho`.
pub fn character_leading(
    pot: &KahlerPotential,
    n: u32,
    phi: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PathValue> {
    cfg.validate()?;
    let m = pot.dim();
    let reduced = reduce_angles(phi);
    let phases: Vec<Complex64> = pot
        .points()
        .iter()
        .map(|beta| {
            let ph: f64 = beta
                .iter()
                .zip(&reduced)
                .map(|(&b, &p)| b as f64 * p)
                .sum();
            Complex64::from_polar(1.0, ph)
        })
        .collect();

    // |twisted average| <= 1, so the density decay controls the tails
    let log_density = |rho: &[f64]| pot.hessian_det(rho).max(f64::MIN_POSITIVE).ln();
    let bw = bulk_window(pot, &log_density, 1.0, cfg)?;

    let integrand = |rho: &[f64]| -> Complex64 {
        let w = pot.softmax(rho);
        let avg: Complex64 = w.iter().zip(&phases).map(|(&wi, ph)| ph * wi).sum();
        let (r, arg) = avg.to_polar();
        Complex64::from_polar(r.powi(n as i32), n as f64 * arg) * pot.hessian_det(rho)
    };
    let nm = (n as f64).powi(m as i32);
    let vol_scale = {
        use num_traits::ToPrimitive;
        pot.polytope().euclidean_volume().to_f64().unwrap_or(1.0)
    };
    let res = adaptive_box(
        &integrand,
        &bw.window,
        cfg.rel_tol * vol_scale * 0.3,
        cfg.rel_tol,
        cfg.max_segments,
    );
    Ok(PathValue {
        value: res.value * nm,
        err: res.err * nm,
        converged: res.converged && bw.ok,
    })
}

/// Evaluate every requested path at one angle and record the gaps.
pub fn character_value(
    poly: &LatticePolytope,
    pot: &KahlerPotential,
    norms: Option<&NormTable>,
    n: u32,
    phi: &[f64],
    cfg: &QuadratureConfig,
    include_leading: bool,
) -> Result<CharacterValue> {
    let exact = character_exact(poly, n, phi)?;
    let trace = norms
        .map(|t| character_trace(pot, t, phi, cfg))
        .transpose()?;
    let leading = include_leading
        .then(|| character_leading(pot, n, phi, cfg))
        .transpose()?;
    let gap_trace = trace
        .as_ref()
        .map(|t| (t.value - exact).norm() / exact.norm().max(1e-300));
    let gap_leading = leading
        .as_ref()
        .map(|l| (exact - l.value).norm() / l.value.norm().max(1e-300));
    Ok(CharacterValue {
        dilation: n,
        phi: phi.to_vec(),
        exact,
        trace,
        leading,
        gap_trace,
        gap_leading,
    })
}
