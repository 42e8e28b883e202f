//! Open-orbit Kahler geometry of a weighted lattice polytope.
//!
//! All evaluations live on the open torus orbit in log-polar coordinates:
//! a point of the circle bundle is `(rho, phi, theta)` with `|z_j|^2 =
//! exp(rho_j)`, `phi_j = arg z_j`, and fiber angle `theta`. The convex
//! potential is
//!
//! ```text
//!     f(rho) = log sum_beta |c_beta|^2 exp(<beta, rho>)
//! ```
//!
//! whose gradient is the moment map onto the interior of P and whose
//! Hessian is the covariance of the softmax weight distribution over the
//! lattice points. Lifted monomials are evaluated as log-magnitude plus
//! phase, so large dilations never overflow.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::LatticePolytope;

/// A point of the open orbit lifted to the circle bundle, in log-polar
/// coordinates. Boundary strata are never represented.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitPoint {
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: f64,
}

impl OrbitPoint {
    pub fn new(rho: Vec<f64>, phi: Vec<f64>, theta: f64) -> Result<Self> {
        if rho.len() != phi.len() {
            return Err(Error::Validation(
                "rho and phi must have the same length".into(),
            ));
        }
        if !rho.iter().chain(phi.iter()).chain([&theta]).all(|x| x.is_finite()) {
            return Err(Error::Validation(
                "orbit point coordinates must be finite".into(),
            ));
        }
        Ok(OrbitPoint { rho, phi, theta })
    }

    /// Point at the torus identity over `|z_j| = 1`.
    pub fn basepoint(dim: usize) -> Self {
        OrbitPoint {
            rho: vec![0.0; dim],
            phi: vec![0.0; dim],
            theta: 0.0,
        }
    }

    /// Action of `e^{i phi_shift}` on the bundle: rotates the base torus
    /// angles and fixes rho and theta.
    pub fn torus_translate(&self, phi_shift: &[f64]) -> Self {
        let phi = self
            .phi
            .iter()
            .zip(phi_shift)
            .map(|(&a, &b)| a + b)
            .collect();
        OrbitPoint {
            rho: self.rho.clone(),
            phi,
            theta: self.theta,
        }
    }

    /// Circle action on the fiber.
    pub fn fiber_translate(&self, dtheta: f64) -> Self {
        OrbitPoint {
            rho: self.rho.clone(),
            phi: self.phi.clone(),
            theta: self.theta + dtheta,
        }
    }
}

/// Homogenized weight `(alpha, N p - |alpha|)` of a lattice point of `N*P`,
/// where `p` is the maximum total degree over the lattice points of P.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogenizedWeight {
    pub alpha: Vec<i64>,
    pub dilation: u32,
    pub max_degree: i64,
    pub hat: Vec<i64>,
}

/// Homogenize a lattice point of `N*P` into Z^{m+1}.
pub fn homogenize(poly: &LatticePolytope, alpha: &[i64], n: u32) -> Result<HomogenizedWeight> {
    if !poly.contains_dilated(alpha, n as i64) {
        return Err(Error::Validation(format!(
            "{alpha:?} is not a lattice point of {n}*P"
        )));
    }
    let p = crate::polytope::max_degree(poly)?;
    let total: i64 = alpha.iter().sum();
    let last = n as i64 * p - total;
    debug_assert!(last >= 0);
    let mut hat = alpha.to_vec();
    hat.push(last);
    Ok(HomogenizedWeight {
        alpha: alpha.to_vec(),
        dilation: n,
        max_degree: p,
        hat,
    })
}

/// Evaluation engine for the potential, moment map, Hessian density, and
/// lifted monomials of a weighted polytope.
#[derive(Debug, Clone)]
pub struct KahlerPotential {
    poly: LatticePolytope,
    dim: usize,
    points: Vec<Vec<i64>>,
    fpoints: Vec<Vec<f64>>,
    log_w2: Vec<f64>,
}

impl KahlerPotential {
    pub fn new(poly: &LatticePolytope) -> Result<Self> {
        let pts = poly.lattice_points(1)?;
        let points: Vec<Vec<i64>> = pts.points().to_vec();
        let fpoints = points
            .iter()
            .map(|p| p.iter().map(|&x| x as f64).collect())
            .collect();
        let log_w2 = points.iter().map(|p| 2.0 * poly.weight(p).ln()).collect();
        Ok(KahlerPotential {
            poly: poly.clone(),
            dim: poly.dim(),
            points,
            fpoints,
            log_w2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn polytope(&self) -> &LatticePolytope {
        &self.poly
    }

    /// Lattice points of P backing the potential sum.
    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    fn exponents(&self, rho: &[f64]) -> Vec<f64> {
        self.fpoints
            .iter()
            .zip(&self.log_w2)
            .map(|(p, lw)| lw + p.iter().zip(rho).map(|(&a, &b)| a * b).sum::<f64>())
            .collect()
    }

    /// The potential `f(rho)`, evaluated in overflow-safe log-sum-exp form.
    pub fn value(&self, rho: &[f64]) -> f64 {
        let ex = self.exponents(rho);
        let m = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + ex.iter().map(|&e| (e - m).exp()).sum::<f64>().ln()
    }

    /// Softmax weights `w_beta(rho)`; positive and summing to one.
    pub fn softmax(&self, rho: &[f64]) -> Vec<f64> {
        let ex = self.exponents(rho);
        let m = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let un: Vec<f64> = ex.iter().map(|&e| (e - m).exp()).collect();
        let s: f64 = un.iter().sum();
        un.into_iter().map(|u| u / s).collect()
    }

    /// Moment map `mu(rho) = grad f(rho)`, a point of the interior of P.
    pub fn moment(&self, rho: &[f64]) -> Vec<f64> {
        let w = self.softmax(rho);
        (0..self.dim)
            .map(|j| {
                w.iter()
                    .zip(&self.fpoints)
                    .map(|(&wi, p)| wi * p[j])
                    .sum()
            })
            .collect()
    }

    /// Hessian of f as the softmax covariance, row-major flat (stable form
    /// `sum w (beta - mu)(beta - mu)^T`).
    pub fn hessian(&self, rho: &[f64]) -> Vec<f64> {
        let w = self.softmax(rho);
        let mu = self.moment(rho);
        let m = self.dim;
        let mut h = vec![0.0; m * m];
        for (wi, p) in w.iter().zip(&self.fpoints) {
            for r in 0..m {
                let dr = p[r] - mu[r];
                for c in r..m {
                    h[r * m + c] += wi * dr * (p[c] - mu[c]);
                }
            }
        }
        for r in 0..m {
            for c in 0..r {
                h[r * m + c] = h[c * m + r];
            }
        }
        h
    }

    /// Volume density `det grad^2 f(rho)` of `omega^m / m!` in (rho, phi)
    /// coordinates with the torus volume normalized away; strictly positive
    /// on the open orbit for full-dimensional P.
    pub fn hessian_det(&self, rho: &[f64]) -> f64 {
        linalg::det(self.dim, &self.hessian(rho))
    }

    /// Per-axis Laplace widths `sigma_j = sqrt((H^-1)_jj / n)` at rho.
    pub(crate) fn laplace_sigmas(&self, rho: &[f64], n: f64) -> Result<Vec<f64>> {
        let h = self.hessian(rho);
        let diag = linalg::inv_diag(self.dim, &h).ok_or_else(|| {
            Error::Numeric("Hessian is numerically singular at the window center".into())
        })?;
        Ok(diag.iter().map(|&d| (d / n).sqrt()).collect())
    }

    /// Solve `grad f(rho) = target` by damped Newton descent on the convex
    /// objective `f(rho) - <target, rho>`, starting at rho = 0.
    pub fn invert_moment(&self, target: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        if !self.poly.interior_f64(target) {
            return Err(Error::Numeric(format!(
                "moment target {target:?} is not strictly interior to P"
            )));
        }
        let m = self.dim;
        let scale = 1.0 + target.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
        let mut rho = vec![0.0; m];
        let mut g = self.value(&rho) - dot(target, &rho);
        for _ in 0..max_iter {
            let mu = self.moment(&rho);
            let r: Vec<f64> = target.iter().zip(&mu).map(|(&t, &u)| t - u).collect();
            let r_inf = r.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if r_inf <= tol {
                return Ok(rho);
            }
            let h = self.hessian(&rho);
            let step = linalg::solve(m, &h, &r).ok_or_else(|| {
                Error::Numeric("singular Hessian during moment inversion".into())
            })?;
            if r_inf <= 1e-6 * scale {
                // quadratic basin: objective differences are below float
                // noise there, so line search cannot certify progress;
                // the undamped step converges quadratically
                for (x, d) in rho.iter_mut().zip(&step) {
                    *x += d;
                }
                g = self.value(&rho) - dot(target, &rho);
                continue;
            }
            // descent direction for f - <t, rho>: directional derivative is -<r, step>
            let slope = -dot(&r, &step);
            let mut s = 1.0;
            let mut accepted = false;
            while s >= 1e-12 {
                let cand: Vec<f64> = rho.iter().zip(&step).map(|(&x, &d)| x + s * d).collect();
                let gc = self.value(&cand) - dot(target, &cand);
                if gc <= g + 1e-4 * s * slope {
                    rho = cand;
                    g = gc;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if !accepted {
                for (x, d) in rho.iter_mut().zip(&step) {
                    *x += d;
                }
                g = self.value(&rho) - dot(target, &rho);
            }
        }
        let mu = self.moment(&rho);
        let r_inf = target
            .iter()
            .zip(&mu)
            .map(|(&t, &u)| (t - u).abs())
            .fold(0.0, f64::max);
        if r_inf <= tol {
            Ok(rho)
        } else {
            Err(Error::Numeric(format!(
                "moment inversion did not converge (residual {r_inf:.3e}, target {target:?})"
            )))
        }
    }

    /// Log of the squared h^N-norm of the monomial section attached to
    /// alpha, as a function of rho: `<alpha, rho> - N f(rho)`.
    pub fn log_section_sq(&self, alpha: &[i64], n: u32, rho: &[f64]) -> f64 {
        let a: f64 = alpha.iter().zip(rho).map(|(&x, &r)| x as f64 * r).sum();
        a - n as f64 * self.value(rho)
    }

    /// Lifted monomial value at an orbit point:
    /// `exp(i N theta) c_alpha z^alpha / (sum_beta |c_beta z^beta|^2)^{N/2}`.
    pub fn lifted_monomial(&self, alpha: &[i64], n: u32, x: &OrbitPoint) -> Result<Complex64> {
        if !self.poly.contains_dilated(alpha, n as i64) {
            return Err(Error::Validation(format!(
                "{alpha:?} is not a lattice point of {n}*P"
            )));
        }
        Ok(self.lifted_monomial_unchecked(alpha, n, x))
    }

    /// Same as [`Self::lifted_monomial`] without the membership check; used
    /// in kernel sums where the support set is already validated.
    pub(crate) fn lifted_monomial_unchecked(
        &self,
        alpha: &[i64],
        n: u32,
        x: &OrbitPoint,
    ) -> Complex64 {
        let log_mag = self.poly.weight(alpha).ln() + 0.5 * self.log_section_sq(alpha, n, &x.rho);
        let phase = n as f64 * x.theta
            + alpha
                .iter()
                .zip(&x.phi)
                .map(|(&a, &p)| a as f64 * p)
                .sum::<f64>();
        Complex64::from_polar(log_mag.exp(), phase)
    }

    /// Central finite-difference check that the lifted monomial is a joint
    /// eigenfunction of the torus generators (eigenvalues alpha_j) and of
    /// the fiber derivative (eigenvalue N). Returns the per-axis torus
    /// residuals and the fiber residual; both are O(h^2).
    pub fn weight_eigenvalue_residuals(
        &self,
        alpha: &[i64],
        n: u32,
        x: &OrbitPoint,
        h: f64,
    ) -> Result<(Vec<f64>, f64)> {
        if h <= 0.0 {
            return Err(Error::Validation("step h must be positive".into()));
        }
        let base = self.lifted_monomial(alpha, n, x)?;
        if base.norm() == 0.0 {
            return Err(Error::Numeric(
                "lifted monomial vanishes at the sample point".into(),
            ));
        }
        let i = Complex64::i();
        let mut torus = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut shift = vec![0.0; self.dim];
            shift[j] = h;
            let plus = self.lifted_monomial_unchecked(alpha, n, &x.torus_translate(&shift));
            shift[j] = -h;
            let minus = self.lifted_monomial_unchecked(alpha, n, &x.torus_translate(&shift));
            let deriv = (plus - minus) / (2.0 * h);
            torus.push((deriv / (i * base) - alpha[j] as f64).norm());
        }
        let plus = self.lifted_monomial_unchecked(alpha, n, &x.fiber_translate(h));
        let minus = self.lifted_monomial_unchecked(alpha, n, &x.fiber_translate(-h));
        let deriv = (plus - minus) / (2.0 * h);
        let fiber = (deriv / (i * base) - n as f64).norm();
        Ok((torus, fiber))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
