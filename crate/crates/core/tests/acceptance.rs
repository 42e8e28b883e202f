//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured figure of merit.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toric_szego::kernels::ratio_differences;
use toric_szego::{
    character_exact, character_leading, character_trace, multiplier_table, norm_table,
    partition_counts, symbol_ratio, verify_factorization, KahlerPotential, LatticePolytope,
    OrbitPoint, QuadratureConfig,
};

fn simplex(m: usize) -> LatticePolytope {
    LatticePolytope::standard_simplex(m, 1).unwrap()
}

fn veronese() -> LatticePolytope {
    LatticePolytope::standard_simplex(1, 2).unwrap()
}

fn unit_square() -> LatticePolytope {
    LatticePolytope::from_vertices(2, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]])
        .unwrap()
}

fn remark_simplex() -> LatticePolytope {
    LatticePolytope::from_vertices(
        3,
        vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
    )
    .unwrap()
}

fn report(criterion: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(ok, "{criterion}: {detail}");
}

#[test]
fn criterion_1_projective_calibration() {
    // quadrature norms on Sigma_m (m = 1, 2), unit weights, N <= 6 must
    // match the Fubini-Study closed form entrywise to 1e-6 relative
    let cfg = QuadratureConfig {
        force_quadrature: true,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for m in 1..=2usize {
        let poly = simplex(m);
        for n in 1..=6u32 {
            let table = norm_table(&poly, n, &cfg).unwrap();
            for (alpha, entry) in table.iter() {
                let exact = toric_szego::closed_form_projective_norm(m, n as i64, alpha)
                    .unwrap()
                    .to_f64()
                    .unwrap();
                let rel = (entry.value - exact).abs() / exact;
                assert!(entry.converged, "m={m} n={n} alpha={alpha:?} not converged");
                worst = worst.max(rel);
            }
        }
    }
    report(
        "criterion 1 projective calibration",
        worst <= 1e-6,
        &format!("max relative error {worst:.3e} (bound 1e-6)"),
    );
}

#[test]
fn criterion_2_multiplier_constancy() {
    // multiplier eigenvalues on projective space equal (N+m)!/N! for every
    // lattice point; exact on the rational fast path
    let mut ok = true;
    let mut detail = String::new();
    for m in 1..=2usize {
        let poly = simplex(m);
        for n in 1..=6u32 {
            let partition = partition_counts(&poly, n).unwrap();
            let norms = norm_table(&poly, n, &QuadratureConfig::default()).unwrap();
            let mult = multiplier_table(&partition, &norms).unwrap();
            let mut expect = BigRational::from(BigInt::from(1));
            for k in 1..=m as i64 {
                expect *= BigRational::from(BigInt::from(n as i64 + k));
            }
            let expect_f = expect.to_f64().unwrap();
            for entry in mult.entries() {
                let entry = entry.as_ref().expect("positive counts on Delzant P");
                let exact_ok = entry.exact.as_ref() == Some(&expect);
                let rel = (entry.eigenvalue - expect_f).abs() / expect_f;
                if !(exact_ok && rel <= 1e-6) {
                    ok = false;
                    detail = format!("m={m} n={n}: eigenvalue {} != {expect_f}", entry.eigenvalue);
                }
            }
        }
    }
    if detail.is_empty() {
        detail = "eigenvalues equal (N+m)!/N! exactly on the rational path".into();
    }
    report("criterion 2 multiplier constancy", ok, &detail);
}

#[test]
fn criterion_3_factorization_identity() {
    // direct Szego sum vs multiplier-rescaled kernel power expansion at 20
    // seeded pairs: 1e-10 on the exact-rational path, 1e-6 on quadrature
    let cfg = QuadratureConfig::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, poly, bound) in [
        ("simplex1", simplex(1), 1e-10),
        ("veronese", veronese(), 1e-6),
        ("square", unit_square(), 1e-6),
    ] {
        let mut worst: f64 = 0.0;
        for n in 1..=6u32 {
            let rep = verify_factorization(&poly, n, 20, 7, &cfg).unwrap();
            worst = worst.max(rep.max_resid_rel);
        }
        lines.push(format!("{name} max resid {worst:.3e} (bound {bound:.0e})"));
        ok &= worst <= bound;
    }
    report(
        "criterion 3 factorization identity",
        ok,
        &lines.join("; "),
    );
}

#[test]
fn criterion_4_normality_counterexample() {
    // the Remark simplex: (1,1,1) lies in 2P but has partition count zero,
    // and the Delzant checker rejects with determinant 2
    let poly = remark_simplex();
    let table = partition_counts(&poly, 2).unwrap();
    let in_2p = table.support().position(&[1, 1, 1]).is_some();
    let count_zero = table.count(&[1, 1, 1]).map(|c| c.is_zero()).unwrap_or(false);
    let cert = poly.is_delzant();
    let det2 = cert
        .vertices
        .iter()
        .find(|c| c.vertex == vec![0, 0, 0])
        .and_then(|c| c.det)
        .map(|d| d.abs() == 2)
        .unwrap_or(false);
    let ok = in_2p && count_zero && !cert.delzant && det2;
    report(
        "criterion 4 normality counterexample",
        ok,
        &format!(
            "(1,1,1) in 2P: {in_2p}; P_2((1,1,1)) = 0: {count_zero}; \
             Delzant rejected with |det| = 2: {det2}"
        ),
    );
}

#[test]
fn criterion_5_dimension_trace() {
    // integrating the kernel diagonal recovers the lattice point count
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for (name, poly) in [
        ("simplex1", simplex(1)),
        ("simplex2", simplex(2)),
        ("veronese", veronese()),
        ("square", unit_square()),
    ] {
        let pot = KahlerPotential::new(&poly).unwrap();
        for n in 1..=4u32 {
            let norms = norm_table(&poly, n, &cfg).unwrap();
            let trace = character_trace(&pot, &norms, &vec![0.0; poly.dim()], &cfg).unwrap();
            let count = poly.ehrhart_count(n).unwrap() as f64;
            let rel = (trace.value.re - count).abs() / count;
            assert!(
                trace.value.im.abs() <= 1e-8 * count,
                "{name} n={n}: spurious imaginary part {}",
                trace.value.im
            );
            worst = worst.max(rel);
        }
    }
    report(
        "criterion 5 dimension trace",
        worst <= 1e-5,
        &format!("max relative gap {worst:.3e} (bound 1e-5)"),
    );
}

#[test]
fn criterion_6_character_suite() {
    let cfg = QuadratureConfig::default();
    // exact vs trace at 5 seeded random angles, N <= 4
    let mut worst_trace: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for poly in [simplex(1), simplex(2), veronese(), unit_square()] {
        let pot = KahlerPotential::new(&poly).unwrap();
        for n in 1..=4u32 {
            let norms = norm_table(&poly, n, &cfg).unwrap();
            for _ in 0..5 {
                let phi: Vec<f64> = (0..poly.dim())
                    .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                    .collect();
                let exact = character_exact(&poly, n, &phi).unwrap();
                let trace = character_trace(&pot, &norms, &phi, &cfg).unwrap();
                let rel = (trace.value - exact).norm() / exact.norm();
                worst_trace = worst_trace.max(rel);
            }
        }
    }
    let trace_ok = worst_trace <= 1e-5;

    // leading-order path at phi = 0 on the square: the Ehrhart pattern
    let square = unit_square();
    let pot = KahlerPotential::new(&square).unwrap();
    let gap_at = |n: u32| {
        let lead = character_leading(&pot, n, &[0.0, 0.0], &cfg).unwrap();
        let exact = character_exact(&square, n, &[0.0, 0.0]).unwrap();
        (exact - lead.value).norm() / lead.value.norm()
    };
    let g20 = gap_at(20);
    let g40 = gap_at(40);
    let expected20 = 41.0 / 400.0;
    let expected40 = 81.0 / 1600.0;
    let halving = g20 / g40;
    let lead_ok = (g20 - expected20).abs() < 1e-4
        && (g40 - expected40).abs() < 1e-4
        && (1.7..=2.3).contains(&halving);

    report(
        "criterion 6 character suite",
        trace_ok && lead_ok,
        &format!(
            "trace max rel {worst_trace:.3e} (bound 1e-5); square leading gaps \
             {g20:.6} @N=20 vs 0.1025, {g40:.6} @N=40 vs 0.050625, ratio {halving:.3}"
        ),
    );
}

#[test]
fn criterion_7_symbol_asymptotics() {
    let cfg = QuadratureConfig::default();
    let n_list = [8u32, 16, 32];
    let mut ok = true;
    let mut lines = Vec::new();

    // exact rational identities on projective space
    let pts = symbol_ratio(&simplex(1), &[0.5], &n_list, &cfg).unwrap();
    for p in &pts {
        let expect = BigRational::new(BigInt::from(p.n), BigInt::from(p.n + 1));
        ok &= p.exact.as_ref() == Some(&expect);
    }
    lines.push("simplex1 ratios equal N/(N+1) exactly".into());
    let pts = symbol_ratio(&simplex(2), &[0.3, 0.3], &n_list, &cfg).unwrap();
    for p in &pts {
        let n = p.n as i64;
        let expect = BigRational::new(BigInt::from(n * n), BigInt::from((n + 1) * (n + 2)));
        ok &= p.exact.as_ref() == Some(&expect);
    }
    lines.push("simplex2 ratios equal N^2/((N+1)(N+2)) exactly".into());

    // quadrature-backed rays: positive, converging with shrinking gaps
    for (name, poly, ray) in [
        ("veronese", veronese(), vec![1.0]),
        ("square", unit_square(), vec![0.5, 0.5]),
    ] {
        let pts = symbol_ratio(&poly, &ray, &n_list, &cfg).unwrap();
        let diffs = ratio_differences(&pts);
        let positive = pts.iter().all(|p| !p.flagged && p.ratio > 0.0);
        let shrinking = diffs.len() == 2 && diffs[1].abs() < diffs[0].abs();
        ok &= positive && shrinking;
        lines.push(format!(
            "{name} ratios {:?} diffs {:?}",
            pts.iter().map(|p| (p.ratio * 1e6).round() / 1e6).collect::<Vec<_>>(),
            diffs
                .iter()
                .map(|d| (d * 1e6).round() / 1e6)
                .collect::<Vec<_>>()
        ));
    }
    report("criterion 7 symbol asymptotics", ok, &lines.join("; "));
}

#[test]
fn criterion_8_property_suites() {
    let mut ok = true;
    let mut lines = Vec::new();

    // sum rule: total count equals |P cap Z^m|^N
    for (poly, n) in [(simplex(2), 5u32), (unit_square(), 4), (remark_simplex(), 3)] {
        let table = partition_counts(&poly, n).unwrap();
        let base = poly.lattice_points(1).unwrap().len() as u64;
        ok &= table.total() == num_bigint::BigUint::from(base).pow(n);
    }
    lines.push("sum rule".into());

    // convolution semigroup
    let square = unit_square();
    for (n1, n2) in [(1u32, 2u32), (2, 2), (3, 4)] {
        let a = partition_counts(&square, n1).unwrap();
        let b = partition_counts(&square, n2).unwrap();
        let direct = partition_counts(&square, n1 + n2).unwrap();
        ok &= a.convolve(&b, &square).unwrap().counts() == direct.counts();
    }
    lines.push("convolution semigroup".into());

    // sum-to-one of lifted monomial moduli at level 1
    let pot = KahlerPotential::new(&square).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let x = OrbitPoint::new(
            (0..2).map(|_| rng.random_range(-3.0..3.0)).collect(),
            (0..2).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .unwrap();
        let sum: f64 = pot
            .points()
            .iter()
            .map(|a| pot.lifted_monomial(a, 1, &x).unwrap().norm_sqr())
            .sum();
        ok &= (sum - 1.0).abs() <= 1e-12;
    }
    lines.push("sum-to-one".into());

    // moment map gradient and Hessian against finite differences
    let h = 1e-4;
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    for _ in 0..20 {
        let rho: Vec<f64> = (0..2).map(|_| rng.random_range(-2.5..2.5)).collect();
        let mu = pot.moment(&rho);
        for j in 0..2 {
            let mut rp = rho.clone();
            let mut rm = rho.clone();
            rp[j] += h;
            rm[j] -= h;
            let fd = (pot.value(&rp) - pot.value(&rm)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - mu[j]).abs());
        }
        let mut fd = [0.0; 4];
        for j in 0..2 {
            let mut rp = rho.clone();
            let mut rm = rho.clone();
            rp[j] += h;
            rm[j] -= h;
            let gp = pot.moment(&rp);
            let gm = pot.moment(&rm);
            for k in 0..2 {
                fd[k * 2 + j] = (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        let fd_det = fd[0] * fd[3] - fd[1] * fd[2];
        let an = pot.hessian_det(&rho);
        worst_hess = worst_hess.max((fd_det - an).abs() / an);
    }
    ok &= worst_grad <= 1e-6 && worst_hess <= 1e-4;
    lines.push(format!(
        "gradient fd {worst_grad:.2e} <= 1e-6, hessian fd {worst_hess:.2e} <= 1e-4"
    ));

    // torus eigenvalue residuals scale like h^2
    let seg2 = veronese();
    let pot2 = KahlerPotential::new(&seg2).unwrap();
    let x = OrbitPoint::new(vec![0.3], vec![1.1], 0.7).unwrap();
    let res = |h: f64| {
        pot2.weight_eigenvalue_residuals(&[2], 1, &x, h)
            .unwrap()
            .0[0]
    };
    let (r2, r3) = (res(1e-2), res(1e-3));
    ok &= r2 < 1e-3 && r3 < r2 / 50.0;
    lines.push(format!("eigenvalue residual O(h^2): {r2:.2e} -> {r3:.2e}"));

    report("criterion 8 property suites", ok, &lines.join("; "));
}
