//! Lattice polytopes in dimension m <= 3.
//!
//! A [`LatticePolytope`] carries both a V-representation (integer vertices)
//! and an H-representation (primitive integer facet normals with offsets,
//! `<u, x> <= b`). The H-rep is the source of truth for membership tests;
//! the V-rep drives edge enumeration and the Delzant determinant check.
//! Both representations are validated against each other at construction.
//!
//! All combinatorial quantities (lattice point enumeration, Ehrhart counts,
//! Euclidean volume) are exact: `i64`/`i128` scans and `BigRational` volume.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Hard cap on the ambient dimension. Keeps hull computation elementary.
pub const MAX_DIM: usize = 3;

/// Refuse lattice scans past this many candidate box cells.
pub const DEFAULT_SCAN_CAP: usize = 64_000_000;

/// One half-space `<normal, x> <= offset` with primitive integer normal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

/// Integral convex polytope in the positive quadrant of R^m, m <= 3.
#[derive(Debug, Clone)]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Vec<i64>>,
    facets: Vec<Facet>,
    /// Optional per-lattice-point weights `c_alpha` (squared magnitudes are
    /// what enter every formula); points not listed default to 1.
    weights: Vec<(Vec<i64>, f64)>,
}

/// Lattice points of a dilate `N*P`, lexicographically sorted, with a
/// point -> dense index map.
#[derive(Debug, Clone)]
pub struct LatticePointSet {
    dilation: u32,
    dim: usize,
    points: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

/// Per-vertex record of the Delzant determinant test.
#[derive(Debug, Clone)]
pub struct VertexCheck {
    pub vertex: Vec<i64>,
    /// Primitive integer directions of the edges leaving this vertex.
    pub edge_dirs: Vec<Vec<i64>>,
    /// Determinant of the edge-direction matrix; `None` when the number of
    /// edges differs from the dimension.
    pub det: Option<i64>,
    pub ok: bool,
}

/// Outcome of [`LatticePolytope::is_delzant`] with one entry per vertex.
#[derive(Debug, Clone)]
pub struct DelzantCertificate {
    pub delzant: bool,
    pub vertices: Vec<VertexCheck>,
}

#[derive(Deserialize)]
struct PolytopeFile {
    dim: usize,
    vertices: Vec<Vec<i64>>,
    #[serde(default)]
    facets: Option<Vec<FacetFile>>,
    #[serde(default)]
    weights: Option<Vec<WeightFile>>,
}

#[derive(Deserialize)]
struct FacetFile {
    normal: Vec<i64>,
    offset: i64,
}

#[derive(Deserialize)]
struct WeightFile {
    point: Vec<i64>,
    c: f64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn primitivize(v: &mut [i64]) {
    let g = v.iter().fold(0, |acc, &x| gcd(acc, x));
    if g > 1 {
        for x in v.iter_mut() {
            *x /= g;
        }
    }
}

pub(crate) fn dot_i(u: &[i64], x: &[i64]) -> i128 {
    u.iter()
        .zip(x)
        .map(|(&a, &b)| a as i128 * b as i128)
        .sum()
}

/// Rank of a small integer matrix via fraction-free elimination on i128.
#[allow(clippy::needless_range_loop)]
fn int_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col];
        for r in rank + 1..m.len() {
            let q = m[r][col];
            if q != 0 {
                for c in col..cols {
                    m[r][c] = m[r][c] * p - m[rank][c] * q;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

fn det3(m: &[Vec<i64>]) -> i64 {
    (m[0][0] as i128 * (m[1][1] as i128 * m[2][2] as i128 - m[1][2] as i128 * m[2][1] as i128)
        - m[0][1] as i128
            * (m[1][0] as i128 * m[2][2] as i128 - m[1][2] as i128 * m[2][0] as i128)
        + m[0][2] as i128
            * (m[1][0] as i128 * m[2][1] as i128 - m[1][1] as i128 * m[2][0] as i128)) as i64
}

fn edge_det(dirs: &[Vec<i64>]) -> i64 {
    match dirs.len() {
        1 => dirs[0][0],
        2 => dirs[0][0] * dirs[1][1] - dirs[0][1] * dirs[1][0],
        3 => det3(dirs),
        _ => 0,
    }
}

/// CCW-around-center comparator key: position vector of `scale*p - center2`
/// split into angular half plus exact cross product ordering.
fn ccw_less(a: &[i128], b: &[i128]) -> std::cmp::Ordering {
    let half = |q: &[i128]| -> u8 {
        // 0 for angle in [0, pi), 1 for [pi, 2pi)
        if q[1] > 0 || (q[1] == 0 && q[0] > 0) {
            0
        } else {
            1
        }
    };
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    // same half: a before b iff cross(a, b) > 0
    let cross = a[0] * b[1] - a[1] * b[0];
    cross.cmp(&0).reverse()
}

impl LatticePolytope {
    /// Build from a vertex list alone; the H-rep is computed by convex hull.
    pub fn from_vertices(dim: usize, vertices: Vec<Vec<i64>>) -> Result<Self> {
        Self::from_parts(dim, vertices, None, Vec::new())
    }

    /// Build from a vertex list with an optional supplied H-rep and weights.
    ///
    /// A supplied H-rep must describe exactly the same point set as the
    /// computed hull of the vertices, facet for facet.
    pub fn from_parts(
        dim: usize,
        vertices: Vec<Vec<i64>>,
        facets: Option<Vec<Facet>>,
        weights: Vec<(Vec<i64>, f64)>,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Validation(format!(
                "dimension must be between 1 and {MAX_DIM}, got {dim}"
            )));
        }
        if vertices.is_empty() {
            return Err(Error::Validation("empty vertex list".into()));
        }
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::Validation(format!(
                    "vertex {v:?} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|&c| c < 0) {
                return Err(Error::Validation(format!(
                    "vertex {v:?} lies outside the positive quadrant"
                )));
            }
            if v.iter().any(|&c| c > 1_000_000) {
                return Err(Error::Validation(format!(
                    "vertex {v:?} exceeds the coordinate cap of 1e6"
                )));
            }
        }
        let mut dedup: Vec<Vec<i64>> = Vec::new();
        for v in vertices {
            if !dedup.contains(&v) {
                dedup.push(v);
            }
        }
        let hull = compute_hull(dim, &dedup)?;
        // Every supplied point must be a genuine vertex: its active facet
        // normals must span R^m.
        for v in &dedup {
            let active: Vec<Vec<i64>> = hull
                .iter()
                .filter(|f| dot_i(&f.normal, v) == f.offset as i128)
                .map(|f| f.normal.clone())
                .collect();
            if int_rank(&active) != dim {
                return Err(Error::Validation(format!(
                    "point {v:?} is not a vertex of the convex hull"
                )));
            }
        }
        let facets = match facets {
            None => hull,
            Some(mut supplied) => {
                for f in &mut supplied {
                    if f.normal.len() != dim {
                        return Err(Error::Validation(format!(
                            "facet normal {:?} has wrong dimension",
                            f.normal
                        )));
                    }
                    if f.normal.iter().all(|&c| c == 0) {
                        return Err(Error::Validation("zero facet normal".into()));
                    }
                    let g = f.normal.iter().fold(0, |acc, &x| gcd(acc, x));
                    if g > 1 {
                        if f.offset % g != 0 {
                            return Err(Error::Validation(format!(
                                "facet {:?} <= {} is not integral after normalization",
                                f.normal, f.offset
                            )));
                        }
                        for c in f.normal.iter_mut() {
                            *c /= g;
                        }
                        f.offset /= g;
                    }
                }
                let key = |fs: &[Facet]| -> BTreeSet<(Vec<i64>, i64)> {
                    fs.iter().map(|f| (f.normal.clone(), f.offset)).collect()
                };
                if key(&supplied) != key(&hull) {
                    return Err(Error::Validation(
                        "supplied H-rep is inconsistent with the vertex hull".into(),
                    ));
                }
                supplied
            }
        };
        let poly = LatticePolytope {
            dim,
            vertices: dedup,
            facets,
            weights: Vec::new(),
        };
        poly.validate_reps()?;
        poly.with_weights(weights)
    }

    fn with_weights(mut self, weights: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        for (p, c) in &weights {
            if !self.contains_dilated(p, 1) {
                return Err(Error::Validation(format!(
                    "weight point {p:?} is not a lattice point of P"
                )));
            }
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::Validation(format!(
                    "weight at {p:?} must be a positive real, got {c}"
                )));
            }
        }
        self.weights = weights;
        Ok(self)
    }

    /// The dilated standard simplex `p * Sigma_m` with vertices at the
    /// origin and `p e_j`. For p = 1 this is the moment polytope of
    /// projective space with the hyperplane bundle.
    pub fn standard_simplex(dim: usize, p: i64) -> Result<Self> {
        if p < 1 {
            return Err(Error::Validation("simplex scale must be >= 1".into()));
        }
        let mut vertices = vec![vec![0i64; dim]];
        for j in 0..dim {
            let mut v = vec![0i64; dim];
            v[j] = p;
            vertices.push(v);
        }
        Self::from_vertices(dim, vertices)
    }

    /// If P equals `p * Sigma_m` as a vertex set, return `p`.
    pub fn simplex_scale(&self) -> Option<i64> {
        let expect = self.vertices.len() == self.dim + 1;
        if !expect {
            return None;
        }
        let mut sorted: Vec<Vec<i64>> = self.vertices.clone();
        sorted.sort();
        let p = sorted.last().and_then(|v| v.iter().max().copied())?;
        if p < 1 {
            return None;
        }
        let mut reference = vec![vec![0i64; self.dim]];
        for j in 0..self.dim {
            let mut v = vec![0i64; self.dim];
            v[j] = p;
            reference.push(v);
        }
        reference.sort();
        (sorted == reference).then_some(p)
    }

    /// Parse the JSON polytope file format.
    pub fn parse(text: &str) -> Result<Self> {
        let file: PolytopeFile = serde_json::from_str(text).map_err(|e| {
            if e.to_string().contains("invalid type: floating point") {
                Error::Parse(format!("non-integral vertex or normal: {e}"))
            } else {
                Error::Parse(e.to_string())
            }
        })?;
        let facets = file.facets.map(|fs| {
            fs.into_iter()
                .map(|f| Facet {
                    normal: f.normal,
                    offset: f.offset,
                })
                .collect()
        });
        let weights = file
            .weights
            .map(|ws| ws.into_iter().map(|w| (w.point, w.c)).collect())
            .unwrap_or_default();
        Self::from_parts(file.dim, file.vertices, facets, weights)
    }

    fn validate_reps(&self) -> Result<()> {
        for v in &self.vertices {
            for f in &self.facets {
                if dot_i(&f.normal, v) > f.offset as i128 {
                    return Err(Error::Validation(format!(
                        "vertex {v:?} violates facet {:?} <= {}",
                        f.normal, f.offset
                    )));
                }
            }
        }
        for f in &self.facets {
            let tight = self
                .vertices
                .iter()
                .filter(|v| dot_i(&f.normal, v) == f.offset as i128)
                .count();
            if tight < self.dim {
                return Err(Error::Validation(format!(
                    "facet {:?} <= {} is tight at only {tight} vertices",
                    f.normal, f.offset
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Weight `c_alpha` of a lattice point (default 1).
    pub fn weight(&self, point: &[i64]) -> f64 {
        self.weights
            .iter()
            .find(|(p, _)| p == point)
            .map(|(_, c)| *c)
            .unwrap_or(1.0)
    }

    pub fn weight_entries(&self) -> &[(Vec<i64>, f64)] {
        &self.weights
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|(_, c)| *c == 1.0)
    }

    /// Membership of an integer point in the dilate `n*P` via the scaled H-rep.
    pub fn contains_dilated(&self, point: &[i64], n: i64) -> bool {
        self.facets
            .iter()
            .all(|f| dot_i(&f.normal, point) <= f.offset as i128 * n as i128)
    }

    /// Strict interior membership in `n*P` (integer arithmetic).
    pub fn strictly_interior_dilated(&self, point: &[i64], n: i64) -> bool {
        self.facets
            .iter()
            .all(|f| dot_i(&f.normal, point) < f.offset as i128 * n as i128)
    }

    /// Strict interior membership of a real point in `P`.
    pub fn interior_f64(&self, point: &[f64]) -> bool {
        self.facets.iter().all(|f| {
            let lhs: f64 = f
                .normal
                .iter()
                .zip(point)
                .map(|(&u, &x)| u as f64 * x)
                .sum();
            lhs < f.offset as f64
        })
    }

    /// Vertex barycenter; strictly interior for full-dimensional P.
    pub fn barycenter(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        (0..self.dim)
            .map(|j| self.vertices.iter().map(|v| v[j] as f64).sum::<f64>() / k)
            .collect()
    }

    /// Enumerate the lattice points of `n*P` by a bounding-box scan filtered
    /// through the scaled H-rep.
    pub fn lattice_points(&self, n: u32) -> Result<LatticePointSet> {
        self.lattice_points_with_cap(n, DEFAULT_SCAN_CAP)
    }

    pub fn lattice_points_with_cap(&self, n: u32, cap: usize) -> Result<LatticePointSet> {
        if n == 0 {
            return Err(Error::Validation("dilation must be >= 1".into()));
        }
        let n64 = n as i64;
        let (lo, hi) = self.box_bounds(n64);
        let mut cells: usize = 1;
        for j in 0..self.dim {
            let w = (hi[j] - lo[j] + 1) as usize;
            cells = cells.checked_mul(w).ok_or_else(|| {
                Error::Capacity("bounding box size overflows usize".into())
            })?;
        }
        if cells > cap {
            return Err(Error::Capacity(format!(
                "bounding box of {n}*P has {cells} cells, cap is {cap}"
            )));
        }
        let mut points = Vec::new();
        let mut cursor = lo.clone();
        'scan: loop {
            if self.contains_dilated(&cursor, n64) {
                points.push(cursor.clone());
            }
            // lexicographic increment, last coordinate fastest
            for j in (0..self.dim).rev() {
                cursor[j] += 1;
                if cursor[j] <= hi[j] {
                    continue 'scan;
                }
                cursor[j] = lo[j];
            }
            break;
        }
        LatticePointSet::new(n, self.dim, points)
    }

    pub(crate) fn box_bounds(&self, n: i64) -> (Vec<i64>, Vec<i64>) {
        let lo = (0..self.dim)
            .map(|j| n * self.vertices.iter().map(|v| v[j]).min().unwrap())
            .collect();
        let hi = (0..self.dim)
            .map(|j| n * self.vertices.iter().map(|v| v[j]).max().unwrap())
            .collect();
        (lo, hi)
    }

    /// Number of lattice points of `n*P`.
    pub fn ehrhart_count(&self, n: u32) -> Result<usize> {
        Ok(self.lattice_points(n)?.len())
    }

    /// Pairs of vertex indices joined by an edge. A pair forms an edge iff
    /// the facets tight at both have normals spanning a hyperplane
    /// (rank m-1), so the common face is one-dimensional.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                let common: Vec<Vec<i64>> = self
                    .facets
                    .iter()
                    .filter(|f| {
                        dot_i(&f.normal, &self.vertices[i]) == f.offset as i128
                            && dot_i(&f.normal, &self.vertices[j]) == f.offset as i128
                    })
                    .map(|f| f.normal.clone())
                    .collect();
                if int_rank(&common) == self.dim - 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Delzant test: at every vertex exactly m primitive edge directions
    /// whose determinant is +-1.
    pub fn is_delzant(&self) -> DelzantCertificate {
        let edges = self.edges();
        let mut checks = Vec::new();
        let mut all_ok = true;
        for (vi, v) in self.vertices.iter().enumerate() {
            let mut dirs = Vec::new();
            for &(a, b) in &edges {
                let w = if a == vi {
                    &self.vertices[b]
                } else if b == vi {
                    &self.vertices[a]
                } else {
                    continue;
                };
                let mut d: Vec<i64> = w.iter().zip(v).map(|(&x, &y)| x - y).collect();
                primitivize(&mut d);
                dirs.push(d);
            }
            dirs.sort();
            let det = (dirs.len() == self.dim).then(|| edge_det(&dirs));
            let ok = det.map(|d| d.abs() == 1).unwrap_or(false);
            all_ok &= ok;
            checks.push(VertexCheck {
                vertex: v.clone(),
                edge_dirs: dirs,
                det,
                ok,
            });
        }
        DelzantCertificate {
            delzant: all_ok,
            vertices: checks,
        }
    }

    /// Exact Euclidean volume by simplicial decomposition from a fixed vertex.
    pub fn euclidean_volume(&self) -> BigRational {
        match self.dim {
            1 => {
                let lo = self.vertices.iter().map(|v| v[0]).min().unwrap();
                let hi = self.vertices.iter().map(|v| v[0]).max().unwrap();
                BigRational::from(BigInt::from(hi - lo))
            }
            2 => {
                let ordered = self.order_ccw(&self.vertices);
                let mut twice: i128 = 0;
                for k in 0..ordered.len() {
                    let a = &ordered[k];
                    let b = &ordered[(k + 1) % ordered.len()];
                    twice += a[0] as i128 * b[1] as i128 - b[0] as i128 * a[1] as i128;
                }
                BigRational::new(BigInt::from(twice.abs()), BigInt::from(2))
            }
            3 => {
                let apex = &self.vertices[0];
                let mut six: i128 = 0;
                for f in &self.facets {
                    if dot_i(&f.normal, apex) == f.offset as i128 {
                        continue; // facets through the apex contribute no volume
                    }
                    let ring: Vec<Vec<i64>> = self
                        .vertices
                        .iter()
                        .filter(|v| dot_i(&f.normal, v) == f.offset as i128)
                        .cloned()
                        .collect();
                    let ordered = self.order_facet_ccw(&f.normal, &ring);
                    for k in 1..ordered.len() - 1 {
                        let d = |p: &[i64]| -> Vec<i64> {
                            p.iter().zip(apex).map(|(&x, &y)| x - y).collect()
                        };
                        let rows = vec![d(&ordered[0]), d(&ordered[k]), d(&ordered[k + 1])];
                        six += (det3(&rows) as i128).abs();
                    }
                }
                BigRational::new(BigInt::from(six), BigInt::from(6))
            }
            _ => unreachable!("dimension validated at construction"),
        }
    }

    /// Order 2-D points counterclockwise around their centroid, exactly.
    fn order_ccw(&self, pts: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let k = pts.len() as i128;
        let cx: i128 = pts.iter().map(|p| p[0] as i128).sum();
        let cy: i128 = pts.iter().map(|p| p[1] as i128).sum();
        let mut keyed: Vec<(Vec<i128>, Vec<i64>)> = pts
            .iter()
            .map(|p| {
                (
                    vec![k * p[0] as i128 - cx, k * p[1] as i128 - cy],
                    p.clone(),
                )
            })
            .collect();
        keyed.sort_by(|a, b| ccw_less(&a.0, &b.0));
        keyed.into_iter().map(|(_, p)| p).collect()
    }

    /// Order the vertex ring of a 3-D facet by projecting out the dominant
    /// normal coordinate; convexity makes the projection faithful.
    fn order_facet_ccw(&self, normal: &[i64], ring: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let drop = (0..3).max_by_key(|&j| normal[j].abs()).unwrap();
        let keep: Vec<usize> = (0..3).filter(|&j| j != drop).collect();
        let k = ring.len() as i128;
        let c: Vec<i128> = keep
            .iter()
            .map(|&j| ring.iter().map(|p| p[j] as i128).sum())
            .collect();
        let mut keyed: Vec<(Vec<i128>, Vec<i64>)> = ring
            .iter()
            .map(|p| {
                (
                    vec![
                        k * p[keep[0]] as i128 - c[0],
                        k * p[keep[1]] as i128 - c[1],
                    ],
                    p.clone(),
                )
            })
            .collect();
        keyed.sort_by(|a, b| ccw_less(&a.0, &b.0));
        keyed.into_iter().map(|(_, p)| p).collect()
    }
}

/// Convex hull H-rep for m <= 3 by exhaustive search over vertex tuples.
fn compute_hull(dim: usize, vertices: &[Vec<i64>]) -> Result<Vec<Facet>> {
    if vertices.len() > 256 {
        return Err(Error::Capacity(
            "hull computation capped at 256 vertices".into(),
        ));
    }
    let mut set: BTreeSet<(Vec<i64>, i64)> = BTreeSet::new();
    match dim {
        1 => {
            let lo = vertices.iter().map(|v| v[0]).min().unwrap();
            let hi = vertices.iter().map(|v| v[0]).max().unwrap();
            if lo == hi {
                return Err(Error::Validation(
                    "polytope is not full-dimensional (single point)".into(),
                ));
            }
            set.insert((vec![-1], -lo));
            set.insert((vec![1], hi));
        }
        2 => {
            for i in 0..vertices.len() {
                for j in i + 1..vertices.len() {
                    let (a, b) = (&vertices[i], &vertices[j]);
                    let d = [b[0] - a[0], b[1] - a[1]];
                    if d == [0, 0] {
                        continue;
                    }
                    for sign in [1i64, -1] {
                        let mut n = vec![sign * d[1], -sign * d[0]];
                        let b0 = dot_i(&n, a);
                        if vertices.iter().all(|v| dot_i(&n, v) <= b0) {
                            primitivize(&mut n);
                            let off = dot_i(&n, a);
                            set.insert((n, off as i64));
                        }
                    }
                }
            }
        }
        3 => {
            for i in 0..vertices.len() {
                for j in i + 1..vertices.len() {
                    for k in j + 1..vertices.len() {
                        let (a, b, c) = (&vertices[i], &vertices[j], &vertices[k]);
                        let u: Vec<i64> = (0..3).map(|t| b[t] - a[t]).collect();
                        let w: Vec<i64> = (0..3).map(|t| c[t] - a[t]).collect();
                        let mut n = vec![
                            u[1] * w[2] - u[2] * w[1],
                            u[2] * w[0] - u[0] * w[2],
                            u[0] * w[1] - u[1] * w[0],
                        ];
                        if n.iter().all(|&x| x == 0) {
                            continue;
                        }
                        let b0 = dot_i(&n, a);
                        if vertices.iter().all(|v| dot_i(&n, v) <= b0) {
                            primitivize(&mut n);
                            let off = dot_i(&n, a);
                            set.insert((n, off as i64));
                        } else {
                            for x in n.iter_mut() {
                                *x = -*x;
                            }
                            let b1 = dot_i(&n, a);
                            if vertices.iter().all(|v| dot_i(&n, v) <= b1) {
                                primitivize(&mut n);
                                let off = dot_i(&n, a);
                                set.insert((n, off as i64));
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    if set.is_empty() {
        return Err(Error::Validation(
            "polytope is not full-dimensional".into(),
        ));
    }
    let facets: Vec<Facet> = set
        .into_iter()
        .map(|(normal, offset)| Facet { normal, offset })
        .collect();
    // Full-dimensionality: the facet normals must span R^m and the polytope
    // must be bounded with nonempty interior; a quick certificate is that no
    // facet holds at equality on all vertices.
    for f in &facets {
        if vertices.iter().all(|v| dot_i(&f.normal, v) == f.offset as i128) {
            return Err(Error::Validation(
                "polytope is not full-dimensional".into(),
            ));
        }
    }
    Ok(facets)
}

impl LatticePointSet {
    fn new(dilation: u32, dim: usize, mut points: Vec<Vec<i64>>) -> Result<Self> {
        points.sort();
        points.dedup();
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Ok(LatticePointSet {
            dilation,
            dim,
            points,
            index,
        })
    }

    pub fn dilation(&self) -> u32 {
        self.dilation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn position(&self, point: &[i64]) -> Option<usize> {
        self.index.get(point).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.points.iter()
    }
}

/// Maximum total degree `p = max |beta|` over the lattice points of P.
pub fn max_degree(poly: &LatticePolytope) -> Result<i64> {
    let pts = poly.lattice_points(1)?;
    Ok(pts
        .iter()
        .map(|p| p.iter().sum::<i64>())
        .max()
        .unwrap_or(0))
}

/// CSV header `alpha_1,...,alpha_m` followed by extra columns.
pub(crate) fn csv_header(dim: usize, extra: &[&str]) -> String {
    let mut s = String::new();
    for j in 1..=dim {
        let _ = write!(s, "alpha_{j},");
    }
    s.push_str(&extra.join(","));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square() -> LatticePolytope {
        LatticePolytope::from_vertices(
            2,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
        )
        .unwrap()
    }

    pub(crate) fn remark_simplex() -> LatticePolytope {
        LatticePolytope::from_vertices(
            3,
            vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
        )
        .unwrap()
    }

    /// Brute-force hull membership oracle: point is in conv(V) iff no
    /// separating facet exists among all pair/triple hyperplanes.
    fn brute_force_points(poly: &LatticePolytope, n: i64) -> Vec<Vec<i64>> {
        let (lo, hi) = poly.box_bounds(n);
        let mut out = Vec::new();
        let dim = poly.dim();
        let mut cursor = lo.clone();
        'scan: loop {
            if poly.contains_dilated(&cursor, n) {
                out.push(cursor.clone());
            }
            for j in (0..dim).rev() {
                cursor[j] += 1;
                if cursor[j] <= hi[j] {
                    continue 'scan;
                }
                cursor[j] = lo[j];
            }
            break;
        }
        out
    }

    #[test]
    fn segment_hull() {
        let p = LatticePolytope::from_vertices(1, vec![vec![0], vec![2]]).unwrap();
        let facets: Vec<(Vec<i64>, i64)> = p
            .facets()
            .iter()
            .map(|f| (f.normal.clone(), f.offset))
            .collect();
        // x >= 0 and x <= 2
        assert_eq!(facets, vec![(vec![-1], 0), (vec![1], 2)]);
        assert!(p.contains_dilated(&[1], 1));
        assert!(!p.contains_dilated(&[3], 1));
    }

    #[test]
    fn square_hull_has_four_primitive_facets() {
        let p = unit_square();
        assert_eq!(p.facets().len(), 4);
        for f in p.facets() {
            let g = f.normal.iter().fold(0, |acc, &x| gcd(acc, x));
            assert_eq!(g, 1);
        }
    }

    #[test]
    fn negative_vertex_rejected() {
        let err = LatticePolytope::from_vertices(2, vec![vec![-1, 0], vec![1, 0], vec![0, 1]])
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("positive quadrant"));
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let p = LatticePolytope::parse(
            r#"{"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1]],
                "facets":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":0},
                          {"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":0}]}"#,
        )
        .unwrap();
        assert_eq!(p.facets().len(), 4);

        let bad = LatticePolytope::parse(r#"{"dim":1,"vertices":[[0.5],[2]]}"#);
        assert!(matches!(bad, Err(Error::Parse(_))));

        let empty = LatticePolytope::parse(r#"{"dim":2,"vertices":[]}"#);
        assert!(matches!(empty, Err(Error::Validation(_))));

        // inconsistent H-rep: facet cuts off the vertex (1,1)
        let bad_h = LatticePolytope::parse(
            r#"{"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1]],
                "facets":[{"normal":[1,1],"offset":1}]}"#,
        );
        assert!(matches!(bad_h, Err(Error::Validation(_))));
    }

    #[test]
    fn non_vertex_points_and_bad_weights_rejected() {
        // midpoint of the segment is not a vertex of the hull
        let err = LatticePolytope::from_vertices(1, vec![vec![0], vec![2], vec![1]])
            .unwrap_err();
        assert!(err.to_string().contains("not a vertex"));

        // weight points must be lattice points of P, weights positive
        let err = LatticePolytope::from_parts(
            1,
            vec![vec![0], vec![1]],
            None,
            vec![(vec![5], 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not a lattice point"));
        let err = LatticePolytope::from_parts(
            1,
            vec![vec![0], vec![1]],
            None,
            vec![(vec![0], -1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("positive real"));
    }

    #[test]
    fn lattice_points_match_brute_force() {
        for (poly, n) in [
            (unit_square(), 1),
            (unit_square(), 2),
            (unit_square(), 5),
            (remark_simplex(), 1),
            (remark_simplex(), 2),
            (remark_simplex(), 3),
        ] {
            let pts = poly.lattice_points(n).unwrap();
            let brute = brute_force_points(&poly, n as i64);
            assert_eq!(pts.points(), brute.as_slice());
        }
    }

    #[test]
    fn unit_triangle_points() {
        let t =
            LatticePolytope::from_vertices(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let pts = t.lattice_points(1).unwrap();
        assert_eq!(
            pts.points(),
            &[vec![0, 0], vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn remark_simplex_has_only_vertices() {
        let p = remark_simplex();
        let pts = p.lattice_points(1).unwrap();
        assert_eq!(pts.len(), 4);
        for v in p.vertices() {
            assert!(pts.position(v).is_some());
        }
    }

    #[test]
    fn square_is_delzant() {
        let cert = unit_square().is_delzant();
        assert!(cert.delzant);
        for c in &cert.vertices {
            assert_eq!(c.det.map(i64::abs), Some(1));
        }
    }

    #[test]
    fn remark_simplex_fails_delzant_with_det_two() {
        let cert = remark_simplex().is_delzant();
        assert!(!cert.delzant);
        let origin = cert
            .vertices
            .iter()
            .find(|c| c.vertex == vec![0, 0, 0])
            .unwrap();
        assert_eq!(origin.det.map(i64::abs), Some(2));
    }

    #[test]
    fn segment_is_delzant() {
        for p in [2, 5] {
            let seg = LatticePolytope::from_vertices(1, vec![vec![0], vec![p]]).unwrap();
            assert!(seg.is_delzant().delzant);
        }
    }

    #[test]
    fn delzant_invariant_under_relabeling_and_permutation() {
        let p1 = LatticePolytope::from_vertices(
            2,
            vec![vec![1, 1], vec![0, 1], vec![1, 0], vec![0, 0]],
        )
        .unwrap();
        assert_eq!(p1.is_delzant().delzant, unit_square().is_delzant().delzant);
        // coordinate permutation of the Remark simplex stays non-Delzant
        let p2 = LatticePolytope::from_vertices(
            3,
            vec![vec![0, 0, 0], vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]],
        )
        .unwrap();
        assert!(!p2.is_delzant().delzant);
    }

    #[test]
    fn volumes() {
        let sq = unit_square();
        assert_eq!(sq.euclidean_volume(), BigRational::from(BigInt::from(1)));
        let tri =
            LatticePolytope::from_vertices(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(
            tri.euclidean_volume(),
            BigRational::new(BigInt::from(1), BigInt::from(2))
        );
        let seg = LatticePolytope::from_vertices(1, vec![vec![0], vec![2]]).unwrap();
        assert_eq!(seg.euclidean_volume(), BigRational::from(BigInt::from(2)));
        // Remark simplex: det of edge matrix is 2, volume 2 * (1/6) * ... = 1/3
        let remark = remark_simplex();
        assert_eq!(
            remark.euclidean_volume(),
            BigRational::new(BigInt::from(1), BigInt::from(3))
        );
    }

    #[test]
    fn ehrhart_counts_follow_closed_forms() {
        let sq = unit_square();
        for n in 1..=5u32 {
            assert_eq!(sq.ehrhart_count(n).unwrap(), ((n + 1) * (n + 1)) as usize);
        }
        let seg = LatticePolytope::from_vertices(1, vec![vec![0], vec![1]]).unwrap();
        for n in 1..=5u32 {
            assert_eq!(seg.ehrhart_count(n).unwrap(), (n + 1) as usize);
        }
        let tri =
            LatticePolytope::from_vertices(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        for n in 1..=5u32 {
            let expect = ((n + 1) * (n + 2) / 2) as usize;
            assert_eq!(tri.ehrhart_count(n).unwrap(), expect);
        }
    }

    #[test]
    fn ehrhart_leading_term_approaches_volume() {
        use num_traits::ToPrimitive;
        let sq = unit_square();
        let vol = sq.euclidean_volume().to_f64().unwrap();
        let gap = |n: u32| {
            let c = sq.ehrhart_count(n).unwrap() as f64;
            (c / (n as f64).powi(2) - vol).abs() / vol
        };
        assert!(gap(20) < gap(10));
        assert!(gap(40) < gap(20));
    }

    #[test]
    fn unit_cube() {
        let verts: Vec<Vec<i64>> = (0..8)
            .map(|k| vec![k & 1, (k >> 1) & 1, (k >> 2) & 1])
            .collect();
        let cube = LatticePolytope::from_vertices(3, verts).unwrap();
        assert_eq!(cube.facets().len(), 6);
        assert!(cube.is_delzant().delzant);
        assert_eq!(cube.euclidean_volume(), BigRational::from(BigInt::from(1)));
        assert_eq!(cube.edges().len(), 12);
        for n in 1..=3u32 {
            assert_eq!(cube.ehrhart_count(n).unwrap(), ((n + 1).pow(3)) as usize);
        }
    }

    #[test]
    fn three_dimensional_simplex() {
        let s3 = LatticePolytope::standard_simplex(3, 1).unwrap();
        assert!(s3.is_delzant().delzant);
        assert_eq!(
            s3.euclidean_volume(),
            BigRational::new(BigInt::from(1), BigInt::from(6))
        );
        // binom(N+3, 3)
        for n in 1..=4u32 {
            let expect = ((n + 1) * (n + 2) * (n + 3) / 6) as usize;
            assert_eq!(s3.ehrhart_count(n).unwrap(), expect);
        }
        assert_eq!(s3.edges().len(), 6);
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&unit_square()).unwrap(), 2);
        let tri =
            LatticePolytope::from_vertices(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(max_degree(&tri).unwrap(), 1);
    }
}
