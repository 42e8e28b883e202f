//! Adaptive quadrature: 1-D Gauss-Kronrod (G7, K15) with global interval
//! refinement, plus iterated tensor integration over axis-aligned boxes in
//! dimension <= 3 and a window-extension helper for Laplace-type
//! integrands.
//!
//! Values are generic over [`QuadValue`] so the same engine integrates real
//! densities and complex oscillatory integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

/// Scalar types the quadrature engine can accumulate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, by: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, by: f64) -> Self {
        self * by
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, by: f64) -> Self {
        self * by
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub err: f64,
    pub evals: usize,
    pub converged: bool,
}

// Kronrod-15 abscissae on [-1, 1] (symmetric; nonnegative half listed) and
// weights, with the embedded 7-point Gauss weights on the odd-index nodes.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One K15 evaluation on [a, b]: returns (kronrod, error estimate).
fn kronrod15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut resk = T::zero();
    let mut resg = T::zero();
    let mut resabs = 0.0;
    let center = f(mid);
    resk = resk.add(center.scale(WGK[7]));
    resg = resg.add(center.scale(WG[3]));
    resabs += WGK[7] * center.magnitude();
    let mut samples = [T::zero(); 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(mid - dx);
        let hi = f(mid + dx);
        samples[2 * j] = lo;
        samples[2 * j + 1] = hi;
        let pair = lo.add(hi);
        resk = resk.add(pair.scale(WGK[j]));
        resabs += WGK[j] * (lo.magnitude() + hi.magnitude());
        if j % 2 == 1 {
            resg = resg.add(pair.scale(WG[j / 2]));
        }
    }
    // resasc-style scaling from QUADPACK keeps the estimate sharp for
    // peaked integrands without over-refining smooth ones
    let meank = resk.scale(0.5);
    let mut resasc = WGK[7] * center.sub(meank).magnitude();
    for j in 0..7 {
        resasc += WGK[j]
            * (samples[2 * j].sub(meank).magnitude() + samples[2 * j + 1].sub(meank).magnitude());
    }
    resasc *= half.abs();
    let raw = resk.sub(resg).magnitude() * half.abs();
    let mut err = raw;
    if resasc != 0.0 && raw != 0.0 {
        err = resasc * (200.0 * raw / resasc).powf(1.5).min(1.0);
    }
    let _ = resabs;
    (resk.scale(half), err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

struct HeapEntry {
    err: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive 1-D integration of `f` over [a, b].
///
/// Refines the segment with the largest error estimate until the summed
/// error drops below `max(abs_tol, rel_tol * |I|)` or `max_segments` is
/// reached.
pub fn adaptive_1d<T: QuadValue, F: FnMut(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult<T> {
    // seed with several segments so narrow features cannot hide inside a
    // single rule application that happens to report a small error
    adaptive_1d_init(f, a, b, abs_tol, rel_tol, max_segments, 8)
}

fn adaptive_1d_init<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
    init: usize,
) -> QuadResult<T> {
    let mut evals = 0;
    let mut segments = Vec::with_capacity(init);
    let mut heap = BinaryHeap::new();
    for k in 0..init {
        let sa = a + (b - a) * k as f64 / init as f64;
        let sb = a + (b - a) * (k + 1) as f64 / init as f64;
        let (v, e) = kronrod15(&mut f, sa, sb);
        evals += 15;
        segments.push(Segment {
            a: sa,
            b: sb,
            value: v,
            err: e,
        });
        heap.push(HeapEntry { err: e, idx: k });
    }
    loop {
        let total: T = segments
            .iter()
            .fold(T::zero(), |acc, s| acc.add(s.value));
        let err: f64 = segments.iter().map(|s| s.err).sum();
        let bound = abs_tol.max(rel_tol * total.magnitude());
        if err <= bound {
            return QuadResult {
                value: total,
                err,
                evals,
                converged: true,
            };
        }
        if segments.len() >= max_segments {
            return QuadResult {
                value: total,
                err,
                evals,
                converged: false,
            };
        }
        let worst = loop {
            let top = heap.pop().expect("heap tracks every live segment");
            if segments[top.idx].err == top.err {
                break top.idx;
            }
            // stale entry from an earlier split
        };
        let (sa, sb) = (segments[worst].a, segments[worst].b);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = kronrod15(&mut f, sa, mid);
        let (v2, e2) = kronrod15(&mut f, mid, sb);
        evals += 30;
        segments[worst] = Segment {
            a: sa,
            b: mid,
            value: v1,
            err: e1,
        };
        heap.push(HeapEntry {
            err: e1,
            idx: worst,
        });
        segments.push(Segment {
            a: mid,
            b: sb,
            value: v2,
            err: e2,
        });
        heap.push(HeapEntry {
            err: e2,
            idx: segments.len() - 1,
        });
    }
}

/// Iterated adaptive integration over an axis-aligned box (dim <= 3).
///
/// Inner levels run at a tightened tolerance so the outer error estimate
/// dominates; the reported error adds a conservative allowance for the
/// inner truncation.
pub fn adaptive_box<T: QuadValue>(
    f: &(dyn Fn(&[f64]) -> T + Sync),
    window: &[(f64, f64)],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult<T> {
    let dim = window.len();
    assert!((1..=3).contains(&dim), "box quadrature limited to dim <= 3");
    let mut coords = vec![0.0; dim];
    let result = box_level(f, window, 0, &mut coords, abs_tol, rel_tol, max_segments);
    QuadResult {
        value: result.value,
        err: result.err + rel_tol * 0.2 * result.value.magnitude(),
        evals: result.evals,
        converged: result.converged,
    }
}

fn box_level<T: QuadValue>(
    f: &(dyn Fn(&[f64]) -> T + Sync),
    window: &[(f64, f64)],
    level: usize,
    coords: &mut [f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult<T> {
    let dim = window.len();
    let (a, b) = window[level];
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut evals = 0usize;
    let mut all_converged = true;
    // box windows are peak-centered, so two initial segments split at the
    // peak and the refinement loop does the rest
    let result = if level + 1 == dim {
        adaptive_1d_init(
            |x| {
                coords[level] = x;
                f(coords)
            },
            a,
            b,
            abs_tol,
            rel_tol,
            max_segments,
            2,
        )
    } else {
        // the closure re-enters the recursion for the remaining axes
        let inner_abs = abs_tol / width * 0.5;
        let inner_rel = rel_tol * 0.25;
        adaptive_1d_init(
            |x| {
                coords[level] = x;
                let mut sub = coords.to_vec();
                let inner = box_level(
                    f,
                    window,
                    level + 1,
                    &mut sub,
                    inner_abs,
                    inner_rel,
                    max_segments,
                );
                evals += inner.evals;
                all_converged &= inner.converged;
                inner.value
            },
            a,
            b,
            abs_tol,
            rel_tol,
            max_segments,
            2,
        )
    };
    QuadResult {
        value: result.value,
        err: result.err,
        evals: result.evals + evals,
        converged: result.converged && all_converged,
    }
}

/// Widen an axis-aligned window until the integrand magnitude at every face
/// midline falls below `peak * decay`, doubling the affected side up to
/// `max_rounds` times. Returns whether every face satisfied the bound.
pub fn extend_window(
    log_magnitude: &dyn Fn(&[f64]) -> f64,
    center: &[f64],
    window: &mut [(f64, f64)],
    log_decay: f64,
    max_rounds: usize,
) -> bool {
    let peak = log_magnitude(center);
    let mut ok = true;
    for (j, w) in window.iter_mut().enumerate() {
        for side in 0..2 {
            let mut rounds = 0;
            loop {
                let mut probe = center.to_vec();
                probe[j] = if side == 0 { w.0 } else { w.1 };
                if log_magnitude(&probe) <= peak + log_decay {
                    break;
                }
                if rounds >= max_rounds {
                    ok = false;
                    break;
                }
                let halfwidth = if side == 0 {
                    center[j] - w.0
                } else {
                    w.1 - center[j]
                };
                if side == 0 {
                    w.0 = center[j] - 1.7 * halfwidth;
                } else {
                    w.1 = center[j] + 1.7 * halfwidth;
                }
                rounds += 1;
            }
        }
    }
    ok
}
