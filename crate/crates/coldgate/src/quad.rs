//! Composite quadrature rules over uniform panels.
//!
//! Everything here is deterministic: fixed nodes, fixed weights, no adaptive
//! subdivision. Convergence tests double the panel count instead.

use num_complex::Complex64 as C64;

/// 4-point Gauss-Legendre nodes on [-1, 1].
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];

/// Weights paired with [`GL4_NODES`]; they sum to 2.
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_85,
];

/// Integrate `f` over `[a, b]` with `panels` composite 4-point Gauss-Legendre
/// panels. Exact for polynomials up to degree 7 per panel.
pub fn gl4<F>(f: F, a: f64, b: f64, panels: usize) -> C64
where
    F: Fn(f64) -> C64,
{
    assert!(panels > 0, "need at least one panel");
    let h = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            acc += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// Real-valued convenience wrapper around [`gl4`].
pub fn gl4_real<F>(f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    gl4(|t| C64::new(f(t), 0.0), a, b, panels).re
}

/// Composite Simpson rule with `n` (even) intervals. Kept as an independent
/// rule so tests can cross-check [`gl4`] results along a different route.
pub fn simpson<F>(f: F, a: f64, b: f64, n: usize) -> C64
where
    F: Fn(f64) -> C64,
{
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even interval count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + k as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Cumulative integral of `f` from `t0`, returned at the `n + 1` uniform grid
/// points spanning `[t0, t1]`. Each interval is integrated with one GL4 panel,
/// so the per-interval error is O(h^9) and the running sum stays accurate even
/// for oscillatory integrands.
pub fn cumulative_gl4<F>(f: F, t0: f64, t1: f64, n: usize) -> (Vec<f64>, Vec<C64>)
where
    F: Fn(f64) -> C64,
{
    assert!(n > 0);
    let h = (t1 - t0) / n as f64;
    let mut ts = Vec::with_capacity(n + 1);
    let mut vals = Vec::with_capacity(n + 1);
    let mut acc = C64::new(0.0, 0.0);
    ts.push(t0);
    vals.push(acc);
    for k in 0..n {
        let mid = t0 + (k as f64 + 0.5) * h;
        for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            acc += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
        ts.push(t0 + (k + 1) as f64 * h);
        vals.push(acc);
    }
    (ts, vals)
}
