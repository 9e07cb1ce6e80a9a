//! Gauss-Hermite quadrature and harmonic-oscillator eigenfunctions.
//!
//! Rules use the physicists' weight exp(-x^2). Nodes are found by Newton
//! iteration on the orthonormal Hermite recurrence, which stays well
//! conditioned far beyond the order needed here (a few tens of nodes).

/// Nodes and weights of the `q`-point Gauss-Hermite rule for
/// integral f(x) exp(-x^2) dx, nodes in ascending order.
pub fn gauss_hermite(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let half = (q + 1) / 2;
    let mut found: Vec<f64> = Vec::with_capacity(half);
    for i in 0..half {
        // Stroud & Secrest style initial guesses, largest root first; later
        // guesses extrapolate from the roots already found.
        let mut z = match i {
            0 => {
                let anu = (2 * q + 1) as f64;
                anu.sqrt() - 1.85575 * anu.powf(-1.0 / 6.0)
            }
            1 => found[0] - 1.14 * (q as f64).powf(0.426) / found[0],
            2 => 1.86 * found[1] - 0.86 * found[0],
            3 => 1.91 * found[2] - 0.91 * found[1],
            _ => 2.0 * found[i - 1] - found[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..120 {
            let (p, dp) = eval_orthonormal(q, z);
            pp = dp;
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        found.push(z);
        let w = 2.0 / (pp * pp);
        nodes[q - 1 - i] = z;
        nodes[i] = -z;
        weights[q - 1 - i] = w;
        weights[i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the orthonormal Hermite polynomial of degree `n`
/// (orthonormal under exp(-x^2) dx).
fn eval_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0_f64;
    let mut p = std::f64::consts::PI.powf(-0.25);
    for j in 0..n {
        let jf = j as f64;
        let p_next = x * (2.0 / (jf + 1.0)).sqrt() * p - (jf / (jf + 1.0)).sqrt() * p_prev;
        p_prev = p;
        p = p_next;
    }
    let dp = (2.0 * n as f64).sqrt() * p_prev;
    (p, dp)
}

/// Polynomial parts p_n of the first `n_max + 1` oscillator eigenfunctions at
/// dimensionless position `xi`: the eigenfunction is p_n(xi) exp(-xi^2 / 2).
/// Returning the polynomial part keeps Gauss-Hermite sums free of
/// overflow/underflow products; the Gaussian factor is handled analytically by
/// the caller.
pub fn eigenfunction_poly_parts(xi: f64, n_max: usize, out: &mut [f64]) {
    debug_assert!(out.len() > n_max);
    out[0] = std::f64::consts::PI.powf(-0.25);
    if n_max == 0 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * xi * out[0];
    for n in 1..n_max {
        let nf = n as f64;
        out[n + 1] = xi * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Oscillator eigenfunctions h_0..h_{n_max} at dimensionless position `xi`,
/// including the Gaussian factor: h_n(xi) = p_n(xi) exp(-xi^2 / 2). Unit-norm
/// under d(xi); a trap eigenfunction of width `a` is h_n((x - c)/a) / sqrt(a).
pub fn eigenfunctions(xi: f64, n_max: usize, out: &mut [f64]) {
    eigenfunction_poly_parts(xi, n_max, out);
    let g = (-0.5 * xi * xi).exp();
    for v in out.iter_mut().take(n_max + 1) {
        *v *= g;
    }
}
