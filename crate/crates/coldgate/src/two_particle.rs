//! Two atoms in separate moving wells coupled by a contact interaction.
//!
//! The pair state is a coefficient matrix C_{mn} over the two comoving Fock
//! bases. Its equation of motion is
//!
//!   i dC/dt = H1 C + C H2^T + g Sum_{pq} T_{mn,pq}(t) C_{pq},
//!
//! where H1, H2 are the single-atom comoving Hamiltonians and T is the
//! contact overlap tensor
//!
//!   T_{mn,pq}(t) = Int phi_m phi_p (x - c1) phi_n phi_q (x - c2) dx
//!
//! over the instantaneous well centers c1, c2 and widths. Because every basis
//! function is a polynomial times a Gaussian, merging the two Gaussians turns
//! T into a Gauss-Hermite sum of separable outer products; the interaction is
//! applied node by node in O(nodes * levels^2) without ever materializing the
//! four-index tensor.
//!
//! The 1D coupling follows from integrating out two tight transverse
//! directions of frequency omega_perp: g = 2 hbar omega_perp a_s. A complex
//! scattering length with Im(a_s) < 0 models inelastic loss; the resulting
//! non-Hermitian term can only shrink the norm.

use ndarray::{Array1, Array2, Array4, ArrayView1};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hermite::{eigenfunction_poly_parts, gauss_hermite};
use crate::integrate::{propagate, IntegrateError, StepControl};
use crate::quad::gl4;
use crate::single_particle::{self, SingleOutcome};
use crate::trajectory::Trajectory;

/// Most levels per atom the dense pair propagation is willing to handle.
pub const MAX_LEVELS: usize = 20;

/// Tail population above which a pair result should be treated as
/// truncation-limited.
pub const TAIL_WARN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TwoParticleError {
    #[error("Im(a_s) = {0} would amplify the pair amplitude; loss requires Im(a_s) <= 0")]
    GainfulScattering(f64),
    #[error("pair basis of {0} levels per atom exceeds the supported {MAX_LEVELS}")]
    TooManyLevels(usize),
    #[error("trajectories span different windows: {0} vs {1}")]
    WindowMismatch(f64, f64),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Contact interaction between the pair, reduced to the lattice axis.
#[derive(Debug, Clone, Copy)]
pub struct InteractionModel {
    scattering_length: C64,
    transverse_omega: f64,
}

impl InteractionModel {
    pub fn new(scattering_length: C64, transverse_omega: f64) -> Result<Self, TwoParticleError> {
        if scattering_length.im > 0.0 {
            return Err(TwoParticleError::GainfulScattering(scattering_length.im));
        }
        assert!(transverse_omega > 0.0);
        Ok(Self { scattering_length, transverse_omega })
    }

    /// Elastic contact interaction, no transverse loss channel.
    pub fn elastic(scattering_length: f64, transverse_omega: f64) -> Self {
        Self::new(C64::new(scattering_length, 0.0), transverse_omega)
            .expect("real scattering length is always admissible")
    }

    pub fn scattering_length(&self) -> C64 {
        self.scattering_length
    }

    /// Axial coupling constant g = 2 omega_perp a_s (hbar = 1).
    pub fn coupling(&self) -> C64 {
        2.0 * self.transverse_omega * self.scattering_length
    }
}

/// Instantaneous mean-field shift of the ground-ground pair: g times the
/// overlap of the two single-atom ground densities. For equal widths a0 and
/// separation D this is g e^{-D^2 / (2 a0^2)} / (sqrt(2 pi) a0).
pub fn ground_energy_shift(
    model: &InteractionModel,
    t1: &Trajectory,
    t2: &Trajectory,
    t: f64,
) -> C64 {
    let (a1, a2) = (t1.ground_width(t), t2.ground_width(t));
    let delta = t1.center(t) - t2.center(t);
    let var = 0.5 * (a1 * a1 + a2 * a2);
    let density = (-delta * delta / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    model.coupling() * density
}

/// Time integral of [`ground_energy_shift`] across the window: the phase a
/// perfectly adiabatic ground-state collision imprints (its negative appears
/// on the evolved amplitude), to first order in the coupling. The imaginary
/// part, when the scattering length is lossy, gives the amplitude decay
/// exponent. For couplings where the quadratic level repulsion matters (a few
/// percent already near g ~ 0.3), use [`adiabatic_collision_phase_exact`].
pub fn adiabatic_collision_phase(
    model: &InteractionModel,
    t1: &Trajectory,
    t2: &Trajectory,
) -> C64 {
    let tau = t1.half_window();
    let panels = ((4.0 * tau * t1.omega(-tau)) as usize).clamp(256, 1 << 20);
    adiabatic_collision_phase_with_panels(model, t1, t2, panels)
}

/// [`adiabatic_collision_phase`] on an explicit quadrature panel count, for
/// convergence studies under panel doubling.
pub fn adiabatic_collision_phase_with_panels(
    model: &InteractionModel,
    t1: &Trajectory,
    t2: &Trajectory,
    panels: usize,
) -> C64 {
    let tau = t1.half_window();
    gl4(|t| ground_energy_shift(model, t1, t2, t), -tau, tau, panels)
}

/// Interacting ground energy of the frozen pair at time `t`, minus the frozen
/// non-interacting ground energy: the all-orders counterpart of
/// [`ground_energy_shift`]. The frozen Hamiltonian is diagonal single-well
/// energies plus the contact tensor, diagonalized over the same
/// `levels`-per-atom product basis the dynamics uses, so phases extracted
/// from a propagated pair converge to its time integral in the adiabatic
/// limit. Elastic interactions only.
pub fn exact_ground_shift(
    model: &InteractionModel,
    t1: &Trajectory,
    t2: &Trajectory,
    t: f64,
    levels: usize,
) -> f64 {
    let g = model.coupling();
    assert!(g.im == 0.0, "frozen-pair energies need an elastic interaction");
    let tensor = contact_tensor(t1, t2, t, levels);
    let (w1, w2) = (t1.omega(t), t2.omega(t));
    let dim = levels * levels;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for m in 0..levels {
        for n in 0..levels {
            let row = m * levels + n;
            h[(row, row)] = (m as f64 + 0.5) * w1 + (n as f64 + 0.5) * w2;
            for p in 0..levels {
                for q in 0..levels {
                    h[(row, p * levels + q)] += g.re * tensor[(m, n, p, q)];
                }
            }
        }
    }
    lowest_eigenvalue(&h) - 0.5 * (w1 + w2)
}

/// Time integral of [`exact_ground_shift`]: the adiabatic collision phase
/// with the interaction treated to all orders within the truncated basis.
pub fn adiabatic_collision_phase_exact(
    model: &InteractionModel,
    t1: &Trajectory,
    t2: &Trajectory,
    levels: usize,
    panels: usize,
) -> f64 {
    let tau = t1.half_window();
    crate::quad::gl4_real(|t| exact_ground_shift(model, t1, t2, t, levels), -tau, tau, panels)
}

/// Smallest eigenvalue of a symmetric matrix by inverse iteration with
/// Rayleigh-quotient shifts. Seeded at the lowest diagonal entry, which for
/// near-diagonal Hamiltonians is a first-order estimate of the target, so a
/// couple of cubically convergent steps reach machine precision.
fn lowest_eigenvalue(h: &Array2<f64>) -> f64 {
    let n = h.nrows();
    let mut seed = 0;
    for i in 1..n {
        if h[(i, i)] < h[(seed, seed)] {
            seed = i;
        }
    }
    let scale = (0..n)
        .map(|r| (0..n).map(|c| h[(r, c)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut sigma = h[(seed, seed)];
    let mut v = vec![0.0; n];
    v[seed] = 1.0;
    let mut lambda = sigma;
    let mut hv = vec![0.0; n];
    for _ in 0..50 {
        let w = solve_shifted(h, sigma, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        for (r, out) in hv.iter_mut().enumerate() {
            *out = (0..n).map(|c| h[(r, c)] * v[c]).sum();
        }
        lambda = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let residual =
            hv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual <= 1e-13 * scale {
            break;
        }
        sigma = lambda;
    }
    lambda
}

/// Solve (h - sigma I) x = rhs by partial-pivot LU elimination on a copy.
/// Near-singular shifts are exactly the inverse-iteration sweet spot; a zero
/// pivot is nudged to keep the direction usable.
fn solve_shifted(h: &Array2<f64>, sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = h.nrows();
    let mut a = h.to_owned();
    for i in 0..n {
        a[(i, i)] -= sigma;
    }
    let mut x = rhs.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[(r, col)].abs() > a[(piv, col)].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                let tmp = a[(col, c)];
                a[(col, c)] = a[(piv, c)];
                a[(piv, c)] = tmp;
            }
            x.swap(col, piv);
        }
        let d = if a[(col, col)] == 0.0 { f64::EPSILON } else { a[(col, col)] };
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            for c in col + 1..n {
                a[(r, c)] -= f * a[(col, c)];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in col + 1..n {
            s -= a[(col, c)] * x[c];
        }
        let d = if a[(col, col)] == 0.0 { f64::EPSILON } else { a[(col, col)] };
        x[col] = s / d;
    }
    x
}

/// Gauss-Hermite machinery for applying the contact tensor at one instant.
struct ContactApplier {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Polynomial parts of both bases at every node: nodes x levels.
    u: Vec<f64>,
    v: Vec<f64>,
    cv: Vec<C64>,
}

impl ContactApplier {
    fn new(levels: usize) -> Self {
        let q = 2 * levels + 2;
        let (nodes, weights) = gauss_hermite(q);
        Self { nodes, weights, u: vec![0.0; q * levels], v: vec![0.0; q * levels], cv: vec![C64::new(0.0, 0.0); levels] }
    }

    /// Prepare node data for time `t`; returns the shared scalar prefactor
    /// sigma e^{-D^2/(a1^2+a2^2)} / (a1 a2).
    fn prepare(&mut self, t1: &Trajectory, t2: &Trajectory, t: f64, levels: usize) -> f64 {
        let (a1, a2) = (t1.ground_width(t), t2.ground_width(t));
        let (c1, c2) = (t1.center(t), t2.center(t));
        let delta = c1 - c2;
        let ssum = a1 * a1 + a2 * a2;
        let sigma = a1 * a2 / ssum.sqrt();
        let mu = (c1 * a2 * a2 + c2 * a1 * a1) / ssum;
        for (j, &y) in self.nodes.iter().enumerate() {
            let xi1 = (mu - c1) / a1 + sigma / a1 * y;
            let xi2 = (mu - c2) / a2 + sigma / a2 * y;
            eigenfunction_poly_parts(xi1, levels - 1, &mut self.u[j * levels..(j + 1) * levels]);
            eigenfunction_poly_parts(xi2, levels - 1, &mut self.v[j * levels..(j + 1) * levels]);
        }
        sigma / (a1 * a2) * (-delta * delta / ssum).exp()
    }

    /// Accumulate prefactor * Sum_q T C into `out` (row-major levels^2).
    fn apply(&mut self, coupling: C64, prefactor: f64, c: &[C64], out: &mut [C64], levels: usize) {
        for j in 0..self.nodes.len() {
            let uj = &self.u[j * levels..(j + 1) * levels];
            let vj = &self.v[j * levels..(j + 1) * levels];
            // cv = C vj, s = uj . cv
            let mut s = C64::new(0.0, 0.0);
            for m in 0..levels {
                let mut acc = C64::new(0.0, 0.0);
                let row = &c[m * levels..(m + 1) * levels];
                for n in 0..levels {
                    acc += row[n] * vj[n];
                }
                self.cv[m] = acc;
                s += uj[m] * acc;
            }
            let scale = coupling * (self.weights[j] * prefactor) * s;
            for m in 0..levels {
                let um = scale * uj[m];
                let row = &mut out[m * levels..(m + 1) * levels];
                for n in 0..levels {
                    row[n] += um * vj[n];
                }
            }
        }
    }
}

/// Materialized contact tensor T_{mn,pq} at one instant; diagnostic and test
/// surface for the node-based applier.
pub fn contact_tensor(t1: &Trajectory, t2: &Trajectory, t: f64, levels: usize) -> Array4<f64> {
    let mut applier = ContactApplier::new(levels);
    let prefactor = applier.prepare(t1, t2, t, levels);
    let mut out = Array4::zeros((levels, levels, levels, levels));
    for m in 0..levels {
        for n in 0..levels {
            for p in 0..levels {
                for q in 0..levels {
                    let mut acc = 0.0;
                    for j in 0..applier.nodes.len() {
                        let uj = &applier.u[j * levels..(j + 1) * levels];
                        let vj = &applier.v[j * levels..(j + 1) * levels];
                        acc += applier.weights[j] * uj[m] * uj[p] * vj[n] * vj[q];
                    }
                    out[(m, n, p, q)] = prefactor * acc;
                }
            }
        }
    }
    out
}

/// Result of propagating the pair across the window.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    /// Final coefficient matrix C_{mn}.
    pub amplitudes: Array2<C64>,
    /// Total remaining norm^2; < 1 only through inelastic loss (or residual
    /// integrator drift, tracked separately).
    pub survival: f64,
    /// Peak elastic norm drift over the run when the interaction is real.
    pub norm_drift: f64,
    /// Population in the top two levels of either atom.
    pub tail_population: f64,
    pub steps: usize,
}

impl PairOutcome {
    pub fn truncation_suspect(&self) -> bool {
        self.tail_population > TAIL_WARN_THRESHOLD
    }
}

/// Propagate an arbitrary pair coefficient matrix across the whole window.
pub fn evolve_pair_state(
    t1: &Trajectory,
    t2: &Trajectory,
    model: &InteractionModel,
    control: &StepControl,
    initial: &Array2<C64>,
) -> Result<PairOutcome, TwoParticleError> {
    let levels = initial.nrows();
    assert_eq!(levels, initial.ncols(), "pair state must be square");
    if levels > MAX_LEVELS {
        return Err(TwoParticleError::TooManyLevels(levels));
    }
    if (t1.half_window() - t2.half_window()).abs() > 1e-12 * t1.half_window() {
        return Err(TwoParticleError::WindowMismatch(t1.half_window(), t2.half_window()));
    }
    let tau = t1.half_window();
    let coupling = model.coupling();
    let lossless = coupling.im == 0.0;

    let mut h1 = Array2::<C64>::zeros((levels, levels));
    let mut h2 = Array2::<C64>::zeros((levels, levels));
    let mut applier = ContactApplier::new(levels);
    let mut hc = vec![C64::new(0.0, 0.0); levels * levels];

    let rhs = |t: f64, y: ArrayView1<C64>, dy: &mut Array1<C64>| {
        single_particle::hamiltonian_into(t1, t, &mut h1);
        single_particle::hamiltonian_into(t2, t, &mut h2);
        let c = y.as_slice().expect("pair state is contiguous");
        hc.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        // hc = H1 C + C H2^T
        for m in 0..levels {
            for p in 0..levels {
                let hmp = h1[(m, p)];
                if hmp.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &c[p * levels..(p + 1) * levels];
                let out = &mut hc[m * levels..(m + 1) * levels];
                for n in 0..levels {
                    out[n] += hmp * row[n];
                }
            }
        }
        for m in 0..levels {
            let row = &c[m * levels..(m + 1) * levels];
            let out = &mut hc[m * levels..(m + 1) * levels];
            for q in 0..levels {
                let cq = row[q];
                if cq.norm_sqr() == 0.0 {
                    continue;
                }
                for n in 0..levels {
                    out[n] += cq * h2[(n, q)];
                }
            }
        }
        let prefactor = applier.prepare(t1, t2, t, levels);
        applier.apply(coupling, prefactor, c, &mut hc, levels);
        let minus_i = C64::new(0.0, -1.0);
        for (d, h) in dy.iter_mut().zip(hc.iter()) {
            *d = minus_i * *h;
        }
    };

    let flat: Array1<C64> = Array1::from_iter(initial.iter().copied());
    let run = propagate(rhs, flat.view(), -tau, tau, control, None)?;

    let mut amplitudes = Array2::zeros((levels, levels));
    for m in 0..levels {
        for n in 0..levels {
            amplitudes[(m, n)] = run.y[m * levels + n];
        }
    }
    let survival: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let mut tail = 0.0;
    for m in 0..levels {
        for n in 0..levels {
            if m >= levels - 2 || n >= levels - 2 {
                tail += amplitudes[(m, n)].norm_sqr();
            }
        }
    }
    Ok(PairOutcome {
        amplitudes,
        survival,
        norm_drift: if lossless { run.max_norm_drift } else { 0.0 },
        tail_population: tail,
        steps: run.steps_accepted,
    })
}

/// A Fock-pair start (m, n) propagated along with its non-interacting
/// reference, from which the interaction-only phase is split off.
#[derive(Debug, Clone)]
pub struct FockPairOutcome {
    pub pair: PairOutcome,
    /// arg C_{mn}(tau) - arg(c1_m c2_n): the extra phase the interaction put
    /// on the surviving pair amplitude, wrapped to (-pi, pi]. For a repulsive
    /// adiabatic collision this is minus the accumulated mean-field shift.
    pub collision_phase: f64,
    /// Population left in the starting pair, relative to the product
    /// evolution (removes single-atom excitation effects).
    pub pair_population_ratio: f64,
    pub reference: (SingleOutcome, SingleOutcome),
}

/// Propagate the pair starting from Fock levels (m, n).
pub fn evolve_fock_pair(
    t1: &Trajectory,
    t2: &Trajectory,
    model: &InteractionModel,
    control: &StepControl,
    levels: usize,
    start: (usize, usize),
) -> Result<FockPairOutcome, TwoParticleError> {
    assert!(start.0 < levels && start.1 < levels);
    let mut initial = Array2::zeros((levels, levels));
    initial[start] = C64::new(1.0, 0.0);
    let pair = evolve_pair_state(t1, t2, model, control, &initial)?;
    let one = single_particle::evolve_fock_start(t1, start.0, levels, control)?;
    let two = single_particle::evolve_fock_start(t2, start.1, levels, control)?;
    let amp = pair.amplitudes[start];
    let ref_amp = one.amplitudes[start.0] * two.amplitudes[start.1];
    let collision_phase = single_particle::wrap_phase(amp.arg() - ref_amp.arg());
    let pair_population_ratio = amp.norm_sqr() / ref_amp.norm_sqr();
    Ok(FockPairOutcome { pair, collision_phase, pair_population_ratio, reference: (one, two) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eigenfunctions;
    use crate::trajectory::Trajectory;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Two wells gliding toward each other and holding at separation
    /// `gap`: base positions 0 and `start_gap`, each moving half the
    /// difference inward.
    fn approach_pair(start_gap: f64, gap: f64, rise: f64, hold: f64) -> (Trajectory, Trajectory) {
        let tau = 2.0 * hold + 5.0 * rise;
        let move_by = 0.5 * (start_gap - gap);
        let t1 = Trajectory::sigmoid(tau, 1.0, 1.0, 0.0, rise, hold, move_by).unwrap();
        let t2 = Trajectory::sigmoid(tau, 1.0, 1.0, start_gap, rise, hold, -move_by).unwrap();
        (t1, t2)
    }

    #[test]
    fn ground_shift_matches_the_gaussian_overlap_form() {
        let (t1, t2) = approach_pair(6.0, 1.0, 5.0, 8.0);
        let model = InteractionModel::elastic(0.05, 1.0);
        // At the window edge: separation 6, equal unit widths.
        let g = model.coupling().re;
        let tau = t1.half_window();
        let expect = g / (2.0 * PI).sqrt() * (-36.0 / 2.0f64).exp();
        assert_abs_diff_eq!(ground_energy_shift(&model, &t1, &t2, -tau).re, expect, epsilon = 1e-15);
        // Mid-hold: separation = 1.
        let expect_mid = g / (2.0 * PI).sqrt() * (-0.5f64).exp();
        assert_abs_diff_eq!(ground_energy_shift(&model, &t1, &t2, 0.0).re, expect_mid, epsilon = 1e-9);
    }

    #[test]
    fn contact_tensor_reproduces_closed_forms() {
        let (t1, t2) = approach_pair(4.0, 1.5, 4.0, 6.0);
        for t in [-t1.half_window(), -3.0, 0.0] {
            let tensor = contact_tensor(&t1, &t2, t, 4);
            let delta = t1.center(t) - t2.center(t);
            // Equal widths a0 = 1: T_0000 = e^{-D^2/2} / sqrt(2 pi).
            let expect = (-delta * delta / 2.0).exp() / (2.0 * PI).sqrt();
            assert_abs_diff_eq!(tensor[(0, 0, 0, 0)], expect, epsilon = 1e-12);
            // Index-swap symmetries within each atom.
            for m in 0..4 {
                for n in 0..4 {
                    for p in 0..4 {
                        for q in 0..4 {
                            assert_abs_diff_eq!(
                                tensor[(m, n, p, q)],
                                tensor[(p, n, m, q)],
                                epsilon = 1e-13
                            );
                            assert_abs_diff_eq!(
                                tensor[(m, n, p, q)],
                                tensor[(m, q, p, n)],
                                epsilon = 1e-13
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn contact_tensor_matches_grid_quadrature() {
        // Independent oracle: brute-force Simpson integration of the four
        // basis functions on a position grid, including unequal widths.
        let tau = 8.0;
        let t1 = Trajectory::at_rest(tau, 1.0, 1.0, 0.0);
        let t2 = Trajectory::at_rest(tau, 1.0, 1.44, 1.2); // width 1/1.2
        let levels = 5;
        let tensor = contact_tensor(&t1, &t2, 0.0, levels);

        let n_grid = 8000;
        let (lo, hi) = (-14.0, 14.0);
        let h = (hi - lo) / n_grid as f64;
        let (a1, a2) = (t1.ground_width(0.0), t2.ground_width(0.0));
        let (c1, c2) = (0.0, 1.2);
        let mut b1 = vec![0.0; levels];
        let mut b2 = vec![0.0; levels];
        let mut acc = vec![0.0; levels.pow(4)];
        for gp in 0..=n_grid {
            let x = lo + gp as f64 * h;
            let w = if gp == 0 || gp == n_grid {
                1.0
            } else if gp % 2 == 1 {
                4.0
            } else {
                2.0
            };
            eigenfunctions((x - c1) / a1, levels - 1, &mut b1);
            eigenfunctions((x - c2) / a2, levels - 1, &mut b2);
            let s1 = 1.0 / a1.sqrt();
            let s2 = 1.0 / a2.sqrt();
            for m in 0..levels {
                for n in 0..levels {
                    for p in 0..levels {
                        for q in 0..levels {
                            acc[((m * levels + n) * levels + p) * levels + q] += w
                                * (s1 * b1[m])
                                * (s1 * b1[p])
                                * (s2 * b2[n])
                                * (s2 * b2[q]);
                        }
                    }
                }
            }
        }
        for m in 0..levels {
            for n in 0..levels {
                for p in 0..levels {
                    for q in 0..levels {
                        let grid = acc[((m * levels + n) * levels + p) * levels + q] * h / 3.0;
                        assert_abs_diff_eq!(tensor[(m, n, p, q)], grid, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_interaction_factorizes() {
        let (t1, t2) = approach_pair(5.0, 1.0, 3.0, 4.0);
        let model = InteractionModel::elastic(0.0, 1.0);
        let control = StepControl::with_tol(1e-11);
        let out = evolve_fock_pair(&t1, &t2, &model, &control, 10, (0, 0)).unwrap();
        let (one, two) = &out.reference;
        for m in 0..10 {
            for n in 0..10 {
                let product = one.amplitudes[m] * two.amplitudes[n];
                assert!(
                    (out.pair.amplitudes[(m, n)] - product).norm() < 1e-8,
                    "({m},{n}) pair {:?} vs product {:?}",
                    out.pair.amplitudes[(m, n)],
                    product
                );
            }
        }
        assert!(out.collision_phase.abs() < 1e-8);
    }

    #[test]
    fn slow_collision_phase_tracks_the_adiabatic_integral() {
        let (t1, t2) = approach_pair(5.0, 1.0, 10.0, 20.0);
        let model = InteractionModel::elastic(0.02, 1.0);
        let control = StepControl::with_tol(1e-11);
        let target = adiabatic_collision_phase(&model, &t1, &t2).re;
        assert!(target > 0.2, "test wants an O(1) phase, got {target}");
        let out = evolve_fock_pair(&t1, &t2, &model, &control, 10, (0, 0)).unwrap();
        // Evolved amplitude carries e^{-i Int dE}: minus the integral.
        let diff = single_particle::wrap_phase(out.collision_phase + target);
        assert!(
            diff.abs() < 0.02 * target,
            "collision phase {} vs adiabatic {}",
            out.collision_phase,
            -target
        );
        assert!(out.pair.norm_drift < 1e-8);
        assert_abs_diff_eq!(out.pair.survival, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn frozen_pair_eigenvalue_matches_power_iteration() {
        // Independent oracle: assemble the same frozen Hamiltonian from the
        // public contact tensor and run plain power iteration on (c I - H)
        // with a Gershgorin bound c, which needs no linear solves.
        let tau = 6.0;
        let t1 = Trajectory::at_rest(tau, 1.0, 1.0, 0.0);
        let t2 = Trajectory::at_rest(tau, 1.0, 1.3, 0.9);
        let model = InteractionModel::elastic(0.08, 1.0);
        let levels = 5;
        let g = model.coupling().re;
        let tensor = contact_tensor(&t1, &t2, 0.0, levels);
        let dim = levels * levels;
        let mut h = vec![0.0; dim * dim];
        for m in 0..levels {
            for n in 0..levels {
                let row = m * levels + n;
                h[row * dim + row] = (m as f64 + 0.5) * 1.0 + (n as f64 + 0.5) * 1.3;
                for p in 0..levels {
                    for q in 0..levels {
                        h[row * dim + p * levels + q] += g * tensor[(m, n, p, q)];
                    }
                }
            }
        }
        let c = (0..dim)
            .map(|r| {
                h[r * dim + r]
                    + (0..dim).filter(|&x| x != r).map(|x| h[r * dim + x].abs()).sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        let mut z = vec![1.0 / (dim as f64).sqrt(); dim];
        for _ in 0..6000 {
            let mut next = vec![0.0; dim];
            for (r, out) in next.iter_mut().enumerate() {
                *out = (0..dim).map(|x| (if r == x { c } else { 0.0 } - h[r * dim + x]) * z[x]).sum();
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (zi, ni) in z.iter_mut().zip(&next) {
                *zi = ni / norm;
            }
        }
        let mut rayleigh = 0.0;
        for r in 0..dim {
            rayleigh += z[r] * (0..dim).map(|x| h[r * dim + x] * z[x]).sum::<f64>();
        }
        let shift = exact_ground_shift(&model, &t1, &t2, 0.0, levels);
        assert_abs_diff_eq!(shift + 0.5 * (1.0 + 1.3), rayleigh, epsilon = 1e-9);
    }

    #[test]
    fn exact_shift_reduces_to_first_order_for_weak_coupling() {
        let tau = 6.0;
        let t1 = Trajectory::at_rest(tau, 1.0, 1.0, 0.0);
        let t2 = Trajectory::at_rest(tau, 1.0, 1.0, 1.2);
        let model = InteractionModel::elastic(1e-4, 1.0);
        let first = ground_energy_shift(&model, &t1, &t2, 0.0).re;
        let exact = exact_ground_shift(&model, &t1, &t2, 0.0, 8);
        assert!((exact - first).abs() < 1e-3 * first, "exact {exact} vs first-order {first}");
        // Level repulsion pushes the true ground energy strictly below the
        // first-order (variational) value for a repulsive contact.
        assert!(exact < first);
    }

    #[test]
    fn first_order_overshoot_scales_with_coupling_squared() {
        let tau = 6.0;
        let t1 = Trajectory::at_rest(tau, 1.0, 1.0, 0.0);
        let t2 = Trajectory::at_rest(tau, 1.0, 1.0, 0.0);
        let gap = |a: f64| {
            let model = InteractionModel::elastic(a, 1.0);
            ground_energy_shift(&model, &t1, &t2, 0.0).re
                - exact_ground_shift(&model, &t1, &t2, 0.0, 10)
        };
        let (wide, narrow) = (gap(0.05), gap(0.025));
        assert!(wide > 0.0 && narrow > 0.0);
        let ratio = wide / narrow;
        assert!((ratio - 4.0).abs() < 0.3, "overshoot ratio {ratio} not quadratic");
    }

    #[test]
    fn collision_phase_is_linear_in_the_coupling() {
        let (t1, t2) = approach_pair(5.0, 1.2, 6.0, 8.0);
        let control = StepControl::with_tol(1e-10);
        let phases: Vec<f64> = [0.004, 0.002]
            .iter()
            .map(|&a| {
                let model = InteractionModel::elastic(a, 1.0);
                evolve_fock_pair(&t1, &t2, &model, &control, 8, (0, 0))
                    .unwrap()
                    .collision_phase
            })
            .collect();
        let ratio = phases[0] / phases[1];
        assert!((ratio - 2.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn lossy_scattering_decays_the_norm() {
        let (t1, t2) = approach_pair(5.0, 0.8, 8.0, 12.0);
        let model = InteractionModel::new(C64::new(0.02, -0.004), 1.0).unwrap();
        let control = StepControl::with_tol(1e-10);
        let out = evolve_fock_pair(&t1, &t2, &model, &control, 10, (0, 0)).unwrap();
        let loss = 1.0 - out.pair.survival;
        assert!(loss > 1e-3, "expected visible loss, got {loss}");
        // First-order estimate: survival = e^{2 Im Int dE}.
        let expect = (2.0 * adiabatic_collision_phase(&model, &t1, &t2).im).exp();
        assert!(
            (out.pair.survival - expect).abs() < 0.05 * (1.0 - expect),
            "survival {} vs first-order {expect}",
            out.pair.survival
        );
        // Heavier loss for larger |Im a_s|.
        let model2 = InteractionModel::new(C64::new(0.02, -0.008), 1.0).unwrap();
        let out2 = evolve_fock_pair(&t1, &t2, &model2, &control, 10, (0, 0)).unwrap();
        assert!(out2.pair.survival < out.pair.survival);
    }

    #[test]
    fn gain_is_rejected() {
        assert!(matches!(
            InteractionModel::new(C64::new(0.05, 1e-3), 1.0),
            Err(TwoParticleError::GainfulScattering(_))
        ));
    }

    #[test]
    fn swapping_the_atoms_transposes_the_state() {
        let (t1, t2) = approach_pair(4.0, 1.0, 4.0, 5.0);
        let model = InteractionModel::elastic(0.03, 1.0);
        let control = StepControl::with_tol(1e-10);
        let fwd = evolve_fock_pair(&t1, &t2, &model, &control, 8, (0, 1)).unwrap();
        let swp = evolve_fock_pair(&t2, &t1, &model, &control, 8, (1, 0)).unwrap();
        for m in 0..8 {
            for n in 0..8 {
                assert!(
                    (fwd.pair.amplitudes[(m, n)] - swp.pair.amplitudes[(n, m)]).norm() < 1e-8
                );
            }
        }
    }

    #[test]
    fn truncation_converges_with_the_basis() {
        // The contact term couples virtually to every even level with slowly
        // decaying weight, so convergence in the per-atom basis size is
        // gradual; what must hold is that successive enlargements change the
        // answer less and less, and that no real population reaches the top.
        let (t1, t2) = approach_pair(5.0, 0.9, 5.0, 6.0);
        let model = InteractionModel::elastic(0.05, 1.0);
        let control = StepControl::with_tol(1e-10);
        let amp = |levels: usize| {
            evolve_fock_pair(&t1, &t2, &model, &control, levels, (0, 0))
                .unwrap()
                .pair
                .amplitudes[(0, 0)]
        };
        let (a9, a12, a15) = (amp(9), amp(12), amp(15));
        let d1 = (a9 - a12).norm();
        let d2 = (a12 - a15).norm();
        assert!(d2 < d1, "enlarging the basis must tighten the answer: {d1:.2e} -> {d2:.2e}");
        assert!(d2 < 2e-4, "residual truncation change too large: {d2:.2e}");
        let small = evolve_fock_pair(&t1, &t2, &model, &control, 9, (0, 0)).unwrap();
        assert!(!small.pair.truncation_suspect());
    }
}

