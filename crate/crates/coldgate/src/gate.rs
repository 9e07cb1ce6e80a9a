//! Two-qubit phase-gate channel assembled from pair evolutions, and fidelity
//! figures over thermal motional input.
//!
//! The logical basis is |aa>, |ab>, |ba>, |bb> for atom 1 (lower site) and
//! atom 2 (upper site). Each logical branch rides its own pair of trap
//! trajectories; the a and b profiles move toward each other only for |ab>,
//! so only that branch collides. The channel is diagonal in the logical
//! basis, and for a motional input that is thermal and diagonal, everything
//! the fidelity needs is captured by the Gram kernel
//!
//!   M_{B B'} = Sum_{mn} p_m p_n <Phi^{B'}_{mn} | Phi^{B}_{mn}>,
//!
//! the thermally weighted overlaps of the final motional pair states of the
//! branches. Gauge-fixing M with the reference logical phases gives the
//! kernel K; the fidelity of logical input |psi> against the ideal
//! diagonal gate is then
//!
//!   F(psi) = q^T Re(K) q,  q_B = |psi_B|^2,
//!
//! a convex quadratic over the probability simplex (the phases of psi_B
//! cancel between the realized and ideal outputs). Its minimum — the
//! worst-case input — is found by closed-form edge candidates, multi-start
//! projected gradient descent, and an exact active-set polish; the
//! simplex-average has the closed form (tr Q + sum Q) / 20.
//!
//! By default the reference phases are the channel's own extracted phases
//! (deterministic, known phases are absorbed into the state definitions), so
//! the fidelity measures decoherence, motional excitation, and loss rather
//! than phase calibration. A fixed collision-phase target is available as an
//! alternative reference.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::integrate::StepControl;
use crate::lattice::LatticePair;
use crate::single_particle::{self, wrap_phase};
use crate::trajectory::Trajectory;
use crate::two_particle::{evolve_pair_state, InteractionModel, TwoParticleError};

/// Logical branch order used throughout: aa, ab, ba, bb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    AA,
    AB,
    BA,
    BB,
}

pub const BRANCHES: [Branch; 4] = [Branch::AA, Branch::AB, Branch::BA, Branch::BB];

impl Branch {
    pub fn index(self) -> usize {
        match self {
            Branch::AA => 0,
            Branch::AB => 1,
            Branch::BA => 2,
            Branch::BB => 3,
        }
    }

    /// Trap trajectories (atom 1, atom 2) for this branch: each atom rides
    /// the profile of its internal state, based at its own site.
    pub fn trajectories(self, shapes: &LatticePair) -> (Trajectory, Trajectory) {
        let d = shapes.spacing;
        let a1 = shapes.state_a.clone().with_base_position(0.0);
        let b1 = shapes.state_b.clone().with_base_position(0.0);
        let a2 = shapes.state_a.clone().with_base_position(d);
        let b2 = shapes.state_b.clone().with_base_position(d);
        match self {
            Branch::AA => (a1, a2),
            Branch::AB => (a1, b2),
            Branch::BA => (b1, a2),
            Branch::BB => (b1, b2),
        }
    }
}

/// Phases of the realized gate, for reporting and calibration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GatePhases {
    /// Single-atom transport phase of the a profile (dynamical half-quantum
    /// removed).
    pub a: f64,
    /// Single-atom transport phase of the b profile.
    pub b: f64,
    /// Interaction-only phase of the colliding branch: arg of the ground pair
    /// amplitude minus the non-interacting product reference. Negative of the
    /// accumulated mean-field shift for a repulsive adiabatic collision.
    pub ab: f64,
}

/// Diagonal of the ideal gate in the (aa, ab, ba, bb) basis: the first atom
/// collides with the second only when the pair is in ab, so that branch
/// alone carries the interaction phase on top of the transport phases.
pub fn ideal_gate(phases: &GatePhases) -> [C64; 4] {
    let entry = |phi: f64| C64::new(0.0, phi).exp();
    [
        entry(2.0 * phases.a),
        entry(phases.a + phases.b + phases.ab),
        entry(phases.a + phases.b),
        entry(2.0 * phases.b),
    ]
}

/// Boltzmann occupation of one atom's trap levels at temperature `kt` (same
/// energy units as `omega`; hbar = 1). Weights below `cutoff` relative to the
/// ground weight are dropped and the rest renormalized, so kt = 0 yields
/// exactly [1.0].
pub fn thermal_weights(omega: f64, kt: f64, cutoff: f64) -> Vec<f64> {
    assert!(omega > 0.0 && kt >= 0.0);
    if kt == 0.0 {
        return vec![1.0];
    }
    let ratio = (-omega / kt).exp();
    let mut weights = Vec::new();
    let mut w = 1.0;
    while w >= cutoff && weights.len() < 64 {
        weights.push(w);
        w *= ratio;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Reference phase convention for the ideal-gate comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PhaseReference {
    /// Ideal gate built from the channel's own extracted phases. Known
    /// deterministic phases are absorbed into the state definitions, so the
    /// fidelity isolates decoherence, excitation, and loss.
    Extracted,
    /// Ideal gate with the given collision phase (transport phases still
    /// extracted): the fidelity additionally punishes calibration error of
    /// the interaction phase against this target.
    Target(f64),
}

/// Gate-channel configuration.
pub struct ChannelSpec<'a> {
    pub shapes: &'a LatticePair,
    pub model: InteractionModel,
    /// Per-atom basis size for the pair propagation.
    pub levels: usize,
    pub control: StepControl,
    /// Motional starting levels per atom covered by the evolutions; fidelity
    /// evaluation accepts any occupation vector up to this length.
    pub max_starts: usize,
}

/// Branch evolutions for every motional start, plus extracted phases. The
/// expensive part of a gate evaluation lives here and is reusable across
/// temperatures and phase conventions: only the weighting changes.
#[derive(Debug, Clone)]
pub struct GateChannel {
    pub levels: usize,
    pub n_starts: usize,
    /// Final pair amplitudes per branch, indexed by starting pair m*n_starts+n.
    pub states: [Vec<Array2<C64>>; 4],
    /// Surviving norm per branch and start.
    pub survivals: [Vec<f64>; 4],
    /// Population that survived but left the starting motional pair level.
    pub excitations: [Vec<f64>; 4],
    /// Worst top-of-basis population seen; above ~1e-6 the basis is suspect.
    pub worst_tail: f64,
    /// Literal final ground-pair phase of each branch.
    pub branch_phases: [f64; 4],
    pub phases: GatePhases,
    /// Single-atom ground amplitude args used for the phase gauge.
    pub single_args: (f64, f64),
}

/// Run all four logical branches over every covered motional start.
pub fn simulate_channel(spec: &ChannelSpec) -> Result<GateChannel, TwoParticleError> {
    let nw = spec.max_starts;
    assert!(nw >= 1, "need at least the ground level");
    assert!(
        nw + 2 <= spec.levels,
        "motional starts need headroom below the basis top"
    );
    let levels = spec.levels;

    // Single-atom references for the excitation bookkeeping and the phase
    // gauge: one evolution per profile and starting level (the base position
    // does not enter a single-atom evolution).
    let mut singles_a = Vec::with_capacity(nw);
    let mut singles_b = Vec::with_capacity(nw);
    for m in 0..nw {
        singles_a.push(single_particle::evolve_fock_start(
            &spec.shapes.state_a,
            m,
            levels,
            &spec.control,
        )?);
        singles_b.push(single_particle::evolve_fock_start(
            &spec.shapes.state_b,
            m,
            levels,
            &spec.control,
        )?);
    }

    let mut states: [Vec<Array2<C64>>; 4] = Default::default();
    let mut survivals: [Vec<f64>; 4] = Default::default();
    let mut excitations: [Vec<f64>; 4] = Default::default();
    let mut worst_tail = 0.0f64;
    for branch in BRANCHES {
        let b = branch.index();
        let (t1, t2) = branch.trajectories(spec.shapes);
        for m in 0..nw {
            for n in 0..nw {
                let mut initial = Array2::zeros((levels, levels));
                initial[(m, n)] = C64::new(1.0, 0.0);
                let out = evolve_pair_state(&t1, &t2, &spec.model, &spec.control, &initial)?;
                worst_tail = worst_tail.max(out.tail_population);
                let kept = out.amplitudes[(m, n)].norm_sqr();
                survivals[b].push(out.survival);
                excitations[b].push((out.survival - kept).max(0.0));
                states[b].push(out.amplitudes);
            }
        }
    }

    let branch_phases: [f64; 4] = std::array::from_fn(|b| states[b][0][(0, 0)].arg());
    let arg_a = singles_a[0].amplitudes[0].arg();
    let arg_b = singles_b[0].amplitudes[0].arg();
    let phi_ab = wrap_phase(branch_phases[Branch::AB.index()] - arg_a - arg_b);

    Ok(GateChannel {
        levels,
        n_starts: nw,
        states,
        survivals,
        excitations,
        worst_tail,
        branch_phases,
        phases: GatePhases {
            a: singles_a[0].ground_phase,
            b: singles_b[0].ground_phase,
            ab: phi_ab,
        },
        single_args: (arg_a, arg_b),
    })
}

impl GateChannel {
    /// Gauge phases of the ideal-gate comparison per branch.
    fn reference_lambda(&self, reference: PhaseReference) -> [f64; 4] {
        let (arg_a, arg_b) = self.single_args;
        let ab = match reference {
            PhaseReference::Extracted => self.phases.ab,
            PhaseReference::Target(phi) => phi,
        };
        [
            2.0 * arg_a,
            arg_a + arg_b + ab,
            arg_a + arg_b,
            2.0 * arg_b,
        ]
    }

    /// Thermally weighted, gauge-fixed overlap kernel. `weights` is the
    /// per-atom occupation vector (length <= covered starts, sum 1).
    pub fn fidelity_kernel(
        &self,
        weights: &[f64],
        reference: PhaseReference,
    ) -> [[C64; 4]; 4] {
        let nw = weights.len();
        assert!(nw >= 1 && nw <= self.n_starts, "weights exceed covered starts");
        let lambda = self.reference_lambda(reference);
        let mut kernel = [[C64::new(0.0, 0.0); 4]; 4];
        for b in 0..4 {
            for b2 in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..nw {
                    for n in 0..nw {
                        let w = weights[m] * weights[n];
                        if w == 0.0 {
                            continue;
                        }
                        let phi = &self.states[b][m * self.n_starts + n];
                        let phi2 = &self.states[b2][m * self.n_starts + n];
                        let mut overlap = C64::new(0.0, 0.0);
                        for (x, y) in phi2.iter().zip(phi.iter()) {
                            overlap += x.conj() * y;
                        }
                        acc += w * overlap;
                    }
                }
                kernel[b][b2] = acc * C64::new(0.0, -(lambda[b] - lambda[b2])).exp();
            }
        }
        kernel
    }

    /// Thermally weighted per-branch norm loss (population lost to inelastic
    /// decay) and leakage (population alive but outside the starting
    /// motional pair level).
    pub fn branch_losses(&self, weights: &[f64]) -> ([f64; 4], [f64; 4]) {
        let nw = weights.len();
        assert!(nw >= 1 && nw <= self.n_starts);
        let mut norm_loss = [0.0; 4];
        let mut leakage = [0.0; 4];
        for b in 0..4 {
            for m in 0..nw {
                for n in 0..nw {
                    let w = weights[m] * weights[n];
                    let idx = m * self.n_starts + n;
                    norm_loss[b] += w * (1.0 - self.survivals[b][idx]);
                    leakage[b] += w * self.excitations[b][idx];
                }
            }
        }
        (norm_loss, leakage)
    }
}

fn quadratic(q: &[f64; 4], m: &[[f64; 4]; 4]) -> f64 {
    let mut acc = 0.0;
    for (qi, row) in q.iter().zip(m.iter()) {
        let mut inner = 0.0;
        for (qj, mij) in q.iter().zip(row.iter()) {
            inner += mij * qj;
        }
        acc += qi * inner;
    }
    acc
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: [f64; 4]) -> [f64; 4] {
    let mut sorted = v;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            threshold = candidate;
        }
    }
    let mut out = [0.0; 4];
    for (o, x) in out.iter_mut().zip(v.iter()) {
        *o = (x - threshold).max(0.0);
    }
    out
}

/// Exact minimizer on a given support: solve min q^T Q q, 1^T q = 1 via the
/// stationarity condition Q_S q = nu 1; returns None if the solution leaves
/// the simplex or the system is singular.
fn support_minimum(q_full: &[[f64; 4]; 4], support: &[usize]) -> Option<([f64; 4], f64)> {
    let s = support.len();
    // Solve Q_S x = 1 by Gaussian elimination, then normalize.
    let mut a = vec![vec![0.0; s + 1]; s];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = q_full[i][j];
        }
        a[r][s] = 1.0;
    }
    for col in 0..s {
        let pivot =
            (col..s).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for c in col..=s {
            a[col][c] /= p;
        }
        for r in 0..s {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for c in col..=s {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let total: f64 = (0..s).map(|r| a[r][s]).sum();
    if total.abs() < 1e-13 {
        return None;
    }
    let mut q = [0.0; 4];
    for (r, &i) in support.iter().enumerate() {
        let qi = a[r][s] / total;
        if qi < -1e-12 {
            return None;
        }
        q[i] = qi.max(0.0);
    }
    Some((q, quadratic(&q, q_full)))
}

/// Worst-case-input fidelity: global minimum of q^T Re(kernel) q over the
/// probability simplex, with the minimizing occupation returned alongside
/// (the minimizing logical state is sqrt(q) up to free phases).
pub fn min_fidelity(kernel: &[[C64; 4]; 4]) -> (f64, [f64; 4]) {
    let q_mat: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| kernel[i][j].re));
    // Symmetrize to guard against tiny numerical asymmetry.
    let q_mat: [[f64; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (q_mat[i][j] + q_mat[j][i])));

    let mut best = ([0.25; 4], quadratic(&[0.25; 4], &q_mat));
    let mut consider = |q: [f64; 4], value: f64| {
        if value < best.1 {
            best = (q, value);
        }
    };

    // Vertices and closed-form two-component (edge) minima — for diagonal
    // pure-phase channels the analytic worst case lives here.
    for i in 0..4 {
        let mut q = [0.0; 4];
        q[i] = 1.0;
        consider(q, quadratic(&q, &q_mat));
        for j in (i + 1)..4 {
            let denom = q_mat[i][i] - 2.0 * q_mat[i][j] + q_mat[j][j];
            let s = if denom.abs() < 1e-15 {
                0.5
            } else {
                ((q_mat[i][i] - q_mat[i][j]) / denom).clamp(0.0, 1.0)
            };
            let mut q = [0.0; 4];
            q[i] = 1.0 - s;
            q[j] = s;
            consider(q, quadratic(&q, &q_mat));
        }
    }

    // Multi-start projected gradient descent (21 deterministic starts).
    let lipschitz: f64 = (0..4)
        .map(|i| (0..4).map(|j| q_mat[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 0.9 / (2.0 * lipschitz);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1207_5EED);
    let mut starts: Vec<[f64; 4]> = vec![[0.25; 4]];
    for i in 0..4 {
        let mut q = [0.05; 4];
        q[i] = 0.85;
        starts.push(q);
    }
    for _ in 0..16 {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>());
        let total: f64 = raw.iter().sum();
        starts.push(std::array::from_fn(|i| raw[i] / total));
    }
    for start in starts {
        let mut q = start;
        for _ in 0..4000 {
            let mut grad = [0.0; 4];
            for (g, row) in grad.iter_mut().zip(q_mat.iter()) {
                *g = 2.0 * row.iter().zip(q.iter()).map(|(m, x)| m * x).sum::<f64>();
            }
            let next = project_simplex(std::array::from_fn(|i| q[i] - step * grad[i]));
            let moved: f64 = (0..4).map(|i| (next[i] - q[i]).abs()).sum();
            q = next;
            if moved < 1e-15 {
                break;
            }
        }
        consider(q, quadratic(&q, &q_mat));
    }

    // Exact polish: solve the equality-constrained problem on every support,
    // which turns a nearly converged iterate into the exact constrained
    // stationary point.
    for mask in 1u8..16 {
        let support: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        if let Some((q, value)) = support_minimum(&q_mat, &support) {
            consider(q, value);
        }
    }

    best.1 = best.1.clamp(-1.0, 1.0 + 1e-12).min(1.0);
    (best.1, best.0)
}

/// Fidelity averaged over Haar-uniform logical amplitudes (uniform q on the
/// simplex): (tr Q + sum Q) / 20 for Q = Re(kernel).
pub fn avg_fidelity(kernel: &[[C64; 4]; 4]) -> f64 {
    let mut trace = 0.0;
    let mut total = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            total += kernel[i][j].re;
            if i == j {
                trace += kernel[i][j].re;
            }
        }
    }
    ((trace + total) / 20.0).min(1.0)
}

/// Serializable summary of one gate evaluation at one occupation weighting.
#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    #[serde(rename = "F")]
    pub fidelity_min: f64,
    #[serde(rename = "F_avg")]
    pub fidelity_avg: f64,
    /// Minimizing logical input as four complex amplitudes (re, im). The
    /// minimum is phase-free, so the nonnegative representative is reported.
    pub argmin_state: [[f64; 2]; 4],
    /// Per-branch population that survived but left its starting motional
    /// level (aa, ab, ba, bb).
    pub leakage: [f64; 4],
    /// Per-branch population lost to inelastic decay.
    pub norm_loss: [f64; 4],
    pub phases: GatePhases,
    pub branch_phases: [f64; 4],
    pub worst_tail: f64,
    pub truncation_suspect: bool,
}

/// Evaluate the fidelity figures of a simulated channel under one thermal
/// weighting and phase reference.
pub fn fidelity_report(
    channel: &GateChannel,
    weights: &[f64],
    reference: PhaseReference,
) -> FidelityReport {
    let kernel = channel.fidelity_kernel(weights, reference);
    let (fidelity_min, q) = min_fidelity(&kernel);
    let (norm_loss, leakage) = channel.branch_losses(weights);
    FidelityReport {
        fidelity_min,
        fidelity_avg: avg_fidelity(&kernel),
        argmin_state: std::array::from_fn(|i| [q[i].max(0.0).sqrt(), 0.0]),
        leakage,
        norm_loss,
        phases: channel.phases,
        branch_phases: channel.branch_phases,
        worst_tail: channel.worst_tail,
        truncation_suspect: channel.worst_tail > crate::two_particle::TAIL_WARN_THRESHOLD,
    }
}
