//! Few-atom internal-state registers driven by resonant pulses and
//! phase-imprinting collisions.
//!
//! Each atom carries two usable levels: the shared lower level `a` plus an
//! upper level that is either `b` or `c` depending on the atom's role.
//! Collisions are diagonal in the internal basis — the transport stage makes
//! selected ordered level pairs meet and pick up a phase (and optionally an
//! amplitude damping standing in for collisional loss) — so a register state
//! evolves by unitary single-atom pulses interleaved with diagonal masks.
//! That is enough to assemble Ramsey fringes, entangled pairs, and
//! multi-atom GHZ chains, with collision phases taken either as ideal values
//! or from a simulated gate channel.
//!
//! The module also carries the diagonal occupation-number phase map for
//! lattice registers: site frequencies and on-site/cross-site interaction
//! coefficients turn an occupation configuration into a pure phase, which is
//! what makes occupation measurements non-destructive.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::gate::GatePhases;

/// Internal atomic levels that take part in the protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    A,
    B,
    C,
}

/// Largest register the dense amplitude vector supports.
pub const MAX_ATOMS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("atom index {0} outside the register")]
    AtomOutOfRange(usize),
    #[error("transition {from:?} <-> {to:?} not available on atom {atom}")]
    InvalidTransition { atom: usize, from: Level, to: Level },
    #[error("upper-to-upper transitions support only full area-pi transfers")]
    PartialTransfer,
    #[error("collision needs two distinct atoms")]
    SelfCollision,
}

/// Dense state of a small register. Atom `i` contributes bit `i` of the
/// amplitude index: bit 0 is the lower level (always [`Level::A`]), bit 1 the
/// atom's upper level (`b` or `c`).
#[derive(Debug, Clone)]
pub struct RegisterState {
    amps: Vec<C64>,
    uppers: Vec<Level>,
}

/// One configured ordered level pair of a collision: phase imprint plus an
/// amplitude survival factor (1 for a lossless collision; below 1 it models
/// inelastic loss as leakage out of the register).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollisionEntry {
    pub first: Level,
    pub second: Level,
    pub phase_rad: f64,
    #[serde(default = "default_survival")]
    pub survival: f64,
}

fn default_survival() -> f64 {
    1.0
}

/// Diagonal mask for one ordered collision: when the transport stage brings
/// atom pair (first, second) together, the configured ordered level pairs
/// pick up their phase and damping; every other combination is untouched.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CollisionTable {
    pub entries: Vec<CollisionEntry>,
}

impl CollisionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(self, first: Level, second: Level, phase: f64) -> Self {
        self.with_damped(first, second, phase, 1.0)
    }

    pub fn with_damped(mut self, first: Level, second: Level, phase: f64, survival: f64) -> Self {
        assert!((0.0..=1.0).contains(&survival));
        self.entries.push(CollisionEntry {
            first,
            second,
            phase_rad: phase,
            survival,
        });
        self
    }

    /// Full diagonal pattern of a transported a/b collision: both single-atom
    /// transport phases on every combination, plus the interaction phase on
    /// the colliding ordered (a, b) pair.
    pub fn from_gate_phases(phases: &GatePhases) -> Self {
        Self::new()
            .with(Level::A, Level::A, 2.0 * phases.a)
            .with(Level::A, Level::B, phases.a + phases.b + phases.ab)
            .with(Level::B, Level::A, phases.a + phases.b)
            .with(Level::B, Level::B, 2.0 * phases.b)
    }

    /// Combined multiplier for an ordered level pair.
    fn factor(&self, first: Level, second: Level) -> C64 {
        let mut phase = 0.0;
        let mut survival = 1.0;
        for e in &self.entries {
            if e.first == first && e.second == second {
                phase += e.phase_rad;
                survival *= e.survival;
            }
        }
        survival * C64::new(0.0, phase).exp()
    }
}

impl RegisterState {
    /// All atoms in the lower level, upper levels all `b`.
    pub fn ground(n_atoms: usize) -> Self {
        Self::with_uppers(vec![Level::B; n_atoms])
    }

    /// All atoms in the lower level with the given upper level per atom.
    pub fn with_uppers(uppers: Vec<Level>) -> Self {
        assert!(!uppers.is_empty() && uppers.len() <= MAX_ATOMS);
        assert!(
            uppers.iter().all(|u| *u != Level::A),
            "the lower level is always a"
        );
        let mut amps = vec![C64::new(0.0, 0.0); 1 << uppers.len()];
        amps[0] = C64::new(1.0, 0.0);
        Self { amps, uppers }
    }

    pub fn n_atoms(&self) -> usize {
        self.uppers.len()
    }

    pub fn uppers(&self) -> &[Level] {
        &self.uppers
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    fn level_of(&self, atom: usize, index: usize) -> Level {
        if index & (1 << atom) == 0 {
            Level::A
        } else {
            self.uppers[atom]
        }
    }

    /// Amplitude of a basis state given per-atom levels; `None` when a level
    /// is not part of that atom's pair.
    pub fn amplitude(&self, levels: &[Level]) -> Option<C64> {
        assert_eq!(levels.len(), self.n_atoms());
        let mut index = 0usize;
        for (atom, &level) in levels.iter().enumerate() {
            if level == self.uppers[atom] {
                index |= 1 << atom;
            } else if level != Level::A {
                return None;
            }
        }
        Some(self.amps[index])
    }

    pub fn probability(&self, levels: &[Level]) -> f64 {
        self.amplitude(levels).map_or(0.0, |a| a.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population of the atom's upper level.
    pub fn upper_population(&self, atom: usize) -> f64 {
        let bit = 1 << atom;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Purity of the reduced single-atom state, tr(rho^2): 1 for a product
    /// state, 1/2 when the atom is maximally entangled with the rest.
    pub fn reduced_purity(&self, atom: usize) -> f64 {
        let bit = 1 << atom;
        let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
        for (index, amp) in self.amps.iter().enumerate() {
            let row = usize::from(index & bit != 0);
            for col_level in 0..2 {
                let other = (index & !bit) | if col_level == 1 { bit } else { 0 };
                rho[row][col_level] += amp * self.amps[other].conj();
            }
        }
        let mut purity = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                purity += (rho[i][j] * rho[j][i]).re;
            }
        }
        purity
    }

    /// Resonant pulse on one atom between its lower and upper level:
    ///
    ///   lower -> cos(area/2) lower + e^{i phase} sin(area/2) upper
    ///   upper -> -e^{-i phase} sin(area/2) lower + cos(area/2) upper
    pub fn apply_pulse(&mut self, atom: usize, area: f64, phase: f64) {
        assert!(atom < self.n_atoms());
        let c = (area / 2.0).cos();
        let s = (area / 2.0).sin();
        let up = C64::new(0.0, phase).exp() * s;
        let down = -C64::new(0.0, -phase).exp() * s;
        let bit = 1 << atom;
        for i0 in 0..self.amps.len() {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let a0 = self.amps[i0];
            let a1 = self.amps[i1];
            self.amps[i0] = c * a0 + down * a1;
            self.amps[i1] = up * a0 + c * a1;
        }
    }

    /// Pulse on a named transition, validated against the atom's level set.
    /// Lower-upper transitions rotate with the pulse convention above;
    /// upper-upper transitions (b <-> c) are supported as full transfers
    /// only (area pi), since an atom holds one upper level at a time.
    pub fn apply_transition(
        &mut self,
        atom: usize,
        from: Level,
        to: Level,
        area: f64,
        phase: f64,
    ) -> Result<(), ProtocolError> {
        if atom >= self.n_atoms() {
            return Err(ProtocolError::AtomOutOfRange(atom));
        }
        let upper = self.uppers[atom];
        let pair = (from, to);
        if pair == (Level::A, upper) || pair == (upper, Level::A) {
            self.apply_pulse(atom, area, phase);
            return Ok(());
        }
        if from == upper && to != Level::A && to != upper {
            if (area - PI).abs() > 1e-9 {
                return Err(ProtocolError::PartialTransfer);
            }
            self.transfer_upper(atom, to, phase);
            return Ok(());
        }
        Err(ProtocolError::InvalidTransition { atom, from, to })
    }

    /// Collision between an ordered atom pair: the first atom is the one
    /// whose selected level is transported toward the second. Only ordered
    /// level pairs present in the table imprint anything.
    pub fn apply_collision(&mut self, first: usize, second: usize, table: &CollisionTable) {
        assert!(first < self.n_atoms() && second < self.n_atoms() && first != second);
        for index in 0..self.amps.len() {
            let factor = table.factor(
                self.level_of(first, index),
                self.level_of(second, index),
            );
            if factor != C64::new(1.0, 0.0) {
                self.amps[index] *= factor;
            }
        }
    }

    /// Imprint a phase on one atom's upper level (free-evolution detuning or
    /// a simulated single-atom transport phase).
    pub fn imprint_upper_phase(&mut self, atom: usize, phase: f64) {
        let bit = 1 << atom;
        let factor = C64::new(0.0, phase).exp();
        for (index, amp) in self.amps.iter_mut().enumerate() {
            if index & bit != 0 {
                *amp *= factor;
            }
        }
    }

    /// Coherent transfer of the atom's upper level to a new label, carrying
    /// the given phase: |upper_old> -> e^{i phase} |upper_new>.
    pub fn transfer_upper(&mut self, atom: usize, new_upper: Level, phase: f64) {
        assert!(new_upper != Level::A);
        self.uppers[atom] = new_upper;
        self.imprint_upper_phase(atom, phase);
    }
}

/// One step of a register script (the config-file form of a pulse-and-
/// collision sequence).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScriptStep {
    Pulse {
        atoms: Vec<usize>,
        area_rad: f64,
        phase_rad: f64,
        /// Optional named transition; defaults to the atom's lower-upper pair.
        #[serde(default)]
        transition: Option<[Level; 2]>,
    },
    Collision {
        first: usize,
        second: usize,
        pairs: Vec<CollisionEntry>,
    },
    Transfer {
        atom: usize,
        to: Level,
        phase_rad: f64,
    },
    ImprintUpper {
        atom: usize,
        phase_rad: f64,
    },
}

/// A register script: initial level sets plus ordered steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptSpec {
    pub uppers: Vec<Level>,
    pub steps: Vec<ScriptStep>,
}

/// Execute a script from the all-lower starting state.
pub fn run_script(spec: &ScriptSpec) -> Result<RegisterState, ProtocolError> {
    let mut reg = RegisterState::with_uppers(spec.uppers.clone());
    let check = |atom: usize| {
        if atom >= spec.uppers.len() {
            Err(ProtocolError::AtomOutOfRange(atom))
        } else {
            Ok(())
        }
    };
    for step in &spec.steps {
        match step {
            ScriptStep::Pulse {
                atoms,
                area_rad,
                phase_rad,
                transition,
            } => {
                for &atom in atoms {
                    check(atom)?;
                    match transition {
                        None => reg.apply_pulse(atom, *area_rad, *phase_rad),
                        Some([from, to]) => {
                            reg.apply_transition(atom, *from, *to, *area_rad, *phase_rad)?
                        }
                    }
                }
            }
            ScriptStep::Collision {
                first,
                second,
                pairs,
            } => {
                check(*first)?;
                check(*second)?;
                if first == second {
                    return Err(ProtocolError::SelfCollision);
                }
                let table = CollisionTable {
                    entries: pairs.clone(),
                };
                reg.apply_collision(*first, *second, &table);
            }
            ScriptStep::Transfer {
                atom,
                to,
                phase_rad,
            } => {
                check(*atom)?;
                if *to == Level::A {
                    return Err(ProtocolError::InvalidTransition {
                        atom: *atom,
                        from: reg.uppers()[*atom],
                        to: *to,
                    });
                }
                reg.transfer_upper(*atom, *to, *phase_rad);
            }
            ScriptStep::ImprintUpper { atom, phase_rad } => {
                check(*atom)?;
                reg.imprint_upper_phase(*atom, *phase_rad);
            }
        }
    }
    Ok(reg)
}

/// Per-atom populations after a two-atom interferometer sequence: pulse of
/// `area_1` (phase 0) on both atoms, one ordered (a, b) collision imprinting
/// `phi_ab`, then an analysis pulse of `area_2` on both.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RamseySignal {
    /// Upper-level population of each atom.
    pub upper: [f64; 2],
    /// Lower-level population of each atom.
    pub lower: [f64; 2],
}

impl RamseySignal {
    /// Total upper population — what a fluorescence readout of the whole
    /// register sees.
    pub fn total_upper(&self) -> f64 {
        self.upper[0] + self.upper[1]
    }
}

/// Phase of the analysis pulse, midway between the in-phase and quadrature
/// axes so the populations carry both fringe components at once.
const ANALYSIS_PHASE: f64 = PI / 4.0;

/// Run the interferometer.
///
/// The preparation pulses are in-phase; the analysis pulse sits at 45
/// degrees, so the total population carries both a cosine fringe in
/// `phi_ab` (maximal contrast at pi) and a sine component. The sine term
/// in the total enters with weight sin(2 area_1): preparation areas of
/// exactly pi/2 cancel it between the two atoms and the total readout is
/// blind to the sign of the collision phase, while any other area leaves
/// the total asymmetric under `phi_ab -> -phi_ab` and so determines the
/// sign of the scattering length behind it.
pub fn ramsey_signal(phi_ab: f64, area_1: f64, area_2: f64) -> RamseySignal {
    let mut reg = RegisterState::ground(2);
    reg.apply_pulse(0, area_1, 0.0);
    reg.apply_pulse(1, area_1, 0.0);
    let table = CollisionTable::new().with(Level::A, Level::B, phi_ab);
    reg.apply_collision(0, 1, &table);
    reg.apply_pulse(0, area_2, ANALYSIS_PHASE);
    reg.apply_pulse(1, area_2, ANALYSIS_PHASE);
    let upper = [reg.upper_population(0), reg.upper_population(1)];
    RamseySignal {
        upper,
        lower: [1.0 - upper[0], 1.0 - upper[1]],
    }
}

/// Upper-level population after a single-atom two-pulse interferometer:
/// pi/2 pulse, phase imprint on the upper level, pi/2 pulse with analysis
/// phase. Equals cos^2((imprint - analysis)/2).
pub fn ramsey_fringe(imprint_phase: f64, analysis_phase: f64) -> f64 {
    let mut reg = RegisterState::ground(1);
    reg.apply_pulse(0, PI / 2.0, 0.0);
    reg.imprint_upper_phase(0, imprint_phase);
    reg.apply_pulse(0, PI / 2.0, analysis_phase);
    reg.upper_population(0)
}

/// Best overlap-squared of a two-atom register state with the family of
/// maximally entangled states: (sigma_1 + sigma_2)^2 / 2 for the singular
/// values of the 2x2 amplitude matrix, i.e. (|M|_F^2 + 2 |det M|) / 2.
pub fn entangled_pair_fidelity(state: &RegisterState) -> f64 {
    assert_eq!(state.n_atoms(), 2);
    let m = [
        [state.amps[0], state.amps[2]],
        [state.amps[1], state.amps[3]],
    ];
    let frob: f64 = m.iter().flatten().map(|a| a.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    ((frob + 2.0 * det) / 2.0).min(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairProtocolOutcome {
    /// Overlap-squared with the nearest maximally entangled two-atom state.
    pub fidelity: f64,
    /// Final probabilities of aa, ab, ba, bb.
    pub populations: [f64; 4],
    pub collision_phase: f64,
}

/// Entangling sequence for two atoms in the a/b pair: pi/2 pulses on both,
/// one collision imprinting `collision_phase` on the ordered (a, b) level
/// pair, and a closing pi/2 pulse (phase pi) on the second atom. A collision
/// phase of pi yields the maximally entangled (|ba> - |ab>)/sqrt(2).
pub fn epr_sequence(collision_phase: f64) -> (RegisterState, PairProtocolOutcome) {
    let mut reg = RegisterState::ground(2);
    reg.apply_pulse(0, PI / 2.0, 0.0);
    reg.apply_pulse(1, PI / 2.0, 0.0);
    let table = CollisionTable::new().with(Level::A, Level::B, collision_phase);
    reg.apply_collision(0, 1, &table);
    reg.apply_pulse(1, PI / 2.0, PI);
    let outcome = PairProtocolOutcome {
        fidelity: entangled_pair_fidelity(&reg),
        populations: [
            reg.probability(&[Level::A, Level::A]),
            reg.probability(&[Level::A, Level::B]),
            reg.probability(&[Level::B, Level::A]),
            reg.probability(&[Level::B, Level::B]),
        ],
        collision_phase,
    };
    (reg, outcome)
}

/// Overlap-squared with the n-atom target (|a..a> - |b..b>)/sqrt(2).
pub fn ghz_fidelity(state: &RegisterState) -> f64 {
    assert!(state.uppers().iter().all(|u| *u == Level::B));
    let full = state.amps.len() - 1;
    ((state.amps[0] - state.amps[full]) / C64::new(2.0f64.sqrt(), 0.0)).norm_sqr()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainProtocolOutcome {
    pub fidelity: f64,
    pub n_atoms: usize,
    /// Probability that every atom reads a, and that every atom reads b.
    pub edge_populations: [f64; 2],
}

/// GHZ chain sequence. The first atom uses the a/c pair and is swept across
/// the others; its c level collides with phase `phase_ca` against a and
/// `phase_cb` against b. With the ideal (pi, 0) phases and the closing
/// pulses the register lands exactly on (|a..a> - |b..b>)/sqrt(2).
pub fn ghz_sequence(
    n_atoms: usize,
    phase_ca: f64,
    phase_cb: f64,
) -> (RegisterState, ChainProtocolOutcome) {
    assert!(n_atoms >= 2);
    let mut uppers = vec![Level::B; n_atoms];
    uppers[0] = Level::C;
    let mut reg = RegisterState::with_uppers(uppers);
    for atom in 0..n_atoms {
        reg.apply_pulse(atom, PI / 2.0, 0.0);
    }
    let table = CollisionTable::new()
        .with(Level::C, Level::A, phase_ca)
        .with(Level::C, Level::B, phase_cb);
    for atom in 1..n_atoms {
        reg.apply_collision(0, atom, &table);
    }
    for atom in 1..n_atoms {
        reg.apply_pulse(atom, PI / 2.0, PI);
    }
    reg.transfer_upper(0, Level::B, PI);
    let fidelity = ghz_fidelity(&reg);
    let all_a = reg.probability(&vec![Level::A; n_atoms]);
    let all_b = reg.probability(&vec![Level::B; n_atoms]);
    let outcome = ChainProtocolOutcome {
        fidelity,
        n_atoms,
        edge_populations: [all_a, all_b],
    };
    (reg, outcome)
}

/// Coefficients of the diagonal occupation-number Hamiltonian over lattice
/// sites, each holding an a mode and a b mode:
///
///   H = sum_i [ omega_a n^a_i + omega_b n^b_i
///               + u_aa n^a_i (n^a_i - 1) + u_bb n^b_i (n^b_i - 1) ]
///       + sum_{ij} u_ab[i][j] n^a_i n^b_j.
///
/// The cross couplings u_ab are nonzero only for site pairs the transport
/// stage actually brings into overlap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockCoefficients {
    pub omega_a: f64,
    pub omega_b: f64,
    pub u_aa: f64,
    pub u_bb: f64,
    /// Row i, column j: coupling of site i's a mode to site j's b mode.
    pub u_ab: Vec<Vec<f64>>,
}

impl FockCoefficients {
    /// Diagonal energy of one occupation configuration, site i holding
    /// `occupations[i] = (n_a, n_b)`.
    pub fn energy(&self, occupations: &[(u32, u32)]) -> f64 {
        assert_eq!(self.u_ab.len(), occupations.len());
        let mut energy = 0.0;
        for (i, &(na, nb)) in occupations.iter().enumerate() {
            let (na, nb) = (na as f64, nb as f64);
            energy += self.omega_a * na
                + self.omega_b * nb
                + self.u_aa * na * (na - 1.0)
                + self.u_bb * nb * (nb - 1.0);
            assert_eq!(self.u_ab[i].len(), occupations.len());
            for (j, &(_, nbj)) in occupations.iter().enumerate() {
                energy += self.u_ab[i][j] * na * nbj as f64;
            }
        }
        energy
    }
}

/// Phase acquired by the occupation configuration across piecewise-constant
/// segments (duration, coefficients): minus the time integral of the
/// diagonal energy. Unwrapped. The occupations themselves never change —
/// the Hamiltonian is diagonal in them, which is what makes occupation
/// measurements non-destructive.
pub fn fock_phase(segments: &[(f64, FockCoefficients)], occupations: &[(u32, u32)]) -> f64 {
    let mut phase = 0.0;
    for (dt, c) in segments {
        assert!(*dt >= 0.0);
        phase -= c.energy(occupations) * dt;
    }
    phase
}
