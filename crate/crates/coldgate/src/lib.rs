//! Desk-scale simulator for collisional phase gates between neutral atoms held
//! in moving, internal-state-dependent harmonic traps.
//!
//! The crate is organized bottom-up:
//!
//! - [`quad`], [`hermite`], [`integrate`]: numerical kernels (composite
//!   quadrature, Gauss-Hermite rules and oscillator eigenfunctions, an
//!   adaptive Runge-Kutta stepper for complex state vectors).
//! - [`lattice`]: polarization-angle-controlled optical potentials, well
//!   tracking, and the conversion of a lattice sweep into trap trajectories.
//! - [`trajectory`]: trap-center trajectories, kinetic phases, and the
//!   adiabaticity functional that bounds motional excitation.
//! - [`single_particle`]: one atom in a moving trap, propagated in the
//!   comoving oscillator basis, plus the exact driven-oscillator solution.
//! - [`two_particle`]: two atoms with a contact interaction, the collisional
//!   energy shift, and the full interacting propagation.
//! - [`gate`]: the four-branch internal-state channel, minimum and average
//!   gate fidelity over thermal motional states, and loss bookkeeping.
//! - [`protocols`]: few-atom internal-state registers driven by pulses and
//!   phase-imprinting collisions (Ramsey fringes, EPR pairs, GHZ chains), and
//!   the diagonal number-conserving lattice Hamiltonian phase map.
//! - [`scenario`]: configuration, parameter sweeps, presets, and report
//!   serialization used by the `coldgate` binary.
//!
//! Internally all physics runs in trap units: hbar = 1, the atomic mass and
//! the reference trap frequency scale lengths to the ground-state size
//! a0 = sqrt(hbar / (m omega)). SI quantities appear only at the
//! configuration boundary in [`scenario`].

pub mod quad;
pub mod hermite;
pub mod integrate;
pub mod lattice;
pub mod trajectory;
pub mod single_particle;
pub mod two_particle;
pub mod gate;
pub mod protocols;
pub mod scenario;

pub use gate::{FidelityReport, GatePhases};
pub use lattice::{LatticePair, LatticeParams};
pub use trajectory::Trajectory;
pub use two_particle::InteractionModel;
