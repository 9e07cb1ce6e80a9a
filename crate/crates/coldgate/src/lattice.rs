//! State-dependent optical lattice potentials controlled by a polarization
//! angle, and the extraction of trap trajectories from a slow angle sweep.
//!
//! Two counter-propagating beams with linear polarizations tilted by 2 theta
//! produce sigma+ / sigma- standing waves displaced by the angle: the two
//! ground-state sublevels see V0 sin^2(k z +/- theta). The two logical states
//! couple to fixed mixtures of those sublevels, so sweeping theta from pi/2 to
//! 0 slides the state-a and state-b well ladders in opposite directions until
//! adjacent wells coincide. Tracking the well minima along the sweep yields
//! the center and frequency curves consumed by the propagation modules.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::trajectory::{
    sigmoid_pulse, Displacement, Frequency, Series, Trajectory, TrajectoryError,
};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("well minimum lost at theta = {theta}: curvature {curvature:.3e} fell below the floor {floor:.3e}")]
    LostMinimum { theta: f64, curvature: f64, floor: f64 },
    #[error("angle path needs at least two samples")]
    PathTooShort,
    #[error("trajectory assembly failed: {0}")]
    Trajectory(#[from] TrajectoryError),
}

/// Electron-spin sublevel index m_s = +/- 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sublevel {
    PlusHalf,
    MinusHalf,
}

/// Logical internal state riding the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrapState {
    A,
    B,
}

/// Lattice geometry and depth. Units are whatever the caller works in; the
/// runner feeds trap units (mass = 1, reference frequency = 1).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeParams {
    /// Single-sublevel lattice depth V0.
    pub depth: f64,
    /// Beam wavenumber k; wells repeat every pi / k.
    pub wavenumber: f64,
    pub mass: f64,
}

impl LatticeParams {
    /// Choose the depth so each isolated well has harmonic frequency `omega`:
    /// V0 = m omega^2 / (2 k^2).
    pub fn from_trap_frequency(omega: f64, wavenumber: f64, mass: f64) -> Self {
        assert!(omega > 0.0 && wavenumber > 0.0 && mass > 0.0);
        Self { depth: mass * omega * omega / (2.0 * wavenumber * wavenumber), wavenumber, mass }
    }

    /// Harmonic frequency of a full-depth well: k sqrt(2 V0 / m).
    pub fn trap_frequency(&self) -> f64 {
        self.wavenumber * (2.0 * self.depth / self.mass).sqrt()
    }

    /// Distance between adjacent wells of one sublevel lattice.
    pub fn well_spacing(&self) -> f64 {
        std::f64::consts::PI / self.wavenumber
    }
}

/// Sublevel standing-wave potential V0 sin^2(k z +/- theta).
pub fn sublevel_potential(p: &LatticeParams, ms: Sublevel, z: f64, theta: f64) -> f64 {
    let sign = match ms {
        Sublevel::PlusHalf => 1.0,
        Sublevel::MinusHalf => -1.0,
    };
    p.depth * (p.wavenumber * z + sign * theta).sin().powi(2)
}

/// Potential seen by a logical state: state b rides the m_s = +1/2 lattice,
/// state a a fixed 1:3 mixture of the two sublevels.
pub fn state_potential(p: &LatticeParams, state: TrapState, z: f64, theta: f64) -> f64 {
    match state {
        TrapState::B => sublevel_potential(p, Sublevel::PlusHalf, z, theta),
        TrapState::A => {
            (sublevel_potential(p, Sublevel::PlusHalf, z, theta)
                + 3.0 * sublevel_potential(p, Sublevel::MinusHalf, z, theta))
                / 4.0
        }
    }
}

/// d/dz of [`state_potential`].
pub fn state_potential_dz(p: &LatticeParams, state: TrapState, z: f64, theta: f64) -> f64 {
    let k = p.wavenumber;
    let dplus = p.depth * k * (2.0 * (k * z + theta)).sin();
    let dminus = p.depth * k * (2.0 * (k * z - theta)).sin();
    match state {
        TrapState::B => dplus,
        TrapState::A => (dplus + 3.0 * dminus) / 4.0,
    }
}

/// d^2/dz^2 of [`state_potential`].
pub fn state_potential_d2z(p: &LatticeParams, state: TrapState, z: f64, theta: f64) -> f64 {
    let k = p.wavenumber;
    let dplus = 2.0 * p.depth * k * k * (2.0 * (k * z + theta)).cos();
    let dminus = 2.0 * p.depth * k * k * (2.0 * (k * z - theta)).cos();
    match state {
        TrapState::B => dplus,
        TrapState::A => (dplus + 3.0 * dminus) / 4.0,
    }
}

/// Polarization-angle schedule: pi/2 at the window edges (state lattices
/// coincident with each other), 0 at t = 0 (adjacent a/b wells merged).
pub fn theta_schedule(t: f64, rise: f64, hold: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * (1.0 - sigmoid_pulse(t, rise, hold))
}

/// A tracked well along an angle path.
#[derive(Debug, Clone)]
pub struct WellPath {
    pub thetas: Vec<f64>,
    pub centers: Vec<f64>,
    pub curvatures: Vec<f64>,
    mass: f64,
}

impl WellPath {
    /// Harmonic frequency at each sample: sqrt(V'' / m).
    pub fn omegas(&self) -> Vec<f64> {
        self.curvatures.iter().map(|c| (c / self.mass).sqrt()).collect()
    }
}

struct StateFamily<'a> {
    params: &'a LatticeParams,
    state: TrapState,
}

trait PotentialFamily {
    fn dv(&self, z: f64, theta: f64) -> f64;
    fn d2v(&self, z: f64, theta: f64) -> f64;
    fn v(&self, z: f64, theta: f64) -> f64;
    fn quarter_period(&self) -> f64;
    /// Curvatures below this are treated as a lost minimum.
    fn curvature_floor(&self) -> f64;
}

impl PotentialFamily for StateFamily<'_> {
    fn dv(&self, z: f64, theta: f64) -> f64 {
        state_potential_dz(self.params, self.state, z, theta)
    }
    fn d2v(&self, z: f64, theta: f64) -> f64 {
        state_potential_d2z(self.params, self.state, z, theta)
    }
    fn v(&self, z: f64, theta: f64) -> f64 {
        state_potential(self.params, self.state, z, theta)
    }
    fn quarter_period(&self) -> f64 {
        0.25 * std::f64::consts::PI / self.params.wavenumber
    }
    fn curvature_floor(&self) -> f64 {
        1e-6 * self.params.depth * self.params.wavenumber * self.params.wavenumber
    }
}

/// Follow one well of `state` through the angle path, starting from a center
/// near `seed` at `thetas[0]`. Newton refinement against the analytic
/// derivatives, with a golden-section fallback inside a quarter-period window
/// around the previous center.
pub fn track_well(
    p: &LatticeParams,
    state: TrapState,
    thetas: &[f64],
    seed: f64,
) -> Result<WellPath, LatticeError> {
    track_family(&StateFamily { params: p, state }, thetas, seed, p.mass)
}

fn track_family<F: PotentialFamily>(
    family: &F,
    thetas: &[f64],
    seed: f64,
    mass: f64,
) -> Result<WellPath, LatticeError> {
    if thetas.len() < 2 {
        return Err(LatticeError::PathTooShort);
    }
    let mut centers = Vec::with_capacity(thetas.len());
    let mut curvatures = Vec::with_capacity(thetas.len());
    let mut guess = seed;
    for &theta in thetas {
        let z = refine_minimum(family, theta, guess)?;
        let curv = family.d2v(z, theta);
        if curv < family.curvature_floor() {
            return Err(LatticeError::LostMinimum {
                theta,
                curvature: curv,
                floor: family.curvature_floor(),
            });
        }
        centers.push(z);
        curvatures.push(curv);
        guess = z;
    }
    Ok(WellPath { thetas: thetas.to_vec(), centers, curvatures, mass })
}

fn refine_minimum<F: PotentialFamily>(family: &F, theta: f64, seed: f64) -> Result<f64, LatticeError> {
    let span = family.quarter_period();
    let mut z = seed;
    let mut newton_ok = false;
    for _ in 0..60 {
        let d1 = family.dv(z, theta);
        let d2 = family.d2v(z, theta);
        if d2 <= 0.0 || (z - seed).abs() > span {
            break;
        }
        let step = d1 / d2;
        z -= step;
        if step.abs() < 1e-14 * span.max(z.abs()) {
            newton_ok = true;
            break;
        }
    }
    if newton_ok && (z - seed).abs() <= span && family.d2v(z, theta) > 0.0 {
        return Ok(z);
    }
    // Golden-section fallback on the bracketing window.
    let (mut lo, mut hi) = (seed - span, seed + span);
    let inv_phi = 0.618_033_988_749_894_9;
    let mut m1 = hi - inv_phi * (hi - lo);
    let mut m2 = lo + inv_phi * (hi - lo);
    let mut f1 = family.v(m1, theta);
    let mut f2 = family.v(m2, theta);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - inv_phi * (hi - lo);
            f1 = family.v(m1, theta);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + inv_phi * (hi - lo);
            f2 = family.v(m2, theta);
        }
        if hi - lo < 1e-13 * span {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    let curv = family.d2v(z, theta);
    if curv < family.curvature_floor() {
        return Err(LatticeError::LostMinimum { theta, curvature: curv, floor: family.curvature_floor() });
    }
    Ok(z)
}

/// The motion profiles of the state-a and state-b wells over one angle sweep,
/// expressed as trap trajectories plus the initial well spacing.
///
/// Sign convention matches the usual plot orientation: state a moves toward
/// +x (reaching +d/2 at the sweep midpoint), state b toward -x. Base
/// positions are 0 for the a profile and +d for the b profile; branch
/// assembly rebases them onto actual atom sites.
#[derive(Debug, Clone)]
pub struct LatticePair {
    pub state_a: Trajectory,
    pub state_b: Trajectory,
    pub spacing: f64,
}

/// Track adjacent a/b wells through the sigmoid angle schedule and package
/// the result as trajectories over [-half_window, half_window].
pub fn pair_trajectories(
    p: &LatticeParams,
    rise: f64,
    hold: f64,
    half_window: f64,
    n_samples: usize,
) -> Result<LatticePair, LatticeError> {
    assert!(n_samples >= 16);
    let dt = 2.0 * half_window / n_samples as f64;
    let thetas: Vec<f64> = (0..=n_samples)
        .map(|i| theta_schedule(-half_window + i as f64 * dt, rise, hold))
        .collect();
    let k = p.wavenumber;
    let pi = std::f64::consts::PI;
    // Seeds at theta = pi/2 where both lattices have minima at
    // k z = pi/2 + n pi. The tracked a well (at k z = 3 pi/2) slides down in z
    // and the b well below it (k z = pi/2) slides up; they meet at k z = pi.
    let path_a = track_well(p, TrapState::A, &thetas, 1.5 * pi / k)?;
    let path_b = track_well(p, TrapState::B, &thetas, 0.5 * pi / k)?;

    let spacing = path_a.centers[0] - path_b.centers[0];
    // Mirror the axis (x = -z) so the a profile moves toward +x.
    let offsets_a: Vec<f64> = path_a.centers.iter().map(|z| -(z - path_a.centers[0])).collect();
    let offsets_b: Vec<f64> = path_b.centers.iter().map(|z| -(z - path_b.centers[0])).collect();
    let t0 = -half_window;
    let make = |offsets: Vec<f64>, omegas: Vec<f64>, base: f64| -> Result<Trajectory, LatticeError> {
        let disp = Series::new(t0, dt, offsets, None)?;
        let freq = Series::new(t0, dt, omegas, None)?;
        Ok(Trajectory::new(
            half_window,
            p.mass,
            base,
            Displacement::Sampled(disp),
            Frequency::Sampled(freq),
        )?)
    };
    Ok(LatticePair {
        state_a: make(offsets_a, path_a.omegas(), 0.0)?,
        state_b: make(offsets_b, path_b.omegas(), spacing)?,
        spacing,
    })
}

impl LatticePair {
    /// CSV trace of both profiles: raw columns plus the normalized columns
    /// used in displacement/frequency plots.
    pub fn write_csv<W: Write>(&self, n_rows: usize, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "t,delta_x_a,delta_x_b,omega_a,omega_b,delta_x_a_over_d,one_plus_delta_x_b_over_d,omega_a_over_omega,omega_b_over_omega"
        )?;
        let tau = self.state_a.half_window();
        let d = self.spacing;
        let omega_ref = self.state_b.omega(-tau);
        for i in 0..=n_rows {
            let t = -tau + 2.0 * tau * i as f64 / n_rows as f64;
            let (dxa, dxb) = (self.state_a.offset(t), self.state_b.offset(t));
            let (wa, wb) = (self.state_a.omega(t), self.state_b.omega(t));
            writeln!(
                w,
                "{t},{dxa},{dxb},{wa},{wb},{},{},{},{}",
                dxa / d,
                1.0 + dxb / d,
                wa / omega_ref,
                wb / omega_ref
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn params() -> LatticeParams {
        // Unit trap frequency, well spacing 11 a0 in trap units.
        LatticeParams::from_trap_frequency(1.0, PI / 11.0, 1.0)
    }

    #[test]
    fn depth_matches_requested_trap_frequency() {
        let p = params();
        assert_abs_diff_eq!(p.trap_frequency(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.well_spacing(), 11.0, epsilon = 1e-12);
    }

    #[test]
    fn sublevel_potentials_coincide_at_theta_zero() {
        let p = params();
        for i in 0..40 {
            let z = -15.0 + i as f64 * 0.77;
            let vp = sublevel_potential(&p, Sublevel::PlusHalf, z, 0.0);
            let vm = sublevel_potential(&p, Sublevel::MinusHalf, z, 0.0);
            let expect = p.depth * (p.wavenumber * z).sin().powi(2);
            assert_abs_diff_eq!(vp, expect, epsilon = 1e-12 * p.depth);
            assert_abs_diff_eq!(vm, expect, epsilon = 1e-12 * p.depth);
        }
    }

    #[test]
    fn crossed_polarization_gives_cosine_lattice() {
        let p = params();
        for i in 0..40 {
            let z = -15.0 + i as f64 * 0.77;
            let expect = p.depth * (p.wavenumber * z).cos().powi(2);
            for ms in [Sublevel::PlusHalf, Sublevel::MinusHalf] {
                assert_abs_diff_eq!(
                    sublevel_potential(&p, ms, z, FRAC_PI_2),
                    expect,
                    epsilon = 1e-12 * p.depth
                );
            }
        }
    }

    #[test]
    fn state_potentials_at_quarter_angle() {
        let p = params();
        let z = FRAC_PI_4 / p.wavenumber;
        assert_abs_diff_eq!(
            state_potential(&p, TrapState::A, z, FRAC_PI_4),
            p.depth / 4.0,
            epsilon = 1e-12 * p.depth
        );
        assert_abs_diff_eq!(
            state_potential(&p, TrapState::B, z, FRAC_PI_4),
            p.depth,
            epsilon = 1e-12 * p.depth
        );
    }

    #[test]
    fn potential_bounds_periodicity_and_parity() {
        let p = params();
        let period = PI / p.wavenumber;
        for iz in 0..23 {
            for it in 0..17 {
                let z = -9.0 + 1.3 * iz as f64;
                let theta = -1.8 + 0.23 * it as f64;
                for state in [TrapState::A, TrapState::B] {
                    let v = state_potential(&p, state, z, theta);
                    assert!((-1e-12..=p.depth * (1.0 + 1e-12)).contains(&v));
                    assert_abs_diff_eq!(
                        v,
                        state_potential(&p, state, z + period, theta),
                        epsilon = 1e-11 * p.depth
                    );
                    assert_abs_diff_eq!(
                        v,
                        state_potential(&p, state, -z, -theta),
                        epsilon = 1e-11 * p.depth
                    );
                }
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let p = params();
        let h = 1e-6;
        for (z, theta) in [(0.3, 1.1), (2.7, 0.4), (-4.0, 0.9), (5.5, FRAC_PI_4)] {
            for state in [TrapState::A, TrapState::B] {
                let fd = (state_potential(&p, state, z + h, theta)
                    - state_potential(&p, state, z - h, theta))
                    / (2.0 * h);
                assert_abs_diff_eq!(state_potential_dz(&p, state, z, theta), fd, epsilon = 1e-6);
                let fd2 = (state_potential_dz(&p, state, z + h, theta)
                    - state_potential_dz(&p, state, z - h, theta))
                    / (2.0 * h);
                assert_abs_diff_eq!(state_potential_d2z(&p, state, z, theta), fd2, epsilon = 1e-6);
            }
        }
    }

    fn sweep_thetas(n: usize) -> Vec<f64> {
        (0..=n).map(|i| FRAC_PI_2 * (1.0 - i as f64 / n as f64)).collect()
    }

    #[test]
    fn state_b_frequency_is_angle_independent() {
        let p = params();
        let thetas = sweep_thetas(400);
        let path = track_well(&p, TrapState::B, &thetas, 0.5 * PI / p.wavenumber).unwrap();
        let expect = p.trap_frequency();
        for w in path.omegas() {
            assert!((w - expect).abs() <= 1e-6 * expect);
        }
    }

    #[test]
    fn state_a_frequency_follows_the_sinusoid_reduction() {
        // The 1:3 sublevel mixture is a single sinusoid in 2 k z, so the
        // curvature at the minimum is V0 k^2 sqrt(1 + 3 cos^2(2 theta)).
        let p = params();
        let thetas = sweep_thetas(400);
        let path = track_well(&p, TrapState::A, &thetas, 1.5 * PI / p.wavenumber).unwrap();
        let omega_ref = p.trap_frequency();
        for (theta, w) in path.thetas.iter().zip(path.omegas()) {
            let expect = omega_ref * ((1.0 + 3.0 * (2.0 * theta).cos().powi(2)) / 4.0).powf(0.25);
            assert!((w - expect).abs() <= 1e-6 * omega_ref, "theta = {theta}");
        }
        // Frozen value at theta = pi/4: omega / sqrt(2).
        let mid = track_well(&p, TrapState::A, &[FRAC_PI_4 + 1e-4, FRAC_PI_4], 1.2 * PI / p.wavenumber)
            .unwrap();
        assert_abs_diff_eq!(
            mid.omegas()[1] / omega_ref,
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn tracked_curvature_matches_finite_difference_at_center() {
        let p = params();
        let thetas = sweep_thetas(64);
        for state in [TrapState::A, TrapState::B] {
            let seed = match state {
                TrapState::A => 1.5 * PI / p.wavenumber,
                TrapState::B => 0.5 * PI / p.wavenumber,
            };
            let path = track_well(&p, state, &thetas, seed).unwrap();
            for (i, (&theta, &z)) in path.thetas.iter().zip(&path.centers).enumerate() {
                let h = 1e-4;
                let fd = (state_potential(&p, state, z + h, theta)
                    - 2.0 * state_potential(&p, state, z, theta)
                    + state_potential(&p, state, z - h, theta))
                    / (h * h);
                assert!(
                    (fd - path.curvatures[i]).abs() <= 1e-5 * path.curvatures[i],
                    "theta = {theta}"
                );
            }
        }
    }

    #[test]
    fn adjacent_wells_close_monotonically() {
        let p = params();
        let thetas = sweep_thetas(1000);
        let a = track_well(&p, TrapState::A, &thetas, 1.5 * PI / p.wavenumber).unwrap();
        let b = track_well(&p, TrapState::B, &thetas, 0.5 * PI / p.wavenumber).unwrap();
        let mut last = f64::INFINITY;
        for (za, zb) in a.centers.iter().zip(&b.centers) {
            let sep = za - zb;
            assert!(sep >= -1e-12);
            assert!(sep <= last + 1e-12);
            last = sep;
        }
        assert_abs_diff_eq!(a.centers[0] - b.centers[0], p.well_spacing(), epsilon = 1e-9);
        assert!(last.abs() < 1e-9 / p.wavenumber);
    }

    #[test]
    fn reversed_path_retraces_centers() {
        let p = params();
        let forward = sweep_thetas(300);
        let mut backward = forward.clone();
        backward.reverse();
        let fwd = track_well(&p, TrapState::A, &forward, 1.5 * PI / p.wavenumber).unwrap();
        let bwd = track_well(&p, TrapState::A, &backward, *fwd.centers.last().unwrap()).unwrap();
        for (zf, zb) in fwd.centers.iter().zip(bwd.centers.iter().rev()) {
            assert!((zf - zb).abs() < 1e-9 / p.wavenumber);
        }
    }

    #[test]
    fn losing_the_minimum_is_reported_with_the_angle() {
        // Synthetic family whose well flattens out as theta -> 0.
        struct Flattening;
        impl PotentialFamily for Flattening {
            fn v(&self, z: f64, theta: f64) -> f64 {
                theta * z.sin().powi(2)
            }
            fn dv(&self, z: f64, theta: f64) -> f64 {
                theta * (2.0 * z).sin()
            }
            fn d2v(&self, z: f64, theta: f64) -> f64 {
                2.0 * theta * (2.0 * z).cos()
            }
            fn quarter_period(&self) -> f64 {
                PI / 4.0
            }
            fn curvature_floor(&self) -> f64 {
                1e-6
            }
        }
        let thetas: Vec<f64> = (0..=100).map(|i| 1.0 - i as f64 / 100.0).collect();
        let res = track_family(&Flattening, &thetas, PI, 1.0);
        match res {
            Err(LatticeError::LostMinimum { theta, .. }) => assert!(theta < 1e-6 / 2.0 + 1e-3),
            other => panic!("expected LostMinimum, got {other:?}"),
        }
    }

    #[test]
    fn schedule_hits_the_documented_reference_points() {
        let (rise, hold) = (30.0, 20.0);
        assert_abs_diff_eq!(theta_schedule(0.0, rise, hold), 0.0, epsilon = 1e-14);
        let expect = FRAC_PI_2 * (1.0 - (1.0 + (-(20.0f64 / 30.0).powi(2)).exp()) / 2.0);
        assert_abs_diff_eq!(theta_schedule(hold, rise, hold), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(
            theta_schedule(2.0 * hold + 5.0 * rise, rise, hold),
            FRAC_PI_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn pair_trajectories_meet_in_the_middle() {
        let p = params();
        let (rise, hold) = (30.0, 20.0);
        let tau = 2.0 * hold + 5.0 * rise;
        let pair = pair_trajectories(&p, rise, hold, tau, 4096).unwrap();
        let d = pair.spacing;
        assert_abs_diff_eq!(d, p.well_spacing(), epsilon = 1e-9);
        // Midpoint: displacements meet, |dxa| + |dxb| = d.
        let (dxa, dxb) = (pair.state_a.offset(0.0), pair.state_b.offset(0.0));
        assert!(dxa > 0.0 && dxb < 0.0, "opposite-signed motion expected");
        assert_abs_diff_eq!(dxa.abs() + dxb.abs(), d, epsilon = 1e-8 * d);
        // Absolute centers coincide at the midpoint.
        assert!(
            (pair.state_a.center(0.0) - pair.state_b.center(0.0)).abs() < 1e-8 * d,
            "merged wells should coincide"
        );
        // Edges: at rest at full frequency.
        for t in [-tau, tau] {
            assert!(pair.state_a.offset(t).abs() < 1e-9 * d);
            assert!(pair.state_b.offset(t).abs() < 1e-9 * d);
            assert!((pair.state_a.omega(t) - 1.0).abs() < 1e-6);
            assert!((pair.state_b.omega(t) - 1.0).abs() < 1e-6);
        }
        // b keeps its frequency through the sweep; a never drops below the
        // quarter-angle dip and recovers at the midpoint.
        let mut min_wa = f64::INFINITY;
        for i in 0..=400 {
            let t = -tau + 2.0 * tau * i as f64 / 400.0;
            assert!((pair.state_b.omega(t) - 1.0).abs() < 1e-6);
            min_wa = min_wa.min(pair.state_a.omega(t));
        }
        assert!(min_wa > std::f64::consts::FRAC_1_SQRT_2 - 1e-6);
        assert!((pair.state_a.omega(0.0) - 1.0).abs() < 1e-6);
        // At the quarter-angle transit (bisected on the monotone outgoing
        // edge) the a frequency bottoms out at omega / sqrt(2).
        let (mut lo, mut hi) = (0.0f64, tau);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if theta_schedule(mid, rise, hold) < FRAC_PI_4 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_dip = 0.5 * (lo + hi);
        assert_abs_diff_eq!(
            pair.state_a.omega(t_dip),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-6
        );
    }

    #[test]
    fn csv_trace_has_the_advertised_columns() {
        let p = params();
        let pair = pair_trajectories(&p, 10.0, 8.0, 66.0, 512).unwrap();
        let mut buf = Vec::new();
        pair.write_csv(16, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "t,delta_x_a,delta_x_b,omega_a,omega_b,delta_x_a_over_d,one_plus_delta_x_b_over_d,omega_a_over_omega,omega_b_over_omega"
        );
        assert_eq!(lines.count(), 17);
    }
}
