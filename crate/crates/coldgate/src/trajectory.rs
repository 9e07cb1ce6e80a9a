//! Trap-center trajectories and the phases they imprint.
//!
//! A trajectory describes one trap over a symmetric window [-tau, tau]: the
//! center displacement delta_x(t) away from a fixed base position, and the
//! instantaneous trap frequency omega(t). Everything downstream (kinetic
//! phases, adiabaticity estimates, comoving-frame Hamiltonians) is a
//! functional of these two curves and their time derivatives.
//!
//! Units: hbar = 1 throughout; the atom mass is carried explicitly so a0 and
//! the oscillator velocity scale stay visible in formulas.

use serde::Serialize;
use thiserror::Error;

use crate::quad;
use num_complex::Complex64 as C64;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("displacement does not return to the base position at the window edge: |delta_x({t})| = {residual:.3e} exceeds 1e-9 of the peak excursion")]
    OpenEndpoint { t: f64, residual: f64 },
    #[error("trap frequency must stay positive; found {omega} at t = {t}")]
    NonPositiveFrequency { omega: f64, t: f64 },
    #[error("sampled profiles need at least two points")]
    TooFewSamples,
    #[error("piecewise profile needs strictly increasing knot times")]
    UnorderedKnots,
}

/// Uniformly sampled curve with cubic-Hermite interpolation. Slopes are either
/// supplied (when the producer knows them analytically) or filled in by
/// centered differences.
#[derive(Debug, Clone, Serialize)]
pub struct Series {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Series {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self, TrajectoryError> {
        if values.len() < 2 {
            return Err(TrajectoryError::TooFewSamples);
        }
        let slopes = match slopes {
            Some(s) => {
                assert_eq!(s.len(), values.len(), "slope samples must pair with values");
                s
            }
            None => centered_slopes(&values, dt),
        };
        Ok(Self { t0, dt, values, slopes })
    }

    fn clamp_index(&self, t: f64) -> (usize, f64) {
        let n = self.values.len();
        let s = (t - self.t0) / self.dt;
        let k = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
        (k, s - k as f64)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (k, u) = self.clamp_index(t);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.dt, self.slopes[k + 1] * self.dt);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * v0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * v1
            + (u3 - u2) * m1
    }

    pub fn slope(&self, t: f64) -> f64 {
        let (k, u) = self.clamp_index(t);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.dt, self.slopes[k + 1] * self.dt);
        let u2 = u * u;
        let dv = (6.0 * u2 - 6.0 * u) * v0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * v1
            + (3.0 * u2 - 2.0 * u) * m1;
        dv / self.dt
    }
}

fn centered_slopes(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut s = vec![0.0; n];
    s[0] = (values[1] - values[0]) / dt;
    s[n - 1] = (values[n - 1] - values[n - 2]) / dt;
    for k in 1..n - 1 {
        s[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    s
}

/// Center displacement as a function of time.
#[derive(Debug, Clone, Serialize)]
pub enum Displacement {
    /// Trap never moves.
    Static,
    /// Smooth move-hold-return pulse: the center sits at `amplitude` around
    /// t = 0 and decays back to zero on a timescale `rise` outside |t| ~ hold.
    Sigmoid { rise: f64, hold: f64, amplitude: f64 },
    /// Piecewise-linear path through (time, offset) knots; constant outside.
    PiecewiseLinear { times: Vec<f64>, offsets: Vec<f64> },
    /// Sampled path, e.g. produced by tracking lattice well minima.
    Sampled(Series),
}

/// Instantaneous trap frequency as a function of time.
#[derive(Debug, Clone, Serialize)]
pub enum Frequency {
    Constant(f64),
    Sampled(Series),
}

/// One trap's trajectory over the window [-half_window, half_window].
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    half_window: f64,
    mass: f64,
    base_position: f64,
    displacement: Displacement,
    frequency: Frequency,
}

/// Sigmoid pulse shape shared by trap displacement schedules and the lattice
/// polarization-angle sweep: 1 at t = 0, decaying to 0 for |t| >> hold.
pub fn sigmoid_pulse(t: f64, rise: f64, hold: f64) -> f64 {
    let num = 1.0 + (-(hold / rise).powi(2)).exp();
    num / (1.0 + ((t * t - hold * hold) / (rise * rise)).exp())
}

/// Time derivative of [`sigmoid_pulse`].
pub fn sigmoid_pulse_dot(t: f64, rise: f64, hold: f64) -> f64 {
    let num = 1.0 + (-(hold / rise).powi(2)).exp();
    let u = (t * t - hold * hold) / (rise * rise);
    // Writing the logistic derivative via 1/(e^{u/2} + e^{-u/2})^2 avoids
    // overflow of e^u far outside the pulse.
    let sech_like = 1.0 / ((0.5 * u).exp() + (-0.5 * u).exp()).powi(2);
    -num * (2.0 * t / (rise * rise)) * sech_like
}

/// Second time derivative of [`sigmoid_pulse`].
pub fn sigmoid_pulse_ddot(t: f64, rise: f64, hold: f64) -> f64 {
    let num = 1.0 + (-(hold / rise).powi(2)).exp();
    let u = (t * t - hold * hold) / (rise * rise);
    let du = 2.0 * t / (rise * rise);
    let ddu = 2.0 / (rise * rise);
    let sech_like = 1.0 / ((0.5 * u).exp() + (-0.5 * u).exp()).powi(2);
    // d/dt [-num du sech_like] with d(sech_like)/du = -tanh(u/2) sech_like.
    let tanh_half = (0.5 * u).tanh();
    -num * sech_like * (ddu - du * du * tanh_half)
}

impl Trajectory {
    pub fn new(
        half_window: f64,
        mass: f64,
        base_position: f64,
        displacement: Displacement,
        frequency: Frequency,
    ) -> Result<Self, TrajectoryError> {
        assert!(half_window > 0.0 && mass > 0.0);
        let traj = Self { half_window, mass, base_position, displacement, frequency };
        let peak = traj.peak_excursion().max(f64::MIN_POSITIVE);
        for t in [-half_window, half_window] {
            let residual = traj.offset(t).abs();
            if residual > 1e-9 * peak {
                return Err(TrajectoryError::OpenEndpoint { t, residual });
            }
            let omega = traj.omega(t);
            if omega <= 0.0 {
                return Err(TrajectoryError::NonPositiveFrequency { omega, t });
            }
        }
        if let Frequency::Sampled(series) = &traj.frequency {
            for (k, v) in series.values.iter().enumerate() {
                if *v <= 0.0 {
                    let t = series.t0 + k as f64 * series.dt;
                    return Err(TrajectoryError::NonPositiveFrequency { omega: *v, t });
                }
            }
        }
        if let Displacement::PiecewiseLinear { times, .. } = &traj.displacement {
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(TrajectoryError::UnorderedKnots);
            }
        }
        Ok(traj)
    }

    /// Static trap at `base_position` with constant frequency.
    pub fn at_rest(half_window: f64, mass: f64, omega: f64, base_position: f64) -> Self {
        Self::new(half_window, mass, base_position, Displacement::Static, Frequency::Constant(omega))
            .expect("static trajectory is always well formed")
    }

    /// Smooth move-hold-return trajectory with constant trap frequency.
    pub fn sigmoid(
        half_window: f64,
        mass: f64,
        omega: f64,
        base_position: f64,
        rise: f64,
        hold: f64,
        amplitude: f64,
    ) -> Result<Self, TrajectoryError> {
        Self::new(
            half_window,
            mass,
            base_position,
            Displacement::Sigmoid { rise, hold, amplitude },
            Frequency::Constant(omega),
        )
    }

    pub fn half_window(&self) -> f64 {
        self.half_window
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn base_position(&self) -> f64 {
        self.base_position
    }

    /// Rebase the same motion profile onto another trap site.
    pub fn with_base_position(&self, base_position: f64) -> Self {
        Self { base_position, ..self.clone() }
    }

    fn peak_excursion(&self) -> f64 {
        match &self.displacement {
            Displacement::Static => 0.0,
            Displacement::Sigmoid { amplitude, .. } => amplitude.abs(),
            Displacement::PiecewiseLinear { offsets, .. } => {
                offsets.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            Displacement::Sampled(series) => {
                series.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Center displacement away from the base position.
    pub fn offset(&self, t: f64) -> f64 {
        match &self.displacement {
            Displacement::Static => 0.0,
            Displacement::Sigmoid { rise, hold, amplitude } => {
                amplitude * sigmoid_pulse(t, *rise, *hold)
            }
            Displacement::PiecewiseLinear { times, offsets } => {
                piecewise_value(times, offsets, t)
            }
            Displacement::Sampled(series) => series.value(t),
        }
    }

    /// Absolute trap-center position.
    pub fn center(&self, t: f64) -> f64 {
        self.base_position + self.offset(t)
    }

    /// Center velocity. Analytic for closed-form profiles, interpolated for
    /// sampled ones.
    pub fn velocity(&self, t: f64) -> f64 {
        match &self.displacement {
            Displacement::Static => 0.0,
            Displacement::Sigmoid { rise, hold, amplitude } => {
                amplitude * sigmoid_pulse_dot(t, *rise, *hold)
            }
            Displacement::PiecewiseLinear { times, offsets } => {
                piecewise_slope(times, offsets, t)
            }
            Displacement::Sampled(series) => series.slope(t),
        }
    }

    /// Center acceleration; finite differences except for the sigmoid.
    pub fn acceleration(&self, t: f64) -> f64 {
        match &self.displacement {
            Displacement::Static => 0.0,
            Displacement::Sigmoid { rise, hold, amplitude } => {
                amplitude * sigmoid_pulse_ddot(t, *rise, *hold)
            }
            _ => {
                let h = 1e-5 * self.half_window;
                (self.velocity(t + h) - self.velocity(t - h)) / (2.0 * h)
            }
        }
    }

    pub fn omega(&self, t: f64) -> f64 {
        match &self.frequency {
            Frequency::Constant(w) => *w,
            Frequency::Sampled(series) => series.value(t),
        }
    }

    pub fn omega_dot(&self, t: f64) -> f64 {
        match &self.frequency {
            Frequency::Constant(_) => 0.0,
            Frequency::Sampled(series) => series.slope(t),
        }
    }

    /// Instantaneous ground-state size sqrt(1 / (m omega)).
    pub fn ground_width(&self, t: f64) -> f64 {
        1.0 / (self.mass * self.omega(t)).sqrt()
    }

    /// Oscillator velocity scale a0 omega = sqrt(omega / m).
    pub fn oscillator_velocity(&self, t: f64) -> f64 {
        (self.omega(t) / self.mass).sqrt()
    }

    /// Peak of |acceleration| * tau / oscillator velocity over the window; a
    /// dimensionless drive-smoothness diagnostic that should stay small for
    /// gentle schedules.
    pub fn drive_smoothness(&self) -> f64 {
        let n = 4000;
        let tau = self.half_window;
        (0..=n)
            .map(|k| {
                let t = -tau + 2.0 * tau * k as f64 / n as f64;
                self.acceleration(t).abs() * tau / self.oscillator_velocity(t)
            })
            .fold(0.0, f64::max)
    }
}

fn piecewise_value(times: &[f64], offsets: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return offsets[0];
    }
    if t >= *times.last().unwrap() {
        return *offsets.last().unwrap();
    }
    let k = times.partition_point(|x| *x <= t) - 1;
    let u = (t - times[k]) / (times[k + 1] - times[k]);
    offsets[k] + u * (offsets[k + 1] - offsets[k])
}

fn piecewise_slope(times: &[f64], offsets: &[f64], t: f64) -> f64 {
    if t < times[0] || t > *times.last().unwrap() {
        return 0.0;
    }
    let k = (times.partition_point(|x| *x <= t)).clamp(1, times.len() - 1) - 1;
    (offsets[k + 1] - offsets[k]) / (times[k + 1] - times[k])
}

/// Number of quadrature panels used for phase integrals: enough to resolve
/// both the trap period and the trajectory features.
fn phase_panels(traj: &Trajectory, density: usize) -> usize {
    let window = 2.0 * traj.half_window;
    let omega_max = {
        let n = 64;
        (0..=n)
            .map(|k| traj.omega(-traj.half_window + window * k as f64 / n as f64))
            .fold(0.0, f64::max)
    };
    ((window * omega_max * density as f64).ceil() as usize).clamp(512, 4_000_000)
}

/// Kinetic phase (m / 2 hbar) * integral of velocity^2 over the window.
pub fn kinetic_phase(traj: &Trajectory) -> f64 {
    kinetic_phase_with_density(traj, 8)
}

/// [`kinetic_phase`] with an explicit panel-density multiplier (panels per
/// trap period); doubling the density is the standard convergence check.
pub fn kinetic_phase_with_density(traj: &Trajectory, density: usize) -> f64 {
    let tau = traj.half_window;
    let panels = phase_panels(traj, density);
    0.5 * traj.mass * quad::gl4_real(|t| traj.velocity(t).powi(2), -tau, tau, panels)
}

/// Motional-excitation measure at time `t`: the running Fourier integral of
/// the center velocity at the trap frequency, in units of the ground-state
/// size. Small values mean the atom follows the trap adiabatically; the value
/// at the window edge controls how well the atom returns to its ground state.
pub fn adiabaticity_functional(traj: &Trajectory, t: f64) -> f64 {
    let tau = traj.half_window;
    assert!((-tau..=tau).contains(&t), "query time outside the trajectory window");
    let omega = traj.omega(-tau);
    let panels = (((t + tau) * omega * 8.0).ceil() as usize).clamp(64, 4_000_000);
    let integral = quad::gl4(
        |s| C64::new(0.0, omega * s).exp() * traj.velocity(s),
        -tau,
        t,
        panels,
    );
    integral.norm() / traj.ground_width(-tau)
}

/// Kinetic phase plus the adiabaticity profile in one pass.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSummary {
    pub kinetic_phase: f64,
    /// Peak of the adiabaticity functional over the window.
    pub adiabaticity_peak: f64,
    /// Value at the window edge; controls the residual excitation.
    pub adiabaticity_final: f64,
}

pub fn phase_summary(traj: &Trajectory) -> PhaseSummary {
    let tau = traj.half_window;
    let omega = traj.omega(-tau);
    let n = phase_panels(traj, 8);
    let (_, cumulative) = quad::cumulative_gl4(
        |s| C64::new(0.0, omega * s).exp() * traj.velocity(s),
        -tau,
        tau,
        n,
    );
    let a0 = traj.ground_width(-tau);
    let peak = cumulative.iter().map(|v| v.norm()).fold(0.0, f64::max) / a0;
    let fin = cumulative.last().unwrap().norm() / a0;
    PhaseSummary {
        kinetic_phase: kinetic_phase(traj),
        adiabaticity_peak: peak,
        adiabaticity_final: fin,
    }
}
