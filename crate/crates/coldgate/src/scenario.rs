//! Scenario configuration, execution, and record emission.
//!
//! A [`Scenario`] is the JSON-facing description of one gate setup in SI
//! units (every field name carries its unit). Resolution converts it into
//! trap units — hbar = 1, mass = 1, initial trap frequency = 1, lengths in
//! ground-state sizes a0 = sqrt(hbar / (m omega)) — builds the trap shape
//! pair for the configured trajectory family, and validates everything with
//! field-level messages. Execution reuses one channel simulation across the
//! whole temperature list, since only the thermal weighting changes.
//!
//! Sweeps evaluate a scenario over one or two swept parameters. Grid points
//! run concurrently up to a worker count, results assemble in deterministic
//! row-major order, and per-point failures are recorded in place without
//! aborting the rest of the grid. A temperature axis is special-cased to
//! share the channel simulation across its values.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{self, Write};

use crate::gate::{
    fidelity_report, simulate_channel, thermal_weights, ChannelSpec, FidelityReport,
    PhaseReference,
};
use crate::integrate::StepControl;
use crate::lattice::{pair_trajectories, LatticeError, LatticePair, LatticeParams};
use crate::protocols::{run_script, Level, ProtocolError, RegisterState, ScriptSpec};
use crate::trajectory::{Trajectory, TrajectoryError};
use crate::two_particle::{InteractionModel, TwoParticleError, MAX_LEVELS};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 2018 CODATA reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054571817e-34;
/// Mass of 87Rb, kg.
pub const RB87_MASS_KG: f64 = 1.4431606e-25;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },
    #[error("sweep {axis}: {message}")]
    Sweep { axis: &'static str, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{context}: {source}")]
    Json {
        context: String,
        source: serde_json::Error,
    },
    #[error("register script: {0}")]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Numeric(#[from] TwoParticleError),
}

impl ScenarioError {
    /// Process exit code class: 1 for configuration problems, 2 for numeric
    /// failures of a valid configuration.
    pub fn exit_code(&self) -> u8 {
        match self {
            ScenarioError::Field { .. }
            | ScenarioError::Sweep { .. }
            | ScenarioError::Io { .. }
            | ScenarioError::Json { .. }
            | ScenarioError::Protocol(_) => 1,
            ScenarioError::Lattice(_)
            | ScenarioError::Trajectory(_)
            | ScenarioError::Numeric(_) => 2,
        }
    }
}

fn field_err(field: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field {
        field,
        message: message.into(),
    }
}

/// Trap shape families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Constant trap frequency; the a trap sweeps one full spacing along a
    /// smooth move-hold-return pulse while the b trap stays put.
    Sigmoid,
    /// Polarization-angle sweep of the optical lattice: both traps move
    /// half a spacing toward each other, the a trap frequency dips during
    /// the transit, the spacing derives from the laser wavelength.
    Lattice,
}

/// Trajectory block of a scenario. Durations and the spacing each accept an
/// SI field or a trap-unit field — exactly one of the pair must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rise_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rise_trap_units: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_trap_units: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_over_a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

fn default_temperatures() -> Vec<f64> {
    vec![0.0]
}

/// One gate setup, in SI units (see field-name suffixes). The temperature
/// list is dimensionless kT / (hbar omega).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mass_kg: f64,
    /// Real part of the s-wave scattering length.
    pub scattering_length_m: f64,
    /// Im(a_s) / Re(a_s); nonpositive, 0 for a purely elastic collision.
    #[serde(default)]
    pub loss_ratio: f64,
    /// Trap frequency. Alternative: `lattice_depth_joule` plus a lattice
    /// wavelength, from which the frequency follows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_rad_per_s: Option<f64>,
    /// Lattice potential depth; usable instead of `omega_rad_per_s` for the
    /// lattice family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_depth_joule: Option<f64>,
    pub transverse_omega_rad_per_s: f64,
    pub trajectory: TrajectorySpec,
    /// Motional basis size per atom.
    pub basis_levels: usize,
    /// Local error tolerance of the adaptive propagation.
    pub tolerance: f64,
    #[serde(default = "default_temperatures")]
    pub temperatures_kt_over_hbar_omega: Vec<f64>,
    /// When set, the ideal gate uses this collision phase instead of the
    /// extracted one, so calibration error counts against the fidelity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_phase_rad: Option<f64>,
    /// Optional register script executed after the gate pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ScriptSpec>,
}

/// Relative weight floor for thermal occupation vectors.
const THERMAL_CUTOFF: f64 = 1e-6;
/// Displacement tail bound at the window edges, relative to the spacing.
const TAIL_BOUND: f64 = 1e-6;

fn require_positive(field: &'static str, value: f64) -> Result<f64, ScenarioError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(field_err(field, format!("must be positive and finite, got {value}")))
    }
}

fn exactly_one(
    si_field: &'static str,
    si: Option<f64>,
    trap_field: &'static str,
    trap: Option<f64>,
) -> Result<(f64, bool), ScenarioError> {
    match (si, trap) {
        (Some(v), None) => Ok((v, true)),
        (None, Some(v)) => Ok((v, false)),
        (None, None) => Err(field_err(
            si_field,
            format!("missing: provide either {si_field} or {trap_field}"),
        )),
        (Some(_), Some(_)) => Err(field_err(
            si_field,
            format!("conflicts with {trap_field}: provide exactly one"),
        )),
    }
}

/// A scenario converted to trap units with its shape pair built, ready to
/// simulate.
#[derive(Debug)]
pub struct Resolved {
    /// Trap frequency in SI, for unit conversion on output.
    pub omega_si: f64,
    /// Ground-state size in meters.
    pub a0_m: f64,
    pub shapes: LatticePair,
    pub model: InteractionModel,
    pub levels: usize,
    pub control: StepControl,
    pub reference: PhaseReference,
    /// Thermal occupation weights per entry of the temperature list.
    pub weights: Vec<Vec<f64>>,
    pub max_starts: usize,
}

/// Validate a scenario and build its trap-unit representation.
pub fn resolve(s: &Scenario) -> Result<Resolved, ScenarioError> {
    let mass = require_positive("mass_kg", s.mass_kg)?;
    let transverse = require_positive("transverse_omega_rad_per_s", s.transverse_omega_rad_per_s)?;
    if !s.scattering_length_m.is_finite() {
        return Err(field_err("scattering_length_m", "must be finite"));
    }
    if !s.loss_ratio.is_finite() || s.loss_ratio > 0.0 {
        return Err(field_err(
            "loss_ratio",
            format!("inelastic loss needs Im(a_s)/Re(a_s) <= 0, got {}", s.loss_ratio),
        ));
    }
    if s.loss_ratio < 0.0 && s.scattering_length_m < 0.0 {
        return Err(field_err(
            "loss_ratio",
            "a negative real scattering length with a loss ratio would amplify the pair",
        ));
    }
    if s.basis_levels < 3 || s.basis_levels > MAX_LEVELS {
        return Err(field_err(
            "basis_levels",
            format!("must lie in 3..={MAX_LEVELS}, got {}", s.basis_levels),
        ));
    }
    if !(1e-13..=1e-2).contains(&s.tolerance) {
        return Err(field_err(
            "tolerance",
            format!("must lie in [1e-13, 1e-2], got {}", s.tolerance),
        ));
    }
    if s.temperatures_kt_over_hbar_omega.is_empty() {
        return Err(field_err("temperatures_kt_over_hbar_omega", "must not be empty"));
    }
    for &kt in &s.temperatures_kt_over_hbar_omega {
        if !kt.is_finite() || kt < 0.0 {
            return Err(field_err(
                "temperatures_kt_over_hbar_omega",
                format!("temperatures must be finite and nonnegative, got {kt}"),
            ));
        }
    }
    if let Some(target) = s.target_phase_rad {
        if !target.is_finite() {
            return Err(field_err("target_phase_rad", "must be finite"));
        }
    }

    let traj = &s.trajectory;
    // Trap frequency: given directly, or derived from the lattice depth via
    // omega = k sqrt(2 V0 / m).
    let omega_si = match (s.omega_rad_per_s, s.lattice_depth_joule) {
        (Some(omega), None) => require_positive("omega_rad_per_s", omega)?,
        (None, Some(depth)) => {
            let depth = require_positive("lattice_depth_joule", depth)?;
            if traj.family != Family::Lattice {
                return Err(field_err(
                    "lattice_depth_joule",
                    "deriving the trap frequency from a depth requires the lattice family",
                ));
            }
            let wavelength = require_positive(
                "trajectory.wavelength_m",
                traj.wavelength_m.ok_or_else(|| {
                    field_err("trajectory.wavelength_m", "required with lattice_depth_joule")
                })?,
            )?;
            let k = 2.0 * std::f64::consts::PI / wavelength;
            k * (2.0 * depth / mass).sqrt()
        }
        (None, None) => {
            return Err(field_err(
                "omega_rad_per_s",
                "missing: provide omega_rad_per_s or lattice_depth_joule",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(field_err(
                "omega_rad_per_s",
                "conflicts with lattice_depth_joule: provide exactly one",
            ))
        }
    };
    let a0_m = (HBAR_SI / (mass * omega_si)).sqrt();

    let (rise_raw, rise_si) = exactly_one("trajectory.rise_s", traj.rise_s, "trajectory.rise_trap_units", traj.rise_trap_units)?;
    let (hold_raw, hold_si) = exactly_one("trajectory.hold_s", traj.hold_s, "trajectory.hold_trap_units", traj.hold_trap_units)?;
    let rise = require_positive("trajectory.rise", if rise_si { rise_raw * omega_si } else { rise_raw })?;
    let hold = require_positive("trajectory.hold", if hold_si { hold_raw * omega_si } else { hold_raw })?;

    let scattering_tu = C64::new(1.0, s.loss_ratio) * (s.scattering_length_m / a0_m);
    let model = InteractionModel::new(scattering_tu, transverse / omega_si)?;

    let shapes = build_shapes(s, a0_m, rise, hold)?;

    let reference = match s.target_phase_rad {
        Some(phi) => PhaseReference::Target(phi),
        None => PhaseReference::Extracted,
    };
    let weights: Vec<Vec<f64>> = s
        .temperatures_kt_over_hbar_omega
        .iter()
        .map(|&kt| thermal_weights(1.0, kt, THERMAL_CUTOFF))
        .collect();
    let max_starts = weights.iter().map(Vec::len).max().unwrap_or(1);
    if max_starts + 2 > s.basis_levels {
        return Err(field_err(
            "basis_levels",
            format!(
                "hottest temperature occupies {max_starts} motional levels and needs \
                 basis_levels >= {}, got {}",
                max_starts + 2,
                s.basis_levels
            ),
        ));
    }

    Ok(Resolved {
        omega_si,
        a0_m,
        shapes,
        model,
        levels: s.basis_levels,
        control: StepControl::with_tol(s.tolerance),
        reference,
        weights,
        max_starts,
    })
}

/// Build the trap shape pair in trap units, growing the evolution window
/// from its default until the displacement tails at the edges fall below
/// [`TAIL_BOUND`] of the spacing.
fn build_shapes(
    s: &Scenario,
    a0_m: f64,
    rise: f64,
    hold: f64,
) -> Result<LatticePair, ScenarioError> {
    let traj = &s.trajectory;
    let mut half_window = 2.0 * hold + 5.0 * rise;
    for _ in 0..16 {
        let pair = match traj.family {
            Family::Sigmoid => {
                if traj.wavelength_m.is_some() {
                    return Err(field_err(
                        "trajectory.wavelength_m",
                        "only the lattice family derives its spacing from a wavelength",
                    ));
                }
                let (spacing_raw, spacing_si) = exactly_one(
                    "trajectory.spacing_m",
                    traj.spacing_m,
                    "trajectory.spacing_over_a0",
                    traj.spacing_over_a0,
                )?;
                let spacing = require_positive(
                    "trajectory.spacing",
                    if spacing_si { spacing_raw / a0_m } else { spacing_raw },
                )?;
                let moving = Trajectory::sigmoid(half_window, 1.0, 1.0, 0.0, rise, hold, spacing)?;
                LatticePair {
                    state_a: moving,
                    state_b: Trajectory::at_rest(half_window, 1.0, 1.0, spacing),
                    spacing,
                }
            }
            Family::Lattice => {
                if traj.spacing_m.is_some() || traj.spacing_over_a0.is_some() {
                    return Err(field_err(
                        "trajectory.spacing_m",
                        "the lattice family derives its spacing from wavelength_m; drop the spacing fields",
                    ));
                }
                let wavelength = require_positive(
                    "trajectory.wavelength_m",
                    traj.wavelength_m.ok_or_else(|| {
                        field_err("trajectory.wavelength_m", "required for the lattice family")
                    })?,
                )?;
                let k_tu = 2.0 * std::f64::consts::PI / wavelength * a0_m;
                let params = LatticeParams::from_trap_frequency(1.0, k_tu, 1.0);
                let n_samples = ((2.0 * half_window / rise * 100.0).ceil() as usize).clamp(1000, 20_000);
                pair_trajectories(&params, rise, hold, half_window, n_samples)?
            }
        };
        let tail = pair
            .state_a
            .offset(-half_window)
            .abs()
            .max(pair.state_a.offset(half_window).abs())
            .max(pair.state_b.offset(-half_window).abs())
            .max(pair.state_b.offset(half_window).abs());
        if tail < TAIL_BOUND * pair.spacing {
            return Ok(pair);
        }
        half_window *= 1.25;
    }
    Err(field_err(
        "trajectory",
        "could not find an evolution window with settled displacement tails",
    ))
}

/// Canonical hash of a scenario: SHA-256 over its canonical JSON form.
pub fn scenario_hash(s: &Scenario) -> String {
    let json = serde_json::to_string(s).expect("scenario serialization is infallible");
    let digest = Sha256::digest(json.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Unit conventions carried by every emitted record.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UnitsNote {
    pub convention: &'static str,
    pub length: &'static str,
    pub mass: &'static str,
    pub time: &'static str,
    pub angular_frequency: &'static str,
    pub phase: &'static str,
    pub temperature: &'static str,
    pub fidelity: &'static str,
}

pub const UNITS: UnitsNote = UnitsNote {
    convention: "SI fields carry their unit as a name suffix; internal computation uses hbar = mass = initial trap omega = 1",
    length: "m",
    mass: "kg",
    time: "s",
    angular_frequency: "rad/s",
    phase: "rad",
    temperature: "kT / (hbar omega), dimensionless",
    fidelity: "dimensionless in [0, 1]",
};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: ToolInfo = ToolInfo {
    name: TOOL_NAME,
    version: TOOL_VERSION,
};

#[derive(Debug, Clone, Serialize)]
pub struct TemperatureResult {
    pub kt_over_hbar_omega: f64,
    pub report: FidelityReport,
}

/// Amplitude-table row of a register state.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeRow {
    /// Per-atom level letters, atom 0 first.
    pub levels: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub n_atoms: usize,
    pub norm_sqr: f64,
    pub upper_populations: Vec<f64>,
    /// Overlap-squared with (|a..a> - |b..b>)/sqrt(2); present when every
    /// atom ends on the a/b pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghz_fidelity: Option<f64>,
    /// Full amplitude table for registers of up to 6 atoms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<AmplitudeRow>>,
}

/// Execute a register script and summarize the final state.
pub fn run_protocol(spec: &ScriptSpec) -> Result<ProtocolReport, ScenarioError> {
    let state = run_script(spec)?;
    Ok(summarize_register(&state))
}

fn level_letter(level: Level) -> char {
    match level {
        Level::A => 'a',
        Level::B => 'b',
        Level::C => 'c',
    }
}

fn summarize_register(state: &RegisterState) -> ProtocolReport {
    let n = state.n_atoms();
    let amplitudes = (n <= 6).then(|| {
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(index, amp)| {
                let levels: String = (0..n)
                    .map(|atom| {
                        if index & (1 << atom) == 0 {
                            'a'
                        } else {
                            level_letter(state.uppers()[atom])
                        }
                    })
                    .collect();
                AmplitudeRow {
                    levels,
                    re: amp.re,
                    im: amp.im,
                }
            })
            .collect()
    });
    let all_b = state.uppers().iter().all(|u| *u == Level::B);
    ProtocolReport {
        n_atoms: n,
        norm_sqr: state.norm_sqr(),
        upper_populations: (0..n).map(|atom| state.upper_population(atom)).collect(),
        ghz_fidelity: all_b.then(|| crate::protocols::ghz_fidelity(state)),
        amplitudes,
    }
}

/// Full output of a single scenario run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub tool: ToolInfo,
    pub units: UnitsNote,
    pub scenario: Scenario,
    pub scenario_hash: String,
    pub results: Vec<TemperatureResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolReport>,
}

/// Run the full pipeline of one scenario: shapes, channel simulation, one
/// fidelity report per configured temperature, and the optional register
/// script.
pub fn run_scenario(s: &Scenario) -> Result<RunRecord, ScenarioError> {
    let resolved = resolve(s)?;
    let spec = ChannelSpec {
        shapes: &resolved.shapes,
        model: resolved.model,
        levels: resolved.levels,
        control: resolved.control.clone(),
        max_starts: resolved.max_starts,
    };
    let channel = simulate_channel(&spec)?;
    let results = s
        .temperatures_kt_over_hbar_omega
        .iter()
        .zip(&resolved.weights)
        .map(|(&kt, weights)| TemperatureResult {
            kt_over_hbar_omega: kt,
            report: fidelity_report(&channel, weights, resolved.reference),
        })
        .collect();
    let protocol = match &s.protocol {
        Some(script) => Some(run_protocol(script)?),
        None => None,
    };
    Ok(RunRecord {
        tool: TOOL,
        units: UNITS,
        scenario: s.clone(),
        scenario_hash: scenario_hash(s),
        results,
        protocol,
    })
}

/// Names accepted as sweep parameters.
pub const SWEEP_PARAMS: &[&str] = &[
    "trajectory.rise_trap_units",
    "trajectory.rise_s",
    "trajectory.hold_trap_units",
    "trajectory.hold_s",
    "trajectory.spacing_over_a0",
    "trajectory.spacing_m",
    "trajectory.wavelength_m",
    "scattering_length_m",
    "loss_ratio",
    "omega_rad_per_s",
    "transverse_omega_rad_per_s",
    "temperature_kt_over_hbar_omega",
];

const TEMPERATURE_PARAM: &str = "temperature_kt_over_hbar_omega";

/// Overwrite one swept parameter. Setting a duration or length clears its
/// alternative-unit twin so the swept value wins.
pub fn apply_param(s: &mut Scenario, param: &str, value: f64) -> Result<(), ScenarioError> {
    let traj = &mut s.trajectory;
    match param {
        "trajectory.rise_trap_units" => {
            traj.rise_trap_units = Some(value);
            traj.rise_s = None;
        }
        "trajectory.rise_s" => {
            traj.rise_s = Some(value);
            traj.rise_trap_units = None;
        }
        "trajectory.hold_trap_units" => {
            traj.hold_trap_units = Some(value);
            traj.hold_s = None;
        }
        "trajectory.hold_s" => {
            traj.hold_s = Some(value);
            traj.hold_trap_units = None;
        }
        "trajectory.spacing_over_a0" => {
            traj.spacing_over_a0 = Some(value);
            traj.spacing_m = None;
        }
        "trajectory.spacing_m" => {
            traj.spacing_m = Some(value);
            traj.spacing_over_a0 = None;
        }
        "trajectory.wavelength_m" => traj.wavelength_m = Some(value),
        "scattering_length_m" => s.scattering_length_m = value,
        "loss_ratio" => s.loss_ratio = value,
        "omega_rad_per_s" => s.omega_rad_per_s = Some(value),
        "transverse_omega_rad_per_s" => s.transverse_omega_rad_per_s = value,
        TEMPERATURE_PARAM => s.temperatures_kt_over_hbar_omega = vec![value],
        other => {
            return Err(ScenarioError::Field {
                field: "sweep.param",
                message: format!(
                    "unknown sweep parameter {other:?}; supported: {}",
                    SWEEP_PARAMS.join(", ")
                ),
            })
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub param: String,
    pub values: Vec<f64>,
}

fn validate_axis(axis: &'static str, spec: &AxisSpec) -> Result<(), ScenarioError> {
    if !SWEEP_PARAMS.contains(&spec.param.as_str()) {
        return Err(ScenarioError::Sweep {
            axis,
            message: format!(
                "unknown parameter {:?}; supported: {}",
                spec.param,
                SWEEP_PARAMS.join(", ")
            ),
        });
    }
    if spec.values.is_empty() {
        return Err(ScenarioError::Sweep {
            axis,
            message: "values must not be empty".into(),
        });
    }
    if spec.values.iter().any(|v| !v.is_finite()) {
        return Err(ScenarioError::Sweep {
            axis,
            message: "values must be finite".into(),
        });
    }
    let increasing = spec.values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = spec.values.windows(2).all(|w| w[0] > w[1]);
    if spec.values.len() > 1 && !increasing && !decreasing {
        return Err(ScenarioError::Sweep {
            axis,
            message: "values must be strictly monotone".into(),
        });
    }
    Ok(())
}

/// A sweep: base scenario plus one or two swept axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub axis1: AxisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisSpec>,
}

/// One grid point: axis values plus either a report or an error message.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub axis1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<f64>,
    pub kt_over_hbar_omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FidelityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub tool: ToolInfo,
    pub units: UnitsNote,
    pub scenario: Scenario,
    pub scenario_hash: String,
    pub axis1: AxisSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisSpec>,
    /// Row-major over (axis1, axis2).
    pub points: Vec<GridPoint>,
}

/// Work shared by all grid points that differ only in temperature.
struct PointGroup {
    /// (flat grid index, axis1 value, axis2 value) per member point.
    members: Vec<(usize, f64, Option<f64>)>,
    /// Fully substituted scenario for the group.
    scenario: Scenario,
}

/// Evaluate the sweep grid with up to `workers` concurrent evaluations.
///
/// Points sharing everything but the temperature reuse one channel
/// simulation. The output order is row-major over (axis1, axis2) and
/// independent of the worker count. Failures of individual points are
/// recorded in place.
pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<SweepRecord, ScenarioError> {
    validate_axis("axis1", &cfg.axis1)?;
    if let Some(axis2) = &cfg.axis2 {
        validate_axis("axis2", axis2)?;
        if axis2.param == cfg.axis1.param {
            return Err(ScenarioError::Sweep {
                axis: "axis2",
                message: "both axes sweep the same parameter".into(),
            });
        }
    }
    if workers == 0 {
        return Err(ScenarioError::Sweep {
            axis: "workers",
            message: "worker count must be at least 1".into(),
        });
    }

    // Assemble groups: when one axis is the temperature, its values share
    // the channel simulation of their (axis1 or standalone) partner point.
    let axis2_values: Vec<Option<f64>> = match &cfg.axis2 {
        Some(axis2) => axis2.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let temp_axis1 = cfg.axis1.param == TEMPERATURE_PARAM;
    let temp_axis2 = cfg
        .axis2
        .as_ref()
        .is_some_and(|a| a.param == TEMPERATURE_PARAM);

    let mut groups: Vec<PointGroup> = Vec::new();
    let mut flat = 0usize;
    if temp_axis1 && cfg.axis2.is_none() {
        let mut scenario = cfg.scenario.clone();
        scenario.temperatures_kt_over_hbar_omega = cfg.axis1.values.clone();
        groups.push(PointGroup {
            members: cfg
                .axis1
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, v, None))
                .collect(),
            scenario,
        });
    } else if temp_axis2 {
        for &v1 in &cfg.axis1.values {
            let axis2 = cfg.axis2.as_ref().expect("temp_axis2 implies axis2");
            let mut scenario = cfg.scenario.clone();
            apply_param(&mut scenario, &cfg.axis1.param, v1)?;
            scenario.temperatures_kt_over_hbar_omega = axis2.values.clone();
            groups.push(PointGroup {
                members: axis2
                    .values
                    .iter()
                    .map(|&v2| {
                        let m = (flat, v1, Some(v2));
                        flat += 1;
                        m
                    })
                    .collect(),
                scenario,
            });
        }
    } else if temp_axis1 {
        // Temperature on axis1 with a second axis: group per axis2 value,
        // iterating in row-major order so indices line up.
        let axis2 = cfg.axis2.as_ref().expect("second axis present");
        let n2 = axis2.values.len();
        for (j, &v2) in axis2.values.iter().enumerate() {
            let mut scenario = cfg.scenario.clone();
            apply_param(&mut scenario, &axis2.param, v2)?;
            scenario.temperatures_kt_over_hbar_omega = cfg.axis1.values.clone();
            groups.push(PointGroup {
                members: cfg
                    .axis1
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v1)| (i * n2 + j, v1, Some(v2)))
                    .collect(),
                scenario,
            });
        }
    } else {
        for &v1 in &cfg.axis1.values {
            for &v2 in &axis2_values {
                let mut scenario = cfg.scenario.clone();
                apply_param(&mut scenario, &cfg.axis1.param, v1)?;
                if let (Some(axis2), Some(v2)) = (&cfg.axis2, v2) {
                    apply_param(&mut scenario, &axis2.param, v2)?;
                }
                // Grid points report at the scenario's leading temperature.
                scenario.temperatures_kt_over_hbar_omega.truncate(1);
                groups.push(PointGroup {
                    members: vec![(flat, v1, v2)],
                    scenario,
                });
                flat += 1;
            }
        }
    }

    let n_points = cfg.axis1.values.len() * axis2_values.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ScenarioError::Sweep {
            axis: "workers",
            message: e.to_string(),
        })?;
    let evaluated: Vec<Vec<GridPoint>> = pool.install(|| {
        groups
            .par_iter()
            .map(|group| evaluate_group(group))
            .collect()
    });

    let mut slots: Vec<Option<GridPoint>> = vec![None; n_points];
    for (group, points) in groups.iter().zip(evaluated) {
        for ((index, _, _), point) in group.members.iter().zip(points) {
            slots[*index] = Some(point);
        }
    }
    let points = slots
        .into_iter()
        .map(|p| p.expect("every grid slot is assigned exactly once"))
        .collect();

    Ok(SweepRecord {
        tool: TOOL,
        units: UNITS,
        scenario: cfg.scenario.clone(),
        scenario_hash: scenario_hash(&cfg.scenario),
        axis1: cfg.axis1.clone(),
        axis2: cfg.axis2.clone(),
        points,
    })
}

/// Run one group's scenario and scatter its per-temperature reports onto the
/// group's grid points. A failure marks every member in place.
fn evaluate_group(group: &PointGroup) -> Vec<GridPoint> {
    match run_scenario(&group.scenario) {
        Ok(record) => group
            .members
            .iter()
            .zip(record.results)
            .map(|(&(_, v1, v2), result)| GridPoint {
                axis1: v1,
                axis2: v2,
                kt_over_hbar_omega: result.kt_over_hbar_omega,
                report: Some(result.report),
                error: None,
            })
            .collect(),
        Err(err) => group
            .members
            .iter()
            .map(|&(_, v1, v2)| GridPoint {
                axis1: v1,
                axis2: v2,
                kt_over_hbar_omega: group
                    .scenario
                    .temperatures_kt_over_hbar_omega
                    .first()
                    .copied()
                    .unwrap_or(0.0),
                report: None,
                error: Some(err.to_string()),
            })
            .collect(),
    }
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_string(),
        source,
    }
}

/// Worst-branch scalar of a per-branch loss vector.
fn worst(values: &[f64; 4]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(*v))
}

/// CSV of a sweep grid: one row per point, losses reported as their worst
/// branch. Failed points carry NaN outputs.
pub fn write_grid_csv<W: Write>(record: &SweepRecord, mut w: W) -> io::Result<()> {
    writeln!(w, "axis1,axis2,F,F_avg,phi_ab,leakage,norm_loss")?;
    for point in &record.points {
        let axis2 = point.axis2.map_or(String::new(), |v| v.to_string());
        match &point.report {
            Some(report) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                point.axis1,
                axis2,
                report.fidelity_min,
                report.fidelity_avg,
                report.phases.ab,
                worst(&report.leakage),
                worst(&report.norm_loss),
            )?,
            None => writeln!(w, "{},{},NaN,NaN,NaN,NaN,NaN", point.axis1, axis2)?,
        }
    }
    Ok(())
}

/// CSV of a single run: one row per configured temperature.
pub fn write_run_csv<W: Write>(record: &RunRecord, mut w: W) -> io::Result<()> {
    writeln!(w, "kt_over_hbar_omega,F,F_avg,phi_a,phi_b,phi_ab,leakage,norm_loss")?;
    for result in &record.results {
        let report = &result.report;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            result.kt_over_hbar_omega,
            report.fidelity_min,
            report.fidelity_avg,
            report.phases.a,
            report.phases.b,
            report.phases.ab,
            worst(&report.leakage),
            worst(&report.norm_loss),
        )?;
    }
    Ok(())
}

/// Names of the trajectory-trace columns: SI curves first, then the
/// normalized columns used in displacement/frequency plots.
pub const TRACE_COLUMNS: [&str; 10] = [
    "t_s",
    "delta_x_a_m",
    "delta_x_b_m",
    "omega_a_rad_per_s",
    "omega_b_rad_per_s",
    "omega_t",
    "delta_x_a_over_d",
    "one_plus_delta_x_b_over_d",
    "omega_a_over_omega",
    "omega_b_over_omega",
];

/// Sampled trap trajectory curves of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryTrace {
    pub tool: ToolInfo,
    pub units: UnitsNote,
    pub scenario: Scenario,
    pub scenario_hash: String,
    pub columns: [&'static str; 10],
    pub rows: Vec<[f64; 10]>,
}

/// Sample the scenario's trap trajectories on `n_rows + 1` uniform times
/// across the evolution window.
pub fn trajectory_trace(s: &Scenario, n_rows: usize) -> Result<TrajectoryTrace, ScenarioError> {
    let resolved = resolve(s)?;
    let pair = &resolved.shapes;
    let tau = pair.state_a.half_window();
    let d = pair.spacing;
    let omega_ref = pair.state_b.omega(-tau);
    let rows = (0..=n_rows.max(1))
        .map(|i| {
            let t = -tau + 2.0 * tau * i as f64 / n_rows.max(1) as f64;
            let (dxa, dxb) = (pair.state_a.offset(t), pair.state_b.offset(t));
            let (oa, ob) = (pair.state_a.omega(t), pair.state_b.omega(t));
            [
                t / resolved.omega_si,
                dxa * resolved.a0_m,
                dxb * resolved.a0_m,
                oa * resolved.omega_si,
                ob * resolved.omega_si,
                t,
                dxa / d,
                1.0 + dxb / d,
                oa / omega_ref,
                ob / omega_ref,
            ]
        })
        .collect();
    Ok(TrajectoryTrace {
        tool: TOOL,
        units: UNITS,
        scenario: s.clone(),
        scenario_hash: scenario_hash(s),
        columns: TRACE_COLUMNS,
        rows,
    })
}

/// CSV form of a trajectory trace.
pub fn write_trace_csv<W: Write>(trace: &TrajectoryTrace, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", trace.columns.join(","))?;
    for row in &trace.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// CSV trace of the scenario's trap trajectories.
pub fn write_trajectory_csv<W: Write>(
    s: &Scenario,
    n_rows: usize,
    w: W,
) -> Result<(), ScenarioError> {
    let trace = trajectory_trace(s, n_rows)?;
    write_trace_csv(&trace, w).map_err(io_err("trajectory csv"))
}

/// Shipped scenario presets.
pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
    let omega = 2.0 * std::f64::consts::PI * 1.0e5;
    let base = Scenario {
        mass_kg: RB87_MASS_KG,
        scattering_length_m: 5.1e-9,
        loss_ratio: 0.0,
        omega_rad_per_s: Some(omega),
        lattice_depth_joule: None,
        transverse_omega_rad_per_s: omega,
        trajectory: TrajectorySpec {
            family: Family::Sigmoid,
            rise_s: None,
            rise_trap_units: Some(30.0),
            hold_s: None,
            hold_trap_units: Some(20.0),
            spacing_m: None,
            spacing_over_a0: Some(10.0),
            wavelength_m: None,
        },
        basis_levels: 10,
        tolerance: 1e-8,
        temperatures_kt_over_hbar_omega: vec![0.0],
        target_phase_rad: None,
        protocol: None,
    };
    match name {
        "fig2" => Ok(base),
        "fig3" => {
            let mut s = base;
            s.trajectory.family = Family::Lattice;
            s.trajectory.spacing_over_a0 = None;
            s.trajectory.wavelength_m = Some(780e-9);
            s.temperatures_kt_over_hbar_omega = vec![0.0, 0.05, 0.1, 0.15, 0.2];
            Ok(s)
        }
        other => Err(field_err(
            "preset",
            format!("unknown preset {other:?}; available: fig2, fig3"),
        )),
    }
}

/// Shipped sweep presets: fig2 spans the rise/hold plateau grid, fig3 the
/// temperature curve.
pub fn preset_sweep(name: &str) -> Result<SweepConfig, ScenarioError> {
    let scenario = preset(name)?;
    match name {
        "fig2" => Ok(SweepConfig {
            scenario,
            axis1: AxisSpec {
                param: "trajectory.rise_trap_units".into(),
                values: vec![25.0, 28.75, 32.5, 36.25, 40.0],
            },
            axis2: Some(AxisSpec {
                param: "trajectory.hold_trap_units".into(),
                values: vec![15.0, 18.75, 22.5, 26.25, 30.0],
            }),
        }),
        "fig3" => {
            let values = scenario.temperatures_kt_over_hbar_omega.clone();
            Ok(SweepConfig {
                scenario,
                axis1: AxisSpec {
                    param: TEMPERATURE_PARAM.into(),
                    values,
                },
                axis2: None,
            })
        }
        other => Err(field_err(
            "preset",
            format!("unknown preset {other:?}; available: fig2, fig3"),
        )),
    }
}

/// Parse a JSON file into any deserializable config type.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ScenarioError::Json {
        context: format!("parsing {path}"),
        source,
    })
}
