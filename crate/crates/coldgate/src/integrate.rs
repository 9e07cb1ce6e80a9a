//! Adaptive explicit Runge-Kutta propagation of complex state vectors.
//!
//! The stepper is Dormand-Prince 5(4) with the standard embedded error
//! estimate and FSAL reuse. It is written against a right-hand-side closure
//! `rhs(t, y, dydt)` so Schrodinger problems of any structure (dense matrix,
//! factored interaction, non-Hermitian loss) share one code path.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t} (h = {h}); system too stiff for an explicit stepper")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {max_steps} steps before reaching the end of the window (t = {t})")]
    MaxSteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone)]
pub struct StepControl {
    /// Per-step error tolerance, applied both absolutely and relative to the
    /// state amplitude.
    pub tol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `None` caps at 1/16 of the window.
    pub h_max: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { tol: 1e-9, max_steps: 50_000_000, h_max: None }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Outcome of an adaptive propagation.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub y: Array1<C64>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest excursion of the squared norm from its initial value seen at
    /// accepted steps. Physics for lossy Hamiltonians, a diagnostic otherwise.
    pub max_norm_drift: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Propagate `y0` from `t0` to `t1` under `dy/dt = rhs(t, y)`.
///
/// `observer`, when given, is called at `t0` and after every accepted step;
/// it is the hook for trace output and mid-run diagnostics.
pub fn propagate<F>(
    mut rhs: F,
    y0: ArrayView1<C64>,
    t0: f64,
    t1: f64,
    control: &StepControl,
    mut observer: Option<&mut dyn FnMut(f64, ArrayView1<C64>)>,
) -> Result<Propagation, IntegrateError>
where
    F: FnMut(f64, ArrayView1<C64>, &mut Array1<C64>),
{
    assert!(t1 > t0, "propagation window must run forward");
    let dim = y0.len();
    let window = t1 - t0;
    let h_max = control.h_max.unwrap_or(window / 16.0);
    let norm0 = norm_sq(&y0.to_owned());

    let mut t = t0;
    let mut y = y0.to_owned();
    let mut k: Vec<Array1<C64>> = (0..7).map(|_| Array1::zeros(dim)).collect();
    let mut y_stage = Array1::<C64>::zeros(dim);
    let mut y5 = Array1::<C64>::zeros(dim);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_drift = 0.0f64;

    if let Some(obs) = observer.as_deref_mut() {
        obs(t, y.view());
    }

    // First RHS evaluation doubles as a crude step-size seed.
    rhs(t, y.view(), &mut k[0]);
    let scale0 = y.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
    let rate = k[0].iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut h = if rate > 0.0 {
        (control.tol.powf(0.2) * scale0 / rate).min(h_max).min(window)
    } else {
        h_max.min(window)
    };

    let mut total = 0usize;
    loop {
        if t >= t1 {
            break;
        }
        total += 1;
        if total > control.max_steps {
            return Err(IntegrateError::MaxSteps { t, max_steps: control.max_steps });
        }
        if h < 1e-14 * window {
            return Err(IntegrateError::StepUnderflow { t, h });
        }
        let h_step = h.min(t1 - t);

        // Stages 2..=6; k[0] always holds rhs(t, y) on entry (FSAL).
        stage(&mut rhs, &y, &A2, t + C[1] * h_step, h_step, &mut y_stage, &mut k, 1);
        stage(&mut rhs, &y, &A3, t + C[2] * h_step, h_step, &mut y_stage, &mut k, 2);
        stage(&mut rhs, &y, &A4, t + C[3] * h_step, h_step, &mut y_stage, &mut k, 3);
        stage(&mut rhs, &y, &A5, t + C[4] * h_step, h_step, &mut y_stage, &mut k, 4);
        stage(&mut rhs, &y, &A6, t + C[5] * h_step, h_step, &mut y_stage, &mut k, 5);

        // 5th-order solution, then its own derivative for the FSAL stage.
        for i in 0..dim {
            let mut acc = y[i];
            for s in 0..6 {
                if B5[s] != 0.0 {
                    acc += k[s][i] * (B5[s] * h_step);
                }
            }
            y5[i] = acc;
        }
        rhs(t + h_step, y5.view(), &mut k[6]);

        // Embedded 4th-order error estimate, scaled per component.
        let mut err_sq = 0.0f64;
        for i in 0..dim {
            let mut diff = C64::new(0.0, 0.0);
            for s in 0..7 {
                let db = B5[s] - B4[s];
                if db != 0.0 {
                    diff += k[s][i] * (db * h_step);
                }
            }
            let scale = control.tol * (1.0 + y[i].norm().max(y5[i].norm()));
            let e = diff.norm() / scale;
            err_sq += e * e;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            t += h_step;
            std::mem::swap(&mut y, &mut y5);
            k.swap(0, 6);
            accepted += 1;
            let drift = (norm_sq(&y) - norm0).abs();
            if drift > max_drift {
                max_drift = drift;
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(t, y.view());
            }
        } else {
            rejected += 1;
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h = (h_step * factor.clamp(0.2, 5.0)).min(h_max);
    }

    Ok(Propagation { y, steps_accepted: accepted, steps_rejected: rejected, max_norm_drift: max_drift })
}

#[allow(clippy::too_many_arguments)]
fn stage<F>(
    rhs: &mut F,
    y: &Array1<C64>,
    a_row: &[f64],
    t_stage: f64,
    h: f64,
    y_stage: &mut Array1<C64>,
    k: &mut [Array1<C64>],
    out_idx: usize,
) where
    F: FnMut(f64, ArrayView1<C64>, &mut Array1<C64>),
{
    // Stage slots below out_idx are inputs, slot out_idx is the output.
    let (k_in, k_out) = k.split_at_mut(out_idx);
    let dim = y.len();
    for i in 0..dim {
        let mut acc = y[i];
        for (s, a) in a_row.iter().enumerate() {
            if *a != 0.0 {
                acc += k_in[s][i] * (*a * h);
            }
        }
        y_stage[i] = acc;
    }
    rhs(t_stage, y_stage.view(), &mut k_out[0]);
}

fn norm_sq(y: &Array1<C64>) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn phase_rotation_matches_closed_form() {
        let omega = 3.7;
        let y0 = array![C64::new(1.0, 0.0)];
        let out = propagate(
            |_t, y, dy| {
                dy[0] = C64::new(0.0, -omega) * y[0];
            },
            y0.view(),
            0.0,
            5.0,
            &StepControl::with_tol(1e-11),
            None,
        )
        .unwrap();
        let exact = C64::new(0.0, -omega * 5.0).exp();
        assert!((out.y[0] - exact).norm() < 1e-9);
        assert!(out.max_norm_drift < 1e-9);
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        // Two-level system H = Omega sigma_x / 2: P_excited = sin^2(Omega t / 2).
        let rabi = 2.1;
        let y0 = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let t1 = 4.0;
        let out = propagate(
            |_t, y, dy| {
                let half = C64::new(0.0, -0.5 * rabi);
                dy[0] = half * y[1];
                dy[1] = half * y[0];
            },
            y0.view(),
            0.0,
            t1,
            &StepControl::with_tol(1e-11),
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(out.y[1].norm_sqr(), (0.5 * rabi * t1).sin().powi(2), epsilon = 1e-9);
    }

    #[test]
    fn tightening_tolerance_reduces_error() {
        let run = |tol: f64| {
            let y0 = array![C64::new(1.0, 0.0)];
            let out = propagate(
                |t, y, dy| {
                    dy[0] = C64::new(0.0, -(t * t)) * y[0];
                },
                y0.view(),
                0.0,
                3.0,
                &StepControl::with_tol(tol),
                None,
            )
            .unwrap();
            let exact = C64::new(0.0, -9.0).exp();
            (out.y[0] - exact).norm()
        };
        let loose = run(1e-6);
        let tight = run(1e-11);
        assert!(tight < loose);
        assert!(tight < 1e-9);
    }

    #[test]
    fn singular_rhs_reports_step_underflow() {
        let y0 = array![C64::new(1.0, 0.0)];
        let res = propagate(
            |t, y, dy| {
                dy[0] = y[0] / C64::new(1.0 - t, 0.0);
            },
            y0.view(),
            0.0,
            2.0,
            &StepControl { tol: 1e-9, max_steps: 200_000, h_max: None },
            None,
        );
        assert!(matches!(
            res,
            Err(IntegrateError::StepUnderflow { .. }) | Err(IntegrateError::MaxSteps { .. })
        ));
    }

    #[test]
    fn observer_sees_monotone_time_grid() {
        let y0 = array![C64::new(1.0, 0.0)];
        let mut times = Vec::new();
        let mut obs = |t: f64, _y: ArrayView1<C64>| times.push(t);
        propagate(
            |_t, y, dy| {
                dy[0] = C64::new(0.0, -1.0) * y[0];
            },
            y0.view(),
            0.0,
            1.0,
            &StepControl::default(),
            Some(&mut obs),
        )
        .unwrap();
        assert_eq!(times.first().copied(), Some(0.0));
        assert_eq!(times.last().copied(), Some(1.0));
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }
}
