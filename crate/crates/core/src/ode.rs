//! Explicit Runge-Kutta drivers: classical fixed-step RK4 and the adaptive
//! Dormand-Prince 5(4) pair.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Stepper {
    /// Classical RK4 with `steps` equal steps over the interval.
    Rk4 { steps: usize },
    /// Dormand-Prince 5(4) with local error control.
    Dopri45 { rtol: f64, atol: f64 },
}

impl Stepper {
    pub fn rk4(steps: usize) -> Self {
        Stepper::Rk4 { steps }
    }

    pub fn adaptive(rtol: f64) -> Self {
        Stepper::Dopri45 { rtol, atol: rtol }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stepper::Rk4 { .. } => "rk4",
            Stepper::Dopri45 { .. } => "dopri45",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OdeStats {
    pub method: &'static str,
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted local error norm (adaptive only).
    pub max_error_estimate: Option<f64>,
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k.iter()) {
                *o += h * c * ki;
            }
        }
    }
    out
}

pub fn rk4_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = rhs(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = rhs(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    Ok(axpy(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    ))
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
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

/// One Dormand-Prince step; returns the fifth-order solution and the
/// componentwise difference to the embedded fourth-order one.
pub fn dopri_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], k[j].as_slice())).collect();
        let ys = axpy(y, h, &terms);
        k.push(rhs(t + C[s] * h, &ys)?);
    }
    let y5 = axpy(
        y,
        h,
        &(0..7).map(|j| (B5[j], k[j].as_slice())).collect::<Vec<_>>(),
    );
    let err: Vec<f64> = (0..y.len())
        .map(|i| h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>())
        .collect();
    Ok((y5, err))
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1`. `after_step` sees every
/// accepted state and may adjust it in place (projection, recording).
pub fn integrate<F, P>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    stepper: Stepper,
    mut after_step: P,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    P: FnMut(f64, &mut Vec<f64>) -> Result<()>,
{
    let mut stats = OdeStats {
        method: stepper.name(),
        ..OdeStats::default()
    };
    let mut y = y0;
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y, stats));
    }
    match stepper {
        Stepper::Rk4 { steps } => {
            if steps == 0 {
                return Err(Error::Invalid("RK4 needs at least one step".into()));
            }
            let h = span / steps as f64;
            for i in 0..steps {
                let t = t0 + i as f64 * h;
                y = rk4_step(&mut rhs, t, &y, h)?;
                let t_next = if i + 1 == steps {
                    t1
                } else {
                    t0 + (i + 1) as f64 * h
                };
                after_step(t_next, &mut y)?;
                stats.steps += 1;
            }
        }
        Stepper::Dopri45 { rtol, atol } => {
            if !(rtol > 0.0 && atol > 0.0) {
                return Err(Error::Invalid("tolerances must be positive".into()));
            }
            let dir = span.signum();
            let h_min = 1e-14 * span.abs().max(t0.abs());
            let mut h = dir * (span.abs() * 1e-3).max(h_min * 10.0);
            let mut t = t0;
            let mut max_err: f64 = 0.0;
            while (t1 - t) * dir > 0.0 {
                if (t + h - t1) * dir > 0.0 {
                    h = t1 - t;
                }
                let (y_new, err) = match dopri_step(&mut rhs, t, &y, h) {
                    Ok(r) => r,
                    Err(_) if h.abs() > h_min => {
                        // Trial stage left the domain; retry smaller.
                        h *= 0.25;
                        stats.rejected += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let norm = (err
                    .iter()
                    .zip(y.iter().zip(&y_new))
                    .map(|(e, (a, b))| {
                        let sc = atol + rtol * a.abs().max(b.abs());
                        (e / sc).powi(2)
                    })
                    .sum::<f64>()
                    / y.len().max(1) as f64)
                    .sqrt();
                if norm <= 1.0 {
                    t = if (t + h - t1) * dir >= 0.0 { t1 } else { t + h };
                    y = y_new;
                    after_step(t, &mut y)?;
                    stats.steps += 1;
                    max_err = max_err.max(norm);
                } else {
                    stats.rejected += 1;
                }
                let fac = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= fac;
                if h.abs() < h_min && (t1 - t) * dir > h_min {
                    return Err(Error::StepUnderflow {
                        lambda: t,
                        step: h.abs(),
                    });
                }
            }
            stats.max_error_estimate = Some(max_err);
        }
    }
    Ok((y, stats))
}
