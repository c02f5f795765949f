//! Dormand–Prince 5(4) with PI step-size control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const A2: [f64; 1] = [1.0 / 5.0];
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
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Fifth- minus fourth-order weights, stages 1..7.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Step sizes below this raise [`Error::Stiff`].
    pub h_min: f64,
    /// Upper limit on the step size (infinite by default).
    #[serde(with = "crate::serde_inf")]
    pub h_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-8,
            atol: 1e-10,
            h_min: 1e-14,
            h_max: f64::INFINITY,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.h_min > 0.0 && self.h_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integrator tolerances must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest componentwise local error estimate of an accepted step.
    pub max_error: f64,
}

/// One Dormand–Prince step from `y` with size `h` (negative is allowed).
/// `k1` is `f(y)`; fills `y_new`, the error estimate and `f(y_new)`.
pub(crate) fn rk_step<F>(
    f: &mut F,
    y: &[f64],
    h: f64,
    k1: &[f64],
    y_new: &mut [f64],
    err: &mut [f64],
    k7: &mut [f64],
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 5];
    let mut tmp = vec![0.0; n];
    let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
    for (stage, row) in rows.iter().enumerate() {
        for j in 0..n {
            let mut acc = row[0] * k1[j];
            for (m, a) in row.iter().enumerate().skip(1) {
                acc += a * k[m - 1][j];
            }
            tmp[j] = y[j] + h * acc;
        }
        f(&tmp, &mut k[stage])?;
    }
    for j in 0..n {
        let mut acc = B[0] * k1[j];
        for m in 1..6 {
            acc += B[m] * k[m - 1][j];
        }
        y_new[j] = y[j] + h * acc;
    }
    f(y_new, k7)?;
    for j in 0..n {
        let mut acc = E[0] * k1[j] + E[6] * k7[j];
        for m in 1..6 {
            acc += E[m] * k[m - 1][j];
        }
        err[j] = h * acc;
    }
    Ok(())
}

/// The state after a single step of size `h` from `y`.
pub(crate) fn single_step<F>(f: &mut F, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    f(y, &mut k1)?;
    let (mut y_new, mut err, mut k7) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    rk_step(f, y, h, &k1, &mut y_new, &mut err, &mut k7)?;
    Ok(y_new)
}

/// A component pushed below `−atol` by round-off and reset to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClampEvent {
    pub t: f64,
    pub component: usize,
    pub value: f64,
}

/// Adaptive integrator state for an autonomous system.
pub(crate) struct Dopri5<F> {
    f: F,
    pub t: f64,
    pub y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    err_old: f64,
    cfg: IntegratorConfig,
    pub stats: StepStats,
    pub clamps: Vec<ClampEvent>,
    /// Reset negative components to zero after each step.
    clamp: bool,
}

fn norm(v: &[f64], scale: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(a, b)| (a / b).powi(2)).sum();
    (s / v.len() as f64).sqrt()
}

impl<F> Dopri5<F>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, cfg: IntegratorConfig, clamp: bool) -> Result<Self> {
        cfg.validate()?;
        let mut k1 = vec![0.0; y0.len()];
        f(&y0, &mut k1)?;
        let h = initial_step(&mut f, &y0, &k1, &cfg)?;
        Ok(Dopri5 {
            f,
            t: t0,
            y: y0,
            k1,
            h,
            err_old: 1e-4,
            cfg,
            stats: StepStats::default(),
            clamps: Vec::new(),
            clamp,
        })
    }

    /// Advance by one accepted step, never past `t_limit`. Returns the state
    /// before the step.
    pub fn step(&mut self, t_limit: f64) -> Result<(f64, Vec<f64>)> {
        const SAFETY: f64 = 0.9;
        const BETA: f64 = 0.04;
        let expo = 0.2 - 0.75 * BETA;
        let n = self.y.len();
        let (mut y_new, mut err, mut k7) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut scale = vec![0.0; n];
        loop {
            let mut h = self.h.min(self.cfg.h_max);
            let last = self.t + h >= t_limit;
            if last {
                h = t_limit - self.t;
            }
            if h < self.cfg.h_min && !last {
                return Err(Error::Stiff {
                    t: self.t,
                    state: self.y.clone(),
                });
            }
            if let Err(e) = rk_step(&mut self.f, &self.y, h, &self.k1, &mut y_new, &mut err, &mut k7) {
                // an evaluation failure on a trial stage counts as a rejection
                self.stats.rejected += 1;
                self.h = 0.25 * h;
                if self.h < self.cfg.h_min {
                    return Err(e);
                }
                continue;
            }
            for j in 0..n {
                scale[j] = self.cfg.atol + self.cfg.rtol * self.y[j].abs().max(y_new[j].abs());
            }
            let e = norm(&err, &scale);
            if !e.is_finite() {
                self.stats.rejected += 1;
                self.h = 0.25 * h;
                continue;
            }
            let fac11 = e.powf(expo);
            if e <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(0.1, 5.0);
                self.err_old = e.max(1e-4);
                self.stats.accepted += 1;
                let max_abs = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                self.stats.max_error = self.stats.max_error.max(max_abs);
                let t_prev = self.t;
                let y_prev = std::mem::replace(&mut self.y, y_new.clone());
                self.t = if last { t_limit } else { self.t + h };
                self.k1.copy_from_slice(&k7);
                if self.clamp {
                    self.apply_clamp()?;
                }
                // keep the proposed size when the last step was truncated
                self.h = if last { self.h.max(h / fac) } else { h / fac };
                return Ok((t_prev, y_prev));
            }
            self.stats.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(5.0);
        }
    }

    fn apply_clamp(&mut self) -> Result<()> {
        let mut changed = false;
        for (j, v) in self.y.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -self.cfg.atol {
                    self.clamps.push(ClampEvent {
                        t: self.t,
                        component: j,
                        value: *v,
                    });
                }
                *v = 0.0;
                changed = true;
            }
        }
        if changed {
            (self.f)(&self.y, &mut self.k1)?;
        }
        Ok(())
    }
}

fn initial_step<F>(f: &mut F, y: &[f64], f0: &[f64], cfg: &IntegratorConfig) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let scale: Vec<f64> = y.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let d0 = norm(y, &scale);
    let d1 = norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(&y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.h_max))
}
