//! Trajectories of the normalized system and Lyapunov monitoring along them.

mod dopri;
mod lyapunov;

pub use dopri::{ClampEvent, IntegratorConfig, StepStats};
pub use lyapunov::{
    lyapunov_hsu, lyapunov_wl, sample_lyapunov, verify_decrease, vdot_numeric, DecreaseReport,
    LyapunovFn, LyapunovKind, LyapunovSamples,
};

pub(crate) use dopri::{single_step, Dopri5};

use std::io::{self, Write};

use serde::Serialize;

use crate::equilibria::{enumerate_equilibria, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::ChemostatModel;

/// Accepted integration points of one run, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `(S, x_1, …, x_N)` at each time.
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
    pub clamps: Vec<ClampEvent>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial state")
    }

    /// Largest `S + Σ x_i` along the run.
    pub fn max_total(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_state(model: &ChemostatModel, state: &[f64]) -> Result<()> {
    if state.len() != model.len() + 1 {
        return Err(Error::InvalidParameter(format!(
            "state has {} components, model needs {}",
            state.len(),
            model.len() + 1
        )));
    }
    if state.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "state components must be finite and non-negative: {state:?}"
        )));
    }
    Ok(())
}

pub(crate) fn rhs_of(model: &ChemostatModel) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + '_ {
    move |y, out| model.rhs(y, out)
}

/// Integrate from `initial` over `[0, t_end]` with the given tolerances.
pub fn integrate(
    model: &ChemostatModel,
    initial: &[f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    integrate_with(model, initial, t_end, &IntegratorConfig::with_tolerances(rtol, atol))
}

pub fn integrate_with(
    model: &ChemostatModel,
    initial: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    model.require_normalized()?;
    check_state(model, initial)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    let mut ig = Dopri5::new(rhs_of(model), 0.0, initial.to_vec(), *cfg, true)?;
    let mut times = vec![0.0];
    let mut states = vec![initial.to_vec()];
    while ig.t < t_end {
        ig.step(t_end)?;
        times.push(ig.t);
        states.push(ig.y.clone());
    }
    Ok(Trajectory {
        times,
        states,
        stats: ig.stats,
        clamps: ig.clamps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WashoutCheck {
    pub species: usize,
    pub label: String,
    pub final_value: f64,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumDistance {
    pub kind: EquilibriumKind,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    /// Last sample time with `S ≥ 1`, if any.
    pub last_time_s_at_least_one: Option<f64>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    /// Species whose break-even level is at least 1.
    pub washout: Vec<WashoutCheck>,
    /// Euclidean distance of the final state to each equilibrium.
    pub distances: Vec<EquilibriumDistance>,
}

impl AsymptoticReport {
    pub fn distance_to(&self, kind: EquilibriumKind) -> Option<f64> {
        self.distances
            .iter()
            .filter(|d| d.kind == kind)
            .map(|d| d.distance)
            .reduce(f64::min)
    }
}

pub const WASHOUT_THRESHOLD: f64 = 1e-6;

pub fn asymptotic_checks(model: &ChemostatModel, traj: &Trajectory) -> Result<AsymptoticReport> {
    model.require_normalized()?;
    let last_time_s_at_least_one = traj
        .times
        .iter()
        .zip(&traj.states)
        .rev()
        .find(|(_, y)| y[0] >= 1.0)
        .map(|(t, _)| *t);
    let fin = traj.final_state();
    let mut washout = Vec::new();
    for (k, be) in model.break_evens(1.0)?.iter().enumerate() {
        if be.lambda >= 1.0 {
            let v = fin[k + 1];
            washout.push(WashoutCheck {
                species: k,
                label: model.species[k].label.clone(),
                final_value: v,
                below_threshold: v < WASHOUT_THRESHOLD,
            });
        }
    }
    let distances = enumerate_equilibria(model)?
        .into_iter()
        .map(|e| EquilibriumDistance {
            kind: e.kind,
            distance: e
                .state()
                .iter()
                .zip(fin)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt(),
        })
        .collect();
    Ok(AsymptoticReport {
        last_time_s_at_least_one,
        final_time: traj.final_time(),
        final_state: fin.to_vec(),
        washout,
        distances,
    })
}

/// Writes `t,S,x1,…,xN` rows (plus `V,Vdot` when samples are given) with
/// 17 significant digits.
pub fn write_trajectory_csv(
    mut w: impl Write,
    traj: &Trajectory,
    lyap: Option<&LyapunovSamples>,
) -> io::Result<()> {
    let n = traj.states.first().map_or(1, Vec::len) - 1;
    write!(w, "t,S")?;
    for k in 1..=n {
        write!(w, ",x{k}")?;
    }
    if lyap.is_some() {
        write!(w, ",V,Vdot")?;
    }
    writeln!(w)?;
    for (row, (t, y)) in traj.times.iter().zip(&traj.states).enumerate() {
        write!(w, "{t:.16e}")?;
        for v in y {
            write!(w, ",{v:.16e}")?;
        }
        if let Some(l) = lyap {
            write!(w, ",{:.16e},{:.16e}", l.v[row], l.vdot_closed[row])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
