//! Equilibria of the normalized system and local stability of `E_1*`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{break_even, p_curve, ChemostatModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "species", rename_all = "snake_case")]
pub enum EquilibriumKind {
    Washout,
    /// Only the species with this (0-based) index survives.
    SingleSpecies(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub s_star: f64,
    pub x: Vec<f64>,
    /// Max-norm of the right-hand side at the point.
    pub residual: f64,
}

impl Equilibrium {
    pub fn state(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + 1);
        v.push(self.s_star);
        v.extend_from_slice(&self.x);
        v
    }
}

pub fn residual(model: &ChemostatModel, state: &[f64]) -> Result<f64> {
    let mut out = vec![0.0; state.len()];
    model.rhs(state, &mut out)?;
    Ok(out.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Washout `E_0 = (1, 0, …, 0)` plus one single-survivor equilibrium per
/// zero of each `f_i` in `(0, 1)`.
pub fn enumerate_equilibria(model: &ChemostatModel) -> Result<Vec<Equilibrium>> {
    model.require_normalized()?;
    let n = model.len();
    let mut out = Vec::new();
    let washout = {
        let mut st = vec![0.0; n + 1];
        st[0] = 1.0;
        Equilibrium {
            kind: EquilibriumKind::Washout,
            s_star: 1.0,
            x: vec![0.0; n],
            residual: residual(model, &st)?,
        }
    };
    out.push(washout);
    for (i, sp) in model.species.iter().enumerate() {
        let zeros = break_even(&sp.growth, 1.0)?.zeros;
        for s in zeros.into_iter().filter(|&s| s < 1.0) {
            let mut x = vec![0.0; n];
            x[i] = (1.0 - s) / sp.uptake.eval(s)?;
            let mut st = vec![s];
            st.extend_from_slice(&x);
            out.push(Equilibrium {
                kind: EquilibriumKind::SingleSpecies(i),
                s_star: s,
                residual: residual(model, &st)?,
                x,
            });
        }
    }
    Ok(out)
}

/// The single-survivor equilibrium of species 0 at its break-even level.
pub fn e1_star(model: &ChemostatModel) -> Result<Equilibrium> {
    model.require_normalized()?;
    let lambda = break_even(&model.species[0].growth, 1.0)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::NoEquilibrium { lambda });
    }
    let mut x = vec![0.0; model.len()];
    x[0] = p_curve(&model.species[0], lambda)?.re;
    let mut st = vec![lambda];
    st.extend_from_slice(&x);
    Ok(Equilibrium {
        kind: EquilibriumKind::SingleSpecies(0),
        s_star: lambda,
        residual: residual(model, &st)?,
        x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalStability {
    pub verdict: Stability,
    pub lambda: f64,
    /// `f_1'(λ_1)`
    pub growth_slope: f64,
    /// `P_1'(λ_1)`
    pub p1_slope: f64,
}

pub const STABILITY_TOL: f64 = 1e-9;

/// Local exponential stability of `E_1*` from the signs of `f_1'(λ_1)`
/// (must be positive) and `P_1'(λ_1)` (must be negative).
pub fn local_stability_e1(model: &ChemostatModel) -> Result<LocalStability> {
    local_stability_e1_with(model, STABILITY_TOL)
}

pub fn local_stability_e1_with(model: &ChemostatModel, tol: f64) -> Result<LocalStability> {
    model.require_normalized()?;
    let sp = &model.species[0];
    let lambda = break_even(&sp.growth, 1.0)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::NoEquilibrium { lambda });
    }
    let growth_slope = sp.growth.derivative(lambda)?;
    let p1_slope = p_curve(sp, lambda)?.eps;
    let verdict = if growth_slope > tol && p1_slope < -tol {
        Stability::Stable
    } else if growth_slope < -tol || p1_slope > tol {
        Stability::Unstable
    } else {
        Stability::Inconclusive
    };
    Ok(LocalStability {
        verdict,
        lambda,
        growth_slope,
        p1_slope,
    })
}
