//! The pairwise divergence-type conditions of Fiedler and Hsu, checked on the
//! standard grid for comparison with the Lyapunov routes.

use serde::Serialize;

use super::grid::{sign_condition, GridConfig, SignConditionResult};
use crate::error::Result;
use crate::model::{break_even, ChemostatModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FhSpecies {
    pub species: usize,
    pub label: String,
    #[serde(with = "crate::serde_inf")]
    pub lambda: f64,
    /// `(S − λ_i)·f_i(S) > 0`
    pub sign: SignConditionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FhPair {
    pub i: usize,
    pub j: usize,
    pub holds: bool,
    pub worst_point: f64,
    /// Minimum of `1 + f_j + (1 − S)·p_j'/p_j − f_i`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiedlerHsuReport {
    pub species: Vec<FhSpecies>,
    pub pairs: Vec<FhPair>,
    pub failed_pairs: Vec<(usize, usize)>,
    pub all_hold: bool,
    /// Single species only: `p' > 0` at every grid point, under which the
    /// divergence argument rules out periodic orbits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uptake_increasing: Option<bool>,
}

pub fn check_fiedler_hsu(
    model: &ChemostatModel,
    grid: &GridConfig,
    scan_max: f64,
) -> Result<FiedlerHsuReport> {
    model.require_normalized()?;
    let mut species = Vec::with_capacity(model.len());
    for (k, sp) in model.species.iter().enumerate() {
        let lambda = break_even(&sp.growth, scan_max)?.lambda;
        let sign = sign_condition(grid, lambda, |s| {
            let f = sp.growth.eval(s)?;
            Ok(if lambda.is_finite() {
                f / (s - lambda)
            } else {
                -f
            })
        })?;
        species.push(FhSpecies {
            species: k,
            label: sp.label.clone(),
            lambda,
            sign,
        });
    }

    let mut pairs = Vec::new();
    for i in 0..model.len() {
        for j in (0..model.len()).filter(|&j| j != i) {
            let (fi, sj) = (&model.species[i].growth, &model.species[j]);
            let best = grid.minimize(|s| {
                let p = sj.uptake.eval_dual(s)?;
                let v = 1.0 + sj.growth.eval(s)? + (1.0 - s) * p.eps / p.re - fi.eval(s)?;
                Ok(Some(v))
            })?;
            let (worst_point, margin) = best.unwrap_or((f64::NAN, f64::NAN));
            pairs.push(FhPair {
                i,
                j,
                holds: margin > 0.0,
                worst_point,
                margin,
            });
        }
    }

    let uptake_increasing = if model.len() == 1 {
        let p = &model.species[0].uptake;
        let mut inc = true;
        for s in grid.iter() {
            if p.derivative(s)? <= 0.0 {
                inc = false;
                break;
            }
        }
        Some(inc)
    } else {
        None
    };

    let failed_pairs: Vec<_> = pairs.iter().filter(|p| !p.holds).map(|p| (p.i, p.j)).collect();
    let all_hold = failed_pairs.is_empty() && species.iter().all(|s| s.sign.holds);
    Ok(FiedlerHsuReport {
        species,
        pairs,
        failed_pairs,
        all_hold,
        uptake_increasing,
    })
}
