//! Chemostat models with variable yields.
//!
//! A model is the system
//!
//! ```text
//! S'   = D·(S0 − S) − Σ p_i(S)·x_i
//! x_i' = f_i(S)·x_i
//! ```
//!
//! where `f_i` is the net growth rate of species `i` and `p_i` its uptake
//! rate. Every analysis downstream works on the normalized form with
//! `D = 1` and `S0 = 1`, obtained from [`ChemostatModel::normalize`].
//! Species index 0 is the candidate winner for all certificates.

mod scalar_fn;
mod species;

use serde::{Deserialize, Serialize};

pub use scalar_fn::ScalarFn;
pub use species::{monod_species, MonodParams, Species, SpeciesSummary};

use crate::error::{Error, Result};
use crate::expr::Dual;
use crate::numeric;

/// Uniform grid points used by [`break_even`] on `(0, scan_max]`.
pub const ZERO_SCAN_POINTS: usize = 2048;
/// Absolute bisection tolerance for zeros of growth functions.
pub const ZERO_TOL: f64 = 1e-12;

/// Zeros of a growth function and the derived break-even levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakEven {
    /// Smallest zero, or infinity when growth stays negative.
    #[serde(with = "crate::serde_inf")]
    pub lambda: f64,
    /// Second zero, or infinity.
    #[serde(with = "crate::serde_inf")]
    pub mu: f64,
    pub zeros: Vec<f64>,
}

/// Locate every sign change of `growth` on `(0, scan_max]`.
pub fn break_even(growth: &ScalarFn, scan_max: f64) -> Result<BreakEven> {
    break_even_with(growth, scan_max, ZERO_SCAN_POINTS)
}

pub fn break_even_with(growth: &ScalarFn, scan_max: f64, points: usize) -> Result<BreakEven> {
    if scan_max.is_nan() || scan_max <= 0.0 || points == 0 {
        return Err(Error::InvalidParameter(format!(
            "zero scan needs scan_max > 0 and points > 0, got {scan_max}, {points}"
        )));
    }
    let f0 = growth.eval(0.0)?;
    if f0 >= 0.0 {
        return Err(Error::InvalidSpecies {
            label: String::new(),
            reason: format!("growth(0) = {f0}, expected < 0"),
        });
    }
    let zeros = numeric::sign_change_roots(|s| growth.eval(s), 0.0, scan_max, points, ZERO_TOL)?;
    Ok(BreakEven {
        lambda: zeros.first().copied().unwrap_or(f64::INFINITY),
        mu: zeros.get(1).copied().unwrap_or(f64::INFINITY),
        zeros,
    })
}

/// Original dilution and inflow of a model that was normalized, so results
/// can be mapped back: `S = S0·S̄` and `t = t̄ / D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub dilution: f64,
    pub inflow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChemostatModel {
    pub dilution: f64,
    pub inflow: f64,
    pub species: Vec<Species>,
    pub normalized: bool,
    pub scaling: Option<Scaling>,
}

impl ChemostatModel {
    /// Build and validate a model. Species without a label get `x1, x2, …`.
    pub fn new(dilution: f64, inflow: f64, species: Vec<Species>) -> Result<Self> {
        for (name, v) in [("D", dilution), ("S0", inflow)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if species.is_empty() {
            return Err(Error::EmptyModel);
        }
        let species: Vec<Species> = species
            .into_iter()
            .enumerate()
            .map(|(k, sp)| {
                if sp.label.is_empty() {
                    sp.with_label(format!("x{}", k + 1))
                } else {
                    sp
                }
            })
            .collect();
        for sp in &species {
            sp.validate(inflow)?;
        }
        Ok(ChemostatModel {
            dilution,
            inflow,
            species,
            normalized: dilution == 1.0 && inflow == 1.0,
            scaling: None,
        })
    }

    pub fn normalized(species: Vec<Species>) -> Result<Self> {
        Self::new(1.0, 1.0, species)
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::NotNormalized)
        }
    }

    /// Rescale to `D = 1`, `S0 = 1`:
    /// `p̄(S̄) = p(S0·S̄)/(S0·D)` and `f̄(S̄) = f(S0·S̄)/D`, with time
    /// measured in units of `1/D`. Idempotent.
    pub fn normalize(&self) -> ChemostatModel {
        if self.normalized {
            return self.clone();
        }
        let (d, s0) = (self.dilution, self.inflow);
        let species = self
            .species
            .iter()
            .map(|sp| {
                let monod = sp.monod.as_ref().map(|m| MonodParams {
                    a: m.a / d,
                    b: m.b / s0,
                    removal: m.removal / d,
                    yield_fn: m.yield_fn.rescale(s0, s0),
                });
                Species {
                    label: sp.label.clone(),
                    growth: sp.growth.rescale(s0, 1.0 / d),
                    uptake: sp.uptake.rescale(s0, 1.0 / (s0 * d)),
                    monod,
                }
            })
            .collect();
        ChemostatModel {
            dilution: 1.0,
            inflow: 1.0,
            species,
            normalized: true,
            scaling: Some(Scaling {
                dilution: d,
                inflow: s0,
            }),
        }
    }

    /// Right-hand side for the state `(S, x_1, …, x_N)`.
    pub fn rhs(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        let s = state[0];
        let mut ds = self.dilution * (self.inflow - s);
        for (k, sp) in self.species.iter().enumerate() {
            let x = state[k + 1];
            ds -= sp.uptake.eval(s)? * x;
            out[k + 1] = sp.growth.eval(s)? * x;
        }
        out[0] = ds;
        Ok(())
    }

    /// Break-even data for every species, scanning `(0, scan_max]`.
    pub fn break_evens(&self, scan_max: f64) -> Result<Vec<BreakEven>> {
        self.species
            .iter()
            .map(|sp| break_even(&sp.growth, scan_max))
            .collect()
    }

    pub fn summaries(&self, scan_max: f64) -> Result<Vec<SpeciesSummary>> {
        Ok(self
            .species
            .iter()
            .zip(self.break_evens(scan_max)?)
            .map(|(sp, be)| SpeciesSummary {
                label: sp.label.clone(),
                break_even: be.lambda,
                second_zero: be.mu,
                monod: sp.monod.is_some(),
                never_grows: sp.monod.as_ref().is_some_and(MonodParams::never_grows),
            })
            .collect())
    }
}

/// `P_1(S) = (1 − S)/p_1(S)` with its derivative, for `0 < S < 1`.
///
/// The level `x_1* = P_1(λ_1)` is the winner's density at its equilibrium.
pub fn p1_curve(model: &ChemostatModel, s: f64) -> Result<Dual> {
    model.require_normalized()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("S = {s}")));
    }
    p_curve(&model.species[0], s)
}

/// `(1 − S)/p(S)` for any species, unchecked domain.
pub(crate) fn p_curve(species: &Species, s: f64) -> Result<Dual> {
    let p = species.uptake.eval_dual(s)?;
    Ok((Dual::constant(1.0) - Dual::variable(s)) / p)
}
