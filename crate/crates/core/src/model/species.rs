use serde::Serialize;

use super::ScalarFn;
use crate::error::{Error, Result};

/// Parameters of a species built from a Monod growth law
/// `q(S) = a·S/(b+S)` with removal rate `D_i` and yield `y(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodParams {
    pub a: f64,
    pub b: f64,
    pub removal: f64,
    pub yield_fn: ScalarFn,
}

impl MonodParams {
    /// Closed-form break-even `b·D_i/(a−D_i)`; infinite when `a ≤ D_i`.
    pub fn break_even(&self) -> f64 {
        if self.a > self.removal {
            self.b * self.removal / (self.a - self.removal)
        } else {
            f64::INFINITY
        }
    }

    /// Growth never exceeds removal, so the species always washes out.
    pub fn never_grows(&self) -> bool {
        self.a <= self.removal
    }

    /// `(Y, c)` when the yield is linear, `y(S) = Y·(1 + c·S)`.
    pub fn linear_yield(&self) -> Option<(f64, f64)> {
        let (c0, c1) = self.yield_fn.affine_coefficients()?;
        (c0 > 0.0).then(|| (c0, c1 / c0))
    }
}

/// One competitor: net growth `f_i(S)` and substrate uptake `p_i(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub label: String,
    pub growth: ScalarFn,
    pub uptake: ScalarFn,
    pub monod: Option<MonodParams>,
}

impl Species {
    pub fn new(label: impl Into<String>, growth: ScalarFn, uptake: ScalarFn) -> Self {
        Species {
            label: label.into(),
            growth,
            uptake,
            monod: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Check the sign requirements on `[0, s_max]`: `p(0) = 0`, `p > 0`
    /// on the interior grid, `f(0) < 0`, and both finite up to `10·s_max`.
    pub(crate) fn validate(&self, s_max: f64) -> Result<()> {
        let bad = |reason: String| Error::InvalidSpecies {
            label: self.label.clone(),
            reason,
        };
        let p0 = self.uptake.eval(0.0)?;
        if p0.abs() > 1e-12 {
            return Err(bad(format!("uptake(0) = {p0}, expected 0")));
        }
        let f0 = self.growth.eval(0.0)?;
        if f0 >= 0.0 {
            return Err(bad(format!("growth(0) = {f0}, expected < 0")));
        }
        const GRID: usize = 1024;
        for k in 1..=GRID {
            let s = s_max * k as f64 / GRID as f64;
            let p = self.uptake.eval(s)?;
            if p <= 0.0 {
                return Err(bad(format!("uptake({s}) = {p}, expected > 0")));
            }
        }
        for k in 0..=GRID {
            let s = 10.0 * s_max * k as f64 / GRID as f64;
            self.uptake.eval(s)?;
            self.growth.eval(s)?;
        }
        Ok(())
    }
}

/// Species with `f(S) = a·S/(b+S) − D_i` and `p(S) = (a·S/(b+S)) / y(S)`.
pub fn monod_species(a: f64, b: f64, removal: f64, yield_fn: ScalarFn) -> Result<Species> {
    for (name, v) in [("a", a), ("b", b), ("Di", removal)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Monod parameter {name} = {v} must be positive"
            )));
        }
    }
    const GRID: usize = 1024;
    for k in 0..=GRID {
        let s = k as f64 / GRID as f64;
        let y = yield_fn.eval(s)?;
        if y <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "yield({s}) = {y}, expected > 0 on [0, 1]"
            )));
        }
    }
    let q = ScalarFn::monod(a, b);
    Ok(Species {
        label: String::new(),
        growth: ScalarFn::difference(q.clone(), ScalarFn::constant(removal)),
        uptake: ScalarFn::quotient(q, yield_fn.clone()),
        monod: Some(MonodParams {
            a,
            b,
            removal,
            yield_fn,
        }),
    })
}

/// Summary of a species for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesSummary {
    pub label: String,
    #[serde(with = "crate::serde_inf")]
    pub break_even: f64,
    /// Next zero of the growth function after `break_even`, if any.
    #[serde(with = "crate::serde_inf")]
    pub second_zero: f64,
    pub monod: bool,
    pub never_grows: bool,
}
