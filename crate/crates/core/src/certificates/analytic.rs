//! Closed-form certificates for Monod growth with constant or linear yields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChemostatModel;
use crate::numeric;

/// Largest `c` for which `Q(S) = (1−S)(b+S)(1+cS)/S` is non-increasing on
/// `[0, 1]`: the positive root of `(c(1−b) − 1)³ = 27·b·c²`.
///
/// Infinite for `b ≥ 1` (every `c ≥ 0` works) and exactly 1 at `b = 0`.
pub fn c_crit(b: f64) -> Result<f64> {
    if b.is_nan() || b < 0.0 {
        return Err(Error::Domain(format!("b = {b}")));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if b >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let h = |c: f64| -> Result<f64, std::convert::Infallible> {
        Ok((c * (1.0 - b) - 1.0).powi(3) - 27.0 * b * c * c)
    };
    // h < 0 at 1/(1−b); grow the upper end until h turns positive
    let lo = 1.0 / (1.0 - b);
    let mut hi = 2.0 * lo;
    while h(hi).unwrap_or_default() <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    let root = numeric::bisect(h, lo, hi, 1e-10).unwrap_or_else(|e| match e {});
    Ok(root)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AnalyticVerdict {
    Certified,
    NotCertified { reason: String },
    /// No species can persist: every break-even level is at least 1.
    WashoutOnly,
    /// The model does not have the structure the route needs.
    NotApplicable { reason: String },
}

impl AnalyticVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, AnalyticVerdict::Certified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRoute {
    #[serde(flatten)]
    pub verdict: AnalyticVerdict,
    #[serde(with = "crate::serde_inf::vec")]
    pub break_evens: Vec<f64>,
    /// `c_crit(b_1)` for the linear-yield route.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_crit: Option<f64>,
}

struct MonodView {
    b: f64,
    lambda: f64,
    slope: f64,
}

fn monod_view(model: &ChemostatModel, constant_only: bool) -> Result<Vec<MonodView>, String> {
    model
        .species
        .iter()
        .map(|sp| {
            let m = sp
                .monod
                .as_ref()
                .ok_or_else(|| format!("species {} is not of Monod form", sp.label))?;
            let (_, c) = m
                .linear_yield()
                .ok_or_else(|| format!("species {} has a non-linear yield", sp.label))?;
            if c < 0.0 {
                return Err(format!("species {} has a decreasing yield", sp.label));
            }
            if constant_only && c.abs() > 1e-12 {
                return Err(format!("species {} has a non-constant yield", sp.label));
            }
            Ok(MonodView {
                b: m.b,
                lambda: m.break_even(),
                slope: c,
            })
        })
        .collect()
}

fn ordering(views: &[MonodView]) -> Option<AnalyticVerdict> {
    let l1 = views[0].lambda;
    if views.iter().all(|v| v.lambda >= 1.0) {
        return Some(AnalyticVerdict::WashoutOnly);
    }
    if l1 >= 1.0 {
        return Some(AnalyticVerdict::NotCertified {
            reason: format!("lambda_1 = {l1} >= 1"),
        });
    }
    if let Some((k, v)) = views.iter().enumerate().skip(1).find(|(_, v)| v.lambda <= l1) {
        return Some(AnalyticVerdict::NotCertified {
            reason: format!(
                "lambda_1 = {l1} is not strictly below lambda_{} = {}",
                k + 1,
                v.lambda
            ),
        });
    }
    None
}

/// Monod growth with constant yields: certified iff `λ_1 < 1` and `λ_1` is
/// strictly the smallest break-even level.
pub fn check_monod_constant_yields(model: &ChemostatModel) -> Result<AnalyticRoute> {
    model.require_normalized()?;
    let views = match monod_view(model, true) {
        Ok(v) => v,
        Err(reason) => {
            return Ok(AnalyticRoute {
                verdict: AnalyticVerdict::NotApplicable { reason },
                break_evens: vec![],
                c_crit: None,
            })
        }
    };
    let verdict = ordering(&views).unwrap_or(AnalyticVerdict::Certified);
    Ok(AnalyticRoute {
        verdict,
        break_evens: views.iter().map(|v| v.lambda).collect(),
        c_crit: None,
    })
}

/// Monod growth with linear yields `Y_i(1 + c_i·S)`: certified when `λ_1`
/// is strictly smallest and below 1, and either `b_1 ≥ 1` or every species
/// with `λ_i < 1` (the winner included) has `c_i ≤ c_crit(b_1)`.
pub fn check_monod_linear_yields(model: &ChemostatModel) -> Result<AnalyticRoute> {
    model.require_normalized()?;
    let views = match monod_view(model, false) {
        Ok(v) => v,
        Err(reason) => {
            return Ok(AnalyticRoute {
                verdict: AnalyticVerdict::NotApplicable { reason },
                break_evens: vec![],
                c_crit: None,
            })
        }
    };
    let b1 = views[0].b;
    let crit = c_crit(b1)?;
    let break_evens = views.iter().map(|v| v.lambda).collect();
    if let Some(verdict) = ordering(&views) {
        return Ok(AnalyticRoute {
            verdict,
            break_evens,
            c_crit: Some(crit),
        });
    }
    let offender = views
        .iter()
        .enumerate()
        .find(|(_, v)| v.lambda < 1.0 && v.slope > crit);
    let verdict = match offender {
        Some((k, v)) if b1 < 1.0 => AnalyticVerdict::NotCertified {
            reason: format!("c_{} = {} exceeds c_crit(b_1) = {crit}", k + 1, v.slope),
        },
        _ => AnalyticVerdict::Certified,
    };
    Ok(AnalyticRoute {
        verdict,
        break_evens,
        c_crit: Some(crit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{monod_species, ScalarFn};
    use proptest::prelude::*;

    fn linear(c: f64) -> ScalarFn {
        ScalarFn::Polynomial(vec![1.0, c])
    }

    fn linear_pair(c2: f64) -> ChemostatModel {
        let s1 = monod_species(1.0, 0.1, 0.6, linear(4.0)).unwrap();
        let s2 = monod_species(1.0, 0.15, 0.55, linear(c2)).unwrap();
        ChemostatModel::normalized(vec![s1, s2]).unwrap()
    }

    #[test]
    fn c_crit_reference_values() {
        assert_eq!(c_crit(0.0).unwrap(), 1.0);
        let v = c_crit(0.1).unwrap();
        assert!((6.4..=6.6).contains(&v), "{v}");
        assert_eq!(c_crit(1.0).unwrap(), f64::INFINITY);
        assert_eq!(c_crit(3.0).unwrap(), f64::INFINITY);
        assert!(c_crit(-0.1).is_err());
        // continuity at the left end
        assert!((c_crit(1e-9).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn c_crit_is_a_root_and_increasing() {
        let mut prev = 1.0;
        for k in 1..=50 {
            let b = k as f64 / 51.0;
            let c = c_crit(b).unwrap();
            let h = (c * (1.0 - b) - 1.0).powi(3) - 27.0 * b * c * c;
            assert!(h.abs() <= 1e-6 * (27.0 * b * c * c), "b = {b}");
            assert!(c > prev, "not increasing at b = {b}");
            prev = c;
        }
    }

    /// `Q` decreasing exactly when `c ≤ c_crit(b)`, checked by sampling `Q'`.
    #[test]
    fn c_crit_separates_monotone_q() {
        let q_prime = |b: f64, c: f64, s: f64| {
            -(2.0 * c * s.powi(3) + (1.0 + c * (b - 1.0)) * s * s + b) / (s * s)
        };
        for b in [0.05, 0.1, 0.3, 0.6] {
            let crit = c_crit(b).unwrap();
            let max_slope = |c: f64| {
                (1..2000)
                    .map(|k| q_prime(b, c, k as f64 / 2000.0))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            assert!(max_slope(0.98 * crit) < 0.0);
            assert!(max_slope(1.02 * crit) > 0.0);
        }
    }

    #[test]
    fn linear_yield_route() {
        let r = check_monod_linear_yields(&linear_pair(5.0)).unwrap();
        assert!(r.verdict.is_certified(), "{r:?}");
        let r = check_monod_linear_yields(&linear_pair(30.0)).unwrap();
        assert!(matches!(r.verdict, AnalyticVerdict::NotCertified { .. }));
        assert!((r.break_evens[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn constant_yield_route() {
        let mk = |b2: f64, d2: f64| {
            let s1 = monod_species(1.0, 0.1, 0.6, ScalarFn::constant(1.0)).unwrap();
            let s2 = monod_species(1.0, b2, d2, ScalarFn::constant(1.0)).unwrap();
            ChemostatModel::normalized(vec![s1, s2]).unwrap()
        };
        assert!(check_monod_constant_yields(&mk(0.15, 0.55)).unwrap().verdict.is_certified());
        // tie: 0.1·0.6/0.4 = 0.15 = 0.15·0.5/0.5
        let tie = check_monod_constant_yields(&mk(0.15, 0.5)).unwrap();
        assert!(matches!(tie.verdict, AnalyticVerdict::NotCertified { .. }), "{tie:?}");
        // linear yields are outside this route
        let r = check_monod_constant_yields(&linear_pair(5.0)).unwrap();
        assert!(matches!(r.verdict, AnalyticVerdict::NotApplicable { .. }));
    }

    #[test]
    fn everything_washes_out() {
        let s1 = monod_species(1.0, 2.0, 0.6, ScalarFn::constant(1.0)).unwrap();
        let s2 = monod_species(0.5, 0.1, 0.6, ScalarFn::constant(1.0)).unwrap();
        let m = ChemostatModel::normalized(vec![s1, s2]).unwrap();
        let r = check_monod_constant_yields(&m).unwrap();
        assert_eq!(r.verdict, AnalyticVerdict::WashoutOnly);
    }

    #[test]
    fn non_monod_is_not_applicable() {
        let sp = crate::model::Species::new(
            "x",
            ScalarFn::parse("S - 0.5").unwrap(),
            ScalarFn::parse("S").unwrap(),
        );
        let m = ChemostatModel::normalized(vec![sp]).unwrap();
        assert!(matches!(
            check_monod_linear_yields(&m).unwrap().verdict,
            AnalyticVerdict::NotApplicable { .. }
        ));
    }

    proptest! {
        /// With every slope zero the linear-yield route reduces to the
        /// constant-yield ordering condition.
        #[test]
        fn zero_slopes_reduce_to_constant_route(
            a in proptest::collection::vec(0.5f64..3.0, 3),
            b in proptest::collection::vec(0.05f64..1.5, 3),
            frac in proptest::collection::vec(0.1f64..0.9, 3),
        ) {
            let species = (0..3)
                .map(|k| monod_species(a[k], b[k], a[k] * frac[k], linear(0.0)).unwrap())
                .collect();
            let m = ChemostatModel::normalized(species).unwrap();
            let lin = check_monod_linear_yields(&m).unwrap();
            let con = check_monod_constant_yields(&m).unwrap();
            prop_assert_eq!(lin.verdict, con.verdict);
        }
    }
}
