use serde::{Deserialize, Serialize};

use super::grid::GridConfig;
use crate::error::Result;
use crate::model::ChemostatModel;

/// Which inequality a gap analysis targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// `f_1(S)·p_i(S) > α_i·f_i(S)·(1 − S)`
    WolkowiczLu,
    /// `f_1(S)·p_i(S) > c_i·f_i(S)·p_1(S)`
    Hsu,
}

/// Feasible interval for the weight of one competitor in the Lyapunov
/// function.
///
/// Where `f_i > 0` the weight must stay below `r(S)`; where `f_i < 0` and
/// `f_1·p_i < 0` it must stay above `r(S)`. `lower_bound` is the largest
/// such lower requirement (floored at 0) and `upper_bound` the smallest upper
/// requirement (infinite when there is none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAnalysis {
    pub kind: GapKind,
    pub species: usize,
    pub label: String,
    /// Break-even level `≥ 1`: the species washes out and imposes nothing.
    pub skipped: bool,
    #[serde(with = "crate::serde_inf")]
    pub lower_bound: f64,
    #[serde(with = "crate::serde_inf")]
    pub upper_bound: f64,
    /// Where the bounds are attained.
    pub lower_point: Option<f64>,
    pub upper_point: Option<f64>,
    /// A point with `f_i ≈ 0` where `f_1·p_i ≤ 0`, which no weight can fix.
    pub degenerate_violation: Option<f64>,
    pub feasible: bool,
    pub chosen: Option<f64>,
    /// Smallest value of `f_1·p_i − w·f_i·d` over the grid at `chosen`.
    pub verified_margin: Option<f64>,
}

/// Tuning for the gap search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    /// Relative width the interval must exceed to count as feasible.
    pub margin: f64,
    /// `|f_i(S)|` below this is treated as a zero of `f_i`.
    pub degenerate_tol: f64,
    /// Retries moving the weight toward the interval midpoint when the
    /// pointwise re-check fails.
    pub retries: u32,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            margin: 1e-6,
            degenerate_tol: 1e-12,
            retries: 20,
        }
    }
}

struct Sample {
    num: f64,
    fi: f64,
    den: f64,
}

fn sample(model: &ChemostatModel, i: usize, kind: GapKind, s: f64) -> Result<Sample> {
    let f1 = model.species[0].growth.eval(s)?;
    let pi = model.species[i].uptake.eval(s)?;
    let fi = model.species[i].growth.eval(s)?;
    let den = match kind {
        GapKind::WolkowiczLu => 1.0 - s,
        GapKind::Hsu => model.species[0].uptake.eval(s)?,
    };
    Ok(Sample {
        num: f1 * pi,
        fi,
        den,
    })
}

enum Bound {
    Lower(f64),
    Upper(f64),
    Free,
    Violation,
}

fn classify(smp: &Sample, tol: f64) -> Bound {
    if smp.fi.abs() < tol {
        return if smp.num > 0.0 { Bound::Free } else { Bound::Violation };
    }
    let r = smp.num / (smp.fi * smp.den);
    if smp.fi > 0.0 {
        Bound::Upper(r)
    } else if smp.num < 0.0 {
        Bound::Lower(r)
    } else {
        Bound::Free
    }
}

/// Scan the grid for the interval of admissible weights of species `i`.
pub fn gap_analysis(
    model: &ChemostatModel,
    i: usize,
    kind: GapKind,
    grid: &GridConfig,
    cfg: &GapConfig,
) -> Result<GapAnalysis> {
    model.require_normalized()?;
    assert!(i >= 1 && i < model.len(), "gap analysis needs a competitor index");
    let mut out = GapAnalysis {
        kind,
        species: i,
        label: model.species[i].label.clone(),
        skipped: false,
        lower_bound: 0.0,
        upper_bound: f64::INFINITY,
        lower_point: None,
        upper_point: None,
        degenerate_violation: None,
        feasible: false,
        chosen: None,
        verified_margin: None,
    };

    // lower bounds: maximize r; upper bounds: minimize r
    let lower = grid.minimize(|s| {
        let smp = sample(model, i, kind, s)?;
        Ok(match classify(&smp, cfg.degenerate_tol) {
            Bound::Lower(r) => Some(-r),
            _ => None,
        })
    })?;
    let upper = grid.minimize(|s| {
        let smp = sample(model, i, kind, s)?;
        Ok(match classify(&smp, cfg.degenerate_tol) {
            Bound::Upper(r) => Some(r),
            _ => None,
        })
    })?;
    for s in grid.iter() {
        let smp = sample(model, i, kind, s)?;
        if let Bound::Violation = classify(&smp, cfg.degenerate_tol) {
            out.degenerate_violation = Some(s);
            break;
        }
    }
    if let Some((s, neg_r)) = lower {
        out.lower_bound = (-neg_r).max(0.0);
        out.lower_point = Some(s);
    }
    if let Some((s, r)) = upper {
        out.upper_bound = r;
        out.upper_point = Some(s);
    }

    let (l, u) = (out.lower_bound, out.upper_bound);
    let wide_enough = u > 0.0 && (u.is_infinite() || u - l > cfg.margin * u);
    if out.degenerate_violation.is_some() || !wide_enough {
        return Ok(out);
    }

    let mut w = initial_weight(l, u);
    let mid = if u.is_finite() { 0.5 * (l + u) } else { w };
    for attempt in 0..=cfg.retries {
        if attempt > 0 {
            w = 0.5 * (w + mid);
        }
        let m = verify_weight(model, i, kind, grid, w)?;
        if m > 0.0 {
            out.feasible = true;
            out.chosen = Some(w);
            out.verified_margin = Some(m);
            return Ok(out);
        }
        if u.is_infinite() {
            // moving toward a midpoint is meaningless without an upper end
            w *= 2.0;
        }
    }
    Ok(out)
}

/// Geometric mean of the bounds, with the degenerate ends handled:
/// `U/2` when there is no positive lower bound, `2L` (or 1) when there is
/// no upper bound.
fn initial_weight(l: f64, u: f64) -> f64 {
    match (l > 0.0, u.is_finite()) {
        (true, true) => (l * u).sqrt(),
        (false, true) => 0.5 * u,
        (true, false) => 2.0 * l,
        (false, false) => 1.0,
    }
}

/// Minimum over the grid of `f_1·p_i − w·f_i·d`, the inequality the weight
/// must satisfy strictly.
pub fn verify_weight(
    model: &ChemostatModel,
    i: usize,
    kind: GapKind,
    grid: &GridConfig,
    w: f64,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for s in grid.iter() {
        let smp = sample(model, i, kind, s)?;
        worst = worst.min(smp.num - w * smp.fi * smp.den);
    }
    Ok(worst)
}

/// `g_i(S) = f_i(S)·(1 − S) / (f_1(S)·p_i(S))`, the reciprocal of the
/// weight ratio; a feasible weight exists iff `min g_i` on `(0, λ_1)` exceeds
/// `max g_i` on `(λ_i, 1)`.
pub fn g_curve(model: &ChemostatModel, i: usize, s: f64) -> Result<f64> {
    let f1 = model.species[0].growth.eval(s)?;
    let fi = model.species[i].growth.eval(s)?;
    let pi = model.species[i].uptake.eval(s)?;
    Ok(fi * (1.0 - s) / (f1 * pi))
}
