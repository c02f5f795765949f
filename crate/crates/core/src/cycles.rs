//! Phase-plane analysis of a single species: landmarks of the curve
//! `x = P(S)`, the return map on the section `S = λ`, and limit cycles.

use std::io::{self, Write};

use serde::Serialize;

use crate::dynamics::{single_step, Dopri5, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{break_even, p_curve, ChemostatModel, Species};
use crate::numeric::{bisect, sign_change_roots};

fn single(model: &ChemostatModel) -> Result<&Species> {
    model.require_normalized()?;
    if model.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "phase-plane analysis needs one species, model has {}",
            model.len()
        )));
    }
    Ok(&model.species[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandmarkCase {
    /// `E*` is the only point of the level `x = x*` on the curve.
    GasCandidate,
    /// `λ` lies on the increasing branch: `E*` is unstable and a cycle exists.
    UnstableWithCycle,
    /// Three intersections with the level `x = x*`; nothing is concluded.
    BistableUncertain,
    /// `λ ≥ 1`: no positive equilibrium.
    Washout,
}

/// Critical points `S2 < S3` of `P` and the level-matched points `S1`, `S4`
/// with `P(S1) = P(S3)`, `P(S4) = P(S2)`; all `None` when `P` is monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Landmarks {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub s3: Option<f64>,
    pub s4: Option<f64>,
    #[serde(with = "crate::serde_inf")]
    pub lambda: f64,
    pub x_star: Option<f64>,
    pub case: LandmarkCase,
}

const EDGE: f64 = 1e-6;
const CRIT_SCAN: usize = 8192;

pub fn landmarks(model: &ChemostatModel) -> Result<Landmarks> {
    let sp = single(model)?;
    let big_p = |s: f64| p_curve(sp, s);
    let crit = sign_change_roots(|s| big_p(s).map(|d| d.eps), EDGE, 1.0 - EDGE, CRIT_SCAN, 1e-13)?;
    let lambda = break_even(&sp.growth, 1.0)?.lambda;
    let x_star = if lambda < 1.0 { Some(big_p(lambda)?.re) } else { None };
    let (s1, s2, s3, s4) = match crit.as_slice() {
        [] => (None, None, None, None),
        &[s2, s3] => {
            let (p2, p3) = (big_p(s2)?.re, big_p(s3)?.re);
            let s1 = bisect(|s| big_p(s).map(|d| d.re - p3), EDGE, s2, 1e-13)?;
            let s4 = bisect(|s| big_p(s).map(|d| d.re - p2), s3, 1.0 - EDGE, 1e-13)?;
            (Some(s1), Some(s2), Some(s3), Some(s4))
        }
        other => {
            return Err(Error::UnsupportedShape(format!(
                "P has {} critical points in (0, 1), expected 0 or 2",
                other.len()
            )))
        }
    };
    let case = if lambda >= 1.0 {
        LandmarkCase::Washout
    } else {
        match (s1, s2, s3, s4) {
            (Some(s1), Some(s2), Some(s3), Some(s4)) => {
                if lambda < s1 || lambda > s4 {
                    LandmarkCase::GasCandidate
                } else if lambda > s2 && lambda < s3 {
                    LandmarkCase::UnstableWithCycle
                } else {
                    LandmarkCase::BistableUncertain
                }
            }
            _ => LandmarkCase::GasCandidate,
        }
    };
    Ok(Landmarks {
        s1,
        s2,
        s3,
        s4,
        lambda,
        x_star,
        case,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnMapConfig {
    pub integrator: IntegratorConfig,
    pub t_max: f64,
    /// Crossing times are located to this tolerance.
    pub time_tol: f64,
    /// Crossings with `|S'|` at or below this are treated as tangential.
    pub min_speed: f64,
}

impl Default for ReturnMapConfig {
    fn default() -> Self {
        ReturnMapConfig {
            integrator: IntegratorConfig::with_tolerances(1e-10, 1e-12),
            t_max: 1e4,
            time_tol: 1e-10,
            min_speed: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnPoint {
    pub x: f64,
    pub period: f64,
}

struct Section {
    lambda: f64,
    x_star: f64,
}

fn section(model: &ChemostatModel) -> Result<Section> {
    let sp = single(model)?;
    let lambda = break_even(&sp.growth, 1.0)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::NoEquilibrium { lambda });
    }
    Ok(Section {
        lambda,
        x_star: p_curve(sp, lambda)?.re,
    })
}

/// Integrate from `(λ, x_start)` to the next crossing of `S = λ` whose
/// direction is `+1` (increasing `S`) or `−1`.
fn next_crossing(
    model: &ChemostatModel,
    lambda: f64,
    x_start: f64,
    direction: f64,
    cfg: &ReturnMapConfig,
) -> Result<ReturnPoint> {
    let speed = |y: &[f64]| -> Result<f64> {
        let mut d = [0.0; 2];
        model.rhs(y, &mut d)?;
        Ok(d[0])
    };
    let rhs = |y: &[f64], out: &mut [f64]| model.rhs(y, out);
    let mut ig = Dopri5::new(rhs, 0.0, vec![lambda, x_start], cfg.integrator, true)?;
    while ig.t < cfg.t_max {
        let (t_prev, y_prev) = ig.step(cfg.t_max)?;
        let g_prev = (y_prev[0] - lambda) * direction;
        let g_new = (ig.y[0] - lambda) * direction;
        if !(g_prev < 0.0 && g_new >= 0.0) {
            continue;
        }
        let mut rhs = |y: &[f64], out: &mut [f64]| model.rhs(y, out);
        let h = ig.t - t_prev;
        let tau = bisect(
            |tau| -> Result<f64> {
                if tau == 0.0 {
                    return Ok(y_prev[0] - lambda);
                }
                Ok(single_step(&mut rhs, &y_prev, tau)?[0] - lambda)
            },
            0.0,
            h,
            cfg.time_tol,
        )?;
        let y = if tau == 0.0 {
            y_prev.clone()
        } else {
            single_step(&mut rhs, &y_prev, tau)?
        };
        if speed(&y)?.abs() <= cfg.min_speed {
            continue;
        }
        return Ok(ReturnPoint {
            x: y[1],
            period: t_prev + tau,
        });
    }
    Err(Error::NoReturn { t_max: cfg.t_max })
}

/// First return to the section `S = λ` in the same crossing direction.
/// `x_start = x*` (or any start where `S'` vanishes) returns `(x_start, 0)`.
pub fn return_map(model: &ChemostatModel, x_start: f64, cfg: &ReturnMapConfig) -> Result<ReturnPoint> {
    let sec = section(model)?;
    if !(x_start > 0.0 && x_start.is_finite()) {
        return Err(Error::InvalidParameter(format!("x_start = {x_start} must be positive")));
    }
    let mut d = [0.0; 2];
    model.rhs(&[sec.lambda, x_start], &mut d)?;
    if d[0].abs() <= cfg.min_speed {
        return Ok(ReturnPoint { x: x_start, period: 0.0 });
    }
    next_crossing(model, sec.lambda, x_start, d[0].signum(), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cycle {
    /// Crossing of the section above `x*` (where `S` decreases).
    pub x_section: f64,
    /// Crossing below `x*`.
    pub x_lower: f64,
    pub period: f64,
    /// `R'` at the fixed point.
    pub multiplier: f64,
    pub stability: CycleStability,
    /// `|R(x) − x|` at `x_section`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementSample {
    pub branch: Branch,
    pub x: f64,
    /// `None` when the trajectory did not return within `t_max`.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleResult {
    pub lambda: f64,
    pub x_star: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Innermost first.
    pub cycles: Vec<Cycle>,
    #[serde(skip)]
    pub scan: Vec<DisplacementSample>,
}

impl CycleResult {
    pub fn write_displacement_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "branch,x,R,d")?;
        for s in &self.scan {
            let b = match s.branch {
                Branch::Lower => "lower",
                Branch::Upper => "upper",
            };
            match s.r {
                Some(r) => writeln!(w, "{b},{:.16e},{r:.16e},{:.16e}", s.x, r - s.x)?,
                None => writeln!(w, "{b},{:.16e},,", s.x)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleConfig {
    pub return_map: ReturnMapConfig,
    /// Scan points per branch.
    pub scan_points: usize,
    /// Closest scanned distance from `x*`, relative to `x*`.
    pub inner_distance: f64,
    /// Neighbourhood of `x*` excluded from the search, relative to `x*`.
    pub exclusion: f64,
    pub x_tol: f64,
    /// Central-difference step for `R'`, relative to `x`.
    pub slope_step: f64,
    /// `|R' − 1|` below this is reported as marginal.
    pub marginal_tol: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            return_map: ReturnMapConfig::default(),
            scan_points: 64,
            inner_distance: 1e-3,
            exclusion: 1e-6,
            x_tol: 1e-8,
            slope_step: 1e-5,
            marginal_tol: 1e-3,
        }
    }
}

/// Default search bracket `[0.01·x*, 20·x*]`.
pub fn default_bracket(model: &ChemostatModel) -> Result<(f64, f64)> {
    let sec = section(model)?;
    Ok((0.01 * sec.x_star, 20.0 * sec.x_star))
}

/// Distances from `x*` growing geometrically from `d0` to `d1`.
fn geometric(d0: f64, d1: f64, n: usize) -> Vec<f64> {
    if n < 2 || d1 <= d0 {
        return if d1 >= d0 { vec![d1] } else { vec![] };
    }
    let r = (d1 / d0).ln() / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { d1 } else { d0 * (r * k as f64).exp() }).collect()
}

/// Limit cycles around `E*` whose section crossings fall in `[x_lo, x_hi]`.
///
/// Each branch of the section (below and above `x*`) is scanned separately
/// at points spaced geometrically in distance from `x*`; sign changes of
/// `R(x) − x` are refined by bisection. A cycle crosses both branches, so
/// lower-branch fixed points are matched to upper ones by following them
/// half a turn.
pub fn find_cycles(model: &ChemostatModel, x_lo: f64, x_hi: f64, cfg: &CycleConfig) -> Result<CycleResult> {
    let sec = section(model)?;
    if !(x_lo > 0.0 && x_hi > x_lo) {
        return Err(Error::InvalidParameter(format!("bad bracket [{x_lo}, {x_hi}]")));
    }
    let xs = sec.x_star;
    let d_min = (cfg.inner_distance * xs).max(cfg.exclusion * xs);
    let rm = |x: f64| match return_map(model, x, &cfg.return_map) {
        Ok(p) => Ok(Some(p)),
        Err(Error::NoReturn { .. }) => Ok(None),
        Err(e) => Err(e),
    };

    let mut scan = Vec::new();
    let mut found: Vec<(Branch, f64)> = Vec::new();
    for branch in [Branch::Lower, Branch::Upper] {
        let (sign, d_max) = match branch {
            Branch::Lower => (-1.0, xs - x_lo),
            Branch::Upper => (1.0, x_hi - xs),
        };
        let lo_d = d_min.max(match branch {
            Branch::Lower => 0.0,
            Branch::Upper => x_lo - xs,
        });
        let hi_d = d_max.min(match branch {
            Branch::Lower => xs - d_min,
            Branch::Upper => f64::INFINITY,
        });
        let mut prev: Option<(f64, f64)> = None;
        for d in geometric(lo_d, hi_d, cfg.scan_points) {
            let x = xs + sign * d;
            let r = rm(x)?;
            scan.push(DisplacementSample { branch, x, r: r.map(|p| p.x) });
            let Some(p) = r else {
                prev = None;
                continue;
            };
            let disp = p.x - x;
            if let Some((x_prev, d_prev)) = prev {
                if disp != 0.0 && d_prev.signum() != disp.signum() {
                    let root = bisect(
                        |x| -> Result<f64> {
                            let p = return_map(model, x, &cfg.return_map)?;
                            Ok(p.x - x)
                        },
                        x_prev.min(x),
                        x_prev.max(x),
                        cfg.x_tol,
                    );
                    match root {
                        Ok(root) => found.push((branch, root)),
                        Err(Error::NoReturn { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            prev = Some((x, disp));
        }
    }

    let mut cycles: Vec<Cycle> = Vec::new();
    for (branch, x) in found {
        let (x_upper, x_lower) = match branch {
            Branch::Upper => {
                let other = next_crossing(model, sec.lambda, x, 1.0, &cfg.return_map)?;
                (x, other.x)
            }
            Branch::Lower => {
                let other = next_crossing(model, sec.lambda, x, -1.0, &cfg.return_map)?;
                (other.x, x)
            }
        };
        if cycles
            .iter()
            .any(|c| (c.x_section - x_upper).abs() < 1e-5 * xs.max(1.0))
        {
            continue;
        }
        cycles.push(classify(model, x_upper, x_lower, cfg)?);
    }
    cycles.sort_by(|a, b| a.x_section.total_cmp(&b.x_section));
    Ok(CycleResult {
        lambda: sec.lambda,
        x_star: xs,
        x_lo,
        x_hi,
        cycles,
        scan,
    })
}

fn classify(model: &ChemostatModel, x: f64, x_lower: f64, cfg: &CycleConfig) -> Result<Cycle> {
    let rc = &cfg.return_map;
    let p = return_map(model, x, rc)?;
    let h = cfg.slope_step * x;
    let plus = return_map(model, x + h, rc)?.x;
    let minus = return_map(model, x - h, rc)?.x;
    let multiplier = (plus - minus) / (2.0 * h);
    let stability = if (multiplier - 1.0).abs() < cfg.marginal_tol {
        CycleStability::Marginal
    } else if multiplier.abs() < 1.0 {
        CycleStability::Stable
    } else {
        CycleStability::Unstable
    };
    Ok(Cycle {
        x_section: x,
        x_lower,
        period: p.period,
        multiplier,
        stability,
        residual: (p.x - x).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{monod_species, ScalarFn};

    fn quadratic(removal: f64) -> ChemostatModel {
        let y = ScalarFn::Polynomial(vec![1.0, 0.0, 46.0]);
        ChemostatModel::normalized(vec![monod_species(2.0, 0.58, removal, y).unwrap()]).unwrap()
    }

    fn constant_yield(a: f64, b: f64, removal: f64) -> ChemostatModel {
        ChemostatModel::normalized(vec![monod_species(a, b, removal, ScalarFn::constant(1.0)).unwrap()])
            .unwrap()
    }

    #[test]
    fn quadratic_yield_landmarks() {
        let lm = landmarks(&quadratic(1.0)).unwrap();
        let want = [0.048, 0.143, 0.579, 0.855];
        let got = [lm.s1.unwrap(), lm.s2.unwrap(), lm.s3.unwrap(), lm.s4.unwrap()];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 5e-3, "{got:?}");
        }
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lm.case, LandmarkCase::BistableUncertain);
        // level matching, recomputed from the closed form of P
        let p = |s: f64| (1.0 - s) * (0.58 + s) * (1.0 + 46.0 * s * s) / (2.0 * s);
        assert!((p(got[0]) - p(got[2])).abs() < 1e-9);
        assert!((p(got[3]) - p(got[1])).abs() < 1e-9);
        // the landmarks do not depend on the removal rate; λ does
        let lm = landmarks(&quadratic(2.0 * 0.3 / 0.88)).unwrap();
        assert_eq!(lm.case, LandmarkCase::UnstableWithCycle);
        let lm = landmarks(&quadratic(2.0 * 0.9 / 1.48)).unwrap();
        assert_eq!(lm.case, LandmarkCase::GasCandidate);
    }

    #[test]
    fn monotone_p_has_no_landmarks() {
        let lm = landmarks(&constant_yield(1.0, 0.3, 0.5)).unwrap();
        assert_eq!(lm.s1, None);
        assert_eq!(lm.case, LandmarkCase::GasCandidate);
        let lm = landmarks(&constant_yield(1.0, 3.0, 0.5)).unwrap();
        assert_eq!(lm.case, LandmarkCase::Washout);
    }

    #[test]
    fn too_many_critical_points() {
        // the exponential factor makes P oscillate across (0, 1)
        let uptake = ScalarFn::parse("S*exp(-1000*(S-0.1)*(S-0.3)*(S-0.5)*(S-0.7)*(S-0.9))").unwrap();
        let sp = crate::model::Species::new("", ScalarFn::parse("S - 0.5").unwrap(), uptake);
        let m = ChemostatModel::normalized(vec![sp]).unwrap();
        assert!(matches!(landmarks(&m), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn equilibrium_start_is_fixed() {
        let m = quadratic(1.0);
        let sec = section(&m).unwrap();
        let p = return_map(&m, sec.x_star, &ReturnMapConfig::default()).unwrap();
        assert_eq!(p, ReturnPoint { x: sec.x_star, period: 0.0 });
    }

    #[test]
    fn monotone_approach_for_stable_focus() {
        // λ = 0.5; constant yield, so E* attracts everything
        let m = constant_yield(20.0, 0.5, 10.0);
        let sec = section(&m).unwrap();
        for x in [0.5 * sec.x_star, 1.5 * sec.x_star, 3.0 * sec.x_star] {
            let p = return_map(&m, x, &ReturnMapConfig::default()).unwrap();
            let (lo, hi) = if x < sec.x_star { (x, sec.x_star) } else { (sec.x_star, x) };
            assert!(p.x > lo && p.x < hi, "x = {x}: {p:?}");
            assert!(p.period > 0.0);
        }
        let (lo, hi) = default_bracket(&m).unwrap();
        let res = find_cycles(&m, lo, hi, &CycleConfig::default()).unwrap();
        assert!(res.cycles.is_empty());
    }

    #[test]
    fn invalid_starts() {
        let m = quadratic(1.0);
        assert!(return_map(&m, -1.0, &ReturnMapConfig::default()).is_err());
        assert!(matches!(
            return_map(&constant_yield(1.0, 3.0, 0.5), 1.0, &ReturnMapConfig::default()),
            Err(Error::NoEquilibrium { .. })
        ));
    }

    #[test]
    fn quadratic_yield_has_two_nested_cycles() {
        let m = quadratic(1.0);
        let (lo, hi) = default_bracket(&m).unwrap();
        let res = find_cycles(&m, lo, hi, &CycleConfig::default()).unwrap();
        assert_eq!(res.cycles.len(), 2);
        assert_eq!(res.cycles[0].stability, CycleStability::Unstable);
        assert_eq!(res.cycles[1].stability, CycleStability::Stable);
        for c in &res.cycles {
            assert!(c.residual < 1e-8, "{c:?}");
            assert!(c.x_lower < res.x_star && c.x_section > res.x_star);
            // one period from the fixed point comes back to it
            let tr = crate::dynamics::integrate(&m, &[res.lambda, c.x_section], c.period, 1e-11, 1e-13)
                .unwrap();
            let end = tr.final_state();
            assert!((end[0] - res.lambda).abs() < 1e-6 && (end[1] - c.x_section).abs() < 1e-6);
        }

        let mut tight = CycleConfig::default();
        tight.return_map.integrator.rtol /= 2.0;
        let again = find_cycles(&m, lo, hi, &tight).unwrap();
        assert_eq!(again.cycles.len(), 2);
        for (a, b) in res.cycles.iter().zip(&again.cycles) {
            assert!((a.x_section - b.x_section).abs() < 1e-6);
            assert!((a.x_lower - b.x_lower).abs() < 1e-6);
            assert!((a.period - b.period).abs() < 1e-6);
        }
    }

    #[test]
    fn unstable_equilibrium_has_a_cycle() {
        let m = quadratic(2.0 * 0.3 / 0.88);
        let (lo, hi) = default_bracket(&m).unwrap();
        let res = find_cycles(&m, lo, hi, &CycleConfig::default()).unwrap();
        assert!(!res.cycles.is_empty());
        let mut csv = Vec::new();
        res.write_displacement_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("branch,x,R,d\n"));
    }

    #[test]
    fn geometric_spacing() {
        let g = geometric(1e-3, 1.0, 4);
        assert_eq!(g.len(), 4);
        assert!((g[1] - 1e-2).abs() < 1e-15 && g[3] == 1.0);
        assert!(geometric(1.0, 0.5, 4).is_empty());
    }
}
