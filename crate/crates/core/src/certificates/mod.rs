//! Sufficient conditions for global stability of `E_1*`, checked on a grid
//! or in closed form, and the combined [`CertificateReport`].
//!
//! Grid checks are not proofs: every result carries the worst point and
//! margin so a user can tighten [`GridConfig`] and re-run.

mod analytic;
mod fiedler_hsu;
mod gap;
mod grid;

pub use analytic::{
    c_crit, check_monod_constant_yields, check_monod_linear_yields, AnalyticRoute, AnalyticVerdict,
};
pub use fiedler_hsu::{check_fiedler_hsu, FhPair, FhSpecies, FiedlerHsuReport};
pub use gap::{g_curve, gap_analysis, verify_weight, GapAnalysis, GapConfig, GapKind};
pub use grid::{GridConfig, SignConditionResult};

use serde::Serialize;

use crate::equilibria::{local_stability_e1_with, LocalStability, Stability, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::model::{break_even, p_curve, ChemostatModel, SpeciesSummary};
use grid::sign_condition;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyConfig {
    pub grid: GridConfig,
    pub gap: GapConfig,
    pub stability_tol: f64,
    /// Upper end of the scan for second zeros of the growth functions.
    pub scan_max: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            grid: GridConfig::default(),
            gap: GapConfig::default(),
            stability_tol: STABILITY_TOL,
            scan_max: 10.0,
        }
    }
}

fn lambda1(model: &ChemostatModel) -> Result<f64> {
    model.require_normalized()?;
    let lambda = break_even(&model.species[0].growth, 1.0)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::NoEquilibrium { lambda });
    }
    Ok(lambda)
}

/// `(S − λ_1)·f_1(S) > 0` on `(0, 1)`, with margin `f_1(S)/(S − λ_1)`.
pub fn check_h11(model: &ChemostatModel, grid: &GridConfig) -> Result<SignConditionResult> {
    let lambda = lambda1(model)?;
    let f1 = &model.species[0].growth;
    sign_condition(grid, lambda, |s| Ok(f1.eval(s)? / (s - lambda)))
}

/// `(S − λ_1)·(P_1(S) − P_1(λ_1)) < 0` on `(0, 1)`, with margin
/// `(P_1(λ_1) − P_1(S))/(S − λ_1)`; also records whether `P_1` is decreasing.
pub fn check_h31(model: &ChemostatModel, grid: &GridConfig) -> Result<SignConditionResult> {
    let lambda = lambda1(model)?;
    let sp = &model.species[0];
    let at_lambda = p_curve(sp, lambda)?.re;
    let mut res = sign_condition(grid, lambda, |s| {
        Ok((at_lambda - p_curve(sp, s)?.re) / (s - lambda))
    })?;
    let mut decreasing = true;
    for s in grid.iter() {
        if p_curve(sp, s)?.eps >= 0.0 {
            decreasing = false;
            break;
        }
    }
    res.monotone_decreasing = Some(decreasing);
    Ok(res)
}

fn skipped(model: &ChemostatModel, i: usize, kind: GapKind) -> GapAnalysis {
    GapAnalysis {
        kind,
        species: i,
        label: model.species[i].label.clone(),
        skipped: true,
        lower_bound: 0.0,
        upper_bound: f64::INFINITY,
        lower_point: None,
        upper_point: None,
        degenerate_violation: None,
        feasible: false,
        chosen: None,
        verified_margin: None,
    }
}

fn gap_or_skip(
    model: &ChemostatModel,
    i: usize,
    kind: GapKind,
    cfg: &CertifyConfig,
) -> Result<GapAnalysis> {
    model.require_normalized()?;
    if i == 0 || i >= model.len() {
        return Err(Error::InvalidParameter(format!(
            "competitor index {i} outside 1..{}",
            model.len()
        )));
    }
    if break_even(&model.species[i].growth, 1.0)?.lambda >= 1.0 {
        return Ok(skipped(model, i, kind));
    }
    gap_analysis(model, i, kind, &cfg.grid, &cfg.gap)
}

/// Admissible weights `α_i` for competitor `i` (0-based, `i ≥ 1`). Species
/// that cannot grow below `S = 1` are reported as skipped.
pub fn gap_for_species(model: &ChemostatModel, i: usize, cfg: &CertifyConfig) -> Result<GapAnalysis> {
    gap_or_skip(model, i, GapKind::WolkowiczLu, cfg)
}

/// Admissible constants `c_i` for the `p_1`-weighted Lyapunov function.
pub fn hsu_gap_for_species(
    model: &ChemostatModel,
    i: usize,
    cfg: &CertifyConfig,
) -> Result<GapAnalysis> {
    gap_or_skip(model, i, GapKind::Hsu, cfg)
}

/// Converts constants `c_i` of the `p_1`-weighted function into weights
/// `α_i = c_i / P_1(λ_1)` for the `(1 − S)`-weighted one.
pub fn alphas_from_hsu(model: &ChemostatModel, cs: &[f64]) -> Result<Vec<f64>> {
    let lambda = lambda1(model)?;
    let x1 = p_curve(&model.species[0], lambda)?.re;
    Ok(cs.iter().map(|c| c / x1).collect())
}

/// Constant-yield Monod closed form
/// `c_i = (a_1 − D_1)·a_i·Y_1 / ((a_i − D_i)·a_1·Y_i)`, index 0 included
/// (where it equals 1). `None` if the model is not of that form.
pub fn monod_hsu_constants(model: &ChemostatModel) -> Option<Vec<f64>> {
    let m1 = model.species[0].monod.as_ref()?;
    let (y1, c1) = m1.linear_yield()?;
    if c1 != 0.0 {
        return None;
    }
    model
        .species
        .iter()
        .map(|sp| {
            let m = sp.monod.as_ref()?;
            let (y, c) = m.linear_yield()?;
            (c == 0.0).then(|| (m1.a - m1.removal) * m.a * y1 / ((m.a - m.removal) * m1.a * y))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    GasCertified,
    LocallyStableUncertified,
    Unstable,
    WashoutOnly,
    /// Some species can persist but species 1 cannot, so there is no `E_1*`.
    NoCandidateEquilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Gap,
    HsuGap,
    MonodConstantYields,
    MonodLinearYields,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticRoutes {
    pub monod_constant_yields: AnalyticRoute,
    pub monod_linear_yields: AnalyticRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub species: Vec<SpeciesSummary>,
    #[serde(with = "crate::serde_inf")]
    pub lambda1: f64,
    pub local_stability: Option<LocalStability>,
    pub h11: Option<SignConditionResult>,
    pub h31: Option<SignConditionResult>,
    pub gaps: Vec<GapAnalysis>,
    pub hsu_gaps: Vec<GapAnalysis>,
    pub analytic_routes: AnalyticRoutes,
    pub fh_conditions: FiedlerHsuReport,
    pub verdict: Verdict,
    pub certified_by: Vec<Route>,
    /// When certified: `λ_1 < λ_i` for every competitor.
    pub ordering_cross_check: Option<bool>,
    pub notes: Vec<String>,
    pub config: CertifyConfig,
}

impl CertificateReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::GasCertified
    }

    /// Feasible weights for every non-skipped competitor, in species order
    /// (0 for skipped ones), if all exist.
    pub fn alphas(&self) -> Option<Vec<f64>> {
        chosen(&self.gaps)
    }

    pub fn hsu_constants(&self) -> Option<Vec<f64>> {
        chosen(&self.hsu_gaps)
    }
}

fn chosen(gaps: &[GapAnalysis]) -> Option<Vec<f64>> {
    gaps.iter()
        .map(|g| if g.skipped { Some(0.0) } else { g.chosen })
        .collect()
}

fn all_feasible(gaps: &[GapAnalysis]) -> bool {
    gaps.iter().all(|g| g.skipped || g.feasible)
}

/// Runs every check and composes the verdict.
pub fn certify(model: &ChemostatModel, cfg: &CertifyConfig) -> Result<CertificateReport> {
    model.require_normalized()?;
    let species = model.summaries(cfg.scan_max)?;
    let lambdas: Vec<f64> = species.iter().map(|s| s.break_even).collect();
    let lambda1 = lambdas[0];
    let mut notes = Vec::new();
    for s in &species {
        if s.second_zero.is_finite() {
            notes.push(format!(
                "species {} grows only on ({}, {}): two-zero growth class",
                s.label, s.break_even, s.second_zero
            ));
        }
    }

    let analytic_routes = AnalyticRoutes {
        monod_constant_yields: check_monod_constant_yields(model)?,
        monod_linear_yields: check_monod_linear_yields(model)?,
    };
    let fh_conditions = check_fiedler_hsu(model, &cfg.grid, cfg.scan_max)?;

    let mut report = CertificateReport {
        schema_version: SCHEMA_VERSION,
        species,
        lambda1,
        local_stability: None,
        h11: None,
        h31: None,
        gaps: vec![],
        hsu_gaps: vec![],
        analytic_routes,
        fh_conditions,
        verdict: Verdict::LocallyStableUncertified,
        certified_by: vec![],
        ordering_cross_check: None,
        notes,
        config: *cfg,
    };

    if lambdas.iter().all(|&l| l >= 1.0) {
        report.verdict = Verdict::WashoutOnly;
        return Ok(report);
    }
    if lambda1 >= 1.0 {
        report.verdict = Verdict::NoCandidateEquilibrium;
        return Ok(report);
    }

    let ls = local_stability_e1_with(model, cfg.stability_tol)?;
    report.local_stability = Some(ls);
    let h11 = check_h11(model, &cfg.grid)?;
    let h31 = check_h31(model, &cfg.grid)?;
    for i in 1..model.len() {
        report.gaps.push(gap_for_species(model, i, cfg)?);
        report.hsu_gaps.push(hsu_gap_for_species(model, i, cfg)?);
    }

    let lyapunov_base = h11.holds && h31.holds;
    if lyapunov_base && all_feasible(&report.gaps) {
        report.certified_by.push(Route::Gap);
    }
    if lyapunov_base && all_feasible(&report.hsu_gaps) {
        report.certified_by.push(Route::HsuGap);
    }
    if report.analytic_routes.monod_constant_yields.verdict.is_certified() {
        report.certified_by.push(Route::MonodConstantYields);
    }
    if report.analytic_routes.monod_linear_yields.verdict.is_certified() {
        report.certified_by.push(Route::MonodLinearYields);
    }
    report.h11 = Some(h11);
    report.h31 = Some(h31);

    report.verdict = if ls.verdict == Stability::Unstable {
        Verdict::Unstable
    } else if !report.certified_by.is_empty() {
        Verdict::GasCertified
    } else {
        Verdict::LocallyStableUncertified
    };
    if report.verdict == Verdict::GasCertified {
        let ordered = lambdas[1..].iter().all(|&l| lambda1 < l);
        report.ordering_cross_check = Some(ordered);
        if !ordered {
            report
                .notes
                .push("certified but lambda_1 is not strictly smallest: grid too coarse?".into());
        }
    }
    if ls.verdict == Stability::Unstable && !report.certified_by.is_empty() {
        report
            .notes
            .push("a route reports success although E_1* is linearly unstable".into());
    }
    Ok(report)
}
