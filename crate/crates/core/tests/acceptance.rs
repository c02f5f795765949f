//! Acceptance criteria, one line of output each. Exits non-zero if any fails.

use std::process::ExitCode;

use chemostat_core::certificates::{
    check_monod_linear_yields, gap_for_species, monod_hsu_constants, Route,
};
use chemostat_core::cycles::{default_bracket, CycleConfig, CycleStability};
use chemostat_core::dynamics::verify_decrease;
use chemostat_core::expr::parse;
use chemostat_core::{
    break_even, c_crit, certify, e1_star, find_cycles, integrate, landmarks, local_stability_e1,
    monod_species, CertifyConfig, ChemostatModel, LyapunovKind, ScalarFn, Stability, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn linear_pair(c2: f64) -> ChemostatModel {
    let lin = |c: f64| ScalarFn::Polynomial(vec![1.0, c]);
    let s1 = monod_species(1.0, 0.1, 0.6, lin(4.0)).unwrap();
    let s2 = monod_species(1.0, 0.15, 0.55, lin(c2)).unwrap();
    ChemostatModel::normalized(vec![s1, s2]).unwrap()
}

fn oscillator() -> ChemostatModel {
    let y = ScalarFn::Polynomial(vec![1.0, 0.0, 46.0]);
    ChemostatModel::normalized(vec![monod_species(2.0, 0.58, 1.0, y).unwrap()]).unwrap()
}

fn break_evens() -> Outcome {
    let m = linear_pair(5.0);
    let l1 = break_even(&m.species[0].growth, 1.0).map_err(|e| e.to_string())?.lambda;
    let l2 = break_even(&m.species[1].growth, 1.0).map_err(|e| e.to_string())?.lambda;
    ensure((l1 - 0.15).abs() <= 1e-9, format!("lambda_1 = {l1}"))?;
    ensure((l2 - 0.55 * 0.15 / 0.45).abs() <= 1e-9, format!("lambda_2 = {l2}"))?;
    Ok(format!("lambda_1 = {l1:.12}, lambda_2 = {l2:.12}"))
}

fn ccrit_values() -> Outcome {
    let c0 = c_crit(0.0).map_err(|e| e.to_string())?;
    let c01 = c_crit(0.1).map_err(|e| e.to_string())?;
    ensure((c0 - 1.0).abs() <= 1e-9, format!("c_crit(0) = {c0}"))?;
    ensure((6.4..=6.6).contains(&c01), format!("c_crit(0.1) = {c01}"))?;
    for b in [1.0, 1.5, 10.0] {
        let c = c_crit(b).map_err(|e| e.to_string())?;
        ensure(c == f64::INFINITY, format!("c_crit({b}) = {c}"))?;
    }
    Ok(format!("c_crit(0) = {c0}, c_crit(0.1) = {c01:.6}, c_crit(b >= 1) = inf"))
}

fn gap_linear_pair() -> Outcome {
    let cfg = CertifyConfig::default();
    let mut seen = Vec::new();
    for (c2, expect) in [(5.0, true), (30.0, true), (80.0, false)] {
        let g = gap_for_species(&linear_pair(c2), 1, &cfg).map_err(|e| e.to_string())?;
        ensure(
            g.feasible == expect,
            format!("c2 = {c2}: feasible = {}, bounds [{}, {}]", g.feasible, g.lower_bound, g.upper_bound),
        )?;
        seen.push(format!("c2={c2}:{}", if g.feasible { "feasible" } else { "infeasible" }));
    }
    Ok(seen.join(", "))
}

fn analytic_vs_numeric() -> Outcome {
    let at5 = check_monod_linear_yields(&linear_pair(5.0)).map_err(|e| e.to_string())?;
    ensure(at5.verdict.is_certified(), format!("c2 = 5: {:?}", at5.verdict))?;
    let at30 = check_monod_linear_yields(&linear_pair(30.0)).map_err(|e| e.to_string())?;
    ensure(!at30.verdict.is_certified(), format!("c2 = 30: {:?}", at30.verdict))?;
    let rep = certify(&linear_pair(30.0), &CertifyConfig::default()).map_err(|e| e.to_string())?;
    ensure(rep.verdict == Verdict::GasCertified, format!("c2 = 30 verdict {:?}", rep.verdict))?;
    ensure(rep.certified_by.contains(&Route::Gap), format!("routes {:?}", rep.certified_by))?;
    Ok("analytic certifies c2=5, declines c2=30; gap route certifies c2=30".into())
}

fn oscillator_landmarks() -> Outcome {
    let m = oscillator();
    let lm = landmarks(&m).map_err(|e| e.to_string())?;
    let got = [lm.s1, lm.s2, lm.s3, lm.s4];
    for (k, (g, want)) in got.iter().zip([0.048, 0.143, 0.579, 0.855]).enumerate() {
        let g = g.ok_or(format!("S{} missing", k + 1))?;
        ensure((g - want).abs() <= 5e-3, format!("S{} = {g}, expected {want}", k + 1))?;
    }
    let ls = local_stability_e1(&m).map_err(|e| e.to_string())?;
    ensure(ls.verdict == Stability::Stable, format!("local stability {:?}", ls.verdict))?;
    ensure((ls.lambda - 0.58).abs() < 1e-9, format!("lambda = {}", ls.lambda))?;
    Ok(format!(
        "S1..S4 = {:.4}, {:.4}, {:.4}, {:.4}; E* stable",
        got[0].unwrap(),
        got[1].unwrap(),
        got[2].unwrap(),
        got[3].unwrap()
    ))
}

fn oscillator_cycles() -> Outcome {
    let m = oscillator();
    let (lo, hi) = default_bracket(&m).map_err(|e| e.to_string())?;
    let res = find_cycles(&m, lo, hi, &CycleConfig::default()).map_err(|e| e.to_string())?;
    ensure(res.cycles.len() == 2, format!("{} cycles", res.cycles.len()))?;
    let (inner, outer) = (&res.cycles[0], &res.cycles[1]);
    ensure(inner.stability == CycleStability::Unstable, format!("inner {:?}", inner.stability))?;
    ensure(outer.stability == CycleStability::Stable, format!("outer {:?}", outer.stability))?;
    // regression values of the section crossings
    ensure((inner.x_section - 7.80437).abs() < 1e-4, format!("inner x = {}", inner.x_section))?;
    ensure((outer.x_section - 8.59542).abs() < 1e-4, format!("outer x = {}", outer.x_section))?;
    Ok(format!(
        "inner unstable at x = {:.5} (R' = {:.4}), outer stable at x = {:.5} (R' = {:.4})",
        inner.x_section, inner.multiplier, outer.x_section, outer.multiplier
    ))
}

struct RandomModel {
    model: ChemostatModel,
    params: Vec<(f64, f64, f64, f64)>,
    initial: Vec<f64>,
}

/// Three constant-yield Monod species with `λ_1 < λ_2 < λ_3 < 1`.
///
/// Break-even levels are at least 0.05 apart and each loser has
/// `f_i(λ_1) ≤ −0.05`, so exclusion completes well before `t = 500`.
fn random_model(rng: &mut ChaCha8Rng) -> RandomModel {
    loop {
        let mut lambdas: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..0.9)).collect();
        lambdas.sort_by(f64::total_cmp);
        if lambdas.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let params: Vec<(f64, f64, f64, f64)> = lambdas
            .iter()
            .map(|&l| {
                let a = rng.gen_range(1.0..3.0);
                let d = a * rng.gen_range(0.2..0.8);
                let b = l * (a - d) / d;
                (a, b, d, rng.gen_range(0.5..2.0))
            })
            .collect();
        let l1 = lambdas[0];
        let slow = params[1..].iter().any(|&(a, b, d, _)| a * l1 / (b + l1) - d > -0.05);
        if slow {
            continue;
        }
        let species = params
            .iter()
            .map(|&(a, b, d, y)| monod_species(a, b, d, ScalarFn::constant(y)).unwrap())
            .collect();
        let model = ChemostatModel::normalized(species).unwrap();
        let mut initial = vec![rng.gen_range(0.1..0.9)];
        initial.extend((0..3).map(|_| rng.gen_range(0.05..1.0)));
        return RandomModel { model, params, initial };
    }
}

/// Closed-form constants for constant-yield Monod competitors, computed from
/// the parameters directly.
fn hsu_oracle(params: &[(f64, f64, f64, f64)]) -> Vec<f64> {
    let (a1, _, d1, y1) = params[0];
    params[1..]
        .iter()
        .map(|&(a, _, d, y)| (a1 - d1) * a * y1 / ((a - d) * a1 * y))
        .collect()
}

fn p1_at_lambda1(params: &[(f64, f64, f64, f64)]) -> f64 {
    let (a1, b1, d1, y1) = params[0];
    let l1 = b1 * d1 / (a1 - d1);
    (1.0 - l1) * y1 * (b1 + l1) / (a1 * l1)
}

struct LyapunovRun {
    monotone: bool,
    converged: bool,
    max_rel_err: f64,
    detail: String,
}

fn lyapunov_runs() -> Result<Vec<LyapunovRun>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    for k in 0..20 {
        let rm = random_model(&mut rng);
        let cs = hsu_oracle(&rm.params);
        let lib = monod_hsu_constants(&rm.model).ok_or(format!("model {k}: no closed form"))?;
        for (c, l) in cs.iter().zip(&lib[1..]) {
            ensure((c - l).abs() <= 1e-12 * c.abs().max(1.0), format!("model {k}: c = {l}, oracle {c}"))?;
        }
        let alphas: Vec<f64> = cs.iter().map(|c| c / p1_at_lambda1(&rm.params)).collect();
        let traj = integrate(&rm.model, &rm.initial, 500.0, 1e-10, 1e-12).map_err(|e| e.to_string())?;
        let hsu = verify_decrease(&rm.model, &traj, LyapunovKind::Hsu, &cs).map_err(|e| e.to_string())?;
        let wl = verify_decrease(&rm.model, &traj, LyapunovKind::Wl, &alphas).map_err(|e| e.to_string())?;
        let target = e1_star(&rm.model).map_err(|e| e.to_string())?.state();
        let dist = traj
            .final_state()
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push(LyapunovRun {
            monotone: hsu.monotone && wl.monotone,
            converged: dist < 1e-6,
            max_rel_err: hsu.max_relative_error.max(wl.max_relative_error),
            detail: format!(
                "model {k}: hsu max dV/dt {:.2e}, wl max dV/dt {:.2e}, distance {dist:.2e}",
                hsu.max_increase_rate, wl.max_increase_rate
            ),
        });
    }
    Ok(out)
}

fn lyapunov_decrease(runs: &[LyapunovRun]) -> Outcome {
    for r in runs {
        ensure(r.monotone && r.converged, r.detail.clone())?;
    }
    Ok(format!("{} models: V_hsu and V_wl non-increasing, final state within 1e-6 of E1*", runs.len()))
}

fn vdot_oracle(runs: &[LyapunovRun]) -> Outcome {
    let worst = runs.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    ensure(worst < 1e-4, format!("max relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.3e}"))
}

fn washout_species() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let rm = random_model(&mut rng);
        let d4: f64 = rng.gen_range(0.3..1.0);
        let a4 = d4 - rng.gen_range(0.1..0.25);
        let b4 = rng.gen_range(0.05..1.0);
        let mut species = rm.model.species.clone();
        species.push(monod_species(a4.max(0.01), b4, d4, ScalarFn::constant(1.0)).unwrap());
        let model = ChemostatModel::normalized(species).unwrap();
        let mut initial = rm.initial.clone();
        initial.push(rng.gen_range(0.05..1.0));
        let traj = integrate(&model, &initial, 500.0, 1e-10, 1e-12).map_err(|e| e.to_string())?;
        let x4 = traj.final_state()[4];
        ensure(x4 < 1e-6, format!("model {k}: x4(500) = {x4:e}"))?;
        worst = worst.max(x4);
    }
    Ok(format!("20 models: max x4(500) = {worst:.3e}"))
}

/// Random expression text over `S`, kept away from singularities so that a
/// finite-difference reference is meaningful.
fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            "S".into()
        } else {
            format!("{:.3}", rng.gen_range(0.1..3.0))
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => format!("({a} + {})", random_expr(rng, depth - 1)),
        1 => format!("({a} - {})", random_expr(rng, depth - 1)),
        2 => format!("{a} * {}", random_expr(rng, depth - 1)),
        3 => format!("{a} / (1 + ({})^2)", random_expr(rng, depth - 1)),
        4 => format!("({a})^{}", rng.gen_range(2..4)),
        5 => format!("exp(-({a})^2)"),
        6 => format!("ln(1 + ({a})^2)"),
        7 => format!("sqrt(1 + ({a})^2)"),
        _ => format!("-{a}"),
    }
}

fn richardson(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let h = 1e-3 * s.abs().max(1.0);
    let d = |h: f64| (f(s + h) - f(s - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn dual_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 1000 {
        let text = random_expr(&mut rng, 4);
        let e = parse(&text).map_err(|err| format!("{text}: {err}"))?;
        let s = rng.gen_range(0.05..2.0);
        let Ok(d) = e.eval_dual(s) else { continue };
        let fd = richardson(|x| e.eval(x).unwrap_or(f64::NAN), s);
        if !fd.is_finite() {
            continue;
        }
        let rel = (d.eps - fd).abs() / d.eps.abs().max(1.0);
        ensure(rel < 1e-6, format!("{text} at S = {s}: dual {}, fd {fd}", d.eps))?;
        worst = worst.max(rel);
        checked += 1;
    }
    Ok(format!("1000 pairs, max relative error {worst:.3e}"))
}

fn main() -> ExitCode {
    let runs = lyapunov_runs();
    let from_runs = |f: fn(&[LyapunovRun]) -> Outcome| match &runs {
        Ok(r) => f(r),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("break-even levels of the two-species linear-yield example", break_evens()),
        ("critical yield slope c_crit", ccrit_values()),
        ("gap criterion for c2 = 5, 30, 80", gap_linear_pair()),
        ("analytic route versus numeric route", analytic_vs_numeric()),
        ("single-species landmarks and local stability", oscillator_landmarks()),
        ("two nested limit cycles", oscillator_cycles()),
        ("Lyapunov decrease on random 3-species models", from_runs(lyapunov_decrease)),
        ("washout of a species that cannot grow", washout_species()),
        ("closed-form Vdot against finite differences", from_runs(vdot_oracle)),
        ("dual derivatives against finite differences", dual_derivatives()),
    ];
    let mut failed = 0;
    for (k, (name, res)) in results.iter().enumerate() {
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
