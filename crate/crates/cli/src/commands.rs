use std::fs;
use std::io::Write;

use chemostat_core::certificates::{g_curve, monod_hsu_constants, CertificateReport};
use chemostat_core::cycles::{default_bracket, CycleConfig};
use chemostat_core::dynamics::{
    asymptotic_checks, integrate_with, verify_decrease, write_trajectory_csv, IntegratorConfig,
};
use chemostat_core::{
    c_crit, certify, find_cycles, landmarks, p1_curve, CertifyConfig, ChemostatModel,
    LyapunovKind, ModelFile, Verdict,
};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{num, write_file, write_json, CliError, CliResult};
use crate::{AnalyzeArgs, CcritArgs, CyclesArgs, ModelArgs, SimulateArgs, SweepArgs};

const THREADS_VAR: &str = "CHEMOSTAT_THREADS";

fn load_file(args: &ModelArgs) -> CliResult<ModelFile> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.model.display())))?;
    let file = ModelFile::from_json(&text)?.with_overrides(&args.set)?;
    if args.echo_model {
        println!("{}", file.to_json_pretty());
    }
    Ok(file)
}

fn build(file: &ModelFile) -> CliResult<ChemostatModel> {
    Ok(file.build()?.normalize())
}

fn certify_config(grid: usize) -> CliResult<CertifyConfig> {
    if grid < 2 {
        return Err(CliError::Input(format!("--grid must be at least 2, got {grid}")));
    }
    let mut cfg = CertifyConfig::default();
    cfg.grid.points = grid;
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {v}")))
    }
}

pub fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::GasCertified => 0,
        Verdict::WashoutOnly => 3,
        Verdict::LocallyStableUncertified | Verdict::Unstable | Verdict::NoCandidateEquilibrium => 2,
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|s| s.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<u8> {
    let file = load_file(&args.model)?;
    let model = build(&file)?;
    let cfg = certify_config(args.grid)?;
    let report = certify(&model, &cfg)?;
    let dir = &args.out.out;
    write_json(dir, "report.json", &report)?;
    write_file(dir, "gi_curves.csv", |w| write_gi_curves(w, &model, &cfg))?;
    eprintln!("verdict: {}", verdict_name(report.verdict));
    Ok(verdict_code(report.verdict))
}

fn write_gi_curves(w: &mut dyn Write, model: &ChemostatModel, cfg: &CertifyConfig) -> std::io::Result<()> {
    write!(w, "S,P1")?;
    for k in 2..=model.len() {
        write!(w, ",g{k}")?;
    }
    writeln!(w)?;
    for s in cfg.grid.iter() {
        let p1 = p1_curve(model, s).map_or(f64::NAN, |d| d.re);
        write!(w, "{},{}", num(s), num(p1))?;
        for i in 1..model.len() {
            write!(w, ",{}", num(g_curve(model, i, s).unwrap_or(f64::NAN)))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Weights for the Lyapunov check: Hsu-type constants when available,
/// otherwise the gap weights, otherwise the Monod closed form.
fn lyapunov_weights(model: &ChemostatModel, report: &CertificateReport) -> Option<(LyapunovKind, Vec<f64>)> {
    if !report.is_certified() {
        return None;
    }
    if let Some(c) = report.hsu_constants() {
        return Some((LyapunovKind::Hsu, c));
    }
    if let Some(a) = report.alphas() {
        return Some((LyapunovKind::Wl, a));
    }
    monod_hsu_constants(model).map(|c| (LyapunovKind::Hsu, c[1..].to_vec()))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<u8> {
    let file = load_file(&args.model)?;
    let model = build(&file)?;
    let t_end = positive("--t-end", args.t_end)?;
    let rtol = positive("--rtol", args.rtol)?;
    let atol = positive("--atol", args.atol)?;
    let initial = match (&args.initial, &file.initial) {
        (Some(v), _) | (None, Some(v)) => v.clone(),
        (None, None) => {
            let mut v = vec![0.1; model.len() + 1];
            v[0] = 0.5;
            v
        }
    };
    let traj = integrate_with(&model, &initial, t_end, &IntegratorConfig::with_tolerances(rtol, atol))?;
    let asym = asymptotic_checks(&model, &traj)?;

    let cfg = certify_config(args.grid)?;
    let report = certify(&model, &cfg)?;
    let decrease = match lyapunov_weights(&model, &report) {
        Some((kind, w)) => Some(verify_decrease(&model, &traj, kind, &w)?),
        None => None,
    };

    let dir = &args.out.out;
    write_file(dir, "trajectory.csv", |w| write_trajectory_csv(w, &traj, None))?;
    if let Some(d) = &decrease {
        write_file(dir, "lyapunov.csv", |w| d.samples.write_csv(w))?;
    }
    let summary = json!({
        "initial": initial,
        "t_end": t_end,
        "rtol": rtol,
        "atol": atol,
        "steps": traj.stats,
        "clamps": traj.clamps.len(),
        "max_total": traj.max_total(),
        "asymptotics": asym,
        "verdict": report.verdict,
        "lyapunov": decrease,
    });
    write_json(dir, "summary.json", &summary)?;
    Ok(0)
}

pub fn cycles(args: &CyclesArgs) -> CliResult<u8> {
    let file = load_file(&args.model)?;
    let model = build(&file)?;
    let rtol = positive("--rtol", args.rtol)?;
    let mut cfg = CycleConfig::default();
    cfg.return_map.integrator = IntegratorConfig::with_tolerances(rtol, rtol * 1e-2);
    cfg.return_map.t_max = positive("--t-end", args.t_end)?;
    let marks = landmarks(&model)?;
    let (lo, hi) = default_bracket(&model)?;
    let result = find_cycles(&model, args.x_lo.unwrap_or(lo), args.x_hi.unwrap_or(hi), &cfg)?;
    let dir = &args.out.out;
    write_json(dir, "cycles.json", &json!({ "landmarks": marks, "result": result }))?;
    write_file(dir, "displacement.csv", |w| result.write_displacement_csv(w))?;
    eprintln!("{} cycle(s)", result.cycles.len());
    Ok(0)
}

pub fn ccrit(args: &CcritArgs) -> CliResult<u8> {
    let bs: Vec<f64> = if args.b.is_empty() {
        (0..=120).map(|k| f64::from(k) / 100.0).collect()
    } else {
        args.b.clone()
    };
    let rows = bs
        .iter()
        .map(|&b| c_crit(b).map(|c| (b, c)))
        .collect::<Result<Vec<_>, _>>()?;
    write_file(&args.out.out, "ccrit.csv", |w| {
        writeln!(w, "b,c_crit")?;
        for (b, c) in &rows {
            writeln!(w, "{},{}", num(*b), num(*c))?;
        }
        Ok(())
    })?;
    Ok(0)
}

fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("--range expects start:stop:count, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    })
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

pub fn sweep(args: &SweepArgs) -> CliResult<u8> {
    let values = match &args.range {
        Some(r) => parse_range(r)?,
        None => args.values.clone(),
    };
    if values.is_empty() {
        return Err(CliError::Input("sweep grid is empty".into()));
    }
    let base = load_file(&args.model)?;
    let cfg = certify_config(args.grid)?;
    let pool = thread_pool()?;
    let reports: Vec<CliResult<CertificateReport>> = pool.install(|| {
        values
            .par_iter()
            .map(|v| {
                let file = base.with_overrides(&[format!("{}={v}", args.param)])?;
                Ok(certify(&build(&file)?, &cfg)?)
            })
            .collect()
    });
    let reports = reports.into_iter().collect::<CliResult<Vec<_>>>()?;

    let competitors = reports.iter().map(|r| r.gaps.len()).max().unwrap_or(0);
    write_file(&args.out.out, "sweep.csv", |w| {
        write!(w, "{},verdict,lambda1", args.param)?;
        for k in 2..=competitors + 1 {
            write!(w, ",gap{k}_lower,gap{k}_upper,gap{k}_feasible")?;
        }
        writeln!(w)?;
        for (v, r) in values.iter().zip(&reports) {
            write!(w, "{v},{},{}", verdict_name(r.verdict), num(r.lambda1))?;
            for k in 0..competitors {
                match r.gaps.get(k) {
                    Some(g) if !g.skipped => write!(
                        w,
                        ",{},{},{}",
                        num(g.lower_bound),
                        num(g.upper_bound),
                        g.feasible
                    )?,
                    Some(_) => write!(w, ",,,skipped")?,
                    None => write!(w, ",,,")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(0)
}
