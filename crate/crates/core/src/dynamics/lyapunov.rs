use serde::Serialize;

use super::{rhs_of, single_step, Trajectory};
use crate::error::{Error, Result};
use crate::model::{break_even, p_curve, ChemostatModel};
use crate::numeric::adaptive_simpson;

/// Which of the two Lyapunov functions to evaluate.
///
/// `Wl` weights the substrate integral by `1/(1 − S)` and the competitors by
/// `α_i`; `Hsu` weights it by `1/p_1(S)` and the competitors by `c_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovKind {
    Wl,
    Hsu,
}

pub const QUAD_TOL: f64 = 1e-10;

/// A Lyapunov function for `E_1*` with fixed competitor weights.
#[derive(Debug, Clone)]
pub struct LyapunovFn<'a> {
    model: &'a ChemostatModel,
    kind: LyapunovKind,
    /// One weight per competitor (species 2..N).
    weights: Vec<f64>,
    lambda: f64,
    x1_star: f64,
}

impl<'a> LyapunovFn<'a> {
    pub fn new(model: &'a ChemostatModel, kind: LyapunovKind, weights: &[f64]) -> Result<Self> {
        model.require_normalized()?;
        if weights.len() + 1 != model.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights given for {} competitors",
                weights.len(),
                model.len() - 1
            )));
        }
        let lambda = break_even(&model.species[0].growth, 1.0)?.lambda;
        if lambda >= 1.0 {
            return Err(Error::NoEquilibrium { lambda });
        }
        let x1_star = p_curve(&model.species[0], lambda)?.re;
        Ok(LyapunovFn {
            model,
            kind,
            weights: weights.to_vec(),
            lambda,
            x1_star,
        })
    }

    pub fn kind(&self) -> LyapunovKind {
        self.kind
    }

    fn integrand(&self, s: f64) -> Result<f64> {
        let sp = &self.model.species[0];
        let f1 = sp.growth.eval(s)?;
        Ok(match self.kind {
            LyapunovKind::Wl => f1 / (1.0 - s),
            LyapunovKind::Hsu => f1 / sp.uptake.eval(s)?,
        })
    }

    /// `∫_a^b` of the substrate integrand.
    pub fn substrate_integral(&self, a: f64, b: f64) -> Result<f64> {
        adaptive_simpson(|s| self.integrand(s), a, b, QUAD_TOL)
    }

    fn check_domain(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.model.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "state has {} components, model needs {}",
                state.len(),
                self.model.len() + 1
            )));
        }
        let (s, x1) = (state[0], state[1]);
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("S = {s}")));
        }
        if x1.is_nan() || x1 <= 0.0 {
            return Err(Error::Domain(format!("x1 = {x1}")));
        }
        Ok(())
    }

    /// Everything except the substrate integral.
    fn species_terms(&self, state: &[f64]) -> f64 {
        let (x1, xs) = (state[1], self.x1_star);
        let log_term = x1 - xs - xs * (x1 / xs).ln();
        let lead = match self.kind {
            LyapunovKind::Wl => log_term / xs,
            LyapunovKind::Hsu => log_term,
        };
        lead + self.weights.iter().zip(&state[2..]).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        self.check_domain(state)?;
        Ok(self.substrate_integral(self.lambda, state[0])? + self.species_terms(state))
    }

    /// Closed-form derivative along the flow.
    pub fn rate(&self, state: &[f64]) -> Result<f64> {
        self.check_domain(state)?;
        let s = state[0];
        let sp1 = &self.model.species[0];
        let f1 = sp1.growth.eval(s)?;
        let p1 = sp1.uptake.eval(s)?;
        let big_p = (1.0 - s) / p1;
        let mut rate = match self.kind {
            LyapunovKind::Wl => state[1] * f1 * (1.0 / self.x1_star - 1.0 / big_p),
            LyapunovKind::Hsu => f1 * (big_p - self.x1_star),
        };
        let d = match self.kind {
            LyapunovKind::Wl => 1.0 - s,
            LyapunovKind::Hsu => p1,
        };
        for ((sp, w), x) in self.model.species[1..].iter().zip(&self.weights).zip(&state[2..]) {
            let fi = sp.growth.eval(s)?;
            let pi = sp.uptake.eval(s)?;
            rate += x * (w * fi * d - f1 * pi) / d;
        }
        Ok(rate)
    }

    pub fn eval(&self, state: &[f64]) -> Result<(f64, f64)> {
        Ok((self.value(state)?, self.rate(state)?))
    }

    /// `V(b) − V(a)`, accurate even when both values are large.
    pub fn difference(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_domain(a)?;
        self.check_domain(b)?;
        Ok(self.substrate_integral(a[0], b[0])? + self.species_terms(b) - self.species_terms(a))
    }
}

/// `(V, V̇)` of the `(1 − S)`-weighted function with weights `α_i` for
/// species 2..N.
pub fn lyapunov_wl(model: &ChemostatModel, state: &[f64], alphas: &[f64]) -> Result<(f64, f64)> {
    LyapunovFn::new(model, LyapunovKind::Wl, alphas)?.eval(state)
}

/// `(V, V̇)` of the `p_1`-weighted function with constants `c_i` for
/// species 2..N.
pub fn lyapunov_hsu(model: &ChemostatModel, state: &[f64], cs: &[f64]) -> Result<(f64, f64)> {
    LyapunovFn::new(model, LyapunovKind::Hsu, cs)?.eval(state)
}

pub const VDOT_STEP: f64 = 1e-4;

/// Central difference of `V` over one integrator step of size `dt` in each
/// direction.
pub fn vdot_numeric(lf: &LyapunovFn<'_>, state: &[f64], dt: f64) -> Result<f64> {
    let mut f = rhs_of(lf.model);
    let fwd = single_step(&mut f, state, dt)?;
    let back = single_step(&mut f, state, -dt)?;
    Ok(lf.difference(&back, &fwd)? / (2.0 * dt))
}

/// `V`, the closed-form `V̇` and the finite-difference `V̇` at every
/// trajectory point; `NaN` where the state is outside the function's domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovSamples {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub vdot_closed: Vec<f64>,
    pub vdot_numeric: Vec<f64>,
    /// `V(t_k) − V(t_{k−1})` between consecutive in-domain samples
    /// (`NaN` otherwise), computed without cancellation.
    pub increments: Vec<f64>,
}

impl LyapunovSamples {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,V,Vdot_closed,Vdot_numeric")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k], self.v[k], self.vdot_closed[k], self.vdot_numeric[k]
            )?;
        }
        Ok(())
    }
}

pub fn sample_lyapunov(lf: &LyapunovFn<'_>, traj: &Trajectory) -> Result<LyapunovSamples> {
    let n = traj.times.len();
    let mut out = LyapunovSamples {
        times: traj.times.clone(),
        v: vec![f64::NAN; n],
        vdot_closed: vec![f64::NAN; n],
        vdot_numeric: vec![f64::NAN; n],
        increments: vec![f64::NAN; n],
    };
    let mut prev: Option<usize> = None;
    for (k, y) in traj.states.iter().enumerate() {
        if lf.check_domain(y).is_err() {
            prev = None;
            continue;
        }
        match prev {
            Some(j) => {
                let dv = lf.difference(&traj.states[j], y)?;
                out.increments[k] = dv;
                out.v[k] = out.v[j] + dv;
            }
            None => out.v[k] = lf.value(y)?,
        }
        out.vdot_closed[k] = lf.rate(y)?;
        let dt = VDOT_STEP.min(0.5 * y[0]).min(0.5 * (1.0 - y[0]));
        // the short steps can leave the domain right at its edge
        out.vdot_numeric[k] = vdot_numeric(lf, y, dt).unwrap_or(f64::NAN);
        prev = Some(k);
    }
    Ok(out)
}

pub const DRIFT_PER_UNIT_TIME: f64 = 1e-8;
pub const VDOT_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport {
    pub kind: LyapunovKind,
    pub passed: bool,
    pub monotone: bool,
    pub formula_agrees: bool,
    pub samples_checked: usize,
    pub samples_skipped: usize,
    /// Allowed increase of `V` per unit time.
    pub drift_tolerance: f64,
    /// Largest `ΔV/Δt` between consecutive samples.
    pub max_increase_rate: f64,
    /// First time where `V` rose faster than the tolerance.
    pub violation_time: Option<f64>,
    pub max_vdot_closed: f64,
    /// Largest `|V̇_closed − V̇_numeric| / max(1, |V̇_numeric|)`.
    pub max_relative_error: f64,
    pub mismatch_time: Option<f64>,
    #[serde(skip)]
    pub samples: LyapunovSamples,
}

/// Checks that `V` does not increase along `traj` (up to drift) and that the
/// closed-form `V̇` matches a finite difference of `V`.
pub fn verify_decrease(
    model: &ChemostatModel,
    traj: &Trajectory,
    kind: LyapunovKind,
    constants: &[f64],
) -> Result<DecreaseReport> {
    let lf = LyapunovFn::new(model, kind, constants)?;
    let samples = sample_lyapunov(&lf, traj)?;
    let v0 = samples.v.iter().copied().find(|v| v.is_finite()).unwrap_or(0.0);
    let drift = DRIFT_PER_UNIT_TIME * (1.0 + v0.abs());
    let mut rep = DecreaseReport {
        kind,
        passed: true,
        monotone: true,
        formula_agrees: true,
        samples_checked: 0,
        samples_skipped: 0,
        drift_tolerance: drift,
        max_increase_rate: f64::NEG_INFINITY,
        violation_time: None,
        max_vdot_closed: f64::NEG_INFINITY,
        max_relative_error: 0.0,
        mismatch_time: None,
        samples: LyapunovSamples {
            times: vec![],
            v: vec![],
            vdot_closed: vec![],
            vdot_numeric: vec![],
            increments: vec![],
        },
    };
    let mut last_t: Option<f64> = None;
    for k in 0..samples.times.len() {
        let t = samples.times[k];
        if !samples.v[k].is_finite() {
            rep.samples_skipped += 1;
            last_t = None;
            continue;
        }
        rep.samples_checked += 1;
        if let (Some(t0), dv) = (last_t, samples.increments[k]) {
            let dt = t - t0;
            rep.max_increase_rate = rep.max_increase_rate.max(dv / dt);
            if dv > drift * dt && rep.violation_time.is_none() {
                rep.violation_time = Some(t);
                rep.monotone = false;
            }
        }
        last_t = Some(t);
        let (vc, vn) = (samples.vdot_closed[k], samples.vdot_numeric[k]);
        rep.max_vdot_closed = rep.max_vdot_closed.max(vc);
        if vn.is_finite() {
            let rel = (vc - vn).abs() / vn.abs().max(1.0);
            if rel > rep.max_relative_error {
                rep.max_relative_error = rel;
            }
            if rel >= VDOT_REL_TOL && rep.mismatch_time.is_none() {
                rep.mismatch_time = Some(t);
                rep.formula_agrees = false;
            }
        }
    }
    rep.passed = rep.monotone && rep.formula_agrees;
    rep.samples = samples;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{alphas_from_hsu, monod_hsu_constants};
    use crate::dynamics::integrate;
    use crate::equilibria::e1_star;
    use crate::model::{monod_species, ScalarFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_monod() -> ChemostatModel {
        let s1 = monod_species(1.0, 0.1, 0.6, ScalarFn::constant(1.0)).unwrap();
        let s2 = monod_species(1.0, 0.15, 0.55, ScalarFn::constant(1.0)).unwrap();
        ChemostatModel::normalized(vec![s1, s2]).unwrap()
    }

    #[test]
    fn zero_at_equilibrium() {
        let m = two_monod();
        let e = e1_star(&m).unwrap().state();
        for kind in [LyapunovKind::Wl, LyapunovKind::Hsu] {
            let lf = LyapunovFn::new(&m, kind, &[0.7]).unwrap();
            let (v, vd) = lf.eval(&e).unwrap();
            assert!(v.abs() < 1e-14 && vd.abs() < 1e-14, "{kind:?}: {v} {vd}");
        }
    }

    #[test]
    fn lasalle_set_has_zero_rate() {
        let m = two_monod();
        for kind in [LyapunovKind::Wl, LyapunovKind::Hsu] {
            let lf = LyapunovFn::new(&m, kind, &[0.7]).unwrap();
            for x1 in [0.3, 1.0, 4.0] {
                let r = lf.rate(&[0.15, x1, 0.0]).unwrap();
                assert!(r.abs() < 1e-12, "{kind:?} x1 = {x1}: {r}");
            }
        }
    }

    #[test]
    fn certified_constants_give_negative_rate() {
        let m = two_monod();
        let cs = monod_hsu_constants(&m).unwrap();
        let alphas = alphas_from_hsu(&m, &cs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let st = [rng.gen_range(0.01..0.99), rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0)];
            assert!(lyapunov_hsu(&m, &st, &cs[1..]).unwrap().1 < 0.0, "{st:?}");
            assert!(lyapunov_wl(&m, &st, &alphas[1..]).unwrap().1 < 0.0, "{st:?}");
        }
    }

    /// Single species: the `p_1`-weighted function is
    /// `∫ f/p + x − x* − x*·ln(x/x*)`; compare against a direct quadrature
    /// on a linear example where the integral has a closed form.
    #[test]
    fn single_species_closed_form() {
        let sp = crate::model::Species::new(
            "",
            ScalarFn::parse("S - 0.5").unwrap(),
            ScalarFn::parse("S").unwrap(),
        );
        let m = ChemostatModel::normalized(vec![sp]).unwrap();
        let (s, x) = (0.8f64, 2.0f64);
        let (v, _) = lyapunov_hsu(&m, &[s, x], &[]).unwrap();
        // ∫_{0.5}^{S} (σ − 0.5)/σ dσ = S − 0.5 − 0.5·ln(2S); x* = 1
        let want = (s - 0.5 - 0.5 * (2.0 * s).ln()) + (x - 1.0 - x.ln());
        assert!((v - want).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        let m = two_monod();
        assert!(matches!(lyapunov_wl(&m, &[1.0, 1.0, 0.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(lyapunov_wl(&m, &[0.5, 0.0, 0.0], &[1.0]), Err(Error::Domain(_))));
        assert!(lyapunov_wl(&m, &[0.5, 1.0, 0.0], &[]).is_err());
    }

    #[test]
    fn decrease_along_trajectory() {
        let m = two_monod();
        let cs = monod_hsu_constants(&m).unwrap();
        let alphas = alphas_from_hsu(&m, &cs).unwrap();
        let tr = integrate(&m, &[0.5, 0.2, 0.3], 100.0, 1e-8, 1e-10).unwrap();
        let rep = verify_decrease(&m, &tr, LyapunovKind::Hsu, &cs[1..]).unwrap();
        assert!(rep.passed, "{rep:?}");
        let rep = verify_decrease(&m, &tr, LyapunovKind::Wl, &alphas[1..]).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_relative_error < VDOT_REL_TOL);
    }

    #[test]
    fn constant_trajectory_passes() {
        let m = two_monod();
        let e = e1_star(&m).unwrap().state();
        let tr = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![e.clone(), e.clone(), e],
            stats: Default::default(),
            clamps: vec![],
        };
        let rep = verify_decrease(&m, &tr, LyapunovKind::Wl, &[0.5]).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.samples_checked, 3);
    }

    #[test]
    fn wrong_weight_is_detected() {
        // far above the admissible range, so V rises while x2 grows at high S
        let m = two_monod();
        let tr = integrate(&m, &[0.9, 0.5, 0.5], 5.0, 1e-8, 1e-10).unwrap();
        let rep = verify_decrease(&m, &tr, LyapunovKind::Hsu, &[5.0]).unwrap();
        assert!(!rep.monotone);
        assert!(rep.violation_time.is_some());
        // the formula still matches the flow
        assert!(rep.formula_agrees, "{}", rep.max_relative_error);
    }
}
