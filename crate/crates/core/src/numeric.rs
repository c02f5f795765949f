//! Scalar root finding and quadrature shared by the analysis modules.

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite (or zero) sign.
///
/// Stops once the bracket is narrower than `tol` and returns its midpoint.
/// An endpoint that evaluates to exactly zero is returned immediately.
pub fn bisect<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64, E> {
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    debug_assert!(f_lo.signum() != f_hi.signum(), "bisect: no sign change");
    // 200 halvings exhaust any f64 bracket
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All strict sign changes of `f` on a uniform grid of `intervals` cells
/// over `[lo, hi]`, each refined by bisection to `tol`.
///
/// Grid values of exactly zero are skipped when looking for the next sign,
/// so a crossing through a grid node is still bracketed. Tangential zeros
/// (no sign change) are not reported.
pub fn sign_change_roots<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    intervals: usize,
    tol: f64,
) -> Result<Vec<f64>, E> {
    let step = (hi - lo) / intervals as f64;
    let mut roots = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for k in 0..=intervals {
        let s = if k == intervals { hi } else { lo + k as f64 * step };
        let v = f(s)?;
        if v == 0.0 {
            continue;
        }
        if let Some((s_prev, v_prev)) = last {
            if v_prev.signum() != v.signum() {
                roots.push(bisect(&mut f, s_prev, s, tol)?);
            }
        }
        last = Some((s, v));
    }
    Ok(roots)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Reversed limits give the negated integral.
pub fn adaptive_simpson<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, E> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
