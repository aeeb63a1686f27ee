//! Adaptive quadrature and safeguarded root finding.

use crate::error::{Error, Result};

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Subdivides until the local Richardson error estimate drops below the
/// interval's share of `tol`. The integrand must be finite on the closed
/// interval; endpoint singularities should be handled by the caller (open the
/// interval slightly or substitute variables).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidParameter(format!(
            "integration interval must be finite and ordered, got [{a}, {b}]"
        )));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    for (x, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(Error::Domain(format!("integrand not finite at {x}")));
        }
    }
    let whole = simpson(a, b, fa, fm, fb);
    let mut out = 0.0;
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 52, &mut out)?;
    Ok(out)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut f64,
) -> Result<()> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::Domain(format!(
            "integrand not finite inside [{a}, {b}]"
        )));
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "quadrature recursion exhausted on [{a}, {b}]"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        *out += left + right + delta / 15.0;
        return Ok(());
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out)?;
    adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out)
}

/// Solves `f(θ) = target` for a strictly decreasing `f` on `(lo_limit, ∞)`.
///
/// Brackets the root by geometric expansion from `guess`, then refines with
/// Newton steps (using the supplied derivative) safeguarded by bisection:
/// any step that leaves the bracket, or fails to shrink it fast enough, is
/// replaced by a bisection step. Converges to `rel_tol` on the root.
pub fn solve_decreasing<F, D>(
    f: F,
    df: D,
    target: f64,
    guess: f64,
    lo_limit: f64,
    rel_tol: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    assert!(guess > lo_limit, "initial guess must sit above the lower limit");
    let eval = |x: f64| f(x) - target;

    // Expand geometrically until the residual changes sign.
    let mut lo = guess;
    let mut hi = guess;
    let mut f_lo = eval(lo);
    let mut f_hi = f_lo;
    let mut expansions = 0;
    while f_lo < 0.0 {
        // f decreasing: need smaller θ for larger f.
        hi = lo;
        f_hi = f_lo;
        lo = lo_limit + 0.5 * (lo - lo_limit);
        f_lo = eval(lo);
        expansions += 1;
        if expansions > 2000 || !f_lo.is_finite() {
            return Err(Error::Saturated(format!(
                "no sign change while expanding toward the lower limit (last θ = {lo})"
            )));
        }
    }
    while f_hi > 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi = lo_limit + 2.0 * (hi - lo_limit);
        f_hi = eval(hi);
        expansions += 1;
        if expansions > 2000 || !f_hi.is_finite() {
            return Err(Error::Saturated(format!(
                "no sign change while expanding upward (last θ = {hi})"
            )));
        }
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = eval(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = x.abs().max(lo_limit.abs()).max(f64::MIN_POSITIVE);
        if (hi - lo) <= rel_tol * scale {
            return Ok(x);
        }
    }
    Err(Error::Convergence(
        "root refinement exceeded its iteration budget".into(),
    ))
}
