//! Scalar root bracketing, refinement and one-dimensional maximisation.

/// Uniform grid of `n + 1` points spanning `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / n as f64;
    (0..=n).map(move |k| if k == n { hi } else { lo + step * k as f64 })
}

/// Refines a sign change of `f` on `[a, b]` with a secant step safeguarded
/// by bisection (Illinois variant). Stops when the bracket is narrower than
/// `rel_tol * max(|a|, |b|)` or an exact zero is hit.
pub fn refine_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "root not bracketed");
    let mut side = 0i8;
    for _ in 0..200 {
        let width = (b - a).abs();
        if width <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        // fall back to bisection when the secant leaves the inner bracket
        let lo = a.min(b) + 0.01 * width;
        let hi = a.max(b) - 0.01 * width;
        if !x.is_finite() || x < lo || x > hi {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if f(a).abs() < f(b).abs() {
        a
    } else {
        b
    }
}

/// Golden-section search for the maximiser of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * a.abs().max(b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// All roots of `f` on `[lo, hi]` found by scanning `n` uniform cells for
/// sign changes. Touching roots, where `f` peaks above zero inside a single
/// cell without a sign change at the nodes, are caught by maximising `f`
/// around each negative local grid maximum. Roots closer than
/// `merge_tol` are reported once.
pub fn bracketed_roots<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    n: usize,
    rel_tol: f64,
    merge_tol: f64,
) -> Vec<f64> {
    let xs: Vec<f64> = linspace(lo, hi, n).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (a, b) = (xs[k], xs[k + 1]);
        let (fa, fb) = (vs[k], vs[k + 1]);
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(refine_root(&f, a, b, rel_tol));
        }
    }
    if vs[n] == 0.0 {
        roots.push(xs[n]);
    }

    // same-sign local maxima below zero may hide a pair of close roots
    for k in 1..n {
        if vs[k] < 0.0 && vs[k] >= vs[k - 1] && vs[k] >= vs[k + 1] {
            let (xm, fm) = golden_section_max(&f, xs[k - 1], xs[k + 1], 1e-14);
            if fm >= 0.0 {
                if fm == 0.0 {
                    roots.push(xm);
                } else {
                    roots.push(refine_root(&f, xs[k - 1], xm, rel_tol));
                    roots.push(refine_root(&f, xm, xs[k + 1], rel_tol));
                }
            }
        }
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last_mut() {
            Some(last) if (r - *last).abs() <= merge_tol => *last = 0.5 * (*last + r),
            _ => merged.push(r),
        }
    }
    merged
}
