//! Bounded one-dimensional minimization.

/// Golden-section search for a minimum of `f` on [a, b]. Returns (x, f(x)).
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut iter = 0;
    while (b - a).abs() > rel_tol * scale && iter < 500 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan followed by golden-section refinement around the best point;
/// robust to multiple local minima at grid resolution.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, points: usize, rel_tol: f64) -> (f64, f64) {
    let points = points.max(3);
    let step = (b - a) / (points - 1) as f64;
    let mut best = (a, f(a));
    for k in 1..points {
        let x = a + step * k as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - step).max(a);
    let hi = (best.0 + step).min(b);
    let refined = golden_section(&mut f, lo, hi, rel_tol);
    if refined.1 <= best.1 {
        refined
    } else {
        best
    }
}
