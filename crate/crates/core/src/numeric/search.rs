//! Grids and golden-section search.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `n` points evenly spaced on `[lo, hi]` (both endpoints included).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` points evenly spaced in `ln` between `lo` and `hi` (both positive).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if let Some(last) = v.last_mut() {
        *last = hi;
    }
    v
}

/// Golden-section minimization of `f` on `[a, b]` until the bracket is narrower than `tol`.
///
/// Returns `(argmin, min)` over every point evaluated, including the two
/// endpoints, so the result is never worse than the bracket ends.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    best
}

/// Golden-section maximization; mirror of [`golden_min`].
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|t| -f(t), a, b, tol);
    (x, -v)
}

/// Index of the smallest value; the first index wins ties. NaN never wins.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(j) if values[j] <= v || v.is_nan() => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Index of the largest value; the first index wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(j) if values[j] >= v || v.is_nan() => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}
