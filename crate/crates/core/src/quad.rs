//! Scalar quadrature helpers: adaptive Simpson for one-off primitives and
//! a dense cumulative Simpson table for repeated evaluation.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Cumulative Simpson antiderivative of samples `y` on a uniform grid with
/// spacing `h`. Returns the running integral at every node; odd nodes use the
/// half-panel correction so the table is exact for quadratics panel-wise.
pub fn cumulative_simpson(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        // integral over the half panel [i, i+1] of the parabola through i, i+1, i+2
        out[i + 1] = acc + h / 12.0 * (5.0 * y[i] + 8.0 * y[i + 1] - y[i + 2]);
        acc += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        out[i + 2] = acc;
        i += 2;
    }
    if i + 1 < n {
        // trailing single interval: parabola through the last three nodes
        out[i + 1] = if i >= 1 {
            acc + h / 12.0 * (-y[i - 1] + 8.0 * y[i] + 5.0 * y[i + 1])
        } else {
            acc + h / 2.0 * (y[i] + y[i + 1])
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let f = |t: f64| 3.0 * t.powi(3) - t + 2.0;
        let exact = 3.0 / 4.0 * 16.0 - 2.0 + 4.0;
        let got = adaptive_simpson(&f, 0.0, 2.0, 1e-12);
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_kinks() {
        let f = |t: f64| (t - 0.3).abs();
        let exact = 0.5 * (0.3f64.powi(2) + 0.7f64.powi(2));
        let got = adaptive_simpson(&f, 0.0, 1.0, 1e-10);
        assert!((got - exact).abs() < 1e-9);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let n = 2001;
        let h = 1e-3;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        let table = cumulative_simpson(&y, h);
        for (i, v) in table.iter().enumerate() {
            let t = i as f64 * h;
            assert!((v - t.powi(3) / 3.0).abs() < 1e-12, "node {i}");
        }
    }
}
