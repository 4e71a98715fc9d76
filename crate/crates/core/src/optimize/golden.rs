//! Golden-section search for unimodal one-dimensional objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
}

/// Minimize `f` on `[a, b]` until the bracket is narrower than `x_tol` or the
/// evaluation budget is spent. Returns the best probed point; the interval
/// endpoints themselves are probed too so a boundary minimum is found.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64, max_evals: usize) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    let mut evals = 0usize;
    let mut call = |x: f64, evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = GoldenResult { x: a, f: f64::INFINITY, evals: 0 };
    let note = |x: f64, v: f64, best: &mut GoldenResult| {
        if v < best.f {
            best.x = x;
            best.f = v;
        }
    };

    let fa = call(a, &mut evals);
    note(a, fa, &mut best);
    let fb = call(b, &mut evals);
    note(b, fb, &mut best);

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = call(c, &mut evals);
    note(c, fc, &mut best);
    let mut fd = call(d, &mut evals);
    note(d, fd, &mut best);

    while (b - a).abs() > x_tol && evals < max_evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = call(c, &mut evals);
            note(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = call(d, &mut evals);
            note(d, fd, &mut best);
        }
    }
    best.evals = evals;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let r = golden_section(|x| (x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-9, 200);
        assert!((r.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn boundary_minimum() {
        let r = golden_section(|x| x, 1.0, 2.0, 1e-6, 100);
        assert_eq!(r.x, 1.0);
        let r = golden_section(|x| -x, 1.0, 2.0, 1e-6, 100);
        assert_eq!(r.x, 2.0);
    }
}
