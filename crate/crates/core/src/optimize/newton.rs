//! Projected Newton iteration for smooth convex functions of two variables
//! on a box.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonResult {
    pub x: [f64; 2],
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Value, gradient and Hessian; `None` outside the domain.
pub type Derivs = Option<(f64, [f64; 2], [[f64; 2]; 2])>;

/// Minimize a convex `f` over `lower <= x <= upper`.
///
/// Coordinates sitting on a bound with the gradient pointing outward are
/// frozen for the step; the others take a Newton step (a diagonally scaled
/// gradient step when the reduced Hessian is not positive definite),
/// followed by a projected backtracking line search. Points where `f`
/// returns `None` are rejected by the line search.
pub fn projected_newton<F>(mut f: F, x0: [f64; 2], lower: [f64; 2], upper: [f64; 2], max_iter: usize, tol: f64) -> NewtonResult
where
    F: FnMut(&[f64; 2]) -> Derivs,
{
    let clamp = |x: [f64; 2]| [x[0].clamp(lower[0], upper[0]), x[1].clamp(lower[1], upper[1])];
    let mut evals = 1usize;
    let mut x = clamp(x0);
    let Some(mut cur) = f(&x).filter(|c| c.0.is_finite()) else {
        return NewtonResult {
            x,
            f: f64::INFINITY,
            evals,
            converged: false,
        };
    };
    let mut converged = false;
    for _ in 0..max_iter {
        let (fx, g, h) = cur;
        let free = [0, 1].map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)));
        let d = match free {
            [true, true] => {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if h[0][0] > 0.0 && det > 0.0 {
                    [
                        -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                        -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
                    ]
                } else {
                    [-g[0] / h[0][0].abs().max(1e-12), -g[1] / h[1][1].abs().max(1e-12)]
                }
            }
            [true, false] => [-g[0] / h[0][0].abs().max(1e-12), 0.0],
            [false, true] => [0.0, -g[1] / h[1][1].abs().max(1e-12)],
            [false, false] => {
                converged = true;
                break;
            }
        };
        let decrement = -(g[0] * d[0] + g[1] * d[1]);
        if !(decrement > tol * (1.0 + fx.abs())) {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = clamp([x[0] + step * d[0], x[1] + step * d[1]]);
            evals += 1;
            if let Some(c) = f(&xn).filter(|c| c.0.is_finite()) {
                let predicted = g[0] * (xn[0] - x[0]) + g[1] * (xn[1] - x[1]);
                if c.0 <= fx + 1e-4 * predicted.min(0.0) {
                    accepted = Some((xn, c));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((xn, c)) => {
                let moved = (xn[0] - x[0]).abs() + (xn[1] - x[1]).abs();
                x = xn;
                cur = c;
                if moved == 0.0 {
                    converged = true;
                    break;
                }
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    NewtonResult {
        x,
        f: cur.0,
        evals,
        converged,
    }
}
