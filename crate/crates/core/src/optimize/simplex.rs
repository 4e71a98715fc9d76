//! Derivative-free Nelder-Mead simplex minimizer with box clamping.
//!
//! Non-finite objective values are treated as `+inf` and simply never win a
//! comparison, so infeasible probes cannot pull the incumbent below a feasible
//! value.

/// Outcome of one simplex run: best probed point and value.
#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NmOptions<'a> {
    pub max_evals: usize,
    pub rel_tol: f64,
    /// Absolute stopping tolerance on the simplex diameter.
    pub x_tol: f64,
    pub lower: Option<&'a [f64]>,
    pub upper: Option<&'a [f64]>,
    /// Number of times the simplex is rebuilt around the incumbent after
    /// convergence, to guard against premature collapse.
    pub restarts: usize,
}

impl Default for NmOptions<'_> {
    fn default() -> Self {
        Self {
            max_evals: 400,
            rel_tol: 1e-10,
            x_tol: 1e-9,
            lower: None,
            upper: None,
            restarts: 1,
        }
    }
}

fn clamp(x: &mut [f64], opts: &NmOptions<'_>) {
    if let Some(lo) = opts.lower {
        for (xi, &l) in x.iter_mut().zip(lo) {
            if *xi < l {
                *xi = l;
            }
        }
    }
    if let Some(hi) = opts.upper {
        for (xi, &h) in x.iter_mut().zip(hi) {
            if *xi > h {
                *xi = h;
            }
        }
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimize `f` starting from `x0` with initial axis steps `step`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NmOptions<'_>) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert_eq!(step.len(), dim);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        sanitize(f(x))
    };

    let mut start = x0.to_vec();
    clamp(&mut start, opts);
    let mut best_x = start.clone();
    let mut best_f = eval(&start, &mut evals);
    let mut converged = false;

    for round in 0..=opts.restarts {
        if evals >= opts.max_evals {
            break;
        }
        let scale = if round == 0 { 1.0 } else { 0.25 };
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        let mut vals: Vec<f64> = Vec::with_capacity(dim + 1);
        pts.push(best_x.clone());
        vals.push(best_f);
        for i in 0..dim {
            let mut p = best_x.clone();
            p[i] += step[i] * scale;
            clamp(&mut p, opts);
            if p[i] == best_x[i] {
                p[i] -= step[i] * scale;
                clamp(&mut p, opts);
            }
            let v = eval(&p, &mut evals);
            pts.push(p);
            vals.push(v);
        }

        converged = false;
        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let spread = vals[dim] - vals[0];
            let diam = pts[1..]
                .iter()
                .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if vals[0].is_finite()
                && spread.is_finite()
                && (spread <= opts.rel_tol * vals[0].abs().max(1.0) || diam <= opts.x_tol)
            {
                converged = true;
                break;
            }
            if !vals[0].is_finite() {
                // nothing feasible in the simplex
                break;
            }

            let mut centroid = vec![0.0; dim];
            for p in &pts[..dim] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / dim as f64;
                }
            }
            let along = |coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&pts[dim])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect();
                clamp(&mut p, opts);
                p
            };

            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < vals[0] {
                let xe = along(2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    pts[dim] = xe;
                    vals[dim] = fe;
                } else {
                    pts[dim] = xr;
                    vals[dim] = fr;
                }
                continue;
            }
            if fr < vals[dim - 1] {
                pts[dim] = xr;
                vals[dim] = fr;
                continue;
            }
            let (xc, fc) = if fr < vals[dim] {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < vals[dim].min(fr) {
                pts[dim] = xc;
                vals[dim] = fc;
                continue;
            }
            // shrink towards the best vertex
            for i in 1..=dim {
                let mut p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                clamp(&mut p, opts);
                vals[i] = eval(&p, &mut evals);
                pts[i] = p;
            }
        }

        let (i_min, _) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("simplex is non-empty");
        let improved = vals[i_min] < best_f;
        if vals[i_min] <= best_f {
            best_f = vals[i_min];
            best_x = pts[i_min].clone();
        }
        if !best_f.is_finite() || (round > 0 && !improved) {
            break;
        }
    }

    NmResult {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}
