//! Bound at an Eb/N0 (with the `P'/P` line search for Gaussian codebooks),
//! the certified minimal-Eb/N0 bisection, and Ka sweeps.

use serde::{Deserialize, Serialize};

use super::golden::golden_section;
use super::{evaluate_bound, BoundResult, Diagnostics, OptimizerSettings, TermResult};
use crate::error::{BoundError, Result};
use crate::params::{CodebookKind, PowerParams, SystemParams};

const RATIO_TOP: f64 = 1.0 - 1e-6;

/// Search interval for `P'/P`. Below `1/(1 + 12√(2/n))` the power-violation
/// tail is under `e^{-70}` and only costs power, so the interval stops there
/// (and never starts above 0.8).
fn ratio_range(n: u64) -> (f64, f64) {
    let lo = 1.0 / (1.0 + 12.0 * (2.0 / n as f64).sqrt());
    (lo.min(0.8), RATIO_TOP)
}
const RATIO_WARM_HALF_WIDTH: f64 = 0.02;
const BRACKET: (f64, f64) = (-2.0, 20.0);
const MAX_EXPANSIONS: usize = 4;
const MAX_RECERTIFY: usize = 20;

/// Warm-start memory carried between evaluations of one search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    /// Per-`t` optima of the last complete evaluation.
    pub terms: Option<Vec<TermResult>>,
    /// Best `P'/P` of the last Gaussian power point.
    pub ratio: Option<f64>,
    /// Last certified minimal Eb/N0, used to centre the next bracket.
    pub ebno_db: Option<f64>,
}

impl SearchState {
    fn remember(&mut self, r: &BoundResult, settings: &OptimizerSettings) {
        if settings.warm_start && r.complete {
            self.terms = Some(r.terms.clone());
        }
    }
}

/// Bound at a given Eb/N0. For Gaussian codebooks `P'/P` is chosen by a
/// golden-section search and the best probed evaluation is returned.
pub fn bound_at_ebno(
    params: &SystemParams,
    kind: CodebookKind,
    ebno_db: f64,
    settings: &OptimizerSettings,
    state: &mut SearchState,
    stop_above: Option<f64>,
) -> Result<BoundResult> {
    match kind {
        CodebookKind::Binary => {
            let power = PowerParams::binary(params, ebno_db);
            let warm = if settings.warm_start { state.terms.clone() } else { None };
            let r = evaluate_bound(params, &power, kind, settings, warm.as_deref(), stop_above)?;
            state.remember(&r, settings);
            Ok(r)
        }
        CodebookKind::Gaussian => {
            let p = params.power_from_ebno_db(ebno_db);
            let mut best: Option<BoundResult> = None;
            let mut total = Diagnostics::default();
            let mut failure: Option<BoundError> = None;
            let mut run = |lo: f64, hi: f64, state: &mut SearchState, best: &mut Option<BoundResult>| {
                let g = golden_section(
                    |ratio| {
                        let power = PowerParams {
                            p,
                            p_prime: ratio * p,
                            ebno_db,
                        };
                        let warm = if settings.warm_start { state.terms.clone() } else { None };
                        match evaluate_bound(params, &power, kind, settings, warm.as_deref(), stop_above) {
                            Ok(r) => {
                                total.absorb(&r.diagnostics);
                                state.remember(&r, settings);
                                // ties at the clipped value 1 are broken by the raw sum
                                let v = if r.log_pe.ln() < 0.0 { r.log_pe.ln() } else { r.log_objective.max(0.0) };
                                let better = best.as_ref().is_none_or(|b| {
                                    let bv = if b.log_pe.ln() < 0.0 { b.log_pe.ln() } else { b.log_objective.max(0.0) };
                                    (r.complete && !b.complete) || (r.complete == b.complete && v < bv)
                                });
                                if better {
                                    *best = Some(r);
                                }
                                v
                            }
                            Err(e) => {
                                failure.get_or_insert(e);
                                f64::INFINITY
                            }
                        }
                    },
                    lo,
                    hi,
                    settings.ratio_tol,
                    64,
                );
                g.x
            };

            let range = ratio_range(params.n);
            let warm_ratio = state.ratio.filter(|_| settings.warm_start);
            match warm_ratio {
                Some(r0) => {
                    let lo = (r0 - RATIO_WARM_HALF_WIDTH).max(range.0);
                    let hi = (r0 + RATIO_WARM_HALF_WIDTH).min(range.1);
                    let x = run(lo, hi, state, &mut best);
                    let edge = (x - lo).abs() <= settings.ratio_tol && lo > range.0
                        || (hi - x).abs() <= settings.ratio_tol && hi < range.1;
                    if edge {
                        run(range.0, range.1, state, &mut best);
                    }
                }
                None => {
                    run(range.0, range.1, state, &mut best);
                }
            }
            if let Some(e) = failure {
                return Err(e);
            }
            let mut best = best.expect("golden section probes at least once");
            let x = best.power.ratio();
            if best.complete {
                state.ratio = Some(x);
                if settings.warm_start {
                    state.terms = Some(best.terms.clone());
                }
            }
            let wall = best.diagnostics.wall_time_s;
            let mut diag = best.diagnostics.clone();
            diag.outer_probes = total.outer_probes;
            diag.inner_evals = total.inner_evals;
            diag.infeasible_probes = total.infeasible_probes;
            diag.bound_evaluations = total.bound_evaluations;
            diag.wall_time_s = wall;
            best.diagnostics = diag;
            Ok(best)
        }
    }
}

fn meets(r: &BoundResult, ln_eps: f64) -> bool {
    r.complete && r.log_pe.ln() <= ln_eps
}

/// Smallest Eb/N0 (dB) whose bound is at most `ε`, certified on a grid of
/// width `bisect_tol_db`: `bound(x) ≤ ε` and `bound(x - tol) > ε`.
pub fn find_min_ebno(params: &SystemParams, kind: CodebookKind, settings: &OptimizerSettings) -> Result<(f64, BoundResult)> {
    find_min_ebno_from(params, kind, settings, &mut SearchState::default())
}

/// As [`find_min_ebno`], reusing and updating warm-start state.
pub fn find_min_ebno_from(
    params: &SystemParams,
    kind: CodebookKind,
    settings: &OptimizerSettings,
    state: &mut SearchState,
) -> Result<(f64, BoundResult)> {
    params.validate()?;
    settings.validate()?;
    let clock = std::time::Instant::now();
    let ln_eps = params.epsilon.ln();
    let tol = settings.bisect_tol_db;
    let mut total = Diagnostics::default();
    let mut flags: Vec<String> = Vec::new();

    let eval = |x: f64, state: &mut SearchState, total: &mut Diagnostics| -> Result<BoundResult> {
        let r = bound_at_ebno(params, kind, x, settings, state, Some(ln_eps))?;
        total.absorb(&r.diagnostics);
        Ok(r)
    };

    let (mut lo, mut hi) = match state.ebno_db.filter(|_| settings.warm_start) {
        Some(e) => (e - 1.0, e + 1.0),
        None => BRACKET,
    };

    // upper edge must satisfy the target
    let mut hi_res = eval(hi, state, &mut total)?;
    let mut expansions = 0;
    while !meets(&hi_res, ln_eps) {
        if expansions == MAX_EXPANSIONS {
            let lo_res = eval(lo, state, &mut total)?;
            return Err(BoundError::Bracket {
                lo_db: lo,
                lo_pe: lo_res.pe(),
                hi_db: hi,
                hi_pe: hi_res.pe(),
            });
        }
        let w = hi - lo;
        lo = hi;
        hi += 2.0 * w;
        hi_res = eval(hi, state, &mut total)?;
        expansions += 1;
    }

    // lower edge must violate it
    let mut lo_res = eval(lo, state, &mut total)?;
    let mut expansions = 0;
    while meets(&lo_res, ln_eps) {
        hi = lo;
        hi_res = lo_res;
        if expansions == MAX_EXPANSIONS {
            flags.push(format!("target met at the lowest bracket edge {hi} dB"));
            total.wall_time_s = clock.elapsed().as_secs_f64();
            return Ok((hi, finish(hi_res, total, flags)));
        }
        let w = (BRACKET.1 - BRACKET.0).max(hi - lo);
        lo = hi - 2.0 * w;
        lo_res = eval(lo, state, &mut total)?;
        expansions += 1;
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let r = eval(mid, state, &mut total)?;
        if meets(&r, ln_eps) {
            hi = mid;
            hi_res = r;
        } else {
            lo = mid;
        }
    }

    // certificate at exactly one tolerance below
    let mut recertified = 0;
    loop {
        let below = hi - tol;
        let r = eval(below, state, &mut total)?;
        if !meets(&r, ln_eps) {
            break;
        }
        hi = below;
        hi_res = r;
        recertified += 1;
        if recertified == MAX_RECERTIFY {
            flags.push("certificate search stopped after repeated non-monotone steps".into());
            break;
        }
    }
    if recertified > 0 {
        flags.push(format!("bound not monotone near the threshold: moved down {recertified} step(s)"));
    }

    // one midpoint above the returned value must also meet the target
    let upper = hi + 0.5 * (BRACKET.1.max(hi + 2.0 * tol) - hi);
    let check = eval(upper, state, &mut total)?;
    if !meets(&check, ln_eps) {
        flags.push(format!("monotonicity check failed: bound({upper:.4} dB) = {:.6e} > target", check.pe()));
    }

    if hi_res.complete && settings.warm_start {
        state.terms = Some(hi_res.terms.clone());
        if kind == CodebookKind::Gaussian {
            state.ratio = Some(hi_res.power.ratio());
        }
    }
    state.ebno_db = Some(hi);
    total.wall_time_s = clock.elapsed().as_secs_f64();
    Ok((hi, finish(hi_res, total, flags)))
}

fn finish(mut r: BoundResult, total: Diagnostics, flags: Vec<String>) -> BoundResult {
    r.diagnostics.outer_probes = total.outer_probes;
    r.diagnostics.inner_evals = total.inner_evals;
    r.diagnostics.infeasible_probes = total.infeasible_probes;
    r.diagnostics.bound_evaluations = total.bound_evaluations;
    r.diagnostics.wall_time_s = total.wall_time_s;
    r.diagnostics.flags.extend(flags);
    r
}

/// One point of a Ka sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ka: u32,
    pub ebno_db: Option<f64>,
    pub result: Option<BoundResult>,
    pub error: Option<String>,
    /// False if the minimal Eb/N0 decreased relative to the previous
    /// (smaller) Ka.
    pub monotone: bool,
}

/// Minimal Eb/N0 for each Ka, in ascending Ka order. Duplicates are computed
/// once; failures are recorded and the sweep continues.
pub fn ebno_sweep(template: &SystemParams, ka_list: &[u32], kind: CodebookKind, settings: &OptimizerSettings) -> Result<Vec<SweepPoint>> {
    if ka_list.is_empty() {
        return Err(BoundError::Usage("empty Ka list".into()));
    }
    let mut kas = ka_list.to_vec();
    kas.sort_unstable();
    kas.dedup();

    let mut state = SearchState::default();
    let mut computed: Vec<SweepPoint> = Vec::with_capacity(kas.len());
    let mut last: Option<f64> = None;
    for &ka in &kas {
        let outcome = SystemParams::new(template.n, template.k, ka, template.epsilon)
            .and_then(|p| find_min_ebno_from(&p, kind, settings, &mut state));
        let point = match outcome {
            Ok((e, r)) => {
                let monotone = last.is_none_or(|prev| e >= prev - settings.bisect_tol_db);
                last = Some(e);
                SweepPoint {
                    ka,
                    ebno_db: Some(e),
                    result: Some(r),
                    error: None,
                    monotone,
                }
            }
            Err(err) => SweepPoint {
                ka,
                ebno_db: None,
                result: None,
                error: Some(err.to_string()),
                monotone: true,
            },
        };
        computed.push(point);
    }

    let mut sorted_request = ka_list.to_vec();
    sorted_request.sort_unstable();
    Ok(sorted_request
        .iter()
        .map(|ka| computed.iter().find(|p| p.ka == *ka).expect("every Ka computed").clone())
        .collect())
}
