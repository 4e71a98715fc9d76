//! Nested searches resolving every infimum of the bound, the full bound at a
//! power level, and the minimal-Eb/N0 search.
//!
//! Per-`t` terms are independent and run on a rayon pool; every reduction is
//! in ascending `t` so results do not depend on the worker count. Random
//! restarts draw from a ChaCha stream keyed by `(seed, t, restart)`.

mod golden;
mod newton;
mod search;
mod simplex;
mod term;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};
use crate::numerics::{ln_choose, log_add_exp, log_binomial, LogProb, RhoDist};
use crate::params::{CodebookKind, PowerParams, RegionParams, SystemParams, TiltParams};
use crate::{binary, gaussian};

pub use golden::{golden_section, GoldenResult};
pub use newton::{projected_newton, Derivs, NewtonResult};
pub use search::{bound_at_ebno, ebno_sweep, find_min_ebno, find_min_ebno_from, SearchState, SweepPoint};
pub use simplex::{nelder_mead, NmOptions, NmResult};
pub use term::{TermArgmin, TermResult, TermStatus};

use term::TermProblem;

/// Terms solved between two early-stop checks.
const EARLY_STOP_BLOCK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Budget of outer `(α, β)` probes per simplex run.
    pub outer_max_evals: usize,
    /// Budget for each inner `(u, v)` simplex and `δ` line search.
    pub inner_max_evals: usize,
    /// Relative tolerance on log-domain objectives.
    pub rel_tol: f64,
    pub multistarts: usize,
    pub seed: u64,
    pub bisect_tol_db: f64,
    /// Worker threads; 0 uses every available core. Never affects results.
    pub threads: usize,
    /// A term whose weighted log value is this far below `ln ε` is accepted
    /// without further search.
    pub negligible_nats: f64,
    /// Resolution of the `P'/P` line search (Gaussian ensemble).
    pub ratio_tol: f64,
    pub warm_start: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            outer_max_evals: 200,
            inner_max_evals: 400,
            rel_tol: 1e-9,
            multistarts: 8,
            seed: 2019,
            bisect_tol_db: 0.005,
            threads: 0,
            negligible_nats: 30.0,
            ratio_tol: 1e-3,
            warm_start: true,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max_evals == 0 || self.inner_max_evals == 0 {
            return Err(BoundError::InvalidParams("evaluation budgets must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(BoundError::InvalidParams(format!("rel_tol = {} must be > 0", self.rel_tol)));
        }
        if !(self.bisect_tol_db > 0.0) {
            return Err(BoundError::InvalidParams(format!("bisect_tol_db = {} must be > 0", self.bisect_tol_db)));
        }
        if !(self.negligible_nats >= 0.0) {
            return Err(BoundError::InvalidParams("negligible_nats must be >= 0".into()));
        }
        if !(self.ratio_tol > 0.0 && self.ratio_tol < 0.1) {
            return Err(BoundError::InvalidParams(format!("ratio_tol = {} outside (0, 0.1)", self.ratio_tol)));
        }
        Ok(())
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| BoundError::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Counters gathered while evaluating a bound. Wall time is informational and
/// the only field that varies between identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub outer_probes: u64,
    pub inner_evals: u64,
    pub infeasible_probes: u64,
    pub negligible_terms: u32,
    pub infeasible_terms: u32,
    pub bound_evaluations: u32,
    pub wall_time_s: f64,
    pub flags: Vec<String>,
}

impl Diagnostics {
    pub(crate) fn absorb(&mut self, other: &Diagnostics) {
        self.outer_probes += other.outer_probes;
        self.inner_evals += other.inner_evals;
        self.infeasible_probes += other.infeasible_probes;
        self.bound_evaluations += other.bound_evaluations;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub kind: CodebookKind,
    pub power: PowerParams,
    /// Total bound, clipped at `ln 1`.
    pub log_pe: LogProb,
    /// The same sum before the final clip at `ln 1`. Only a search aid: it
    /// still ranks power settings where `log_pe` is flat at 1.
    pub log_objective: f64,
    pub log_p0: LogProb,
    /// Ascending in `t`; all of `1..=K_a` when `complete`.
    pub terms: Vec<TermResult>,
    /// False when evaluation stopped early because the partial sum already
    /// exceeded the requested threshold; `log_pe` is then a lower estimate.
    pub complete: bool,
    pub diagnostics: Diagnostics,
}

impl BoundResult {
    pub fn pe(&self) -> f64 {
        self.log_pe.prob()
    }
}

fn term_binomials(params: &SystemParams, t: u32) -> Result<(f64, f64)> {
    let c2 = ln_choose(params.ka as u64, t as u64)?;
    let c1 = log_binomial(params.false_pool(), t as u64)? + c2;
    Ok((c1, c2))
}

fn check_power(power: &PowerParams, kind: CodebookKind) -> Result<()> {
    if !(power.p >= 0.0 && power.p.is_finite() && power.p_prime >= 0.0) {
        return Err(BoundError::InvalidParams(format!("power P = {} must be finite and >= 0", power.p)));
    }
    match kind {
        CodebookKind::Gaussian if !(power.p_prime < power.p) => Err(BoundError::Domain(format!(
            "Gaussian ensemble needs P' < P (got P' = {}, P = {})",
            power.p_prime, power.p
        ))),
        CodebookKind::Binary if power.p_prime != power.p => Err(BoundError::Domain(format!(
            "binary ensemble needs P' = P (got P' = {}, P = {})",
            power.p_prime, power.p
        ))),
        _ => Ok(()),
    }
}

/// Optimize the single term for `t` missed codewords.
pub fn optimize_term_t(
    t: u32,
    params: &SystemParams,
    power: &PowerParams,
    kind: CodebookKind,
    settings: &OptimizerSettings,
) -> Result<TermResult> {
    params.validate()?;
    settings.validate()?;
    check_power(power, kind)?;
    if t == 0 || t > params.ka {
        return Err(BoundError::Domain(format!("t = {t} outside 1..={}", params.ka)));
    }
    let rho = match kind {
        CodebookKind::Binary => Some(RhoDist::new(t)?),
        CodebookKind::Gaussian => None,
    };
    let (c1, c2) = term_binomials(params, t)?;
    let sig = match kind {
        CodebookKind::Gaussian => power.p_prime,
        CodebookKind::Binary => power.p,
    };
    let problem = TermProblem::new(
        t,
        params.n,
        kind,
        sig,
        rho.as_ref(),
        c1,
        c2,
        (t as f64 / params.ka as f64).ln(),
        f64::NEG_INFINITY,
        settings,
    );
    Ok(problem.solve(None))
}

/// Optimized inner tilts for one term at a fixed region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltOptimum {
    /// `ln p_t`, never above 0; `u = v = 0` when the trivial value won.
    pub log_pt: f64,
    pub log_qt: f64,
    pub tilts: TiltParams,
}

/// `inf_{u,v} ln p_t` and `inf_δ ln q_t` at a fixed region. `power` is the
/// codebook variance `P'` (Gaussian) or the symbol energy `P` (binary).
pub fn optimal_tilts(
    kind: CodebookKind,
    region: RegionParams,
    power: f64,
    t: u32,
    n: u64,
    settings: &OptimizerSettings,
) -> Result<TiltOptimum> {
    settings.validate()?;
    if t == 0 || n == 0 || !(power >= 0.0 && power.is_finite()) {
        return Err(BoundError::Domain(format!("need t, n >= 1 and finite P >= 0 (t = {t}, n = {n}, P = {power})")));
    }
    let region = RegionParams::new(region.alpha, region.beta)?;
    let rho = match kind {
        CodebookKind::Binary => Some(RhoDist::new(t)?),
        CodebookKind::Gaussian => None,
    };
    let problem = TermProblem::new(t, n, kind, power, rho.as_ref(), 0.0, 0.0, 0.0, f64::NEG_INFINITY, settings);
    let (log_pt, u, v, log_qt, delta) = problem.tilts_at(region);
    Ok(TiltOptimum {
        log_pt,
        log_qt,
        tilts: TiltParams { u, v, delta },
    })
}

/// Full bound at a fixed `(P, P')`.
pub fn pe_bound_at_power(
    params: &SystemParams,
    power: &PowerParams,
    kind: CodebookKind,
    settings: &OptimizerSettings,
) -> Result<BoundResult> {
    evaluate_bound(params, power, kind, settings, None, None)
}

/// Core evaluation. `warm` holds a previous complete evaluation's terms;
/// `stop_above` (log domain) allows stopping once the partial sum exceeds it.
pub(crate) fn evaluate_bound(
    params: &SystemParams,
    power: &PowerParams,
    kind: CodebookKind,
    settings: &OptimizerSettings,
    warm: Option<&[TermResult]>,
    stop_above: Option<f64>,
) -> Result<BoundResult> {
    params.validate()?;
    settings.validate()?;
    check_power(power, kind)?;
    let clock = Instant::now();

    let log_p0 = match kind {
        CodebookKind::Gaussian => gaussian::p0_gaussian(params, power)?,
        CodebookKind::Binary => binary::p0_binary(params)?,
    };
    let ka = params.ka;
    let rhos: Vec<RhoDist> = match kind {
        CodebookKind::Binary => (1..=ka).map(RhoDist::new).collect::<Result<_>>()?,
        CodebookKind::Gaussian => Vec::new(),
    };
    let binoms: Vec<(f64, f64)> = (1..=ka).map(|t| term_binomials(params, t)).collect::<Result<_>>()?;
    let sig = match kind {
        CodebookKind::Gaussian => power.p_prime,
        CodebookKind::Binary => power.p,
    };
    let accept_below = params.epsilon.ln() - settings.negligible_nats;
    let warm_for = |t: u32| -> Option<TermArgmin> {
        warm.and_then(|w| w.iter().find(|r| r.t == t)).map(|r| r.argmin)
    };

    // likely-dominant terms first so an early stop triggers sooner
    let mut order: Vec<u32> = (1..=ka).collect();
    match warm {
        Some(w) if !w.is_empty() => {
            let prev = |t: u32| w.iter().find(|r| r.t == t).map_or(f64::INFINITY, |r| r.weighted(ka));
            order.sort_by(|&a, &b| prev(b).total_cmp(&prev(a)).then(b.cmp(&a)));
        }
        _ => order.reverse(),
    }

    let pool = settings.pool()?;
    // a fixed block size keeps the early-stop point, and hence every later
    // warm start, independent of the worker count
    let chunk = match stop_above {
        Some(_) => EARLY_STOP_BLOCK,
        None => order.len().max(1),
    };

    let solve = |t: u32| -> TermResult {
        let (c1, c2) = binoms[t as usize - 1];
        let rho = rhos.get(t as usize - 1);
        TermProblem::new(t, params.n, kind, sig, rho, c1, c2, (t as f64 / ka as f64).ln(), accept_below, settings)
            .solve(warm_for(t))
    };

    let mut terms: Vec<TermResult> = Vec::with_capacity(ka as usize);
    let mut complete = true;
    pool.install(|| {
        for block in order.chunks(chunk) {
            let done: Vec<TermResult> = block.par_iter().map(|&t| solve(t)).collect();
            terms.extend(done);
            if let Some(limit) = stop_above {
                if terms.len() < ka as usize && combine(&terms, ka, log_p0) > limit {
                    complete = false;
                    break;
                }
            }
        }
    });
    terms.sort_by_key(|r| r.t);

    let mut diagnostics = Diagnostics {
        bound_evaluations: 1,
        ..Default::default()
    };
    for r in &terms {
        diagnostics.outer_probes += r.outer_probes;
        diagnostics.inner_evals += r.inner_evals;
        diagnostics.infeasible_probes += r.infeasible_probes;
        match r.status {
            TermStatus::Negligible => diagnostics.negligible_terms += 1,
            TermStatus::AllInfeasible => {
                diagnostics.infeasible_terms += 1;
                diagnostics.flags.push(format!("t={}: every probe infeasible, term set to 1", r.t));
            }
            TermStatus::Optimized => {}
        }
    }
    diagnostics.wall_time_s = clock.elapsed().as_secs_f64();

    Ok(BoundResult {
        kind,
        power: *power,
        log_pe: LogProb(combine(&terms, ka, log_p0)).clip(),
        log_objective: combine(&terms, ka, log_p0),
        log_p0,
        terms,
        complete,
        diagnostics,
    })
}

/// `ln(Σ_t (t/K_a)·term_t + p₀)` in ascending-`t` order; `terms` must be
/// sorted by `t` for a reproducible result.
fn combine(terms: &[TermResult], ka: u32, log_p0: LogProb) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    for r in terms {
        acc = log_add_exp(acc, r.weighted(ka));
    }
    log_add_exp(acc, log_p0.ln())
}
