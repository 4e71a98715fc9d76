//! Per-`t` nested search: inner tilts at a fixed region, outer region search.

use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::golden::golden_section;
use super::newton::projected_newton;
use super::simplex::{nelder_mead, NmOptions};
use super::OptimizerSettings;
use crate::numerics::{log_add_exp, LogProb, RhoDist, DEFAULT_PD_MARGIN};
use crate::params::{CodebookKind, RegionParams};
use crate::{binary, gaussian};

/// Optimal `(α, β, u, v, δ)` of one term. A tilt reported as 0 means the
/// trivial bound 1 (the limit of vanishing tilt) was best.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermArgmin {
    pub alpha: f64,
    pub beta: f64,
    pub u: f64,
    pub v: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermStatus {
    /// Full outer search ran.
    Optimized,
    /// Search stopped once the weighted term fell far below the target.
    Negligible,
    /// No feasible probe; the term is the trivial value 1.
    AllInfeasible,
}

/// Bound ingredients for one number `t` of missed codewords.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermResult {
    pub t: u32,
    pub log_pt: LogProb,
    pub log_qt: LogProb,
    pub log_binom_pt: f64,
    pub log_binom_qt: f64,
    /// `ln min(1, C₁ p_t + C₂ q_t)`.
    pub log_term: LogProb,
    /// `ln(C₁ p_t + C₂ q_t)` before clipping; `+inf` if nothing was feasible.
    pub log_objective: f64,
    pub argmin: TermArgmin,
    pub status: TermStatus,
    pub outer_probes: u64,
    pub inner_evals: u64,
    pub infeasible_probes: u64,
}

impl TermResult {
    /// `ln((t/K_a) · term)`.
    pub fn weighted(&self, ka: u32) -> f64 {
        self.log_term.ln() + (self.t as f64 / ka as f64).ln()
    }
}

const LN_U_RANGE: (f64, f64) = (-30.0, 6.0);
const LN_ALPHA_RANGE: (f64, f64) = (-10.0, 10.0);
const LN_BETA_RANGE: (f64, f64) = (-40.0, 10.0);
const SEED_BETAS: [f64; 4] = [1e-8, 1e-4, 1e-2, 1e-1];
const SEED_ALPHA: (f64, f64) = (1e-3, 1e2);
const CROSSING_STEPS: usize = 12;
const RESTART_ALPHA: (f64, f64) = (1e-2, 10.0);
const RESTART_BETA: (f64, f64) = (1e-4, 10.0);
/// Random restarts starting further than this above the incumbent are not
/// polished.
const RESTART_WINDOW_NATS: f64 = 25.0;
const DELTA_CAP: f64 = 1e4;
const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy)]
struct Probe {
    f: f64,
    p: f64,
    q: f64,
    ln_alpha: f64,
    ln_beta: f64,
    u: f64,
    v: f64,
    delta: f64,
}

impl Probe {
    fn none() -> Self {
        Probe {
            f: f64::INFINITY,
            p: 0.0,
            q: 0.0,
            ln_alpha: 0.0,
            ln_beta: 0.0,
            u: 0.0,
            v: 0.0,
            delta: 0.0,
        }
    }
}

/// Everything fixed while optimizing one term.
pub(crate) struct TermProblem<'a> {
    pub t: u32,
    pub n: u64,
    pub kind: CodebookKind,
    /// `P'` for the Gaussian ensemble, `P` for the binary one.
    pub power: f64,
    pub rho: Option<&'a RhoDist>,
    pub c1: f64,
    pub c2: f64,
    /// `ln(t / K_a)`.
    pub log_weight: f64,
    /// Stop once the weighted term is below this.
    pub accept_below: f64,
    pub settings: &'a OptimizerSettings,
    inner_evals: Cell<u64>,
    probes: Cell<u64>,
    infeasible: Cell<u64>,
}

impl<'a> TermProblem<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t: u32,
        n: u64,
        kind: CodebookKind,
        power: f64,
        rho: Option<&'a RhoDist>,
        c1: f64,
        c2: f64,
        log_weight: f64,
        accept_below: f64,
        settings: &'a OptimizerSettings,
    ) -> Self {
        Self {
            t,
            n,
            kind,
            power,
            rho,
            c1,
            c2,
            log_weight,
            accept_below,
            settings,
            inner_evals: Cell::new(0),
            probes: Cell::new(0),
            infeasible: Cell::new(0),
        }
    }

    fn p_value(&self, region: RegionParams, u: f64, v: f64) -> f64 {
        self.inner_evals.set(self.inner_evals.get() + 1);
        let e = match self.kind {
            CodebookKind::Gaussian => gaussian::p_exponent(region, u, v, self.power, self.t, DEFAULT_PD_MARGIN),
            CodebookKind::Binary => binary::p_exponent(region, u, v, self.power, self.rho.expect("rho for binary"), DEFAULT_PD_MARGIN),
        };
        e.map_or(f64::INFINITY, |e| self.n as f64 * e)
    }

    fn q_value(&self, region: RegionParams, delta: f64) -> f64 {
        self.inner_evals.set(self.inner_evals.get() + 1);
        let e = match self.kind {
            CodebookKind::Gaussian => gaussian::q_exponent(region, delta, self.power, self.t, DEFAULT_PD_MARGIN),
            CodebookKind::Binary => binary::q_exponent(region, delta, self.power, self.rho.expect("rho for binary"), DEFAULT_PD_MARGIN),
        };
        e.map_or(f64::INFINITY, |e| self.n as f64 * e)
    }

    fn delta_sup(&self, alpha: f64) -> f64 {
        let s = match self.kind {
            CodebookKind::Gaussian => gaussian::delta_sup(alpha, self.power, self.t),
            CodebookKind::Binary => binary::delta_sup(alpha),
        };
        if s.is_finite() {
            s
        } else {
            DELTA_CAP
        }
    }

    /// `inf_{u,v} ln p_t` at a fixed region, never above 0.
    ///
    /// The simplex starts from the better of the warm start and a coarse
    /// grid; in log coordinates the `v → 0` edge is a plateau, so a warm
    /// start alone can strand the search there.
    fn inner_p(&self, region: RegionParams, warm: Option<(f64, f64)>) -> (f64, f64, f64) {
        let obj = |x: &[f64]| self.p_value(region, x[0].exp(), x[1].exp());
        let mut x0 = [-3.0, -3.0];
        let mut f0 = f64::INFINITY;
        if let Some((u, v)) = warm {
            let x = [u.ln(), v.ln()];
            let f = obj(&x);
            if f < f0 {
                x0 = x;
                f0 = f;
            }
        }
        if self.kind == CodebookKind::Binary {
            return self.inner_p_binary(region, x0, f0);
        }
        let grid = grid_best(&obj);
        if grid.1 < f0 {
            x0 = grid.0;
        }
        let lo = [LN_U_RANGE.0, LN_U_RANGE.0];
        let hi = [LN_U_RANGE.1, LN_U_RANGE.1];
        let r = nelder_mead(
            obj,
            &x0,
            &[0.5, 0.5],
            &NmOptions {
                max_evals: self.settings.inner_max_evals,
                rel_tol: self.settings.rel_tol,
                x_tol: 1e-10,
                lower: Some(&lo),
                upper: Some(&hi),
                restarts: 1,
            },
        );
        if r.f < 0.0 {
            (r.f, r.x[0].exp(), r.x[1].exp())
        } else {
            (0.0, 0.0, 0.0)
        }
    }

    /// Binary `inf_{u,v} ln p_t`: projected Newton on the exact derivatives,
    /// which (unlike the simplex in log coordinates) is not slowed by the
    /// `v → 0` edge. Starts from the warm point or the best Gaussian
    /// surrogate grid point.
    fn inner_p_binary(&self, region: RegionParams, warm_x: [f64; 2], warm_f: f64) -> (f64, f64, f64) {
        let rho = self.rho.expect("rho for binary");
        let surrogate = |x: &[f64]| {
            gaussian::p_exponent(region, x[0].exp(), x[1].exp(), self.power, self.t, DEFAULT_PD_MARGIN)
                .map_or(f64::INFINITY, |e| e * self.n as f64)
        };
        let (gx, _) = grid_best(&surrogate);
        let gf = self.p_value(region, gx[0].exp(), gx[1].exp());
        let x0 = if gf < warm_f { gx } else { warm_x };
        let v_max = if region.alpha > 1.0 {
            0.5 / (region.alpha - 1.0)
        } else {
            f64::INFINITY
        };
        let upper = [LN_U_RANGE.1.exp(), v_max.min(LN_U_RANGE.1.exp())];
        let r = projected_newton(
            |x: &[f64; 2]| {
                binary::p_exponent_derivs(region, x[0], x[1], self.power, rho, DEFAULT_PD_MARGIN)
                    .map(|d| (d.value, d.grad, d.hess))
            },
            [x0[0].exp(), x0[1].exp()],
            [0.0, 0.0],
            upper,
            NEWTON_MAX_ITER,
            1e-13,
        );
        self.inner_evals.set(self.inner_evals.get() + r.evals as u64);
        let f = self.n as f64 * r.f;
        if f < 0.0 {
            (f, r.x[0], r.x[1])
        } else {
            (0.0, 0.0, 0.0)
        }
    }

    /// `inf_δ ln q_t` at a fixed region, never above 0.
    fn inner_q(&self, region: RegionParams) -> (f64, f64) {
        let hi = self.delta_sup(region.alpha).ln() - 1e-10;
        let lo = hi - 25.0;
        let r = golden_section(|x| self.q_value(region, x.exp()), lo, hi, 1e-7, self.settings.inner_max_evals.max(8));
        if r.f < 0.0 {
            (r.f, r.x.exp())
        } else {
            (0.0, 0.0)
        }
    }

    fn probe(&self, ln_alpha: f64, ln_beta: f64, warm: &mut Option<(f64, f64)>) -> Probe {
        self.probes.set(self.probes.get() + 1);
        let region = RegionParams {
            alpha: ln_alpha.exp(),
            beta: ln_beta.exp(),
        };
        let (p, u, v) = self.inner_p(region, *warm);
        if u > 0.0 {
            *warm = Some((u, v));
        }
        let (q, delta) = self.inner_q(region);
        let f = log_add_exp(self.c1 + p, self.c2 + q);
        if !f.is_finite() {
            self.infeasible.set(self.infeasible.get() + 1);
        }
        Probe {
            f,
            p,
            q,
            ln_alpha,
            ln_beta,
            u,
            v,
            delta,
        }
    }

    /// Inner optima at one region: `(ln p_t, u, v, ln q_t, δ)`.
    pub fn tilts_at(&self, region: RegionParams) -> (f64, f64, f64, f64, f64) {
        let p = self.probe(region.alpha.ln(), region.beta.ln(), &mut None);
        (p.p, p.u, p.v, p.q, p.delta)
    }

    fn negligible(&self, best: &Probe) -> bool {
        self.log_weight + best.f.min(0.0) < self.accept_below
    }

    /// Run the full search. `warm` is a previous optimum for the same `t`.
    pub fn solve(&self, warm: Option<TermArgmin>) -> TermResult {
        let mut best = Probe::none();
        let mut uv: Option<(f64, f64)> = None;
        let keep = |p: Probe, best: &mut Probe| {
            if p.f < best.f {
                *best = p;
            }
        };

        let finish = |best: &Probe, status: TermStatus| self.result(best, status);

        if let Some(w) = warm.filter(|w| w.alpha > 0.0 && w.beta > 0.0) {
            if w.u > 0.0 && w.v > 0.0 {
                uv = Some((w.u, w.v));
            }
            let p = self.probe(w.alpha.ln(), w.beta.ln(), &mut uv);
            keep(p, &mut best);
            if self.negligible(&best) {
                return finish(&best, TermStatus::Negligible);
            }
        }

        match self.kind {
            CodebookKind::Gaussian => {
                for &beta in &SEED_BETAS {
                    let mut local_uv = uv;
                    let (mut lo, mut hi) = (SEED_ALPHA.0.ln(), SEED_ALPHA.1.ln());
                    for _ in 0..CROSSING_STEPS {
                        let mid = 0.5 * (lo + hi);
                        let p = self.probe(mid, beta.ln(), &mut local_uv);
                        keep(p, &mut best);
                        // p̃ grows and q̃ shrinks with α
                        if self.c1 + p.p > self.c2 + p.q {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    if self.negligible(&best) {
                        return finish(&best, TermStatus::Negligible);
                    }
                }
            }
            CodebookKind::Binary => return self.solve_binary(warm, best),
        }

        let mut restarts = Vec::with_capacity(self.settings.multistarts);
        for i in 0..self.settings.multistarts {
            let mut rng = ChaCha8Rng::seed_from_u64(self.settings.seed);
            rng.set_stream(((self.t as u64) << 32) | i as u64);
            let la = rng.random_range(RESTART_ALPHA.0.ln()..RESTART_ALPHA.1.ln());
            let lb = rng.random_range(RESTART_BETA.0.ln()..RESTART_BETA.1.ln());
            let mut local_uv = if best.u > 0.0 { Some((best.u, best.v)) } else { None };
            let p = self.probe(la, lb, &mut local_uv);
            keep(p, &mut best);
            restarts.push(p);
        }

        let polish_from = best;
        self.polish(&polish_from, self.settings.outer_max_evals, &mut best);
        if self.negligible(&best) {
            return finish(&best, TermStatus::Negligible);
        }
        for r in restarts {
            if r.f.is_finite() && r.f <= best.f + RESTART_WINDOW_NATS {
                self.polish(&r, self.settings.outer_max_evals / 2, &mut best);
            }
        }

        let status = if best.f.is_finite() {
            TermStatus::Optimized
        } else {
            TermStatus::AllInfeasible
        };
        finish(&best, status)
    }

    /// Binary terms: the full search runs on the Gaussian exponent at
    /// `P' = P`, whose region optimum lies close to the binary one; only a
    /// short simplex polish uses the exact (and much dearer) lattice sums.
    fn solve_binary(&self, warm: Option<TermArgmin>, mut best: Probe) -> TermResult {
        let surrogate = TermProblem::new(
            self.t,
            self.n,
            CodebookKind::Gaussian,
            self.power,
            None,
            self.c1,
            self.c2,
            self.log_weight,
            f64::NEG_INFINITY,
            self.settings,
        );
        let s = surrogate.solve(warm);
        self.inner_evals.set(self.inner_evals.get() + s.inner_evals);
        if s.argmin.alpha > 0.0 {
            let a = s.argmin;
            let mut uv = if a.u > 0.0 && a.v > 0.0 { Some((a.u, a.v)) } else { None };
            let p = self.probe(a.alpha.ln(), a.beta.ln(), &mut uv);
            if p.f < best.f {
                best = p;
            }
        }
        if self.negligible(&best) {
            return self.result(&best, TermStatus::Negligible);
        }
        let from = best;
        self.polish(&from, self.settings.outer_max_evals, &mut best);
        let status = if best.f.is_finite() {
            TermStatus::Optimized
        } else {
            TermStatus::AllInfeasible
        };
        self.result(&best, status)
    }

    fn polish(&self, from: &Probe, budget: usize, best: &mut Probe) {
        if !from.f.is_finite() || budget == 0 {
            return;
        }
        let mut uv = if from.u > 0.0 { Some((from.u, from.v)) } else { None };
        let mut local = *best;
        let lo = [LN_ALPHA_RANGE.0, LN_BETA_RANGE.0];
        let hi = [LN_ALPHA_RANGE.1, LN_BETA_RANGE.1];
        nelder_mead(
            |x: &[f64]| {
                let p = self.probe(x[0], x[1], &mut uv);
                if p.f < local.f {
                    local = p;
                }
                p.f
            },
            &[from.ln_alpha, from.ln_beta],
            &[0.3, 2.0],
            &NmOptions {
                max_evals: budget,
                rel_tol: self.settings.rel_tol,
                x_tol: 1e-8,
                lower: Some(&lo),
                upper: Some(&hi),
                restarts: 1,
            },
        );
        if local.f < best.f {
            *best = local;
        }
    }

    fn result(&self, best: &Probe, status: TermStatus) -> TermResult {
        let feasible = best.f.is_finite();
        let log_term = if feasible { best.f.min(0.0) } else { 0.0 };
        TermResult {
            t: self.t,
            log_pt: LogProb(if feasible { best.p } else { 0.0 }),
            log_qt: LogProb(if feasible { best.q } else { 0.0 }),
            log_binom_pt: self.c1,
            log_binom_qt: self.c2,
            log_term: LogProb(log_term),
            log_objective: best.f,
            argmin: TermArgmin {
                alpha: if feasible { best.ln_alpha.exp() } else { 0.0 },
                beta: if feasible { best.ln_beta.exp() } else { 0.0 },
                u: best.u,
                v: best.v,
                delta: best.delta,
            },
            status,
            outer_probes: self.probes.get(),
            inner_evals: self.inner_evals.get(),
            infeasible_probes: self.infeasible.get(),
        }
    }
}

const GRID_LN: [f64; 5] = [-9.2, -6.9, -4.6, -2.3, 0.0];

fn grid_best<F: Fn(&[f64]) -> f64>(obj: &F) -> ([f64; 2], f64) {
    let mut best = ([-3.0, -3.0], f64::INFINITY);
    for &a in &GRID_LN {
        for &b in &GRID_LN {
            let f = obj(&[a, b]);
            if f < best.1 {
                best = ([a, b], f);
            }
        }
    }
    best
}
