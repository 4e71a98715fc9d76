//! Validation suites: each check pairs a Monte-Carlo estimate with the
//! analytical value it must respect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_lemma2_mgf, estimate_collision_prob, estimate_event_probs, simulate_pupe_ml, MCEstimate};
use crate::error::{BoundError, Result};
use crate::numerics::ln_choose;
use crate::optimize::{bound_at_ebno, optimal_tilts, OptimizerSettings, SearchState};
use crate::params::{CodebookKind, RegionParams, SystemParams};

/// Width of the acceptance band in standard errors.
pub const STDERR_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|mc - reference| ≤ 3 stderr`.
    TwoSided,
    /// `mc ≤ reference + 3 stderr`.
    UpperBound,
}

/// One comparison of a Monte-Carlo estimate against an analytical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub case: String,
    pub estimate: MCEstimate,
    pub reference: f64,
    pub check: CheckKind,
    pub pass: bool,
}

impl CheckRow {
    fn new(suite: &str, case: String, estimate: MCEstimate, reference: f64, check: CheckKind) -> Self {
        let slack = STDERR_BAND * estimate.stderr;
        let pass = match check {
            CheckKind::TwoSided => (estimate.mean - reference).abs() <= slack,
            CheckKind::UpperBound => estimate.mean <= reference + slack,
        };
        Self {
            suite: suite.to_string(),
            case,
            estimate,
            reference,
            check,
            pass,
        }
    }
}

/// Suite seeds: instance generation and each Monte-Carlo run get their own
/// derived seed.
fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    rng.random()
}

/// Random `(A, b)` instances of order 1 to 6 with spectral radius of `A`
/// at most 0.2, so `I - 4A ≻ 0` and the MGF estimator has finite variance.
pub fn lemma2_suite(instances: usize, trials: u64, seed: u64) -> Result<Vec<CheckRow>> {
    let mut gen = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(instances);
    for i in 0..instances {
        let q = gen.random_range(1..=6usize);
        let mut a = vec![vec![0.0; q]; q];
        for r in 0..q {
            for c in 0..=r {
                let x: f64 = gen.sample(StandardNormal);
                a[r][c] = x;
                a[c][r] = x;
            }
        }
        let frob = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        let radius = gen.random_range(-0.2..0.2);
        for x in a.iter_mut().flatten() {
            *x *= radius / frob;
        }
        let b: Vec<f64> = (0..q).map(|_| 0.3 * gen.sample::<f64, _>(StandardNormal)).collect();
        let (mc, closed) = check_lemma2_mgf(&a, &b, trials, sub_seed(seed, i as u64))?;
        rows.push(CheckRow::new("lemma2", format!("instance={i} order={q}"), mc, closed, CheckKind::TwoSided));
    }
    Ok(rows)
}

/// Chernoff dominance: at random `(t, P, α, β)` with the optimized tilts,
/// `exp(ln p_t)` must dominate the frequency of `E_e ∩ E_r` and `exp(ln q_t)`
/// that of `E_r^c`. Two rows per tuple.
pub fn dominance_suite(kind: CodebookKind, tuples: usize, n: u64, trials: u64, seed: u64, settings: &OptimizerSettings) -> Result<Vec<CheckRow>> {
    let mut gen = ChaCha8Rng::seed_from_u64(seed ^ kind_tag(kind));
    let mut rows = Vec::with_capacity(2 * tuples);
    for i in 0..tuples {
        let t = gen.random_range(1..=3u32);
        let power = (gen.random_range(0.05f64.ln()..2.0f64.ln())).exp();
        let alpha = (gen.random_range(0.2f64.ln()..3.0f64.ln())).exp();
        let beta = (gen.random_range(0.005f64.ln()..0.5f64.ln())).exp();
        let region = RegionParams::new(alpha, beta)?;
        let opt = optimal_tilts(kind, region, power, t, n, settings)?;
        let (joint, comp) = estimate_event_probs(kind, power, t, n as usize, region, trials, sub_seed(seed, i as u64))?;
        let case = format!(
            "{kind} t={t} P={power:.6} alpha={alpha:.6} beta={beta:.6} u={:.6e} v={:.6e} delta={:.6e}",
            opt.tilts.u, opt.tilts.v, opt.tilts.delta
        );
        rows.push(CheckRow::new("dominance", format!("{case} event=joint"), joint, opt.log_pt.exp(), CheckKind::UpperBound));
        rows.push(CheckRow::new("dominance", format!("{case} event=complement"), comp, opt.log_qt.exp(), CheckKind::UpperBound));
    }
    Ok(rows)
}

fn kind_tag(kind: CodebookKind) -> u64 {
    match kind {
        CodebookKind::Gaussian => 0x6761_7573,
        CodebookKind::Binary => 0x6269_6e61,
    }
}

/// Desk-scale check of the whole bound against exhaustive ML decoding.
///
/// Eb/N0 is scanned on a 0.5 dB grid; the lowest and highest grid points
/// whose bound lies in `(0.01, 0.9)` are simulated. For Gaussian codebooks
/// the simulator draws with the optimized `P'`.
pub fn pupe_suite(kind: CodebookKind, params: &SystemParams, trials: u64, seed: u64, settings: &OptimizerSettings) -> Result<Vec<CheckRow>> {
    let mut inside = Vec::new();
    let mut db = -5.0;
    while db <= 25.0 {
        // cold start at every grid point: a warm P'/P window from a point
        // where the bound is clipped at 1 can miss the optimum
        let r = bound_at_ebno(params, kind, db, settings, &mut SearchState::default(), None)?;
        let pe = r.pe();
        if pe > 0.01 && pe < 0.9 {
            inside.push((db, r));
        }
        db += 0.5;
    }
    if inside.len() < 2 {
        return Err(BoundError::Config(format!(
            "fewer than two Eb/N0 grid points give a bound in (0.01, 0.9) for {kind}"
        )));
    }
    let picks = [inside.first().expect("non-empty"), inside.last().expect("non-empty")];
    let mut rows = Vec::with_capacity(2);
    for (j, (db, r)) in picks.into_iter().enumerate() {
        let mc = simulate_pupe_ml(params, kind, r.power.p_prime, trials, sub_seed(seed, j as u64))?;
        let case = format!(
            "{kind} n={} k={} ka={} ebno_db={db} P={:.6e} P'={:.6e}",
            params.n, params.k, params.ka, r.power.p, r.power.p_prime
        );
        rows.push(CheckRow::new("pupe", case, mc, r.pe(), CheckKind::UpperBound));
    }
    Ok(rows)
}

/// Birthday collisions among independent uniform messages against the union
/// bound `C(K_a, 2)/M` used in `p₀`.
pub fn collision_suite(cases: &[(u32, u32)], trials: u64, seed: u64) -> Result<Vec<CheckRow>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, &(ka, k))| {
            let mc = estimate_collision_prob(ka, k, trials, sub_seed(seed, i as u64))?;
            let reference = (ln_choose(ka as u64, 2)? - k as f64 * std::f64::consts::LN_2).exp();
            Ok(CheckRow::new("collision", format!("ka={ka} k={k}"), mc, reference, CheckKind::UpperBound))
        })
        .collect()
}
