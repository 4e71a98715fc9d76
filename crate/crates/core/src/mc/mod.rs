//! Monte-Carlo and exhaustive oracles.
//!
//! Every trial draws from its own ChaCha stream (`seed`, stream = trial
//! index) and results are accumulated in trial order, so estimates are
//! bit-identical for a given seed whatever the worker count.

mod lemma;
mod sim;
pub mod suites;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};
use crate::params::{CodebookKind, RegionParams};

pub use lemma::{check_lemma2_mgf, lemma2_closed_form};
pub use sim::{decode_ml, estimate_collision_prob, simulate_pupe_ml, ChannelDraw, Codebook, TxOutcome};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// Mean and `std / √trials` of `samples`, summed in order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            trials: samples.len() as u64,
            seed,
        }
    }
}

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Coordinate-wise sum of `t` fresh codewords. `power` is the per-symbol
/// variance `P'` for Gaussian codewords and the symbol energy `P` for binary.
pub fn sample_codeword_sum<R: Rng + ?Sized>(kind: CodebookKind, power: f64, t: u32, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let amp = power.sqrt();
    for _ in 0..t {
        for x in out.iter_mut() {
            *x += match kind {
                CodebookKind::Gaussian => amp * rng.sample::<f64, _>(StandardNormal),
                CodebookKind::Binary => {
                    if rng.random::<bool>() {
                        amp
                    } else {
                        -amp
                    }
                }
            };
        }
    }
    out
}

/// Frequencies of `E_e ∩ E_r` and `E_r^c` with
/// `E_e = {‖z‖² ≥ ‖c_M − c_F + z‖²}` and
/// `E_r^c = {‖z‖² − α‖c_M + z‖² − βn ≥ 0}`.
pub fn estimate_event_probs(
    kind: CodebookKind,
    power: f64,
    t: u32,
    n: usize,
    region: RegionParams,
    trials: u64,
    seed: u64,
) -> Result<(MCEstimate, MCEstimate)> {
    if trials < 1000 {
        return Err(BoundError::Usage(format!("at least 1000 trials required, got {trials}")));
    }
    if t == 0 || n == 0 {
        return Err(BoundError::Usage("t and n must be positive".into()));
    }
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let cm = sample_codeword_sum(kind, power, t, n, &mut rng);
            let cf = sample_codeword_sum(kind, power, t, n, &mut rng);
            let (mut zz, mut err, mut reg) = (0.0, 0.0, 0.0);
            for j in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                zz += z * z;
                let e = cm[j] - cf[j] + z;
                err += e * e;
                let r = cm[j] + z;
                reg += r * r;
            }
            let outside = zz - region.alpha * reg - region.beta * n as f64 >= 0.0;
            (zz - err >= 0.0 && !outside, outside)
        })
        .collect();
    let joint: Vec<f64> = outcomes.iter().map(|o| if o.0 { 1.0 } else { 0.0 }).collect();
    let comp: Vec<f64> = outcomes.iter().map(|o| if o.1 { 1.0 } else { 0.0 }).collect();
    Ok((MCEstimate::from_samples(&joint, seed), MCEstimate::from_samples(&comp, seed)))
}
