//! Tiny-scale URA simulator with exhaustive maximum-likelihood set decoding.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_rng, MCEstimate};
use crate::error::{BoundError, Result};
use crate::numerics::ln_choose;
use crate::params::{CodebookKind, SystemParams};

const MAX_SUBSETS: f64 = 1e6;

/// `n × M` codebook stored codeword-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub kind: CodebookKind,
    pub n: usize,
    pub m: usize,
    /// Variance `P'` (Gaussian) or symbol energy `P` (binary).
    pub power: f64,
    pub symbols: Vec<f64>,
    /// Binary codebooks also keep the signs so that codeword sums are exact.
    signs: Option<Vec<i8>>,
}

impl Codebook {
    pub fn draw<R: Rng + ?Sized>(kind: CodebookKind, n: usize, m: usize, power: f64, rng: &mut R) -> Self {
        let amp = power.sqrt();
        match kind {
            CodebookKind::Gaussian => {
                let symbols = (0..n * m).map(|_| amp * rng.sample::<f64, _>(StandardNormal)).collect();
                Self { kind, n, m, power, symbols, signs: None }
            }
            CodebookKind::Binary => {
                let signs: Vec<i8> = (0..n * m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
                let symbols = signs.iter().map(|&s| s as f64 * amp).collect();
                Self { kind, n, m, power, symbols, signs: Some(signs) }
            }
        }
    }

    pub fn codeword(&self, w: usize) -> &[f64] {
        &self.symbols[w * self.n..(w + 1) * self.n]
    }

    /// `c_S = Σ_{W ∈ S} f(W)`.
    pub fn sum(&self, set: &[usize]) -> Vec<f64> {
        match &self.signs {
            Some(signs) => {
                let amp = self.power.sqrt();
                (0..self.n)
                    .map(|j| set.iter().map(|&w| signs[w * self.n + j] as i64).sum::<i64>() as f64 * amp)
                    .collect()
            }
            None => {
                let mut out = vec![0.0; self.n];
                for &w in set {
                    for (o, c) in out.iter_mut().zip(self.codeword(w)) {
                        *o += c;
                    }
                }
                out
            }
        }
    }
}

/// `y = Σ_{W ∈ S} f(W) + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub tx_set: Vec<usize>,
    pub noise: Vec<f64>,
    pub received: Vec<f64>,
}

impl ChannelDraw {
    pub fn draw<R: Rng + ?Sized>(codebook: &Codebook, ka: usize, rng: &mut R) -> Self {
        let mut tx_set = sample(rng, codebook.m, ka).into_vec();
        tx_set.sort_unstable();
        let noise: Vec<f64> = (0..codebook.n).map(|_| rng.sample(StandardNormal)).collect();
        let received = codebook.sum(&tx_set).iter().zip(&noise).map(|(c, z)| c + z).collect();
        Self { tx_set, noise, received }
    }
}

/// Decoded set and its split against the transmitted set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutcome {
    pub decoded_set: Vec<usize>,
    pub missed: Vec<usize>,
    pub falsely_detected: Vec<usize>,
    pub correct: Vec<usize>,
}

impl TxOutcome {
    pub fn new(tx_set: &[usize], decoded_set: Vec<usize>) -> Self {
        let missed = tx_set.iter().copied().filter(|w| !decoded_set.contains(w)).collect();
        let falsely_detected = decoded_set.iter().copied().filter(|w| !tx_set.contains(w)).collect();
        let correct = tx_set.iter().copied().filter(|w| decoded_set.contains(w)).collect();
        Self {
            decoded_set,
            missed,
            falsely_detected,
            correct,
        }
    }
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Size-`ka` subset minimizing `‖y − c_S‖`, ties broken uniformly at random.
pub fn decode_ml<R: Rng + ?Sized>(codebook: &Codebook, received: &[f64], ka: usize, rng: &mut R) -> Vec<usize> {
    let mut subset: Vec<usize> = (0..ka).collect();
    let mut best = subset.clone();
    let mut best_d = f64::INFINITY;
    let mut ties = 0u64;
    loop {
        let c = codebook.sum(&subset);
        let d: f64 = received.iter().zip(&c).map(|(y, c)| (y - c) * (y - c)).sum();
        if d < best_d {
            best_d = d;
            best.copy_from_slice(&subset);
            ties = 1;
        } else if d == best_d {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best.copy_from_slice(&subset);
            }
        }
        if !next_combination(&mut subset, codebook.m) {
            break;
        }
    }
    best
}

/// PUPE of exhaustive ML decoding, with a fresh codebook, transmit set and
/// noise per trial. `power` is the codebook's per-symbol variance (Gaussian)
/// or symbol energy (binary).
pub fn simulate_pupe_ml(params: &SystemParams, kind: CodebookKind, power: f64, trials: u64, seed: u64) -> Result<MCEstimate> {
    params.validate()?;
    if params.k >= 31 {
        return Err(BoundError::Config(format!("M = 2^{} is too large for exhaustive decoding", params.k)));
    }
    let m = 1usize << params.k;
    let subsets = ln_choose(m as u64, params.ka as u64)?.exp();
    if subsets > MAX_SUBSETS * (1.0 + 1e-9) {
        return Err(BoundError::Config(format!("C(M, K_a) = {subsets:.3e} exceeds {MAX_SUBSETS:e}")));
    }
    if trials == 0 {
        return Err(BoundError::Usage("at least one trial required".into()));
    }
    let n = params.n as usize;
    let ka = params.ka as usize;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let cb = Codebook::draw(kind, n, m, power, &mut rng);
            let ch = ChannelDraw::draw(&cb, ka, &mut rng);
            let decoded = decode_ml(&cb, &ch.received, ka, &mut rng);
            TxOutcome::new(&ch.tx_set, decoded).missed.len() as f64 / ka as f64
        })
        .collect();
    Ok(MCEstimate::from_samples(&samples, seed))
}

/// Frequency of at least one repeated message among `ka` independent uniform
/// choices out of `2^k`.
pub fn estimate_collision_prob(ka: u32, k: u32, trials: u64, seed: u64) -> Result<MCEstimate> {
    if k >= 63 || ka == 0 || trials == 0 {
        return Err(BoundError::Usage("collision estimate needs k < 63, ka >= 1, trials >= 1".into()));
    }
    let m = 1u64 << k;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut seen: Vec<u64> = (0..ka).map(|_| rng.random_range(0..m)).collect();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(MCEstimate::from_samples(&samples, seed))
}
