//! Gaussian-codebook ensemble: per-`t` Chernoff exponents and the codebook
//! defect term.
//!
//! With `η = (z, c_M/√(P't), c_F/√(P't))` standard normal per coordinate,
//! the error and region statistics are quadratic forms in `η`. The `n`-letter
//! quadratic form is `I_n ⊗ A`, so only 3×3 (and 2×2) determinants are needed.

use crate::error::{BoundError, Result};
use crate::numerics::{chi_square_upper_tail, ln_choose, log_add_exp, logdet_pd, LogProb, SymMatSmall};
use crate::optimize::{pe_bound_at_power, BoundResult, OptimizerSettings};
use crate::params::{CodebookKind, PowerParams, RegionParams, SystemParams};

/// Joint tilted matrix `A = u A_e + v A_r` (per coordinate).
pub fn build_matrix_a(alpha: f64, u: f64, v: f64, p_prime: f64, t: u32) -> SymMatSmall {
    let s2 = p_prime * t as f64;
    let s = s2.sqrt();
    let w = alpha * v - u;
    SymMatSmall::from_upper3((alpha - 1.0) * v, w * s, u * s, w * s2, u * s2, -u * s2)
}

/// Region-complement matrix `B = -A_r` restricted to `(z, c_M)`.
pub fn build_matrix_b(alpha: f64, p_prime: f64, t: u32) -> SymMatSmall {
    let s2 = p_prime * t as f64;
    SymMatSmall::from_upper2(1.0 - alpha, -alpha * s2.sqrt(), -alpha * s2)
}

/// Per-coordinate exponent of `p_t` at fixed tilts:
/// `-½ ln det(I - 2A) + v β`. `None` when `I - 2A` is not positive definite.
pub fn p_exponent(region: RegionParams, u: f64, v: f64, p_prime: f64, t: u32, margin: f64) -> Option<f64> {
    let m = build_matrix_a(region.alpha, u, v, p_prime, t).identity_minus(2.0);
    logdet_pd(&m, margin).map(|ld| -0.5 * ld + v * region.beta)
}

/// Per-coordinate exponent of `q_t` at fixed tilt:
/// `-½ ln det(I - 2δB) - δ β`.
pub fn q_exponent(region: RegionParams, delta: f64, p_prime: f64, t: u32, margin: f64) -> Option<f64> {
    let m = build_matrix_b(region.alpha, p_prime, t).identity_minus(2.0 * delta);
    logdet_pd(&m, margin).map(|ld| -0.5 * ld - delta * region.beta)
}

/// Supremum of feasible `δ` for `I - 2δB ≻ 0`.
///
/// `det(I - 2δB) = 1 + 2cδ - 4αs²δ²` with `c = α(1 + s²) - 1`, together with
/// `1 - 2δ(1 - α) > 0`.
pub fn delta_sup(alpha: f64, p_prime: f64, t: u32) -> f64 {
    let s2 = p_prime * t as f64;
    let c = alpha * (1.0 + s2) - 1.0;
    let lead = alpha * s2;
    let root = if lead > 0.0 {
        (c + (c * c + 4.0 * lead).sqrt()) / (4.0 * lead)
    } else if c < 0.0 {
        -1.0 / (2.0 * c)
    } else {
        f64::INFINITY
    };
    if alpha < 1.0 {
        root.min(1.0 / (2.0 * (1.0 - alpha)))
    } else {
        root
    }
}

/// `ln p_t` integrand at fixed `(u, v)` for blocklength `n`.
pub fn log_p_t_gaussian(region: RegionParams, u: f64, v: f64, p_prime: f64, t: u32, n: u64, margin: f64) -> Option<LogProb> {
    p_exponent(region, u, v, p_prime, t, margin).map(|e| LogProb(n as f64 * e))
}

/// `ln q_t` integrand at fixed `δ` for blocklength `n`.
pub fn log_q_t_gaussian(region: RegionParams, delta: f64, p_prime: f64, t: u32, n: u64, margin: f64) -> Option<LogProb> {
    q_exponent(region, delta, p_prime, t, margin).map(|e| LogProb(n as f64 * e))
}

/// `ln[ C(K_a,2)/M + K_a Pr[χ²_n > n P/P'] ]`.
///
/// The second term is the probability that some transmitted codeword with
/// per-symbol variance `P'` violates `‖f(W)‖² ≤ nP`.
pub fn p0_gaussian(params: &SystemParams, power: &PowerParams) -> Result<LogProb> {
    if !(power.p_prime < power.p) {
        return Err(BoundError::Domain(format!(
            "Gaussian ensemble needs P' < P (got P' = {}, P = {})",
            power.p_prime, power.p
        )));
    }
    let collision = if params.ka >= 2 {
        ln_choose(params.ka as u64, 2)? - params.log_m()
    } else {
        f64::NEG_INFINITY
    };
    let n = params.n as f64;
    let tail = chi_square_upper_tail(params.n, n * power.p / power.p_prime)?;
    let violation = (params.ka as f64).ln() + tail.ln();
    Ok(LogProb(log_add_exp(collision, violation)))
}

/// Full PUPE bound for the Gaussian ensemble at a fixed `(P, P')`.
pub fn pe_bound_gaussian(params: &SystemParams, power: &PowerParams, opt: &OptimizerSettings) -> Result<BoundResult> {
    pe_bound_at_power(params, power, CodebookKind::Gaussian, opt)
}
