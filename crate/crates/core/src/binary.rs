//! Binary-codebook ensemble (`±√P` symbols).
//!
//! A coordinate of the sum of `t` binary codewords takes the value `i√P`
//! with probability `ρ_i` (see [`RhoDist`]). The noise expectation is taken
//! in closed form per coordinate; the remaining expectation over the
//! coordinates of `c_M` and `c_F` factorizes into an `n`-th power of a
//! finite sum, evaluated here in log domain.

use crate::error::Result;
use crate::numerics::{ln_choose, LogProb, RhoDist};
use crate::optimize::{pe_bound_at_power, BoundResult, OptimizerSettings};
use crate::params::{CodebookKind, PowerParams, RegionParams, SystemParams};

/// Terms more than this many nats below a row maximum are not exponentiated;
/// each is replaced by its upper estimate `exp(-SKIP_NATS)` relative to the
/// row maximum, so the sum is never underestimated.
const SKIP_NATS: f64 = 50.0;

/// The four ingredients of the binary `p_t`, `q_t` exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryExponentParts {
    pub zeta: f64,
    pub xi: f64,
    pub log_s_p: f64,
    pub log_s_q: f64,
}

/// `φ(α,u,v,m,f)`; `None` unless `1 - 2v(α-1) > 0`.
pub fn phi_exponent(alpha: f64, u: f64, v: f64, m: i64, f: i64) -> Option<f64> {
    let d = 1.0 - 2.0 * v * (alpha - 1.0);
    if !(d > 0.0) {
        return None;
    }
    let (m, f) = (m as f64, f as f64);
    let lin = alpha * v * m - u * (m - f);
    Some(2.0 * lin * lin / d + alpha * v * m * m - u * (m - f) * (m - f))
}

/// `ψ(α,δ,m)`; `None` unless `1 - 2δ(1-α) > 0`.
pub fn psi_exponent(alpha: f64, delta: f64, m: i64) -> Option<f64> {
    let d = 1.0 - 2.0 * delta * (1.0 - alpha);
    if !(d > 0.0) {
        return None;
    }
    let m = m as f64;
    Some(delta * alpha * (2.0 * delta - 1.0) / d * m * m)
}

/// `ζ(α,β,v) = ½ ln(1 - 2v(α-1)) - βv`.
fn zeta(region: RegionParams, v: f64, margin: f64) -> Option<f64> {
    let d = 1.0 - 2.0 * v * (region.alpha - 1.0);
    (d > margin).then(|| 0.5 * d.ln() - region.beta * v)
}

/// `ξ(α,β,δ) = ½ ln(1 - 2δ(1-α)) + δβ`.
fn xi(region: RegionParams, delta: f64, margin: f64) -> Option<f64> {
    let d = 1.0 - 2.0 * delta * (1.0 - region.alpha);
    (d > margin).then(|| 0.5 * d.ln() + delta * region.beta)
}

/// Quadratic-form coefficients of `φ = a m² + b m f + c f²`.
fn phi_coefficients(alpha: f64, u: f64, v: f64) -> (f64, f64, f64) {
    let d = 1.0 - 2.0 * v * (alpha - 1.0);
    let g = alpha * v - u;
    let a = 2.0 * g * g / d + alpha * v - u;
    let b = 4.0 * g * u / d + 2.0 * u;
    let c = 2.0 * u * u / d - u;
    (a, b, c)
}

/// Running log-sum-exp accumulator for one row of terms.
struct RowSum<'a> {
    buf: &'a mut [f64],
}

impl RowSum<'_> {
    /// `ln Σ_j exp(buf[j])` for `j < len`, skipping negligible terms with an
    /// upper estimate.
    fn eval(&mut self, len: usize, weights: impl Fn(usize) -> f64) -> f64 {
        let row = &mut self.buf[..len];
        let mut max = f64::NEG_INFINITY;
        for (j, e) in row.iter_mut().enumerate() {
            *e = weights(j);
            if *e > max {
                max = *e;
            }
        }
        let mut s = 0.0;
        let mut skipped = 0usize;
        for &e in row.iter() {
            let d = e - max;
            if d > -SKIP_NATS {
                s += d.exp();
            } else {
                skipped += 1;
            }
        }
        if skipped > 0 {
            s += skipped as f64 * (-SKIP_NATS).exp();
        }
        max + s.ln()
    }
}

/// `ln Σ_m Σ_f ρ_m ρ_f exp(P φ(α,u,v,m,f))`, using the symmetry
/// `φ(m,f) = φ(-m,-f)` to visit only half of the lattice.
pub fn log_sum_p(alpha: f64, u: f64, v: f64, p: f64, rho: &RhoDist) -> f64 {
    let (a, b, c) = phi_coefficients(alpha, u, v);
    let t = rho.t() as i64;
    let len = rho.support_len();
    let lw = rho.log_weights();
    let ms: Vec<f64> = (0..len).map(|j| (2 * j as i64 - t) as f64).collect();
    let y: Vec<f64> = (0..len).map(|j| lw[j] + p * c * ms[j] * ms[j]).collect();
    let mut buf = vec![0.0; len];
    let mut acc = Vec::with_capacity(len / 2 + 1);
    let ln2 = std::f64::consts::LN_2;
    // rows i with i < t - i appear together with their mirror row
    for i in 0..len {
        let mirror = len - 1 - i;
        if i > mirror {
            break;
        }
        let x = lw[i] + p * a * ms[i] * ms[i];
        let k = p * b * ms[i];
        let mut row = RowSum { buf: &mut buf };
        if i < mirror {
            let r = row.eval(len, |j| x + y[j] + k * ms[j]);
            acc.push(r + ln2);
        } else {
            // central row (t even): pair j with t - j, centre counted once
            let half = len / 2;
            let r = row.eval(half, |j| x + y[j] + k * ms[j]);
            acc.push(r + ln2);
            acc.push(x + y[half] + k * ms[half]);
        }
    }
    crate::numerics::log_sum_exp_unchecked(&acc)
}

/// Reference evaluation over the full `(t+1)²` lattice.
pub fn log_sum_p_full(alpha: f64, u: f64, v: f64, p: f64, rho: &RhoDist) -> f64 {
    let mut terms = Vec::with_capacity(rho.support_len() * rho.support_len());
    for (m, lm) in rho.iter_log() {
        for (f, lf) in rho.iter_log() {
            let phi = phi_exponent(alpha, u, v, m, f).unwrap_or(f64::NAN);
            terms.push(lm + lf + p * phi);
        }
    }
    crate::numerics::log_sum_exp_unchecked(&terms)
}

/// Per-letter `p_t` exponent with gradient and Hessian in `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentDerivs {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// A coefficient of `φ` with its first and second derivatives in `(u, v)`.
#[derive(Debug, Clone, Copy)]
struct Coef {
    d: [f64; 2],
    dd: [[f64; 2]; 2],
}

fn phi_coefficient_derivs(alpha: f64, u: f64, v: f64) -> [Coef; 3] {
    let d = 1.0 - 2.0 * v * (alpha - 1.0);
    let dv = -2.0 * (alpha - 1.0);
    let g = alpha * v - u;
    let (d2, d3) = (d * d, d * d * d);
    let a_uv = -4.0 * alpha / d + 4.0 * g * dv / d2;
    let a = Coef {
        d: [-4.0 * g / d - 1.0, 4.0 * g * alpha / d - 2.0 * g * g * dv / d2 + alpha],
        dd: [
            [4.0 / d, a_uv],
            [a_uv, 4.0 * alpha * alpha / d - 8.0 * g * alpha * dv / d2 + 4.0 * g * g * dv * dv / d3],
        ],
    };
    let b_uv = 4.0 * alpha / d - 4.0 * (g - u) * dv / d2;
    let b = Coef {
        d: [4.0 * (g - u) / d + 2.0, 4.0 * alpha * u / d - 4.0 * g * u * dv / d2],
        dd: [
            [-8.0 / d, b_uv],
            [b_uv, -8.0 * alpha * u * dv / d2 + 8.0 * g * u * dv * dv / d3],
        ],
    };
    let c_uv = -4.0 * u * dv / d2;
    let c = Coef {
        d: [4.0 * u / d - 1.0, -2.0 * u * u * dv / d2],
        dd: [[4.0 / d, c_uv], [c_uv, 4.0 * u * u * dv * dv / d3]],
    };
    [a, b, c]
}

/// [`p_exponent`] together with its first two derivatives.
///
/// The lattice sum is a moment generating function in `(u, v)`, so the
/// derivatives are tilted moments of `(m², m f, f²)`. The value carries the
/// same skipped-term padding as [`log_sum_p`].
pub fn p_exponent_derivs(region: RegionParams, u: f64, v: f64, p: f64, rho: &RhoDist, margin: f64) -> Option<ExponentDerivs> {
    let z = zeta(region, v, margin)?;
    let alpha = region.alpha;
    let (a, b, c) = phi_coefficients(alpha, u, v);
    let t = rho.t() as i64;
    let len = rho.support_len();
    let lw = rho.log_weights();
    let ms: Vec<f64> = (0..len).map(|j| (2 * j as i64 - t) as f64).collect();

    // half lattice: rows below the centre stand for their mirror too
    let rows = len.div_ceil(2);
    let mut w = Vec::with_capacity(rows * len);
    let mut max = f64::NEG_INFINITY;
    for i in 0..rows {
        let (m, x) = (ms[i], lw[i] + p * a * ms[i] * ms[i]);
        for j in 0..len {
            let e = x + lw[j] + p * ms[j] * (b * m + c * ms[j]);
            max = max.max(e);
            w.push(e);
        }
    }
    // s[0] = Σ, then m², mf, f², m⁴, m³f, m²f², mf³, f⁴
    let mut s = [0.0f64; 9];
    let mut skipped = 0.0;
    for i in 0..rows {
        let mirror = len - 1 - i;
        let m = ms[i];
        for j in 0..len {
            let mult = if i < mirror {
                2.0
            } else if j < mirror {
                // centre row: j and its mirror
                2.0
            } else if j == mirror {
                1.0
            } else {
                continue;
            };
            let d = w[i * len + j] - max;
            if d <= -SKIP_NATS {
                skipped += mult;
                continue;
            }
            let e = mult * d.exp();
            let f = ms[j];
            let (m2, mf, f2) = (m * m, m * f, f * f);
            s[0] += e;
            s[1] += e * m2;
            s[2] += e * mf;
            s[3] += e * f2;
            s[4] += e * m2 * m2;
            s[5] += e * m2 * mf;
            s[6] += e * m2 * f2;
            s[7] += e * mf * f2;
            s[8] += e * f2 * f2;
        }
    }
    let total = s[0] + skipped * (-SKIP_NATS).exp();
    let mu: Vec<f64> = s[1..].iter().map(|x| x / s[0]).collect();
    let (m2, mf, f2, m4, m3f, m2f2, mf3, f4) = (mu[0], mu[1], mu[2], mu[3], mu[4], mu[5], mu[6], mu[7]);

    let coef = phi_coefficient_derivs(alpha, u, v);
    let (ca, cb, cc) = (coef[0], coef[1], coef[2]);
    let dv = -2.0 * (alpha - 1.0);
    let dd = 1.0 - 2.0 * v * (alpha - 1.0);
    let mean = |k: usize| ca.d[k] * m2 + cb.d[k] * mf + cc.d[k] * f2;
    let mut grad = [p * mean(0), p * mean(1)];
    grad[1] += -0.5 * dv / dd + region.beta;
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let second = ca.d[i] * ca.d[j] * m4
                + (ca.d[i] * cb.d[j] + cb.d[i] * ca.d[j]) * m3f
                + (ca.d[i] * cc.d[j] + cc.d[i] * ca.d[j] + cb.d[i] * cb.d[j]) * m2f2
                + (cb.d[i] * cc.d[j] + cc.d[i] * cb.d[j]) * mf3
                + cc.d[i] * cc.d[j] * f4;
            let cov = second - mean(i) * mean(j);
            hess[i][j] = p * (ca.dd[i][j] * m2 + cb.dd[i][j] * mf + cc.dd[i][j] * f2) + p * p * cov;
        }
    }
    hess[1][1] += 0.5 * dv * dv / (dd * dd);
    Some(ExponentDerivs {
        value: -z + max + total.ln(),
        grad,
        hess,
    })
}

/// `ln Σ_m ρ_m exp(P ψ(α,δ,m))`.
pub fn log_sum_q(alpha: f64, delta: f64, p: f64, rho: &RhoDist) -> f64 {
    let d = 1.0 - 2.0 * delta * (1.0 - alpha);
    let kappa = delta * alpha * (2.0 * delta - 1.0) / d;
    let terms: Vec<f64> = rho
        .iter_log()
        .map(|(m, lw)| lw + p * kappa * (m * m) as f64)
        .collect();
    crate::numerics::log_sum_exp_unchecked(&terms)
}

/// Per-coordinate exponent of `p_t`: `-ζ + ln S_p`.
pub fn p_exponent(region: RegionParams, u: f64, v: f64, p: f64, rho: &RhoDist, margin: f64) -> Option<f64> {
    let z = zeta(region, v, margin)?;
    Some(-z + log_sum_p(region.alpha, u, v, p, rho))
}

/// Per-coordinate exponent of `q_t`: `-ξ + ln S_q`.
pub fn q_exponent(region: RegionParams, delta: f64, p: f64, rho: &RhoDist, margin: f64) -> Option<f64> {
    let x = xi(region, delta, margin)?;
    Some(-x + log_sum_q(region.alpha, delta, p, rho))
}

/// Supremum of `δ` with `1 - 2δ(1-α) > 0`.
pub fn delta_sup(alpha: f64) -> f64 {
    if alpha < 1.0 {
        1.0 / (2.0 * (1.0 - alpha))
    } else {
        f64::INFINITY
    }
}

/// All four exponent ingredients at one parameter point.
pub fn exponent_parts(
    region: RegionParams,
    u: f64,
    v: f64,
    delta: f64,
    p: f64,
    rho: &RhoDist,
    margin: f64,
) -> Option<BinaryExponentParts> {
    Some(BinaryExponentParts {
        zeta: zeta(region, v, margin)?,
        xi: xi(region, delta, margin)?,
        log_s_p: log_sum_p(region.alpha, u, v, p, rho),
        log_s_q: log_sum_q(region.alpha, delta, p, rho),
    })
}

/// `ln p_t` integrand `-nζ + n ln S_p` at fixed `(u, v)`.
pub fn log_p_t_binary(region: RegionParams, u: f64, v: f64, p: f64, rho: &RhoDist, n: u64, margin: f64) -> Option<LogProb> {
    p_exponent(region, u, v, p, rho, margin).map(|e| LogProb(n as f64 * e))
}

/// `ln q_t` integrand `-nξ + n ln S_q` at fixed `δ`.
pub fn log_q_t_binary(region: RegionParams, delta: f64, p: f64, rho: &RhoDist, n: u64, margin: f64) -> Option<LogProb> {
    q_exponent(region, delta, p, rho, margin).map(|e| LogProb(n as f64 * e))
}

/// `ln(C(K_a,2)/M)`; `-inf` for a single user.
pub fn p0_binary(params: &SystemParams) -> Result<LogProb> {
    if params.ka < 2 {
        return Ok(LogProb::ZERO);
    }
    Ok(LogProb(ln_choose(params.ka as u64, 2)? - params.log_m()))
}

/// Full PUPE bound for the binary ensemble; `power.p_prime` must equal `power.p`.
pub fn pe_bound_binary(params: &SystemParams, power: &PowerParams, opt: &OptimizerSettings) -> Result<BoundResult> {
    pe_bound_at_power(params, power, CodebookKind::Binary, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rho_distribution, DEFAULT_PD_MARGIN};
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn phi_examples() {
        assert_eq!(phi_exponent(0.7, 0.3, 0.2, 0, 0), Some(0.0));
        // 2(0.1*2)^2/1 + 0.1*4
        assert_relative_eq!(phi_exponent(1.0, 0.0, 0.1, 2, 0).unwrap(), 0.48, max_relative = 1e-15);
        assert!(phi_exponent(2.0, 0.1, 0.5, 1, 1).is_none());
    }

    #[test]
    fn phi_is_even() {
        for &(a, u, v) in &[(0.4, 0.3, 0.2), (1.3, 0.05, 0.9), (0.9, 1.2, 0.01)] {
            for m in -4..=4 {
                for f in -4..=4 {
                    assert_eq!(phi_exponent(a, u, v, m, f), phi_exponent(a, u, v, -m, -f));
                }
            }
        }
    }

    #[test]
    fn phi_coefficients_match_display() {
        let (alpha, u, v) = (0.63, 0.41, 0.27);
        let (a, b, c) = phi_coefficients(alpha, u, v);
        for m in -3i64..=3 {
            for f in -3i64..=3 {
                let q = a * (m * m) as f64 + b * (m * f) as f64 + c * (f * f) as f64;
                assert_relative_eq!(q, phi_exponent(alpha, u, v, m, f).unwrap(), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_exponent(0.3, 0.5, 7), Some(0.0));
        assert_eq!(psi_exponent(0.3, 0.2, 0), Some(0.0));
        assert_relative_eq!(psi_exponent(1.0, 0.25, 3).unwrap(), -1.125, max_relative = 1e-15);
        assert!(psi_exponent(0.0, 0.6, 1).is_none());
    }

    #[test]
    fn sums_vanish_without_tilt() {
        for t in [1u32, 2, 5, 12] {
            let rho = rho_distribution(t).unwrap();
            assert!(log_sum_p(0.8, 0.0, 0.0, 0.5, &rho).abs() < 1e-14);
            assert!(log_sum_q(0.8, 0.5, 0.5, &rho).abs() < 1e-14);
        }
    }

    #[test]
    fn half_and_full_lattice_agree() {
        for t in [1u32, 2, 3, 8, 13, 40] {
            let rho = rho_distribution(t).unwrap();
            for &(a, u, v, p) in &[(0.4, 0.3, 0.2, 0.5), (1.3, 0.05, 0.3, 0.01), (0.9, 0.7, 0.1, 0.2)] {
                let h = log_sum_p(a, u, v, p, &rho);
                let f = log_sum_p_full(a, u, v, p, &rho);
                assert!((h - f).abs() <= 1e-12 * f.abs().max(1.0), "t={t}: {h} vs {f}");
            }
        }
    }

    #[test]
    fn t1_has_four_pairs() {
        let rho = rho_distribution(1).unwrap();
        let (alpha, u, v, p) = (0.9, 0.2, 0.1, 0.5);
        let mut s = 0.0;
        let mut count = 0;
        for m in [-1i64, 1] {
            for f in [-1i64, 1] {
                s += 0.25 * (p * phi_exponent(alpha, u, v, m, f).unwrap()).exp();
                count += 1;
            }
        }
        assert_eq!(count, 4);
        assert_relative_eq!(log_sum_p(alpha, u, v, p, &rho), s.ln(), max_relative = 1e-14);
    }

    #[test]
    fn q_at_half_delta() {
        let rho = rho_distribution(3).unwrap();
        let r = RegionParams::new(0.6, 0.2).unwrap();
        let got = log_q_t_binary(r, 0.5, 0.4, &rho, 50, DEFAULT_PD_MARGIN).unwrap().ln();
        let xi = 0.5 * (1.0f64 - (1.0 - 0.6)).ln() + 0.5 * 0.2;
        assert_relative_eq!(got, -50.0 * xi, max_relative = 1e-14);
    }

    #[test]
    fn p_tends_to_one_at_zero_tilt() {
        let rho = rho_distribution(4).unwrap();
        let r = RegionParams::new(0.8, 0.05).unwrap();
        let v = log_p_t_binary(r, 1e-13, 1e-13, 0.3, &rho, 100, DEFAULT_PD_MARGIN).unwrap();
        assert!(v.ln().abs() < 1e-9);
    }

    #[test]
    fn p0_examples() {
        assert_eq!(p0_binary(&SystemParams::new(100, 10, 1, 0.1).unwrap()).unwrap(), LogProb::ZERO);
        let v = p0_binary(&SystemParams::new(100, 100, 2, 0.1).unwrap()).unwrap();
        assert_relative_eq!(v.ln(), -100.0 * LN_2, max_relative = 1e-14);
        let v = p0_binary(&SystemParams::new(30_000, 100, 250, 0.05).unwrap()).unwrap();
        assert_relative_eq!(v.ln(), 31_125f64.ln() - 100.0 * LN_2, max_relative = 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &(t, alpha, beta, u, v, p) in &[
            (3u32, 0.8, 0.05, 0.3, 0.2, 0.4),
            (8, 1.3, 0.01, 0.35, 0.4, 0.05),
            (20, 0.5, 0.2, 0.05, 0.01, 0.02),
            (51, 2.0, 0.1, 0.2, 0.1, 0.01),
        ] {
            let rho = rho_distribution(t).unwrap();
            let r = RegionParams::new(alpha, beta).unwrap();
            let e = |u: f64, v: f64| p_exponent(r, u, v, p, &rho, DEFAULT_PD_MARGIN).unwrap();
            let d = p_exponent_derivs(r, u, v, p, &rho, DEFAULT_PD_MARGIN).unwrap();
            assert_relative_eq!(d.value, e(u, v), max_relative = 1e-12, epsilon = 1e-14);
            let h = 1e-5;
            let gu = (e(u + h, v) - e(u - h, v)) / (2.0 * h);
            let gv = (e(u, v + h) - e(u, v - h)) / (2.0 * h);
            assert_relative_eq!(d.grad[0], gu, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(d.grad[1], gv, max_relative = 1e-6, epsilon = 1e-9);
            let g = |u: f64, v: f64| p_exponent_derivs(r, u, v, p, &rho, DEFAULT_PD_MARGIN).unwrap().grad;
            let huu = (g(u + h, v)[0] - g(u - h, v)[0]) / (2.0 * h);
            let huv = (g(u, v + h)[0] - g(u, v - h)[0]) / (2.0 * h);
            let hvv = (g(u, v + h)[1] - g(u, v - h)[1]) / (2.0 * h);
            assert_relative_eq!(d.hess[0][0], huu, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(d.hess[0][1], huv, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(d.hess[1][0], huv, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(d.hess[1][1], hvv, max_relative = 1e-5, epsilon = 1e-8);
        }
    }
}
