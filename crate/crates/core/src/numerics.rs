//! Log-domain scalar primitives and small symmetric matrices.
//!
//! All probabilities in this crate are natural logarithms. `C(2^100, t)`
//! and `exp(-n * exponent)` for `n = 30000` overflow `f64` by thousands of
//! orders of magnitude, so linear values only appear at reporting time.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{BoundError, Result};

/// Default margin on leading principal minors for positive definiteness.
pub const DEFAULT_PD_MARGIN: f64 = 1e-12;

/// Natural logarithm of a nonnegative quantity (usually a probability).
///
/// `-inf` encodes an exact zero. Addition is log-sum-exp.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(pub f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Linear value; underflows to 0 below ~1e-308.
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    /// `min(1, p)`.
    pub fn clip(self) -> LogProb {
        if self.0 > 0.0 {
            LogProb::ONE
        } else {
            self
        }
    }

    pub fn mul(self, log_factor: f64) -> LogProb {
        LogProb(self.0 + log_factor)
    }
}

impl Add for LogProb {
    type Output = LogProb;

    fn add(self, rhs: LogProb) -> LogProb {
        LogProb(log_add_exp(self.0, rhs.0))
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(terms[i])` with max-shift. Terms equal to `-inf` are ignored.
pub fn log_sum_exp(terms: &[f64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(BoundError::Usage("log_sum_exp of an empty list".into()));
    }
    Ok(log_sum_exp_unchecked(terms))
}

/// Same as [`log_sum_exp`] but returns `-inf` for an empty slice.
pub fn log_sum_exp_unchecked(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let s: f64 = terms.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Upper argument of a binomial coefficient.
///
/// `PowerOfTwoMinus` represents `2^log2 - offset` exactly, which is how
/// `M - K_a` with `M = 2^k` is passed in: the value itself is not
/// representable as an `f64` once `k > 53`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomialTop {
    Exact(u64),
    PowerOfTwoMinus { log2: u32, offset: u64 },
}

/// Largest lower argument accepted by the product form.
const MAX_PRODUCT_TERMS: u64 = 1_000_000;

/// `ln C(n, k)`.
pub fn log_binomial(n: BinomialTop, k: u64) -> Result<f64> {
    match n {
        BinomialTop::Exact(n) => ln_choose(n, k),
        BinomialTop::PowerOfTwoMinus { log2, offset } => {
            if log2 < 64 {
                let pow = 1u128 << log2;
                let n = pow
                    .checked_sub(offset as u128)
                    .ok_or_else(|| BoundError::Domain(format!("2^{log2} - {offset} is negative")))?;
                return ln_choose(n as u64, k);
            }
            if k == 0 {
                return Ok(0.0);
            }
            if k > MAX_PRODUCT_TERMS {
                return Err(BoundError::Domain(format!(
                    "binomial lower argument {k} exceeds product-form limit"
                )));
            }
            // ln(2^L - o - j) = L ln2 + ln(1 - (o + j) 2^-L)
            let scale = (-(log2 as f64) * LN_2).exp();
            let head = log2 as f64 * LN_2;
            let mut s = 0.0;
            for j in 0..k {
                s += head + (-((offset + j) as f64) * scale).ln_1p();
            }
            Ok(s - ln_gamma(k as f64 + 1.0))
        }
    }
}

/// `ln C(n, k)` for machine-size `n`.
pub fn ln_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(BoundError::Domain(format!("C({n}, {k}) with k > n")));
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= 1000 {
        let mut s = 0.0;
        for j in 0..k {
            s += ((n - j) as f64 / (j + 1) as f64).ln();
        }
        Ok(s)
    } else {
        Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
    }
}

/// `ln Pr[X > x]` for `X ~ χ²_dof`, i.e. `ln Q(dof/2, x/2)`.
pub fn chi_square_upper_tail(dof: u64, x: f64) -> Result<LogProb> {
    if dof == 0 {
        return Err(BoundError::Domain("chi-square with zero degrees of freedom".into()));
    }
    if !(x >= 0.0) {
        return Err(BoundError::Domain(format!("chi-square tail at negative point {x}")));
    }
    Ok(LogProb(ln_gamma_q(dof as f64 / 2.0, x / 2.0)))
}

/// `ln Γ(a)` remainder after Stirling's leading terms, valid for `a >= 10`.
fn stirling_remainder(a: f64) -> f64 {
    let r = 1.0 / a;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln(x^a e^-x / Γ(a))`, with the large-`a` cancellation handled through
/// `a (r - 1 - ln r)`, `r = x / a`.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    if a >= 10.0 {
        let d = (x - a) / a;
        let dev = d - d.ln_1p();
        -a * dev + 0.5 * a.ln() - 0.5 * (2.0 * PI).ln() - stirling_remainder(a)
    } else {
        a * x.ln() - x - ln_gamma(a)
    }
}

/// `ln Q(a, x)` for the regularized upper incomplete gamma function.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-17;
    const MAX_ITER: usize = 1_000_000;
    if x <= 0.0 {
        return 0.0;
    }
    let pre = ln_gamma_prefactor(a, x);
    if x < a + 1.0 {
        // P(a,x) = pre / a * Σ x^n / ((a+1)...(a+n))
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term < sum * EPS {
                break;
            }
        }
        let p = (pre + sum.ln() - a.ln()).exp();
        (-p).ln_1p()
    } else {
        // Modified Lentz for Q(a,x) = pre * 1/(x+1-a- 1(1-a)/(x+3-a- ...))
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        pre + h.ln()
    }
}

/// Symmetric real matrix of order 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatSmall {
    order: usize,
    entries: [[f64; 3]; 3],
}

impl SymMatSmall {
    pub fn new2(m: [[f64; 2]; 2]) -> Result<Self> {
        if m[0][1] != m[1][0] {
            return Err(BoundError::Domain("matrix is not symmetric".into()));
        }
        let mut entries = [[0.0; 3]; 3];
        for i in 0..2 {
            for j in 0..2 {
                entries[i][j] = m[i][j];
            }
        }
        Ok(Self { order: 2, entries })
    }

    pub fn new3(m: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..i {
                if m[i][j] != m[j][i] {
                    return Err(BoundError::Domain("matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { order: 3, entries: m })
    }

    /// Builds from the upper triangle; the result is symmetric by construction.
    pub(crate) fn from_upper3(a11: f64, a12: f64, a13: f64, a22: f64, a23: f64, a33: f64) -> Self {
        Self {
            order: 3,
            entries: [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]],
        }
    }

    pub(crate) fn from_upper2(a11: f64, a12: f64, a22: f64) -> Self {
        Self {
            order: 2,
            entries: [[a11, a12, 0.0], [a12, a22, 0.0], [0.0, 0.0, 0.0]],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::diag(&vec![1.0; order])
    }

    /// Diagonal matrix; panics unless `d.len()` is 2 or 3.
    pub fn diag(d: &[f64]) -> Self {
        assert!(d.len() == 2 || d.len() == 3, "order must be 2 or 3");
        let mut entries = [[0.0; 3]; 3];
        for (i, &v) in d.iter().enumerate() {
            entries[i][i] = v;
        }
        Self { order: d.len(), entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.order && j < self.order);
        self.entries[i][j]
    }

    /// `I - scale * self`.
    pub fn identity_minus(&self, scale: f64) -> Self {
        let mut out = *self;
        for i in 0..self.order {
            for j in 0..self.order {
                out.entries[i][j] = if i == j { 1.0 } else { 0.0 } - scale * self.entries[i][j];
            }
        }
        out
    }

    /// Leading principal minors, in order.
    pub fn leading_minors(&self) -> ([f64; 3], usize) {
        let e = &self.entries;
        let d1 = e[0][0];
        let d2 = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        if self.order == 2 {
            return ([d1, d2, 0.0], 2);
        }
        let d3 = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
            - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
        ([d1, d2, d3], 3)
    }

    pub fn det(&self) -> f64 {
        let (m, k) = self.leading_minors();
        m[k - 1]
    }
}

/// `ln det(m)` when every leading principal minor exceeds `margin`
/// (Sylvester's criterion); `None` otherwise.
pub fn logdet_pd(m: &SymMatSmall, margin: f64) -> Option<f64> {
    let (minors, k) = m.leading_minors();
    if minors[..k].iter().all(|&d| d > margin) {
        Some(minors[k - 1].ln())
    } else {
        None
    }
}

/// Distribution of one coordinate of the sum of `t` independent ±1 signs.
///
/// Support is `{-t, -t+2, ..., t}`; index `j` corresponds to `m = 2j - t`
/// with weight `C(t, j) 2^-t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoDist {
    t: u32,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl RhoDist {
    pub fn new(t: u32) -> Result<Self> {
        if t == 0 {
            return Err(BoundError::Domain("rho distribution needs t >= 1".into()));
        }
        let len = t as usize + 1;
        let mut log_weights = vec![0.0; len];
        let scale = t as f64 * LN_2;
        for j in 0..=len / 2 {
            let lw = ln_choose(t as u64, j as u64)? - scale;
            log_weights[j] = lw;
            log_weights[len - 1 - j] = lw;
        }
        let weights = log_weights.iter().map(|lw| lw.exp()).collect();
        Ok(Self { t, weights, log_weights })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Support points `m` paired with weights, ascending in `m`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.weights.iter().enumerate().map(move |(j, &w)| (2 * j as i64 - t, w))
    }

    /// Support points `m` paired with log-weights, ascending in `m`.
    pub fn iter_log(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.log_weights.iter().enumerate().map(move |(j, &w)| (2 * j as i64 - t, w))
    }

    /// `ρ_i` for any integer `i` (zero off the support).
    pub fn weight(&self, i: i64) -> f64 {
        let t = self.t as i64;
        if i.abs() > t || (i + t) % 2 != 0 {
            0.0
        } else {
            self.weights[((i + t) / 2) as usize]
        }
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }
}

/// Convenience wrapper matching the operation name used across the crate.
pub fn rho_distribution(t: u32) -> Result<RhoDist> {
    RhoDist::new(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exact_binomial(n: u64, k: u64) -> u128 {
        let mut c: u128 = 1;
        for j in 0..k as u128 {
            c = c * (n as u128 - j) / (j + 1);
        }
        c
    }

    #[test]
    fn binomial_trivial_values() {
        assert_eq!(log_binomial(BinomialTop::Exact(17), 0).unwrap(), 0.0);
        let big = BinomialTop::PowerOfTwoMinus { log2: 100, offset: 0 };
        assert_eq!(log_binomial(big, 0).unwrap(), 0.0);
        assert_relative_eq!(log_binomial(big, 1).unwrap(), 100.0 * LN_2, max_relative = 1e-15);
    }

    #[test]
    fn binomial_52_choose_5() {
        assert_eq!(exact_binomial(52, 5), 2_598_960);
        let v = log_binomial(BinomialTop::Exact(52), 5).unwrap();
        assert_relative_eq!(v, (2_598_960f64).ln(), max_relative = 1e-14);
        assert!((v - 14.770_62).abs() < 1e-5);
    }

    #[test]
    fn binomial_small_exact() {
        for n in 0..=30u64 {
            for k in 0..=n {
                let want = exact_binomial(n, k) as f64;
                let got = log_binomial(BinomialTop::Exact(n), k).unwrap().exp();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn binomial_power_of_two_small_log2_matches_exact() {
        let a = log_binomial(BinomialTop::PowerOfTwoMinus { log2: 10, offset: 3 }, 4).unwrap();
        let b = (exact_binomial(1021, 4) as f64).ln();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn binomial_power_of_two_offset_correction() {
        // ln C(2^100 - 250, 2) = ln((2^100-250)(2^100-251)/2)
        let v = log_binomial(BinomialTop::PowerOfTwoMinus { log2: 100, offset: 250 }, 2).unwrap();
        let want = 200.0 * LN_2 - LN_2 + (-250.0 * 2f64.powi(-100)).ln_1p() + (-251.0 * 2f64.powi(-100)).ln_1p();
        assert_relative_eq!(v, want, max_relative = 1e-15);
    }

    #[test]
    fn binomial_domain_error() {
        assert!(log_binomial(BinomialTop::Exact(3), 4).is_err());
        assert!(ln_choose(0, 1).is_err());
    }

    #[test]
    fn lse_examples() {
        assert_eq!(log_sum_exp(&[3.5]).unwrap(), 3.5);
        assert_relative_eq!(log_sum_exp(&[0.0, 0.0]).unwrap(), LN_2, max_relative = 1e-15);
        let v = log_sum_exp(&[1000.0, 1000.0 + 3f64.ln()]).unwrap();
        assert_relative_eq!(v, 1000.0 + 4f64.ln(), max_relative = 1e-15);
        assert!(log_sum_exp(&[]).is_err());
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn logprob_add_and_clip() {
        let a = LogProb(0.5f64.ln()) + LogProb(0.25f64.ln());
        assert_relative_eq!(a.prob(), 0.75, max_relative = 1e-15);
        assert_eq!((LogProb::ZERO + LogProb(-3.0)).ln(), -3.0);
        assert_eq!(LogProb(2.0).clip(), LogProb::ONE);
        assert_eq!(LogProb(-2.0).clip(), LogProb(-2.0));
    }

    #[test]
    fn chi_square_examples() {
        let v = chi_square_upper_tail(2, 2.0 * LN_2).unwrap();
        assert_relative_eq!(v.ln(), 0.5f64.ln(), max_relative = 1e-14);
        // erfc(1/sqrt(2))
        let v = chi_square_upper_tail(1, 1.0).unwrap();
        assert_relative_eq!(v.prob(), 0.317_310_507_862_914_1, max_relative = 1e-12);
        assert_eq!(chi_square_upper_tail(4, 0.0).unwrap().ln(), 0.0);
        assert!(chi_square_upper_tail(4, -1.0).is_err());
        assert!(chi_square_upper_tail(0, 1.0).is_err());
    }

    #[test]
    fn chi_square_even_dof_closed_form() {
        // Q(2, x/2) = e^{-x/2}(1 + x/2) for dof = 4
        for &x in &[0.1, 1.0, 5.0, 40.0, 400.0] {
            let want = -x / 2.0 + (1.0 + x / 2.0f64).ln();
            let got = chi_square_upper_tail(4, x).unwrap().ln();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_pd(&SymMatSmall::identity(3), DEFAULT_PD_MARGIN), Some(0.0));
        let d = logdet_pd(&SymMatSmall::diag(&[2.0, 3.0]), DEFAULT_PD_MARGIN).unwrap();
        assert_relative_eq!(d, 6f64.ln(), max_relative = 1e-15);
        let m = SymMatSmall::new2([[2.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_relative_eq!(logdet_pd(&m, DEFAULT_PD_MARGIN).unwrap(), 3f64.ln(), max_relative = 1e-15);
        assert_eq!(logdet_pd(&SymMatSmall::diag(&[-1.0, 1.0]), DEFAULT_PD_MARGIN), None);
        // negative definite pair with positive determinant is still rejected
        assert_eq!(logdet_pd(&SymMatSmall::diag(&[-1.0, -1.0]), DEFAULT_PD_MARGIN), None);
    }

    #[test]
    fn symmetric_constructor_rejects_asymmetry() {
        assert!(SymMatSmall::new2([[1.0, 2.0], [2.1, 1.0]]).is_err());
        assert!(SymMatSmall::new3([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn rho_small_cases() {
        let r1 = rho_distribution(1).unwrap();
        assert_eq!(r1.iter().collect::<Vec<_>>(), vec![(-1, 0.5), (1, 0.5)]);
        let r2 = rho_distribution(2).unwrap();
        assert_eq!(r2.iter().collect::<Vec<_>>(), vec![(-2, 0.25), (0, 0.5), (2, 0.25)]);
        assert_eq!(r2.weight(1), 0.0);
        assert_eq!(r2.weight(3), 0.0);
        assert!(rho_distribution(0).is_err());
    }

    #[test]
    fn rho_moments() {
        for t in [1u32, 2, 7, 50, 250] {
            let r = rho_distribution(t).unwrap();
            let total: f64 = r.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12, "t={t}");
            let second: f64 = r.iter().map(|(m, w)| w * (m * m) as f64).sum();
            assert_relative_eq!(second, t as f64, max_relative = 1e-12);
            for (m, w) in r.iter() {
                assert_eq!(w, r.weight(-m));
            }
        }
    }
}
