//! Moment generating function of a Gaussian quadratic form:
//! `E exp(ηᵀAη + bᵀη) = exp(-½ ln det(I - 2A) + ½ bᵀ(I - 2A)⁻¹ b)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{trial_rng, MCEstimate};
use crate::error::{BoundError, Result};

const MAX_ORDER: usize = 8;

/// Lower Cholesky factor of a row-major symmetric matrix, `None` unless
/// positive definite.
fn cholesky(m: &[f64], q: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..=i {
            let mut s = m[i * q + j];
            for k in 0..j {
                s -= l[i * q + k] * l[j * q + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * q + i] = s.sqrt();
            } else {
                l[i * q + j] = s / l[j * q + j];
            }
        }
    }
    Some(l)
}

fn check_shape(a: &[Vec<f64>], b: &[f64]) -> Result<usize> {
    let q = a.len();
    if q == 0 || q > MAX_ORDER {
        return Err(BoundError::Usage(format!("matrix order {q} outside 1..={MAX_ORDER}")));
    }
    if b.len() != q || a.iter().any(|row| row.len() != q) {
        return Err(BoundError::Usage("A must be square and match the length of b".into()));
    }
    for i in 0..q {
        for j in 0..i {
            if a[i][j] != a[j][i] {
                return Err(BoundError::Usage(format!("A is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(q)
}

/// Closed-form MGF value; domain error unless `I - 2A ≻ 0`.
pub fn lemma2_closed_form(a: &[Vec<f64>], b: &[f64]) -> Result<f64> {
    let q = check_shape(a, b)?;
    let mut m = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            m[i * q + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * a[i][j];
        }
    }
    let l = cholesky(&m, q).ok_or_else(|| BoundError::Domain("I - 2A is not positive definite".into()))?;
    let logdet: f64 = (0..q).map(|i| 2.0 * l[i * q + i].ln()).sum();
    // forward substitution: L w = b, then bᵀ(I-2A)⁻¹b = ‖w‖²
    let mut w = vec![0.0; q];
    for i in 0..q {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * q + k] * w[k];
        }
        w[i] = s / l[i * q + i];
    }
    let quad: f64 = w.iter().map(|x| x * x).sum();
    Ok((-0.5 * logdet + 0.5 * quad).exp())
}

/// Monte-Carlo average of `exp(ηᵀAη + bᵀη)` next to the closed form.
pub fn check_lemma2_mgf(a: &[Vec<f64>], b: &[f64], trials: u64, seed: u64) -> Result<(MCEstimate, f64)> {
    let closed = lemma2_closed_form(a, b)?;
    if trials < 2 {
        return Err(BoundError::Usage("at least 2 trials required".into()));
    }
    let q = a.len();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let eta: Vec<f64> = (0..q).map(|_| rng.sample(StandardNormal)).collect();
            let mut e = 0.0;
            for r in 0..q {
                e += b[r] * eta[r];
                for c in 0..q {
                    e += eta[r] * a[r][c] * eta[c];
                }
            }
            e.exp()
        })
        .collect();
    Ok((MCEstimate::from_samples(&samples, seed), closed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let z = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(lemma2_closed_form(&z, &[0.0, 0.0]).unwrap(), 1.0);
        assert!((lemma2_closed_form(&z, &[1.0, 0.0]).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        let a = vec![vec![0.1, 0.0], vec![0.0, -0.2]];
        let want = (-0.5 * (0.8f64.ln() + 1.4f64.ln()) + 0.5 * 0.09 / 0.8).exp();
        assert!((lemma2_closed_form(&a, &[0.3, 0.0]).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn infeasible_matrix_is_rejected() {
        let a = vec![vec![0.6]];
        assert!(matches!(lemma2_closed_form(&a, &[0.0]), Err(BoundError::Domain(_))));
        assert!(lemma2_closed_form(&vec![vec![0.0; 9]; 9], &[0.0; 9]).is_err());
    }
}
