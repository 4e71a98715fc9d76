use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ura_bounds::binary::{p0_binary, p_exponent as bin_p, p_exponent_derivs, q_exponent as bin_q};
use ura_bounds::gaussian::{p0_gaussian, q_exponent as gauss_q};
use ura_bounds::mc::estimate_event_probs;
use ura_bounds::numerics::{log_add_exp, rho_distribution};
use ura_bounds::{pe_bound_at_power, CodebookKind, OptimizerSettings, PowerParams, RegionParams, SystemParams};

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn gaussian_p0_at_the_reference_operating_point() {
    let params = SystemParams::new(30_000, 100, 250, 0.05).unwrap();
    let p = 0.01;
    let power = PowerParams::from_power(&params, p, p / 1.05);
    // ln Pr[χ²_30000 > 31500], 50-digit incomplete gamma
    let tail = -20.904949298038923306;
    let want = log_add_exp(31125f64.ln() - 100.0 * LN2, 250f64.ln() + tail);
    let got = p0_gaussian(&params, &power).unwrap().ln();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn binary_p0_is_the_collision_term() {
    let params = SystemParams::new(30_000, 100, 250, 0.05).unwrap();
    let want = 31125f64.ln() - 100.0 * LN2;
    assert!((p0_binary(&params).unwrap().ln() - want).abs() < 1e-12);
}

#[test]
fn gaussian_q_dominates_region_violation_frequency() {
    let (n, t, pp) = (50u64, 1u32, 0.5);
    let region = RegionParams::new(0.5, 0.2).unwrap();
    let q = (n as f64 * gauss_q(region, 0.3, pp, t, 1e-12).unwrap()).exp();
    let (_, comp) = estimate_event_probs(CodebookKind::Gaussian, pp, t, n as usize, region, 100_000, 1).unwrap();
    assert!(q >= comp.mean - 3.0 * comp.stderr, "{q} vs {comp:?}");
}

#[test]
fn binary_q_dominates_region_violation_frequency() {
    let (n, t, p) = (50u64, 2u32, 0.5);
    let region = RegionParams::new(0.5, 0.2).unwrap();
    let rho = rho_distribution(t).unwrap();
    let q = (n as f64 * bin_q(region, 0.3, p, &rho, 1e-12).unwrap()).exp();
    let (_, comp) = estimate_event_probs(CodebookKind::Binary, p, t, n as usize, region, 100_000, 2).unwrap();
    assert!(q >= comp.mean - 3.0 * comp.stderr, "{q} vs {comp:?}");
}

/// `E exp[u χ_e + v χ_r]` by direct sampling, with
/// `χ_e = ‖z‖² - ‖c_M - c_F + z‖²` and `χ_r = α‖c_M + z‖² - ‖z‖² + βn`.
fn binary_mgf(n: usize, t: u32, p: f64, alpha: f64, beta: f64, u: f64, v: f64, draws: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let amp = p.sqrt();
    let sum_sign = |rng: &mut ChaCha8Rng| (0..t).map(|_| if rng.random::<bool>() { amp } else { -amp }).sum::<f64>();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let (mut e, mut r) = (0.0, beta * n as f64);
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let cm = sum_sign(&mut rng);
            let cf = sum_sign(&mut rng);
            e += z * z - (cm - cf + z).powi(2);
            r += alpha * (cm + z).powi(2) - z * z;
        }
        let x = (u * e + v * r).exp();
        s += x;
        s2 += x * x;
    }
    let m = s / draws as f64;
    (m, ((s2 / draws as f64 - m * m) / draws as f64).sqrt())
}

#[test]
fn binary_p_is_the_tilted_moment_generating_function() {
    let (n, t, p, alpha, beta, u, v) = (50usize, 1u32, 0.5, 0.9, 0.05, 0.2, 0.1);
    let region = RegionParams::new(alpha, beta).unwrap();
    let rho = rho_distribution(t).unwrap();
    let closed = (n as f64 * bin_p(region, u, v, p, &rho, 1e-12).unwrap()).exp();
    let (mc, se) = binary_mgf(n, t, p, alpha, beta, u, v, 100_000);
    assert!((closed - mc).abs() <= 3.0 * se, "{closed} vs {mc} ± {se}");
}

#[test]
fn bound_lies_between_floor_and_one() {
    let params = SystemParams::new(100, 4, 2, 0.1).unwrap();
    let settings = OptimizerSettings::default();
    for kind in [CodebookKind::Gaussian, CodebookKind::Binary] {
        for db in [0.0, 6.0, 12.0] {
            let p = params.power_from_ebno_db(db);
            let power = match kind {
                CodebookKind::Gaussian => PowerParams::gaussian(&params, db, 0.9).unwrap(),
                CodebookKind::Binary => PowerParams::from_power(&params, p, p),
            };
            let r = pe_bound_at_power(&params, &power, kind, &settings).unwrap();
            assert!(r.pe() <= 1.0 && r.pe() >= r.log_p0.prob(), "{kind} {db}: {}", r.pe());
            assert_eq!(r.terms.len(), 2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_exponent_value_and_derivatives_agree(
        alpha in 0.3f64..2.0, beta in 1e-3f64..0.3, p in 1e-3f64..0.5, t in 1u32..30,
        u in 0.0f64..0.05, v in 0.0f64..0.05,
    ) {
        let region = RegionParams::new(alpha, beta).unwrap();
        let rho = rho_distribution(t).unwrap();
        let plain = bin_p(region, u, v, p, &rho, 1e-12);
        let d = p_exponent_derivs(region, u, v, p, &rho, 1e-12);
        prop_assert_eq!(plain.is_some(), d.is_some());
        if let (Some(a), Some(d)) = (plain, d) {
            prop_assert!((a - d.value).abs() <= 1e-9 * a.abs().max(1e-3));
            // log-MGF: positive semidefinite Hessian
            let [[h11, h12], [_, h22]] = d.hess;
            prop_assert!(h11 >= -1e-9 && h22 >= -1e-9);
            prop_assert!(h11 * h22 - h12 * h12 >= -1e-9 * (h11 * h22).abs().max(1e-12));
        }
    }

    #[test]
    fn binary_q_vanishes_at_zero_tilt(alpha in 0.05f64..3.0, beta in 1e-4f64..1.0, p in 1e-3f64..2.0, t in 1u32..60) {
        let region = RegionParams::new(alpha, beta).unwrap();
        let rho = rho_distribution(t).unwrap();
        prop_assert!(bin_q(region, 0.0, p, &rho, 0.0).unwrap().abs() < 1e-12);
        prop_assert!(bin_p(region, 0.0, 0.0, p, &rho, 0.0).unwrap().abs() < 1e-12);
    }
}
