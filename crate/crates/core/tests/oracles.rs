//! Frozen values checked against independent derivations, plus property
//! suites for the geometry and the rate-law helpers.

use moran_core::disorder::{environment_from_counts, expected_distinct, key_ratio};
use moran_core::observables::{
    delta, dist2_p, lyapunov_h, masses, project_p, project_pcheck, triangle_terms,
};
use moran_core::rate_law::{
    check_condition_i, check_corollary_a, diffusion_constant, make_finite_law, make_geometric_law,
    make_power_law,
};
use moran_core::Environment;
use proptest::prelude::*;

/// Riemann zeta by direct summation with the midpoint of the integral
/// bounds on the remainder. Independent of the library's Euler-Maclaurin
/// normalizer.
fn zeta_oracle(s: f64) -> f64 {
    let m = 200_000u32;
    let head: f64 = (1..=m).rev().map(|k| (k as f64).powf(-s)).sum();
    let lo = ((m + 1) as f64).powf(1.0 - s) / (s - 1.0);
    let hi = (m as f64).powf(1.0 - s) / (s - 1.0);
    head + 0.5 * (lo + hi)
}

#[test]
fn power_law_inverse_d_is_zeta_ratio() {
    let law = make_power_law(5.0, 1e-12).unwrap();
    let oracle = zeta_oracle(6.0) / zeta_oracle(5.0);
    let got = 1.0 / diffusion_constant(&law);
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
}

#[test]
fn geometric_inverse_d_closed_form() {
    for p in [0.2, 0.5, 0.9] {
        let law = make_geometric_law(p, 1e-12).unwrap();
        let closed = -p * f64::ln(p) / (1.0 - p);
        assert!((1.0 / diffusion_constant(&law) - closed).abs() < 1e-10);
    }
}

#[test]
fn expected_distinct_matches_enumeration() {
    // Enumerate all outcomes of N draws from a small law and count distinct values.
    let probs = [0.5, 0.3, 0.2];
    let pairs: Vec<(f64, f64)> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64, p))
        .collect();
    let law = make_finite_law(&pairs).unwrap();
    for n in 1..=5u32 {
        let mut expect = 0.0;
        for code in 0..3usize.pow(n) {
            let mut c = code;
            let mut seen = [false; 3];
            let mut p = 1.0;
            for _ in 0..n {
                seen[c % 3] = true;
                p *= probs[c % 3];
                c /= 3;
            }
            expect += p * seen.iter().filter(|&&s| s).count() as f64;
        }
        let got = expected_distinct(&law, n as u64).unwrap().value;
        assert!((got - expect).abs() < 1e-12, "N = {n}: {got} vs {expect}");
    }
}

mod fig1 {
    use super::*;

    // Inputs: n = (0.37, 0.63), y = (0.17, 0.61), r = (0.8, 3.5).
    fn env() -> Environment {
        environment_from_counts(&[(0.8, 37), (3.5, 63)]).unwrap()
    }
    const Y: [f64; 2] = [0.17, 0.61];

    // Hand derivation:
    // 1/D_N = 0.37/0.8 + 0.63/3.5 = 0.4625 + 0.18 = 0.6425
    // sum y/r = 0.2125 + 0.1742857142857... = 0.3867857142857...
    // S_check = 0.3867857142857 / 0.6425 = 0.6020011...
    #[test]
    fn masses_match() {
        let (s, sc) = masses(&Y, &env()).unwrap();
        assert!((s - 0.78).abs() < 1e-6);
        let oracle = (0.17 / 0.8 + 0.61 / 3.5) / 0.6425;
        assert!((sc - oracle).abs() < 1e-12);
        assert!((sc - 0.602002).abs() < 1e-6);
    }

    #[test]
    fn projections_match() {
        let p = project_p(&Y, &env());
        assert!((p[0] - 0.2886).abs() < 1e-6 && (p[1] - 0.4914).abs() < 1e-6);
        let pc = project_pcheck(&Y, &env());
        let sc = (0.17 / 0.8 + 0.61 / 3.5) / 0.6425;
        assert!((pc[0] - 0.37 * sc).abs() < 1e-12);
        assert!((pc[0] - 0.222741).abs() < 1e-6 && (pc[1] - 0.379261).abs() < 1e-6);
    }

    #[test]
    fn delta_and_h_match() {
        let d = delta(&Y, &env());
        assert!((d[0] + 0.1186).abs() < 1e-6 && (d[1] - 0.1186).abs() < 1e-6);
        let h = lyapunov_h(&Y, &env());
        let oracle = 0.1186f64.powi(2) * (1.0 / 0.37 + 1.0 / 0.63);
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.060343).abs() < 1e-6);
    }

    #[test]
    fn term2_matches() {
        let law = make_finite_law(&[(0.8, 0.37), (3.5, 0.63)]).unwrap();
        let t = triangle_terms(&Y, &env(), &law, None).unwrap();
        let sc = (0.17 / 0.8 + 0.61 / 3.5) / 0.6425;
        let oracle = (0.78 - sc) * (0.37f64.powi(2) + 0.63f64.powi(2)).sqrt();
        assert!((t.term2 - oracle).abs() < 1e-12);
        assert!((t.term2 - 0.130048).abs() < 1e-6);
        assert!(t.term3.abs() < 1e-12);
        assert!((t.term1 - (2.0 * 0.1186f64.powi(2)).sqrt()).abs() < 1e-12);
    }
}

/// A random environment with up to 8 classes and a point of `Q` inside it.
fn env_and_point() -> impl Strategy<Value = (Environment, Vec<f64>)> {
    prop::collection::vec((0.05f64..20.0, 1u64..200, 0.0f64..=1.0), 1..8).prop_filter_map(
        "distinct rates",
        |rows| {
            let pairs: Vec<(f64, u64)> = rows.iter().map(|r| (r.0, r.1)).collect();
            let env = environment_from_counts(&pairs).ok()?;
            let y = rows
                .iter()
                .zip(env.fractions())
                .map(|(r, n)| r.2 * n)
                .collect();
            Some((env, y))
        },
    )
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projections_are_idempotent((env, y) in env_and_point()) {
        let py = project_p(&y, &env);
        let ppy = project_p(&py, &env);
        let diff: Vec<f64> = ppy.iter().zip(&py).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-12);

        let qy = project_pcheck(&y, &env);
        let qqy = project_pcheck(&qy, &env);
        let diff: Vec<f64> = qqy.iter().zip(&qy).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-12);

        // P_check keeps the weighted mass.
        let (_, sc) = masses(&y, &env).unwrap();
        let (_, sc2) = masses(&qy, &env).unwrap();
        prop_assert!((sc - sc2).abs() <= 1e-12);
    }

    #[test]
    fn delta_sums_to_zero((env, y) in env_and_point()) {
        prop_assert!(delta(&y, &env).iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn lyapunov_bounds((env, y) in env_and_point()) {
        let h = lyapunov_h(&y, &env);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= 1.0 + 1e-12);
        prop_assert!(dist2_p(&y, &env) <= h + 1e-15);
    }

    #[test]
    fn h_vanishes_on_the_line((env, _y) in env_and_point(), s in 0.0f64..=1.0) {
        let on_line: Vec<f64> = env.fractions().iter().map(|n| s * n).collect();
        prop_assert!(lyapunov_h(&on_line, &env) <= 1e-12);
        let py = project_p(&on_line, &env);
        for (a, b) in py.iter().zip(&on_line) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn h_positive_off_the_line((env, y) in env_and_point()) {
        // h(y) = 0 iff y = s n: off the line, h is bounded below by ||y - P y||^2.
        let d2 = dist2_p(&y, &env);
        prop_assume!(d2 > 1e-10);
        prop_assert!(lyapunov_h(&y, &env) > 1e-12);
    }

    #[test]
    fn key_ratio_scales_inverse_square((env, _y) in env_and_point(), c in 0.1f64..10.0) {
        let scaled: Vec<(f64, u64)> = env.classes().iter().map(|k| (k.rate * c, k.count)).collect();
        let scaled = environment_from_counts(&scaled).unwrap();
        let expect = key_ratio(&env) / (c * c);
        prop_assert!((key_ratio(&scaled) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn diffusion_constant_permutation_invariant(
        probs in prop::collection::vec(0.01f64..1.0, 1..10),
        seed in any::<u64>(),
    ) {
        let total: f64 = probs.iter().sum();
        let pairs: Vec<(f64, f64)> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| (0.5 + i as f64, p / total))
            .collect();
        prop_assume!(make_finite_law(&pairs).is_ok());
        let law = make_finite_law(&pairs).unwrap();
        let mut shuffled = pairs.clone();
        let rot = (seed % pairs.len() as u64) as usize;
        shuffled.rotate_left(rot);
        shuffled.reverse();
        let other = make_finite_law(&shuffled).unwrap();
        let (a, b) = (diffusion_constant(&law), diffusion_constant(&other));
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn power_condition_i_iff_beta_below_chi_minus_one(
        chi in 2.5f64..8.0,
        alpha in 0.1f64..50.0,
        beta in 0.1f64..10.0,
    ) {
        let law = make_power_law(chi, 1e-6).unwrap();
        prop_assert_eq!(check_condition_i(&law, alpha, beta).satisfied, beta < chi - 1.0);
    }

    #[test]
    fn corollary_a_monotone(
        alpha in 0.5f64..200.0, beta in 0.5f64..200.0,
        gamma in 0.01f64..1.0, delta in 0.01f64..1.0,
        shrink in 0.0f64..1.0, grow in 1.0f64..5.0,
    ) {
        if check_corollary_a(alpha, beta, gamma, delta) {
            prop_assert!(check_corollary_a(alpha * grow, beta * grow, gamma * shrink, delta * shrink));
        }
    }
}
