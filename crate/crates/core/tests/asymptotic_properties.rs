//! Finite-m properties of the asymptotic bound chains and empirical objectives.

use proptest::prelude::*;
use rbl_core::asymptotics::{
    ratio_bound_chain, ratio_empirical, regret_at_price, regret_bound_chain, regret_empirical, schedule, xi_gap,
    OptHandling,
};
use rbl_core::bundling::epsilon_star_price;
use rbl_core::robust_solvers::{minimax_bundling_value, SolverConfig};
use rbl_core::MeanMadSpec;

fn spec(mu: f64, d: f64) -> MeanMadSpec {
    MeanMadSpec::new(mu, d).unwrap()
}

#[test]
fn large_m_ratio_respects_the_lower_chain() {
    let s = spec(1.0, 0.5);
    let cfg = SolverConfig { alpha_grid: 512, price_grid: 256, ..SolverConfig::default() };
    let m = 10_000;
    let r = ratio_empirical(s, m, &cfg).unwrap();
    assert_eq!(r.mode, OptHandling::Bounded);
    assert!(r.lower <= r.upper + 1e-12, "{r:?}");
    for eps in [0.05, 0.1, 0.2] {
        let chain = ratio_bound_chain(s, m, eps, None).unwrap();
        assert!(r.value >= chain.lower, "eps={eps}: {} < {}", r.value, chain.lower);
        assert!(r.value <= chain.upper, "eps={eps}: {} > {}", r.value, chain.upper);
    }
}

#[test]
fn regret_of_the_robust_price_is_within_the_chain() {
    let s = spec(1.0, 0.5);
    let cfg = SolverConfig::default();
    let m = 10_000;
    for eps in [0.05, 0.1, 0.2] {
        let p = epsilon_star_price(s, m, eps).unwrap();
        let regret = regret_at_price(s, m, p, &cfg).unwrap();
        let chain = regret_bound_chain(s, m, eps, 0.1).unwrap();
        assert!(regret <= chain.upper, "eps={eps}: {regret} > {}", chain.upper);
    }
    let r = regret_empirical(s, m, &SolverConfig { alpha_grid: 512, price_grid: 256, ..cfg }).unwrap();
    assert!(r.lower <= r.upper + 1e-12, "{r:?}");
    assert!(r.value >= 0.25 - 0.01, "{r:?}");
}

#[test]
fn exact_modes_for_small_m() {
    let s = spec(1.0, 0.5);
    let cfg = SolverConfig { alpha_grid: 128, price_grid: 128, ..SolverConfig::default() };
    for m in 1..=3 {
        let ratio = ratio_empirical(s, m, &cfg).unwrap();
        let regret = regret_empirical(s, m, &cfg).unwrap();
        assert_eq!(ratio.mode, OptHandling::ExactOracle);
        assert!(ratio.value > 0.0 && ratio.value <= 1.0, "{ratio:?}");
        assert!(regret.value >= 0.0 && regret.value <= 1.0, "{regret:?}");
        assert_eq!(ratio.lower, ratio.upper);
    }
}

#[test]
fn minimax_clears_the_gap_across_large_d() {
    let cfg = SolverConfig::default();
    for d in [1.2, 1.5, 1.8] {
        let s = spec(1.0, d);
        let xi = xi_gap(s).unwrap();
        let v = minimax_bundling_value(s, 10_000, &cfg).unwrap().value;
        assert!(v >= 1.0 - d / 2.0 + xi.xi - 1e-4, "d={d}: {v} vs xi {}", xi.xi);
    }
}

#[test]
fn schedule_brackets_tighten_with_m() {
    let s = spec(1.0, 0.5);
    let widths: Vec<f64> = [1e4, 1e6, 1e8, 1e10]
        .iter()
        .map(|&m| {
            let m = m as usize;
            let e = schedule(m);
            let r = regret_bound_chain(s, m, e, e).unwrap();
            r.upper - r.lower
        })
        .collect();
    assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn regret_brackets_are_ordered(
        d_frac in 0.05f64..0.95,
        m_exp in 2.0f64..9.0,
        eps_u in 0.01f64..0.99,
        gamma in 0.01f64..0.99,
    ) {
        let s = spec(1.0, 2.0 * d_frac);
        let eps = eps_u * s.max_one_minus_alpha();
        let m = 10f64.powf(m_exp) as usize;
        let r = regret_bound_chain(s, m, eps, gamma).unwrap();
        prop_assert!(r.lower <= r.upper, "{:?}", r);
    }

    #[test]
    fn ratio_brackets_are_ordered(d_frac in 0.05f64..0.95, m_exp in 2.0f64..9.0, eps_u in 0.01f64..0.99) {
        let s = spec(1.0, 2.0 * d_frac);
        let eps = eps_u * s.max_one_minus_alpha();
        let m = 10f64.powf(m_exp) as usize;
        let r = ratio_bound_chain(s, m, eps, None).unwrap();
        prop_assert!(r.lower <= r.upper, "{:?}", r);
    }
}
