//! Cross-checks against independent oracles: statrs special functions,
//! brute-force enumeration, dense grids and closed forms.

use proptest::prelude::*;
use rbl_core::ambiguity::pareto_induced_mad;
use rbl_core::bundling::{best_bundle_price, bundling_revenue, epsilon_star_price};
use rbl_core::numeric::binomial::{ln_pmf, upper_tail};
use rbl_core::numeric::search::linspace;
use rbl_core::robust_solvers::{
    best_response_price, maximin_bundling_value, minimax_bundling_value, worst_case_alpha, SolverConfig,
};
use rbl_core::sum_law::{iid_tail_prob, iid_two_point_sum, product_sum, DEFAULT_PRODUCT_CAP};
use rbl_core::{make_pareto_member, make_two_point, MeanMadSpec, TwoPointDist};
use statrs::distribution::{Binomial, Discrete};
use statrs::function::beta::beta_reg;

fn spec(mu: f64, d: f64) -> MeanMadSpec {
    MeanMadSpec::new(mu, d).unwrap()
}

// Brute force over all 2^m outcomes.
fn enumerate_sum(dists: &[TwoPointDist]) -> Vec<(f64, f64)> {
    let m = dists.len();
    let mut out = Vec::new();
    for mask in 0..(1u32 << m) {
        let mut value = 0.0;
        let mut prob = 1.0;
        for (i, t) in dists.iter().enumerate() {
            if mask >> i & 1 == 1 {
                value += t.high();
                prob *= t.one_minus_alpha();
            } else {
                value += t.low();
                prob *= t.alpha();
            }
        }
        out.push((value, prob));
    }
    out
}

fn brute_tail(outcomes: &[(f64, f64)], p: f64) -> f64 {
    outcomes.iter().filter(|o| o.0 >= p * (1.0 - 1e-12)).map(|o| o.1).sum()
}

#[test]
fn binomial_tail_matches_regularized_beta() {
    for &(n, p) in &[(10u64, 0.3), (200, 0.01), (5000, 0.5), (100_000, 1e-4), (40, 0.97)] {
        for k in [1, n / 10, n / 2, n - 1].into_iter().filter(|&k| k >= 1 && k <= n) {
            let ours = upper_tail(k, n, p, 1.0 - p);
            let oracle = beta_reg(k as f64, (n - k + 1) as f64, p);
            let tol = 1e-10 * oracle.max(1e-300) + 1e-300;
            assert!((ours - oracle).abs() <= tol.max(1e-13 * oracle), "n={n} p={p} k={k}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn binomial_log_pmf_matches_statrs() {
    for &(n, p) in &[(7u64, 0.25), (1000, 0.4), (100_000, 0.001)] {
        let oracle = Binomial::new(p, n).unwrap();
        for k in [0, 1, n / 3, n / 2, n] {
            let ours = ln_pmf(k, n, p, 1.0 - p);
            let want = oracle.ln_pmf(k);
            assert!((ours - want).abs() <= 1e-9 * want.abs().max(1.0), "n={n} k={k}: {ours} vs {want}");
        }
    }
}

#[test]
fn iid_law_matches_enumeration() {
    let s = spec(1.0, 0.5);
    for &alpha in &[0.3, 0.5, 0.9] {
        let t = make_two_point(s, alpha).unwrap();
        for m in 1..=8 {
            let law = iid_two_point_sum(&t, m).unwrap();
            let outcomes = enumerate_sum(&vec![t; m]);
            for &p in &linspace(0.0, law.support().last().unwrap() * 1.05, 97) {
                let got = iid_tail_prob(&t, m, p);
                let want = brute_tail(&outcomes, p);
                assert!((got - want).abs() < 1e-12, "alpha={alpha} m={m} p={p}");
            }
        }
    }
}

#[test]
fn product_law_matches_enumeration() {
    let s = spec(2.0, 1.2);
    let dists: Vec<TwoPointDist> = [0.35, 0.5, 0.8, 0.95, 0.6].iter().map(|&a| make_two_point(s, a).unwrap()).collect();
    let law = product_sum(&dists, DEFAULT_PRODUCT_CAP).unwrap();
    let outcomes = enumerate_sum(&dists);
    for &p in law.support() {
        let got = bundling_revenue(p, &law).unwrap().sell_prob;
        assert!((got - brute_tail(&outcomes, p)).abs() < 1e-12);
    }
    let best = best_bundle_price(&law);
    let brute_best = outcomes.iter().map(|o| o.0 * brute_tail(&outcomes, o.0)).fold(0.0, f64::max);
    assert!((best.revenue - brute_best).abs() < 1e-12);
}

#[test]
fn pareto_mad_quadrature_matches_closed_form() {
    for &a in &[1.05, 1.2, 1.5, 1.8, 2.0] {
        let d = pareto_induced_mad(1.0, a);
        let member = make_pareto_member(spec(1.0, d), a).unwrap();
        assert!((member.mad() - d).abs() < 1e-9, "a={a}: {} vs {d}", member.mad());
        assert!((member.mean() - 1.0).abs() < 1e-12);
    }
}

// Nature's reply on a very dense alpha grid, evaluated from the materialized law.
fn dense_worst_case(s: MeanMadSpec, m: usize, p: f64) -> f64 {
    let lo = s.min_alpha();
    linspace(lo, 1.0 - 1e-9, 20_001)
        .into_iter()
        .map(|a| {
            let t = make_two_point(s, a).unwrap();
            let law = iid_two_point_sum(&t, m).unwrap();
            bundling_revenue(p, &law).unwrap().revenue / m as f64
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn worst_case_reply_against_dense_grid() {
    let s = spec(1.0, 0.5);
    let cfg = SolverConfig::default();
    for &(m, p) in &[(1usize, 0.5), (3, 2.0), (5, 3.4), (10, 7.0)] {
        let solver = worst_case_alpha(s, m, p, &cfg).unwrap().value;
        let dense = dense_worst_case(s, m, p);
        // the dense grid can only overshoot the infimum; the solver should not trail it
        assert!(solver <= dense + 1e-9, "m={m} p={p}: {solver} vs {dense}");
        assert!(solver >= dense - 1e-3, "m={m} p={p}: {solver} vs {dense}");
    }
}

#[test]
fn maximin_against_price_alpha_grid() {
    let s = spec(1.0, 0.5);
    let cfg = SolverConfig::default();
    for &m in &[1usize, 4] {
        let value = maximin_bundling_value(s, m, &cfg).unwrap().value;
        let prices = linspace(0.0, m as f64, 801);
        let oracle = prices
            .iter()
            .map(|&p| {
                linspace(s.min_alpha(), 1.0 - 1e-9, 2001)
                    .into_iter()
                    .map(|a| {
                        let t = make_two_point(s, a).unwrap();
                        p * iid_tail_prob(&t, m, p) / m as f64
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((value - oracle).abs() < 2e-3, "m={m}: {value} vs {oracle}");
    }
    // single good: the seller's best guarantee is p (1 - alpha) at the low point 0
    let one = maximin_bundling_value(s, 1, &cfg).unwrap();
    assert!((one.value - 0.25).abs() < 1e-6);
}

#[test]
fn best_response_is_the_best_support_price() {
    let s = spec(1.0, 0.8);
    for &q in &[1e-6, 1e-3, 0.1, 0.5] {
        let t = TwoPointDist::from_one_minus_alpha(s, q).unwrap();
        for m in [1usize, 6, 40] {
            let reply = best_response_price(s, m, q).unwrap();
            let law = iid_two_point_sum(&t, m).unwrap();
            let brute = law.support().iter().map(|&p| p * iid_tail_prob(&t, m, p)).fold(0.0, f64::max);
            assert!((reply.revenue - brute).abs() <= 1e-12 * brute.max(1.0), "q={q} m={m}");
        }
    }
}

#[test]
fn minimax_single_good_closed_form() {
    // m = 1: nature picks alpha to minimize max(x, (1 - alpha) y)
    let s = spec(1.0, 0.5);
    let value = minimax_bundling_value(s, 1, &SolverConfig::default()).unwrap().value;
    let oracle = linspace(s.min_alpha(), 1.0 - 1e-9, 200_001)
        .into_iter()
        .map(|a| {
            let t = make_two_point(s, a).unwrap();
            t.low().max(t.one_minus_alpha() * t.high())
        })
        .fold(f64::INFINITY, f64::min);
    // the crossing x = (1 - alpha) y solves mu alpha^2 - (d/2) alpha - d/2 = 0
    let alpha = (0.25 + (0.0625f64 + 1.0).sqrt()) / 2.0;
    let exact = 1.0 - 0.25 / alpha;
    assert!(value <= oracle + 1e-12, "{value} vs {oracle}");
    assert!((value - exact).abs() < 1e-9, "{value} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn robust_price_guarantee_is_below_every_reply(
        eps in 0.05f64..0.6,
        alpha_u in 0.0f64..1.0,
        m in 50usize..400,
    ) {
        let s = spec(1.0, 0.5);
        let p = epsilon_star_price(s, m, eps).unwrap();
        let alpha = s.min_alpha() + alpha_u * (1.0 - 1e-9 - s.min_alpha());
        let t = make_two_point(s, alpha).unwrap();
        let sell = iid_tail_prob(&t, m, p);
        let f = rbl_core::concentration::concentration_constant(s, eps, false).unwrap().f;
        prop_assert!(sell >= 1.0 - f / m as f64 - 1e-12);
    }

    #[test]
    fn tail_probability_is_monotone(alpha in 0.26f64..0.999, m in 1usize..300, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let s = spec(1.0, 0.5);
        let t = make_two_point(s, alpha).unwrap();
        let top = m as f64 * t.high();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(iid_tail_prob(&t, m, lo * top) >= iid_tail_prob(&t, m, hi * top));
    }
}
