//! Grand-bundle pricing: revenue at a posted price, the best price against a
//! known law, the robust price sequence, and per-good baselines.
//!
//! The buyer takes the bundle whenever the sum of valuations is at least the
//! price, so `p * P(Y >= p)` jumps down just past each support point and the
//! optimum is always attained on the support itself.

use serde::Serialize;

use crate::ambiguity::{make_two_point, MeanMadSpec, TwoPointDist};
use crate::error::{Error, Result};
use crate::numeric::binomial::ln_prob;
use crate::sum_law::{tail_prob, SumLaw};

/// A posted price together with what it earns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricedOutcome {
    pub price: f64,
    pub revenue: f64,
    pub sell_prob: f64,
}

impl PricedOutcome {
    fn at(price: f64, sell_prob: f64) -> Self {
        Self { price, revenue: price * sell_prob, sell_prob }
    }
}

/// Revenue of selling the grand bundle at price `p` against `law`.
pub fn bundling_revenue(p: f64, law: &SumLaw) -> Result<PricedOutcome> {
    if !(p >= 0.0) {
        return Err(Error::NegativePrice { price: p });
    }
    Ok(PricedOutcome::at(p, tail_prob(law, p)))
}

/// Revenue-maximizing bundle price; the lowest maximizer wins ties.
pub fn best_bundle_price(law: &SumLaw) -> PricedOutcome {
    let support = law.support();
    let probs = law.probs();
    // suffix sums from the top keep small tails accurate
    let mut tails = vec![0.0; support.len()];
    let mut acc = 0.0;
    for i in (0..support.len()).rev() {
        acc += probs[i];
        tails[i] = acc;
    }
    let mut best = 0;
    let mut best_rev = f64::NEG_INFINITY;
    for (i, (&s, &t)) in support.iter().zip(&tails).enumerate() {
        let rev = s * t;
        if rev > best_rev {
            best_rev = rev;
            best = i;
        }
    }
    let price = support[best];
    PricedOutcome::at(price, tail_prob(law, price))
}

/// The robust bundle price `(1 - eps)^2 m (mu - d / (2 (1 - eps)))`.
pub fn epsilon_star_price(spec: MeanMadSpec, m: usize, eps: f64) -> Result<f64> {
    let upper = spec.max_one_minus_alpha();
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::EpsOutOfRange { eps, upper });
    }
    let keep = 1.0 - eps;
    Ok(keep * keep * m as f64 * (spec.mu() - spec.d() / (2.0 * keep)))
}

/// Revenue of selling each of `m` goods separately at its best posted price.
pub fn separate_sale_revenue(dist: &TwoPointDist, m: usize) -> f64 {
    m as f64 * dist.low().max(dist.high() * dist.one_minus_alpha())
}

/// Per-good revenue of pricing the bundle at the second-lowest support point `(m-1) x + y`.
pub fn second_point_revenue(spec: MeanMadSpec, alpha: f64, m: usize) -> Result<f64> {
    let dist = make_two_point(spec, alpha)?;
    Ok(second_point_revenue_of(&dist, m))
}

/// [`second_point_revenue`] for an existing member; `1 - alpha^m` via `expm1`.
pub fn second_point_revenue_of(dist: &TwoPointDist, m: usize) -> f64 {
    let mf = m as f64;
    let ln_alpha = ln_prob(dist.alpha(), dist.one_minus_alpha());
    let sell = -(mf * ln_alpha).exp_m1();
    ((mf - 1.0) * dist.low() + dist.high()) * sell / mf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum_law::iid_two_point_sum;
    use proptest::prelude::*;

    fn spec() -> MeanMadSpec {
        MeanMadSpec::new(1.0, 0.5).unwrap()
    }

    fn law123() -> SumLaw {
        SumLaw::new(2, vec![1.0, 2.0, 3.0], vec![0.25, 0.5, 0.25]).unwrap()
    }

    #[test]
    fn revenue_examples() {
        let law = law123();
        assert_eq!(bundling_revenue(2.0, &law).unwrap().revenue, 1.5);
        assert_eq!(bundling_revenue(0.0, &law).unwrap().revenue, 0.0);
        assert_eq!(bundling_revenue(3.0, &law).unwrap().revenue, 0.75);
        assert_eq!(bundling_revenue(-1.0, &law), Err(Error::NegativePrice { price: -1.0 }));
    }

    #[test]
    fn best_price_examples() {
        let best = best_bundle_price(&law123());
        assert_eq!((best.price, best.revenue), (2.0, 1.5));
        let atom = SumLaw::new(1, vec![2.5], vec![1.0]).unwrap();
        assert_eq!(best_bundle_price(&atom).revenue, 2.5);
        let law = SumLaw::new(1, vec![0.0, 4.0 / 3.0], vec![0.25, 0.75]).unwrap();
        let best = best_bundle_price(&law);
        assert_eq!(best.price, 4.0 / 3.0);
        assert!((best.revenue - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_the_lowest_price() {
        // 1 * 1 = 2 * 0.5
        let law = SumLaw::new(1, vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(best_bundle_price(&law).price, 1.0);
    }

    #[test]
    fn epsilon_price_examples() {
        let p = epsilon_star_price(spec(), 1000, 0.1).unwrap();
        assert!((p - 585.0).abs() < 1e-9);
        let small = epsilon_star_price(spec(), 1, 1e-9).unwrap();
        assert!((small - 0.75).abs() < 1e-8);
        assert!(matches!(epsilon_star_price(spec(), 10, 0.8), Err(Error::EpsOutOfRange { .. })));
    }

    #[test]
    fn separate_sale_examples() {
        let t = make_two_point(spec(), 0.5).unwrap();
        assert_eq!(separate_sale_revenue(&t, 1), 0.75);
        assert_eq!(separate_sale_revenue(&t, 10), 7.5);
        let t = make_two_point(spec(), 0.25).unwrap();
        assert!((separate_sale_revenue(&t, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn second_point_examples() {
        let alpha: f64 = 0.4;
        let v = second_point_revenue(spec(), alpha, 1).unwrap();
        assert!((v - ((1.0 - alpha) + 0.25)).abs() < 1e-15);
        let v = second_point_revenue(spec(), 0.5, 2).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        // alpha -> 1 at fixed m drives the whole expression to d/2
        let t = TwoPointDist::from_one_minus_alpha(spec(), 1e-13).unwrap();
        assert!((second_point_revenue_of(&t, 5) - 0.25).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn best_price_dominates_any_price(
            alpha in 0.25f64..0.9999,
            m in 1usize..40,
            prices in prop::collection::vec(0.0f64..1.0, 1000),
        ) {
            let t = make_two_point(spec(), alpha).unwrap();
            let law = iid_two_point_sum(&t, m).unwrap();
            let best = best_bundle_price(&law);
            let top = *law.support().last().unwrap();
            prop_assert!(best.revenue >= law.support()[0] * (1.0 - 1e-12));
            for u in prices {
                let r = bundling_revenue(u * top * 1.1, &law).unwrap().revenue;
                prop_assert!(best.revenue >= r - 1e-12 * best.revenue);
            }
        }

        #[test]
        fn second_point_matches_materialized_law(alpha in 0.25f64..0.999, m in 1usize..60) {
            let t = make_two_point(spec(), alpha).unwrap();
            let law = iid_two_point_sum(&t, m).unwrap();
            let direct = bundling_revenue(law.support()[1], &law).unwrap().revenue;
            let closed = second_point_revenue_of(&t, m) * m as f64;
            prop_assert!((direct - closed).abs() <= 1e-12 * direct.max(1.0));
        }

        #[test]
        fn robust_price_stays_below_limit(eps in 1e-6f64..0.7499) {
            let per_good = epsilon_star_price(spec(), 7, eps).unwrap() / 7.0;
            prop_assert!(per_good < 0.75);
        }
    }
}
