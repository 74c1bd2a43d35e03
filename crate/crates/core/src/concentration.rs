//! One-sided concentration of `Y = X_1 + ... + X_m` for independent members
//! of a mean–MAD set, with an explicit constant.
//!
//! For `0 < eps < 1 - d/(2 mu)` the bound reads
//! `P(Y >= (1-eps)^2 m (mu - d/(2(1-eps)))) >= 1 - f(eps)/m`
//! where `f = t^2 / (4 (L_t - c_eps)^2)` for a truncation level `t`,
//! `L_t = (1 - d/(2(t - mu))) mu - d/2` and `c_eps = (1-eps)((1-eps) mu - d/2)`.
//! The default `t = mu + d/(2 eps)` collapses this to
//! `t^2 / (4 (eps ((1-eps) mu - d/2))^2)`.

use serde::Serialize;

use crate::ambiguity::{verify_membership, MeanMadSpec, MemberDist, TwoPointDist};
use crate::error::{Error, Result};
use crate::numeric::search::{argmin, golden_min, logspace};
use crate::sum_law::{group_slots, sample_grouped};

/// Smallest Monte Carlo sample accepted by [`concentration_check_mc`].
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Moment tolerance applied to members before sampling.
pub const MC_MEMBERSHIP_TOL: f64 = 1e-6;

fn check_truncation(spec: MeanMadSpec, t: f64) -> Result<()> {
    let lower = spec.mu() + 0.5 * spec.d();
    if !(t >= lower) {
        return Err(Error::TruncationTooLow { t, lower });
    }
    Ok(())
}

/// `d mu / (2 (t - mu)) + d/2`, an upper bound on `E[X 1{X >= t}]` over the set.
pub fn tail_truncation_bound(spec: MeanMadSpec, t: f64) -> Result<f64> {
    check_truncation(spec, t)?;
    Ok(spec.d() * spec.mu() / (2.0 * (t - spec.mu())) + 0.5 * spec.d())
}

/// Exact `sup E[X 1{X >= t}]` over the set: `min(mu, d mu / (2 (t - mu)) + d/2)`.
///
/// The second term is only reachable while `d / (2 (t - mu))` is an admissible
/// high-point mass; closer to the mean the supremum saturates at `mu`.
pub fn tail_truncation_sup(spec: MeanMadSpec, t: f64) -> Result<f64> {
    let bound = tail_truncation_bound(spec, t)?;
    Ok(bound.min(spec.mu()))
}

/// Two-point member attaining [`tail_truncation_sup`].
pub fn tail_truncation_attainer(spec: MeanMadSpec, t: f64) -> Result<TwoPointDist> {
    check_truncation(spec, t)?;
    let q = (spec.d() / (2.0 * (t - spec.mu()))).min(spec.max_one_minus_alpha());
    TwoPointDist::from_one_minus_alpha(spec, q)
}

/// Chebyshev bound `P(Y <= (1 - gamma) m mu) <= sigma2 / ((gamma mu)^2 m)`, uncapped.
pub fn chebyshev_lower_tail(mu: f64, sigma2: f64, m: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::GammaOutOfRange { gamma });
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::ParamOutOfRange { name: "sigma2", value: sigma2, reason: "variance must be >= 0" });
    }
    if !(mu > 0.0) || m == 0 {
        return Err(Error::ParamOutOfRange { name: "mu", value: mu, reason: "need mu > 0 and m >= 1" });
    }
    Ok(sigma2 / ((gamma * mu).powi(2) * m as f64))
}

/// Explicit constant of the concentration bound, optionally with the event size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationCertificate {
    pub mu: f64,
    pub d: f64,
    pub eps: f64,
    pub t: f64,
    pub f: f64,
    /// Event boundary divided by `m`: `(1-eps)^2 (mu - d/(2(1-eps)))`.
    pub threshold_per_good: f64,
    pub m: Option<usize>,
    pub threshold: Option<f64>,
    pub bound: Option<f64>,
    pub t_optimized: bool,
}

impl ConcentrationCertificate {
    /// Fills in `threshold = m * threshold_per_good` and `bound = max(0, 1 - f/m)`.
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self.threshold = Some(self.threshold_per_good * m as f64);
        self.bound = Some((1.0 - self.f / m as f64).clamp(0.0, 1.0));
        self
    }
}

fn check_eps(spec: MeanMadSpec, eps: f64) -> Result<()> {
    let upper = spec.max_one_minus_alpha();
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::EpsOutOfRange { eps, upper });
    }
    Ok(())
}

/// `f(t)` for a truncation level `t >= mu + d/(2 eps)`.
pub fn constant_at_truncation(spec: MeanMadSpec, eps: f64, t: f64) -> Result<f64> {
    check_eps(spec, eps)?;
    let (mu, d) = (spec.mu(), spec.d());
    let t_min = mu + d / (2.0 * eps);
    if !(t >= t_min * (1.0 - 1e-15)) {
        return Err(Error::TruncationTooLow { t, lower: t_min });
    }
    let level = (1.0 - d / (2.0 * (t - mu))) * mu - 0.5 * d;
    let keep = 1.0 - eps;
    let c = keep * (keep * mu - 0.5 * d);
    Ok(t * t / (4.0 * (level - c).powi(2)))
}

/// Constant for `eps`; with `optimize_t` the truncation level minimizes `f` instead of being the smallest admissible one.
pub fn concentration_constant(spec: MeanMadSpec, eps: f64, optimize_t: bool) -> Result<ConcentrationCertificate> {
    check_eps(spec, eps)?;
    let (mu, d) = (spec.mu(), spec.d());
    let keep = 1.0 - eps;
    let t_min = mu + d / (2.0 * eps);
    let f_min = t_min * t_min / (4.0 * (eps * (keep * mu - 0.5 * d)).powi(2));
    let (t, f) = if optimize_t { optimize_truncation(spec, eps, t_min, f_min) } else { (t_min, f_min) };
    Ok(ConcentrationCertificate {
        mu,
        d,
        eps,
        t,
        f,
        threshold_per_good: keep * keep * (mu - d / (2.0 * keep)),
        m: None,
        threshold: None,
        bound: None,
        t_optimized: optimize_t,
    })
}

fn optimize_truncation(spec: MeanMadSpec, eps: f64, t_min: f64, f_min: f64) -> (f64, f64) {
    let eval = |t: f64| constant_at_truncation(spec, eps, t).unwrap_or(f64::INFINITY);
    // f grows like t^2 far out, so a few decades above t_min suffice
    let grid = logspace(t_min, t_min * 1e4, 2000);
    let values: Vec<f64> = grid.iter().map(|&t| eval(t)).collect();
    let i = argmin(&values).unwrap_or(0);
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (t, f) = golden_min(eval, lo, hi, 1e-12 * hi);
    if f < f_min {
        (t, f)
    } else {
        (t_min, f_min)
    }
}

/// Outcome of a Monte Carlo check of the concentration bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McReport {
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub f: f64,
    pub threshold: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_error: f64,
    pub pass: bool,
}

/// Estimates `P(Y >= threshold)` from `n` seeded draws and compares it with `1 - f/m`.
///
/// Members are assigned to the `m` slots cyclically. The check passes when the
/// estimate is at least the bound minus three binomial standard errors.
pub fn concentration_check_mc(
    spec: MeanMadSpec,
    members: &[MemberDist],
    m: usize,
    eps: f64,
    n: usize,
    seed: u64,
    optimize_t: bool,
) -> Result<McReport> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::ParamOutOfRange { name: "n", value: n as f64, reason: "need at least 10^4 samples" });
    }
    if m == 0 || members.is_empty() {
        return Err(Error::ParamOutOfRange { name: "m", value: m as f64, reason: "need m >= 1 and a member" });
    }
    for (index, member) in members.iter().enumerate() {
        let report = verify_membership(member, spec, MC_MEMBERSHIP_TOL);
        if !report.ok {
            return Err(Error::MembershipViolation {
                index,
                mu: spec.mu(),
                d: spec.d(),
                mean: report.mean,
                mad: report.mad,
            });
        }
    }
    let cert = concentration_constant(spec, eps, optimize_t)?.with_m(m);
    let threshold = cert.threshold.unwrap_or(0.0);
    let bound = cert.bound.unwrap_or(0.0);
    let slots: Vec<MemberDist> = (0..m).map(|i| members[i % members.len()]).collect();
    let groups = group_slots(&slots);
    let draws = sample_grouped(&groups, seed, n);
    let hits = draws.iter().filter(|&&y| y >= threshold).count();
    let empirical = hits as f64 / n as f64;
    let std_error = (empirical * (1.0 - empirical) / n as f64).sqrt();
    Ok(McReport {
        m,
        n,
        eps,
        f: cert.f,
        threshold,
        empirical,
        bound,
        std_error,
        pass: empirical >= bound - 3.0 * std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::make_two_point;
    use crate::numeric::search::linspace;

    fn spec() -> MeanMadSpec {
        MeanMadSpec::new(1.0, 0.5).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(tail_truncation_sup(spec(), 2.0).unwrap(), 0.5);
        assert!((tail_truncation_sup(spec(), 1e12).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(tail_truncation_sup(spec(), 1.2), Err(Error::TruncationTooLow { .. })));
        // between mu + d/2 and mu + d mu / (2 mu - d) the formula exceeds mu
        assert!(tail_truncation_bound(spec(), 1.3).unwrap() > 1.0);
        assert_eq!(tail_truncation_sup(spec(), 1.3).unwrap(), 1.0);
    }

    #[test]
    fn attainer_reaches_the_supremum() {
        for t in linspace(1.25, 20.0, 50) {
            let a = tail_truncation_attainer(spec(), t).unwrap();
            assert!(a.high() >= t * (1.0 - 1e-15));
            let reached = a.high() * a.one_minus_alpha();
            assert!((reached - tail_truncation_sup(spec(), t).unwrap()).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn chebyshev_examples() {
        assert!((chebyshev_lower_tail(1.0, 1.0, 100, 0.5).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(chebyshev_lower_tail(1.0, 0.0, 100, 0.5).unwrap(), 0.0);
        assert!(chebyshev_lower_tail(1.0, 1.0, 1_000_000_000, 0.5).unwrap() < 1e-8);
        assert_eq!(chebyshev_lower_tail(1.0, 1.0, 1, 1.0), Err(Error::GammaOutOfRange { gamma: 1.0 }));
    }

    #[test]
    fn constant_examples() {
        let c = concentration_constant(spec(), 0.2, false).unwrap();
        assert!((c.t - 2.25).abs() < 1e-15);
        assert!((c.f - 2.25f64.powi(2) / (4.0 * 0.11f64.powi(2))).abs() < 1e-10);
        assert!((c.f - 104.60).abs() < 0.01);
        assert!((c.threshold_per_good - 0.44).abs() < 1e-15);
        assert!(matches!(concentration_constant(spec(), 0.75, false), Err(Error::EpsOutOfRange { .. })));
        let c = c.with_m(10_000);
        assert!((c.bound.unwrap() - (1.0 - c.f / 1e4)).abs() < 1e-15);
        assert_eq!(concentration_constant(spec(), 0.2, false).unwrap().with_m(1).bound, Some(0.0));
    }

    #[test]
    fn general_truncation_matches_default_at_smallest_level() {
        for &eps in &[0.01, 0.2, 0.5, 0.7] {
            let c = concentration_constant(spec(), eps, false).unwrap();
            let g = constant_at_truncation(spec(), eps, c.t).unwrap();
            assert!((g - c.f).abs() <= 1e-9 * c.f);
        }
    }

    #[test]
    fn optimized_truncation_never_hurts() {
        for &eps in &[0.01, 0.1, 0.2, 0.5, 0.7] {
            let plain = concentration_constant(spec(), eps, false).unwrap();
            let best = concentration_constant(spec(), eps, true).unwrap();
            assert!(best.f <= plain.f);
            assert!(best.t >= plain.t);
        }
    }

    #[test]
    fn bound_increases_with_m() {
        let c = concentration_constant(spec(), 0.2, false).unwrap();
        let bounds: Vec<f64> = [10, 100, 1000, 10_000, 100_000].iter().map(|&m| c.with_m(m).bound.unwrap()).collect();
        assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
        assert!(bounds[4] > 0.99);
    }

    #[test]
    fn conditional_mean_below_truncation_is_bounded() {
        // E[X | X < t] >= (1 - eps) mu - d/2 whenever d / (2 (t - mu)) <= eps
        for &eps in &[0.05, 0.2, 0.5] {
            let t_min = 1.0 + 0.5 / (2.0 * eps);
            for t in linspace(t_min, 10.0 * t_min, 40) {
                for alpha in linspace(0.25, 0.999_999, 200) {
                    let a = make_two_point(spec(), alpha).unwrap();
                    let (num, den) = if a.high() < t { (a.mean(), 1.0) } else { (a.alpha() * a.low(), a.alpha()) };
                    let cond = num / den;
                    assert!(cond >= (1.0 - eps) - 0.25 - 1e-12, "eps={eps} t={t} alpha={alpha}");
                }
            }
        }
    }

    #[test]
    fn mc_rejects_non_members_and_small_samples() {
        let bad = MemberDist::three_point(spec(), [0.0, 1.0, 2.0], [0.3, 0.4, 0.3]).unwrap();
        let err = concentration_check_mc(spec(), &[bad], 10, 0.2, 10_000, 1, false).unwrap_err();
        assert!(matches!(err, Error::MembershipViolation { index: 0, .. }));
        let good = MemberDist::TwoPoint(make_two_point(spec(), 0.5).unwrap());
        assert!(concentration_check_mc(spec(), &[good], 10, 0.2, 100, 1, false).is_err());
    }

    #[test]
    fn mc_is_vacuous_at_one_good() {
        let good = MemberDist::TwoPoint(make_two_point(spec(), 0.5).unwrap());
        let r = concentration_check_mc(spec(), &[good], 1, 0.2, 10_000, 3, false).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.pass);
    }
}
