//! Limits of the robust objectives and the finite-`m` bound chains that
//! converge to them.
//!
//! * max-min and min-max per-good revenue tend to `mu - d/2`;
//! * the ratio to the optimal mechanism tends to `1 - d/(2 mu)`;
//! * the per-good regret tends to `d/2`;
//! * for `mu < d < 2 mu`, i.i.d. two-point nature cannot push the min-max
//!   below `mu - d/2 + xi` for an explicit `xi > 0` built from
//!   `g(lambda) = (1 - e^{-1/lambda}) (mu + (lambda - 1) d/2)`.
//!
//! Joint limits use the schedule `eps = gamma = m^{-1/4}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::ambiguity::{MeanMadSpec, TwoPointDist};
use crate::bundling::{best_bundle_price, epsilon_star_price, separate_sale_revenue};
use crate::concentration::concentration_constant;
use crate::error::{Error, Result};
use crate::numeric::search::{argmin, golden_min, linspace, logspace};
use crate::opt_oracle::{opt_deterministic, OptMode, SYMMETRIC_CAP};
use crate::robust_solvers::{maximin_bundling_value, worst_case_alpha, SolverConfig};
use crate::sum_law::{iid_tail_prob, iid_two_point_sum};

/// Closed-form limits for one ambiguity set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticTargets {
    pub mu: f64,
    pub d: f64,
    pub maximin_limit: f64,
    pub ratio_limit: f64,
    pub regret_limit: f64,
    pub minimax_upper: f64,
}

impl AsymptoticTargets {
    pub fn new(spec: MeanMadSpec) -> Self {
        let (mu, d) = (spec.mu(), spec.d());
        let maximin_limit = mu - 0.5 * d;
        let regret_limit = 0.5 * d;
        Self {
            mu,
            d,
            maximin_limit,
            ratio_limit: 1.0 - d / (2.0 * mu),
            regret_limit,
            minimax_upper: maximin_limit.max(regret_limit),
        }
    }
}

/// The joint-limit schedule `m^{-1/4}` used for both `eps` and `gamma`.
pub fn schedule(m: usize) -> f64 {
    (m as f64).powf(-0.25)
}

/// `g(lambda) = (1 - e^{-1/lambda}) (mu + (lambda - 1) d/2)`.
pub fn g_lambda(spec: MeanMadSpec, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::LambdaOutOfRange { lambda });
    }
    Ok(-(-1.0 / lambda).exp_m1() * (spec.mu() + (lambda - 1.0) * 0.5 * spec.d()))
}

/// Variance of the two-point member whose low point is 0.
pub fn variance_g(spec: MeanMadSpec) -> f64 {
    let (mu, d) = (spec.mu(), spec.d());
    let w = d / (2.0 * mu);
    w * mu * mu + (1.0 - w) * (d * mu / (2.0 * mu - d)).powi(2)
}

/// Constants of the min-max gap for `mu < d < 2 mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiGap {
    pub gamma: f64,
    pub tau0: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub xi: f64,
    /// Where `g(lambda) - (mu - d/2)` was smallest on `[tau0, LAMBDA_MAX]`.
    pub lambda_at_min: f64,
    /// Lower bound of `g(lambda) - (mu - d/2)` for every `lambda >= LAMBDA_MAX`.
    pub tail_lower: f64,
    /// True when `tail_lower` exceeds the minimum found on the finite range.
    pub tail_irrelevant: bool,
}

/// Right end of the finite `lambda` range searched for `xi1`.
pub const LAMBDA_MAX: f64 = 1e6;
const LAMBDA_GRID: usize = 10_000;

/// Explicit `xi = min(xi0, xi1) > 0` for `mu < d < 2 mu`.
///
/// `gamma = 1 - d/(1.98 mu)` and `tau0 = 0.01 (2 gamma mu / d)^2` are the
/// largest values meeting their defining inequalities; `xi0 = d - mu`;
/// `xi1` minimizes `g(lambda) - (mu - d/2)` over `[tau0, 1e6]` on a log grid
/// with golden refinement. Beyond `1e6`, `1 - e^{-u} >= u - u^2/2` gives
/// `g(lambda) >= d/2 - (1.5 |mu - d/2| + d/4) / lambda`.
pub fn xi_gap(spec: MeanMadSpec) -> Result<XiGap> {
    let (mu, d) = (spec.mu(), spec.d());
    if !(d > mu && d < 2.0 * mu) {
        return Err(Error::RangeError { what: "xi gap", mu, d });
    }
    let gamma = 1.0 - d / (1.98 * mu);
    let tau0 = 0.01 * (2.0 * gamma * mu / d).powi(2);
    let xi0 = d - mu;
    let base = mu - 0.5 * d;
    let gap = |lambda: f64| g_lambda(spec, lambda).map(|g| g - base).unwrap_or(f64::INFINITY);
    let grid = logspace(tau0, LAMBDA_MAX, LAMBDA_GRID);
    let values: Vec<f64> = grid.par_iter().map(|&l| gap(l)).collect();
    let i = argmin(&values).unwrap_or(0);
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (s, v) = golden_min(|s| gap(s.exp()), lo.ln(), hi.ln(), 1e-12);
    let (lambda_at_min, mut xi1) = if v < values[i] { (s.exp(), v) } else { (grid[i], values[i]) };
    let tail_lower = 0.5 * d - (1.5 * base.abs() + 0.25 * d) / LAMBDA_MAX - base;
    let tail_irrelevant = tail_lower > xi1;
    if !tail_irrelevant {
        xi1 = tail_lower;
    }
    Ok(XiGap { gamma, tau0, xi0, xi1, xi: xi0.min(xi1), lambda_at_min, tail_lower, tail_irrelevant })
}

/// Ratio brackets at finite `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBounds {
    pub lower: f64,
    pub upper: f64,
    pub eps: f64,
    /// The `gamma` used in the upper bracket (the grid minimizer when none was given).
    pub gamma: f64,
    pub variance: f64,
}

fn ratio_upper_at(spec: MeanMadSpec, m: usize, gamma: f64, variance: f64) -> f64 {
    let (mu, d) = (spec.mu(), spec.d());
    let bracket = 1.0 - variance / ((gamma * mu).powi(2) * m as f64);
    if bracket <= 0.0 {
        return f64::INFINITY;
    }
    (2.0 * mu - d) / (2.0 * mu) / ((1.0 - gamma) * bracket)
}

fn robust_guarantee(spec: MeanMadSpec, m: usize, eps: f64) -> Result<f64> {
    let price = epsilon_star_price(spec, m, eps)?;
    let f = concentration_constant(spec, eps, false)?.f;
    Ok(price / m as f64 * (1.0 - f / m as f64).max(0.0))
}

/// Lower bracket from the robust price, upper bracket from a Chebyshev
/// argument against the member with low point 0.
///
/// With `gamma = None` the upper bracket is minimized over `gamma` in `(0, 1)`.
pub fn ratio_bound_chain(spec: MeanMadSpec, m: usize, eps: f64, gamma: Option<f64>) -> Result<RatioBounds> {
    if m == 0 {
        return Err(Error::ParamOutOfRange { name: "m", value: 0.0, reason: "need at least one good" });
    }
    let lower = robust_guarantee(spec, m, eps)? / spec.mu();
    let variance = variance_g(spec);
    let (gamma, upper) = match gamma {
        Some(g) => {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::GammaOutOfRange { gamma: g });
            }
            (g, ratio_upper_at(spec, m, g, variance))
        }
        None => {
            let grid = logspace(1e-6, 0.999, 2000);
            let values: Vec<f64> = grid.iter().map(|&g| ratio_upper_at(spec, m, g, variance)).collect();
            let i = argmin(&values).unwrap_or(0);
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            let (g, v) = golden_min(|g| ratio_upper_at(spec, m, g, variance), lo, hi, 1e-12);
            if v < values[i] {
                (g, v)
            } else {
                (grid[i], values[i])
            }
        }
    };
    Ok(RatioBounds { lower, upper, eps, gamma, variance })
}

/// Regret brackets at finite `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBounds {
    pub upper: f64,
    pub lower: f64,
    pub eps: f64,
    pub gamma: f64,
}

/// Upper bracket from the robust price; lower bracket from the case analysis
/// `min{(1-gamma) mu (1 - g/((gamma mu)^2 m)) - (mu - d/2), max(mu - d/2, d/2)}`.
pub fn regret_bound_chain(spec: MeanMadSpec, m: usize, eps: f64, gamma: f64) -> Result<RegretBounds> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::ParamOutOfRange { name: "gamma", value: gamma, reason: "need 0 < gamma < 1" });
    }
    if m == 0 {
        return Err(Error::ParamOutOfRange { name: "m", value: 0.0, reason: "need at least one good" });
    }
    let (mu, d) = (spec.mu(), spec.d());
    let upper = mu - robust_guarantee(spec, m, eps)?;
    let bracket = 1.0 - variance_g(spec) / ((gamma * mu).powi(2) * m as f64);
    let case_a = (1.0 - gamma) * mu * bracket - (mu - 0.5 * d);
    let lower = case_a.min((mu - 0.5 * d).max(0.5 * d));
    Ok(RegretBounds { upper, lower, eps, gamma })
}

/// How the optimal-mechanism term was handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptHandling {
    /// Exact enumeration (`m <= 3`), evaluated on the solver grids.
    ExactOracle,
    /// `OPT <= m mu` on one side, best bundle or separate sale on the other.
    Bounded,
}

impl OptHandling {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptHandling::ExactOracle => "exact_oracle",
            OptHandling::Bounded => "bounded",
        }
    }
}

/// Empirical ratio or regret with its bracket.
///
/// For the ratio `value` is the lower end of the bracket, for the regret the
/// upper end: the side guaranteed to the seller. With the exact oracle all
/// three coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub m: usize,
    pub mode: OptHandling,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub price: f64,
}

/// Largest `m` for which the exact oracle is used.
pub const EXACT_EMPIRICAL_CAP: usize = 3;

fn member(spec: MeanMadSpec, q: f64) -> TwoPointDist {
    TwoPointDist::from_one_minus_alpha(spec, q).expect("q grid stays inside the admissible range")
}

fn exact_opt_on_grid(spec: MeanMadSpec, m: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let mode = if m <= SYMMETRIC_CAP { OptMode::Symmetric } else { OptMode::Full };
    grid.par_iter().map(|&q| opt_deterministic(&[member(spec, q)], m, mode).map(|r| r.revenue)).collect()
}

fn constructive_lower_on_grid(spec: MeanMadSpec, m: usize, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&q| {
            let t = member(spec, q);
            let law = iid_two_point_sum(&t, m)?;
            Ok(best_bundle_price(&law).revenue.max(separate_sale_revenue(&t, m)))
        })
        .collect()
}

// Total bundling revenue at price p for each q on the grid.
fn revenue_row(spec: MeanMadSpec, m: usize, p: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&q| if p <= 0.0 { 0.0 } else { p * iid_tail_prob(&member(spec, q), m, p) }).collect()
}

// sup over the price grid of min over q of score(revenue, opt)
fn sup_inf(
    spec: MeanMadSpec,
    m: usize,
    prices: &[f64],
    grid: &[f64],
    opt: &[f64],
    score: impl Fn(f64, f64) -> f64 + Sync,
) -> (f64, f64) {
    let rows: Vec<f64> = prices
        .par_iter()
        .map(|&p| {
            let rev = revenue_row(spec, m, p, grid);
            rev.iter().zip(opt).map(|(&r, &o)| score(r, o)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (&v, &p) in rows.iter().zip(prices) {
        if v > best.0 {
            best = (v, p);
        }
    }
    best
}

/// `sup_p inf_alpha BUND(p) / OPT` with i.i.d. two-point nature.
pub fn ratio_empirical(spec: MeanMadSpec, m: usize, cfg: &SolverConfig) -> Result<EmpiricalReport> {
    let grid = cfg.q_grid(spec);
    let prices = linspace(0.0, m as f64 * spec.mu(), cfg.price_grid.max(3));
    if m <= EXACT_EMPIRICAL_CAP {
        let opt = exact_opt_on_grid(spec, m, &grid)?;
        let (value, price) = sup_inf(spec, m, &prices, &grid, &opt, |r, o| r / o);
        return Ok(EmpiricalReport { m, mode: OptHandling::ExactOracle, value, lower: value, upper: value, price });
    }
    let maximin = maximin_bundling_value(spec, m, cfg)?;
    let lower = maximin.value / spec.mu();
    let lb = constructive_lower_on_grid(spec, m, &grid)?;
    // the refined max-min price keeps the upper end above the lower one
    let mut prices = prices;
    prices.push(maximin.price);
    let (upper, _) = sup_inf(spec, m, &prices, &grid, &lb, |r, o| r / o);
    Ok(EmpiricalReport { m, mode: OptHandling::Bounded, value: lower, lower, upper, price: maximin.price })
}

/// `inf_p sup_alpha (OPT - BUND(p)) / m` with i.i.d. two-point nature.
pub fn regret_empirical(spec: MeanMadSpec, m: usize, cfg: &SolverConfig) -> Result<EmpiricalReport> {
    let grid = cfg.q_grid(spec);
    let prices = linspace(0.0, m as f64 * spec.mu(), cfg.price_grid.max(3));
    let mf = m as f64;
    if m <= EXACT_EMPIRICAL_CAP {
        let opt = exact_opt_on_grid(spec, m, &grid)?;
        let (neg, price) = sup_inf(spec, m, &prices, &grid, &opt, |r, o| (r - o) / mf);
        let value = -neg;
        return Ok(EmpiricalReport { m, mode: OptHandling::ExactOracle, value, lower: value, upper: value, price });
    }
    let maximin = maximin_bundling_value(spec, m, cfg)?;
    let upper = spec.mu() - maximin.value;
    let lb = constructive_lower_on_grid(spec, m, &grid)?;
    let mut prices = prices;
    prices.push(maximin.price);
    let (neg, _) = sup_inf(spec, m, &prices, &grid, &lb, |r, o| (r - o) / mf);
    Ok(EmpiricalReport { m, mode: OptHandling::Bounded, value: upper, lower: -neg, upper, price: maximin.price })
}

/// Worst-case per-good regret of one bundle price, using `OPT <= m mu`.
pub fn regret_at_price(spec: MeanMadSpec, m: usize, p: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(spec.mu() - worst_case_alpha(spec, m, p, cfg)?.value)
}

/// One row of a parameter study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub mu: f64,
    pub d: f64,
    pub m: usize,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub objective: String,
    pub mode: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl StudyRow {
    pub const CSV_HEADER: &'static str = "mu,d,m,eps,gamma,objective,mode,value,lower,upper";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e}",
            self.mu,
            self.d,
            self.m,
            opt(self.eps),
            opt(self.gamma),
            self.objective,
            self.mode,
            self.value,
            self.lower,
            self.upper
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, d: f64) -> MeanMadSpec {
        MeanMadSpec::new(mu, d).unwrap()
    }

    #[test]
    fn targets_identity() {
        for &(mu, d) in &[(1.0, 0.5), (1.0, 1.5), (2.0, 1.0)] {
            let t = AsymptoticTargets::new(spec(mu, d));
            assert_eq!(t.minimax_upper, t.maximin_limit.max(t.regret_limit));
            assert!((t.ratio_limit - t.maximin_limit / mu).abs() < 1e-15);
        }
    }

    #[test]
    fn g_lambda_examples() {
        let s = spec(1.0, 0.5);
        assert!((g_lambda(s, 1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-15);
        for &d in &[0.5, 1.5] {
            let s = spec(1.0, d);
            assert!((g_lambda(s, 1e-3).unwrap() - (1.0 - d / 2.0)).abs() <= 1e-2);
            assert!((g_lambda(s, 1e3).unwrap() - d / 2.0).abs() <= 1e-3);
        }
        assert_eq!(g_lambda(s, 0.0), Err(Error::LambdaOutOfRange { lambda: 0.0 }));
        // far out the expm1 form keeps full precision
        let far = g_lambda(s, 1e12).unwrap();
        assert!((far - 0.25).abs() < 1e-12);
    }

    #[test]
    fn variance_example() {
        assert!((variance_g(spec(1.0, 0.5)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn xi_example() {
        let x = xi_gap(spec(1.0, 1.5)).unwrap();
        assert!((x.xi0 - 0.5).abs() < 1e-15);
        assert!((x.gamma - (1.0 - 1.5 / 1.98)).abs() < 1e-15);
        assert!((x.tau0 - 1.0448e-3).abs() < 1e-6);
        assert!(x.xi1 > 0.0 && x.xi1 < 1e-3, "{x:?}");
        let at_tau0 = g_lambda(spec(1.0, 1.5), x.tau0).unwrap() - 0.25;
        assert!((x.xi1 - at_tau0).abs() < 1e-12);
        assert!(x.tail_irrelevant);
        assert!(matches!(xi_gap(spec(1.0, 0.8)), Err(Error::RangeError { .. })));
        assert!(matches!(xi_gap(spec(1.0, 1.0)), Err(Error::RangeError { .. })));
    }

    #[test]
    fn xi_positive_across_the_range() {
        for d in linspace(1.01, 1.99, 50) {
            let x = xi_gap(spec(1.0, d)).unwrap();
            assert!(x.xi > 0.0, "d={d}: {x:?}");
        }
    }

    #[test]
    fn ratio_limits() {
        let s = spec(1.0, 0.5);
        // f(eps) grows like eps^-4, so eps has to shrink slower than m^{-1/4}
        let far = ratio_bound_chain(s, 10_000_000_000_000_000, 1e-3, Some(1e-4)).unwrap();
        assert!((far.lower - 0.75).abs() < 2e-3, "{far:?}");
        assert!((far.upper - 0.75).abs() < 2e-3, "{far:?}");
        assert!(far.lower <= far.upper);
        let tiny = ratio_bound_chain(s, 10, 0.2, Some(0.1)).unwrap();
        assert!(tiny.upper.is_infinite());
    }

    #[test]
    fn regret_limits_and_order() {
        let s = spec(1.0, 0.5);
        let r = regret_bound_chain(s, 10_000, 0.05, 0.1).unwrap();
        assert!(r.upper >= r.lower, "{r:?}");
        let far = regret_bound_chain(s, 10_000_000_000_000_000, 1e-3, 1e-4).unwrap();
        assert!((far.upper - 0.25).abs() < 2e-3 && (far.lower - 0.25).abs() < 2e-3, "{far:?}");
        assert!(matches!(regret_bound_chain(s, 10, 0.1, 1.0), Err(Error::ParamOutOfRange { .. })));
    }

    #[test]
    fn single_good_ratio_against_closed_form() {
        // OPT(1, alpha) = max(x, (1 - alpha) y) in closed form
        let s = spec(1.0, 0.5);
        let cfg = SolverConfig { alpha_grid: 256, price_grid: 128, ..SolverConfig::default() };
        let r = ratio_empirical(s, 1, &cfg).unwrap();
        let grid = cfg.q_grid(s);
        let prices = linspace(0.0, 1.0, 128);
        let mut want = f64::NEG_INFINITY;
        for &p in &prices {
            let mut worst = f64::INFINITY;
            for &q in &grid {
                let t = member(s, q);
                let sells = if p <= t.low() {
                    1.0
                } else if p <= t.high() {
                    q
                } else {
                    0.0
                };
                let opt = t.low().max(q * t.high());
                worst = worst.min(p * sells / opt);
            }
            want = want.max(worst);
        }
        assert_eq!(r.mode, OptHandling::ExactOracle);
        assert!((r.value - want).abs() < 1e-12, "{} vs {want}", r.value);
    }

    #[test]
    fn study_row_shape() {
        let row = StudyRow {
            mu: 1.0,
            d: 0.5,
            m: 100,
            eps: Some(0.1),
            gamma: None,
            objective: "ratio".into(),
            mode: "bounds".into(),
            value: 0.5,
            lower: 0.4,
            upper: 0.6,
        };
        let line = row.csv_row();
        assert_eq!(line.split(',').count(), 10);
        assert!(line.contains(",,ratio,"));
    }
}
