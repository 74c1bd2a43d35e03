//! Max-min and min-max values of the bundle-pricing game against nature.
//!
//! Nature picks an i.i.d. two-point law, parameterized here by the high-point
//! mass `q = 1 - alpha`. The adversarial laws sit at `q -> 0`, so the `q` grid
//! is log-spaced from `1 - d/(2 mu)` down to `1e-12` and local refinement runs
//! in `ln q`. Golden-section refinement assumes local unimodality around the
//! best grid point; every report keeps the raw grid optimum as well.
//!
//! All grid scans run in parallel and reduce in index order, so the results do
//! not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ambiguity::{MeanMadSpec, TwoPointDist};
use crate::bundling::{best_bundle_price, epsilon_star_price, PricedOutcome};
use crate::concentration::concentration_constant;
use crate::error::{Error, Result};
use crate::numeric::binomial::ln_choose;
use crate::numeric::log_sum_exp;
use crate::numeric::search::{argmax, argmin, golden_max, golden_min, linspace, logspace};
use crate::sum_law::{iid_support_point, iid_tail_prob, iid_two_point_sum, product_sum, DEFAULT_PRODUCT_CAP};

/// Grid sizes and tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Points on the log-spaced `q = 1 - alpha` grid.
    pub alpha_grid: usize,
    /// Points on the price grid `[0, m mu]`.
    pub price_grid: usize,
    /// Smallest `q` on the grid.
    pub min_one_minus_alpha: f64,
    /// Target bracket width in `alpha` for refinement.
    pub alpha_tol: f64,
    /// Points on the `eps` grid for the lower certificate.
    pub eps_grid: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { alpha_grid: 2048, price_grid: 1024, min_one_minus_alpha: 1e-12, alpha_tol: 1e-10, eps_grid: 400 }
    }
}

impl SolverConfig {
    /// The `q` grid for `spec`, ascending.
    pub fn q_grid(&self, spec: MeanMadSpec) -> Vec<f64> {
        let top = spec.max_one_minus_alpha();
        let bottom = self.min_one_minus_alpha.min(top);
        logspace(bottom, top, self.alpha_grid.max(2))
    }
}

fn member(spec: MeanMadSpec, q: f64) -> TwoPointDist {
    TwoPointDist::from_one_minus_alpha(spec, q).expect("q grid stays inside the admissible range")
}

/// Per-good bundling revenue at price `p` when every good is i.i.d. with high mass `q`.
pub fn bundle_objective(spec: MeanMadSpec, m: usize, p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    p * iid_tail_prob(&member(spec, q), m, p) / m as f64
}

/// Best grid point and refined optimum of a function of `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct QOptimum {
    q: f64,
    value: f64,
    grid_value: f64,
}

// Minimizes `f(q)` over the grid, then refines in ln q around the best point.
fn minimize_over_q<F>(grid: &[f64], cfg: &SolverConfig, f: F) -> QOptimum
where
    F: Fn(f64) -> f64 + Sync,
{
    let values: Vec<f64> = grid.par_iter().map(|&q| f(q)).collect();
    let i = argmin(&values).unwrap_or(0);
    let grid_value = values[i];
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    if lo == hi {
        return QOptimum { q: grid[i], value: grid_value, grid_value };
    }
    let tol = (cfg.alpha_tol / hi).max(1e-15);
    let (s, v) = golden_min(|s| f(s.exp().clamp(lo, hi)), lo.ln(), hi.ln(), tol);
    if v < grid_value {
        QOptimum { q: s.exp().clamp(lo, hi), value: v, grid_value }
    } else {
        QOptimum { q: grid[i], value: grid_value, grid_value }
    }
}

/// Nature's best reply to a posted bundle price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCase {
    pub alpha: f64,
    pub one_minus_alpha: f64,
    /// Per-good revenue at the reply.
    pub value: f64,
    /// Best value on the raw grid, before refinement.
    pub grid_value: f64,
}

/// Approximately minimizes per-good bundling revenue at price `p` over i.i.d. two-point laws.
///
/// Global only up to grid density: the objective jumps wherever a support
/// point crosses `p`.
pub fn worst_case_alpha(spec: MeanMadSpec, m: usize, p: f64, cfg: &SolverConfig) -> Result<WorstCase> {
    if !(p >= 0.0) {
        return Err(Error::NegativePrice { price: p });
    }
    check_m(m)?;
    let grid = cfg.q_grid(spec);
    Ok(worst_case_on(spec, m, p, &grid, cfg))
}

fn worst_case_on(spec: MeanMadSpec, m: usize, p: f64, grid: &[f64], cfg: &SolverConfig) -> WorstCase {
    let opt = minimize_over_q(grid, cfg, |q| bundle_objective(spec, m, p, q));
    WorstCase { alpha: 1.0 - opt.q, one_minus_alpha: opt.q, value: opt.value, grid_value: opt.grid_value }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::ParamOutOfRange { name: "m", value: 0.0, reason: "need at least one good" });
    }
    Ok(())
}

/// Which order of play a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Maximin,
    Minimax,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Maximin => "maximin",
            Objective::Minimax => "minimax",
        }
    }
}

/// Value of one order of play, normalized per good, with a bracketing certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleReport {
    pub mu: f64,
    pub d: f64,
    pub m: usize,
    pub objective: Objective,
    pub value: f64,
    pub price: f64,
    pub alpha: f64,
    pub one_minus_alpha: f64,
    pub lower: f64,
    pub upper: f64,
    /// Optimum on the raw grids, before any refinement.
    pub grid_value: f64,
}

impl SaddleReport {
    pub const CSV_HEADER: &'static str = "mu,d,m,objective,value,price,alpha,lower,upper";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.mu,
            self.d,
            self.m,
            self.objective.as_str(),
            self.value,
            self.price,
            self.alpha,
            self.lower,
            self.upper
        )
    }
}

/// Best guaranteed per-good revenue from the robust price family:
/// `max over eps of p*(eps)/m * (1 - f(eps)/m)`, clipped at 0.
pub fn maximin_lower_certificate(spec: MeanMadSpec, m: usize, eps_grid: usize) -> Result<f64> {
    check_m(m)?;
    let upper = spec.max_one_minus_alpha();
    let mut best: f64 = 0.0;
    for eps in logspace(1e-6 * upper, upper * (1.0 - 1e-9), eps_grid.max(2)) {
        let price = epsilon_star_price(spec, m, eps)?;
        let f = concentration_constant(spec, eps, false)?.f;
        let guaranteed = price / m as f64 * (1.0 - f / m as f64);
        best = best.max(guaranteed);
    }
    Ok(best)
}

/// `sup_p inf_alpha` of per-good bundling revenue.
///
/// The outer search runs over `[0, m mu]`; certificate: the robust price
/// family from below and `mu - d/2` from above.
pub fn maximin_bundling_value(spec: MeanMadSpec, m: usize, cfg: &SolverConfig) -> Result<SaddleReport> {
    check_m(m)?;
    let grid = cfg.q_grid(spec);
    let top = m as f64 * spec.mu();
    let prices = linspace(0.0, top, cfg.price_grid.max(3));
    let inner: Vec<WorstCase> = prices.iter().map(|&p| worst_case_on(spec, m, p, &grid, cfg)).collect();
    let values: Vec<f64> = inner.iter().map(|w| w.value).collect();
    let i = argmax(&values).unwrap_or(0);
    let grid_value = inner[i].grid_value.max(values[i]);
    let lo = prices[i.saturating_sub(1)];
    let hi = prices[(i + 1).min(prices.len() - 1)];
    let (p_ref, v_ref) = golden_max(|p| worst_case_on(spec, m, p, &grid, cfg).value, lo, hi, 1e-12 * top.max(1.0));
    let (price, reply) =
        if v_ref > values[i] { (p_ref, worst_case_on(spec, m, p_ref, &grid, cfg)) } else { (prices[i], inner[i]) };
    Ok(SaddleReport {
        mu: spec.mu(),
        d: spec.d(),
        m,
        objective: Objective::Maximin,
        value: reply.value,
        price,
        alpha: reply.alpha,
        one_minus_alpha: reply.one_minus_alpha,
        lower: maximin_lower_certificate(spec, m, cfg.eps_grid)?,
        upper: spec.half_gap(),
        grid_value,
    })
}

/// Seller's best bundle price against the i.i.d. law with high mass `q`.
pub fn best_response_price(spec: MeanMadSpec, m: usize, q: f64) -> Result<PricedOutcome> {
    let law = iid_two_point_sum(&member(spec, q), m)?;
    Ok(best_bundle_price(&law))
}

fn best_response_value(spec: MeanMadSpec, m: usize, q: f64) -> f64 {
    best_response_price(spec, m, q).map(|o| o.revenue / m as f64).unwrap_or(f64::INFINITY)
}

/// `inf_alpha sup_p` of per-good bundling revenue.
///
/// The reported value is attained by a concrete law, so it is its own upper
/// certificate; the lower certificate is the robust price family's guarantee.
pub fn minimax_bundling_value(spec: MeanMadSpec, m: usize, cfg: &SolverConfig) -> Result<SaddleReport> {
    check_m(m)?;
    let grid = cfg.q_grid(spec);
    let opt = minimize_over_q(&grid, cfg, |q| best_response_value(spec, m, q));
    let reply = best_response_price(spec, m, opt.q)?;
    Ok(SaddleReport {
        mu: spec.mu(),
        d: spec.d(),
        m,
        objective: Objective::Minimax,
        value: opt.value,
        price: reply.price,
        alpha: 1.0 - opt.q,
        one_minus_alpha: opt.q,
        lower: maximin_lower_certificate(spec, m, cfg.eps_grid)?,
        upper: opt.value,
        grid_value: opt.grid_value,
    })
}

/// The extreme adversary `1 - alpha(m) = m^-(m+1) e^-m`, held in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversaryAlpha {
    pub m: usize,
    /// `ln(1 - alpha) = -(m+1) ln m - m`.
    pub ln_one_minus_alpha: f64,
    /// `ln(alpha^m)`.
    pub ln_alpha_pow_m: f64,
    /// `ln(alpha^(m-1) (1 - alpha))`.
    pub ln_alpha_pow_m_minus_1_q: f64,
}

pub fn extreme_adversary_alpha(m: usize) -> Result<AdversaryAlpha> {
    check_m(m)?;
    let mf = m as f64;
    let ln_q = -(mf + 1.0) * mf.ln() - mf;
    // ln(alpha) = ln(1 - e^{ln q})
    let ln_alpha = (-ln_q.exp()).ln_1p();
    Ok(AdversaryAlpha {
        m,
        ln_one_minus_alpha: ln_q,
        ln_alpha_pow_m: mf * ln_alpha,
        ln_alpha_pow_m_minus_1_q: (mf - 1.0) * ln_alpha + ln_q,
    })
}

/// Seller's best per-good bundling revenue against the extreme adversary, computed in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversaryResponse {
    pub m: usize,
    pub ln_one_minus_alpha: f64,
    /// Best per-good revenue over all bundle prices.
    pub value: f64,
    /// Revenue at the lowest support point `m x`.
    pub value_low: f64,
    /// Revenue at the second support point `(m-1) x + y`.
    pub value_second: f64,
    /// `ln` of the per-good expected value carried by outcomes with two or more high goods.
    pub ln_higher_terms: f64,
}

/// Evaluates the seller's options against the extreme adversary of size `m`.
pub fn extreme_adversary_value(spec: MeanMadSpec, m: usize) -> Result<AdversaryResponse> {
    let adv = extreme_adversary_alpha(m)?;
    let (mu, d) = (spec.mu(), spec.d());
    let mf = m as f64;
    let ln_q = adv.ln_one_minus_alpha;
    let q = ln_q.exp();
    if q > spec.max_one_minus_alpha() {
        return Err(Error::AlphaOutOfRange { alpha: 1.0 - q, lower: spec.min_alpha() });
    }
    let ln_alpha = adv.ln_alpha_pow_m / mf;
    let alpha = ln_alpha.exp();
    let x = mu - d / (2.0 * alpha);
    // ln y = ln(d/2) - ln q + ln(1 + 2 q mu / d)
    let ln_y = (0.5 * d).ln() - ln_q + (2.0 * q * mu / d).ln_1p();
    let ln_point = |k: usize| -> f64 {
        // ln(((m-k) x + k y) / m)
        let low = if k < m && x > 0.0 { ((mf - k as f64) * x / mf).ln() } else { f64::NEG_INFINITY };
        let high = if k > 0 { (k as f64 / mf).ln() + ln_y } else { f64::NEG_INFINITY };
        log_sum_exp(&[low, high])
    };
    let ln_pmf: Vec<f64> =
        (0..=m).map(|k| ln_choose(m as u64, k as u64) + (mf - k as f64) * ln_alpha + k as f64 * ln_q).collect();
    // ln P(K >= k), accumulated from the top
    let mut ln_tail = vec![f64::NEG_INFINITY; m + 2];
    for k in (0..=m).rev() {
        ln_tail[k] = log_sum_exp(&[ln_tail[k + 1], ln_pmf[k]]);
    }
    let values: Vec<f64> = (0..=m).map(|k| (ln_point(k) + ln_tail[k]).exp()).collect();
    let value = values.iter().copied().fold(0.0, f64::max);
    let higher: Vec<f64> = (2..=m).map(|k| ln_pmf[k] + ln_point(k)).collect();
    Ok(AdversaryResponse {
        m,
        ln_one_minus_alpha: ln_q,
        value,
        value_low: values[0],
        value_second: if m >= 1 { values[1] } else { 0.0 },
        ln_higher_terms: log_sum_exp(&higher),
    })
}

/// I.i.d. min-max value next to the smallest best-response value among random heterogeneous products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeterogeneousProbe {
    pub m: usize,
    pub probes: usize,
    pub iid_value: f64,
    pub probe_min: f64,
}

/// Reports both values without asserting an order between them.
pub fn heterogeneous_probe(
    spec: MeanMadSpec,
    m: usize,
    probes: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<HeterogeneousProbe> {
    check_m(m)?;
    if m > DEFAULT_PRODUCT_CAP {
        return Err(Error::TooManyFactors { count: m, cap: DEFAULT_PRODUCT_CAP });
    }
    let iid = minimax_bundling_value(spec, m, cfg)?;
    let (lo, hi) = (cfg.min_one_minus_alpha.ln(), spec.max_one_minus_alpha().ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe_min = f64::INFINITY;
    for _ in 0..probes {
        let dists: Vec<TwoPointDist> = (0..m).map(|_| member(spec, rng.random_range(lo..=hi).exp())).collect();
        let law = product_sum(&dists, DEFAULT_PRODUCT_CAP)?;
        probe_min = probe_min.min(best_bundle_price(&law).revenue / m as f64);
    }
    Ok(HeterogeneousProbe { m, probes, iid_value: iid.value, probe_min })
}

/// Per-good revenue at the `k`-th support point of the i.i.d. law with high mass `q`.
pub fn support_point_revenue(spec: MeanMadSpec, m: usize, q: f64, k: usize) -> f64 {
    let t = member(spec, q);
    let p = iid_support_point(&t, m, k);
    p * iid_tail_prob(&t, m, p) / m as f64
}
