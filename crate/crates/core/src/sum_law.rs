//! Exact laws of `Y = X_1 + ... + X_m` for two-point marginals, and seeded
//! sampling of `Y` for arbitrary members.
//!
//! The i.i.d. law is binomial on the lattice `(m - k) x + k y`; its weights
//! are built in log space so that `m` up to a million and masses such as
//! `1 - alpha = 1e-12` never overflow or vanish prematurely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::ambiguity::{MemberDist, TwoPointDist};
use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::numeric::pairwise_sum;

/// Default cap on the number of factors in [`product_sum`].
pub const DEFAULT_PRODUCT_CAP: usize = 20;

const NORMALIZATION_TOL: f64 = 1e-10;
const MERGE_TOL: f64 = 1e-12;

/// Finite law with strictly ascending support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumLaw {
    m: usize,
    support: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    log_probs: Option<Vec<f64>>,
}

impl SumLaw {
    /// Builds a law from raw parts, checking order and normalization.
    pub fn new(m: usize, support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(Error::InvalidMember {
                reason: format!("support has {} points but {} probabilities", support.len(), probs.len()),
            });
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMember { reason: "support must be strictly ascending".into() });
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidMember { reason: "probabilities must be non-negative".into() });
        }
        check_normalized(&probs)?;
        Ok(Self { m, support, probs, log_probs: None })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Natural-log probabilities, available for i.i.d. two-point laws.
    pub fn log_probs(&self) -> Option<&[f64]> {
        self.log_probs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let terms: Vec<f64> = self.support.iter().zip(&self.probs).map(|(s, p)| s * p).collect();
        pairwise_sum(&terms)
    }

    /// Mean absolute deviation about the law's own mean.
    pub fn mad(&self) -> f64 {
        let mean = self.mean();
        let terms: Vec<f64> = self.support.iter().zip(&self.probs).map(|(s, p)| p * (s - mean).abs()).collect();
        pairwise_sum(&terms)
    }

    /// CSV with header `support,prob`, ascending support, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("support,prob\n");
        for (s, p) in self.support.iter().zip(&self.probs) {
            out.push_str(&format!("{s:.16e},{p:.16e}\n"));
        }
        out
    }
}

fn check_normalized(probs: &[f64]) -> Result<()> {
    let total = pairwise_sum(probs);
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NumericalInstability { reason: format!("probabilities sum to {total:.17}") });
    }
    Ok(())
}

/// Value of the `k`-th lattice point `(m - k) x + k y`.
pub fn iid_support_point(dist: &TwoPointDist, m: usize, k: usize) -> f64 {
    (m - k) as f64 * dist.low() + k as f64 * dist.high()
}

/// Exact law of the sum of `m` i.i.d. copies of `dist`.
pub fn iid_two_point_sum(dist: &TwoPointDist, m: usize) -> Result<SumLaw> {
    if m == 0 {
        return Err(Error::ParamOutOfRange { name: "m", value: 0.0, reason: "need at least one good" });
    }
    let (alpha, q) = (dist.alpha(), dist.one_minus_alpha());
    let support: Vec<f64> = (0..=m).map(|k| iid_support_point(dist, m, k)).collect();
    let log_probs: Vec<f64> = (0..=m as u64).map(|k| binomial::ln_pmf(k, m as u64, q, alpha)).collect();
    let probs: Vec<f64> = if m == 1 { vec![alpha, q] } else { log_probs.iter().map(|l| l.exp()).collect() };
    check_normalized(&probs)?;
    Ok(SumLaw { m, support, probs, log_probs: Some(log_probs) })
}

/// Exact law of a sum of independent (not necessarily identical) two-point members.
pub fn product_sum(dists: &[TwoPointDist], cap: usize) -> Result<SumLaw> {
    if dists.len() > cap {
        return Err(Error::TooManyFactors { count: dists.len(), cap });
    }
    let first = dists.first().ok_or(Error::InvalidMember { reason: "empty factor list".into() })?;
    if let Some(bad) = dists.iter().find(|t| t.spec() != first.spec()) {
        return Err(Error::InvalidMember {
            reason: format!(
                "factors must share one ambiguity set: (mu={}, d={}) vs (mu={}, d={})",
                first.spec().mu(),
                first.spec().d(),
                bad.spec().mu(),
                bad.spec().d()
            ),
        });
    }
    let mut atoms: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for t in dists {
        let mut next = Vec::with_capacity(atoms.len() * 2);
        for &(s, p) in &atoms {
            next.push((s + t.low(), p * t.alpha()));
            next.push((s + t.high(), p * t.one_minus_alpha()));
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms = merge_close(next);
    }
    let (support, probs): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
    check_normalized(&probs)?;
    Ok(SumLaw { m: dists.len(), support, probs, log_probs: None })
}

// Sorted atoms closer than MERGE_TOL to the first atom of their cluster are fused.
fn merge_close(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (s, p) in sorted {
        match out.last_mut() {
            Some(last) if s - last.0 <= MERGE_TOL => last.1 += p,
            _ => out.push((s, p)),
        }
    }
    out
}

/// `P(Y >= p)`, inclusive of an atom sitting exactly at `p`.
pub fn tail_prob(law: &SumLaw, p: f64) -> f64 {
    let start = law.support.partition_point(|&s| s < p);
    pairwise_sum(&law.probs[start..])
}

/// Index of the first lattice point `(m - k) x + k y` that is `>= p`; `m + 1` if none.
pub fn first_index_at_or_above(dist: &TwoPointDist, m: usize, p: f64) -> usize {
    let (x, y) = (dist.low(), dist.high());
    let guess = ((p - m as f64 * x) / (y - x)).ceil();
    let mut k = if guess.is_nan() || guess <= 0.0 {
        0
    } else if guess >= (m + 1) as f64 {
        m + 1
    } else {
        guess as usize
    };
    while k > 0 && iid_support_point(dist, m, k - 1) >= p {
        k -= 1;
    }
    while k <= m && iid_support_point(dist, m, k) < p {
        k += 1;
    }
    k
}

/// `P(Y >= p)` for the i.i.d. sum without materializing the law.
///
/// Agrees with `tail_prob(&iid_two_point_sum(dist, m)?, p)` up to summation
/// rounding, at `O(1)` cost per call apart from the continued fraction.
pub fn iid_tail_prob(dist: &TwoPointDist, m: usize, p: f64) -> f64 {
    let k = first_index_at_or_above(dist, m, p);
    binomial::upper_tail(k as u64, m as u64, dist.one_minus_alpha(), dist.alpha())
}

/// Slots of identical members, in order of first appearance.
pub(crate) fn group_slots(slots: &[MemberDist]) -> Vec<(MemberDist, u64)> {
    let mut groups: Vec<(MemberDist, u64)> = Vec::new();
    for member in slots {
        match groups.iter_mut().find(|(g, _)| g == member) {
            Some(entry) => entry.1 += 1,
            None => groups.push((*member, 1)),
        }
    }
    groups
}

/// Expands `members` to exactly `m` slots: one member is repeated, `m` members are used as given.
pub(crate) fn expand_members(members: &[MemberDist], m: usize) -> Result<Vec<MemberDist>> {
    match members.len() {
        1 => Ok(vec![members[0]; m]),
        n if n == m => Ok(members.to_vec()),
        n => Err(Error::LengthMismatch { got: n, expected: m }),
    }
}

fn binomial_count<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// Sum of `count` independent draws of `member`.
fn sample_group<R: Rng>(rng: &mut R, member: &MemberDist, count: u64) -> f64 {
    match member {
        MemberDist::TwoPoint(t) => {
            let k = binomial_count(rng, count, t.one_minus_alpha());
            (count - k) as f64 * t.low() + k as f64 * t.high()
        }
        MemberDist::ThreePoint { law, .. } => {
            let mut remaining = count;
            let mut mass_left = 1.0;
            let mut total = 0.0;
            for i in 0..3 {
                let n_i = if i == 2 {
                    remaining
                } else {
                    let share = if mass_left > 0.0 { (law.probs[i] / mass_left).min(1.0) } else { 0.0 };
                    binomial_count(rng, remaining, share)
                };
                total += n_i as f64 * law.points[i];
                remaining -= n_i;
                mass_left -= law.probs[i];
            }
            total
        }
        MemberDist::Pareto { a, scale, .. } => {
            let inv_a = 1.0 / a;
            let mut total = 0.0;
            for _ in 0..count {
                // u in (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                total += scale * (-u.ln() * inv_a).exp();
            }
            total
        }
    }
}

/// Generator for sample `index`: one ChaCha stream per sample, so any
/// partition of the indices across threads reproduces the serial draw.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `n` independent realizations of `Y = X_1 + ... + X_m`.
///
/// `members` has length 1 (i.i.d.) or length `m`.
pub fn sample_sum(members: &[MemberDist], m: usize, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::ParamOutOfRange { name: "n", value: 0.0, reason: "need at least one sample" });
    }
    let slots = expand_members(members, m)?;
    let groups = group_slots(&slots);
    Ok(sample_grouped(&groups, seed, n))
}

pub(crate) fn sample_grouped(groups: &[(MemberDist, u64)], seed: u64, n: usize) -> Vec<f64> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            groups.iter().map(|(member, count)| sample_group(&mut rng, member, *count)).sum()
        })
        .collect()
}
