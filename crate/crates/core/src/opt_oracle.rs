//! Optimal deterministic truthful mechanisms for a handful of goods.
//!
//! A deterministic mechanism for one additive buyer is truthful exactly when
//! it is a menu of priced bundles from which the buyer picks a favourite, so
//! the optimum is found by enumerating menus instead of allocation tables.
//! Prices range over the sums of valuations the lattice can produce; a bundle
//! priced above every value it can take is the same as leaving it off.
//!
//! Buyer ties go to the seller: near-equal utilities (relative `1e-12`) are
//! resolved toward the higher price, then the larger bundle, then the
//! lexicographically smallest index list.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::TwoPointDist;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Largest `m` for exhaustive enumeration over all bundles.
pub const FULL_CAP: usize = 3;
/// Largest `m` for enumeration over size-dependent prices.
pub const SYMMETRIC_CAP: usize = 4;
/// Largest `m` accepted by [`BidLattice::new`].
pub const LATTICE_CAP: usize = 16;

const TRUTHFUL_TOL: f64 = 1e-9;
const TIE_REL_TOL: f64 = 1e-12;

/// Every valuation vector `v` in `{x_i, y_i}^m` with its product probability.
///
/// Lattice index bit `i` set means good `i` takes its high value.
#[derive(Debug, Clone, PartialEq)]
pub struct BidLattice {
    m: usize,
    values: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl BidLattice {
    /// `dists` has length 1 (i.i.d.) or `m`.
    pub fn new(dists: &[TwoPointDist], m: usize) -> Result<Self> {
        if m == 0 || m > LATTICE_CAP {
            return Err(Error::CapExceeded { m, cap: LATTICE_CAP });
        }
        let per_good: Vec<TwoPointDist> = match dists.len() {
            1 => vec![dists[0]; m],
            n if n == m => dists.to_vec(),
            n => return Err(Error::LengthMismatch { got: n, expected: m }),
        };
        let n = 1usize << m;
        let mut values = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for v in 0..n {
            let mut row = Vec::with_capacity(m);
            let mut p = 1.0;
            for (i, t) in per_good.iter().enumerate() {
                if v >> i & 1 == 1 {
                    row.push(t.high());
                    p *= t.one_minus_alpha();
                } else {
                    row.push(t.low());
                    p *= t.alpha();
                }
            }
            values.push(row);
            probs.push(p);
        }
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NumericalInstability { reason: format!("lattice probabilities sum to {total}") });
        }
        Ok(Self { m, values, probs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn values(&self, v: usize) -> &[f64] {
        &self.values[v]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Value of bundle `mask` to type `v`.
    pub fn bundle_value(&self, v: usize, mask: u32) -> f64 {
        self.values[v].iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x).sum()
    }

    fn full_mask(&self) -> u32 {
        ((1u64 << self.m) - 1) as u32
    }
}

/// One priced bundle; goods are zero-based and sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    pub bundle: Vec<usize>,
    pub price: f64,
}

/// A menu of priced bundles; always offers the empty bundle at price 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MenuEntry>", into = "Vec<MenuEntry>")]
pub struct MenuMechanism {
    entries: Vec<MenuEntry>,
}

impl TryFrom<Vec<MenuEntry>> for MenuMechanism {
    type Error = Error;
    fn try_from(entries: Vec<MenuEntry>) -> Result<Self> {
        MenuMechanism::new(entries)
    }
}

impl From<MenuMechanism> for Vec<MenuEntry> {
    fn from(menu: MenuMechanism) -> Self {
        menu.entries
    }
}

impl MenuMechanism {
    /// Normalizes bundles (sorted, deduplicated) and adds `(∅, 0)` if missing.
    pub fn new(entries: Vec<MenuEntry>) -> Result<Self> {
        let mut out: Vec<MenuEntry> = Vec::with_capacity(entries.len() + 1);
        for mut e in entries {
            if !(e.price >= 0.0) || !e.price.is_finite() {
                return Err(Error::NegativePrice { price: e.price });
            }
            e.bundle.sort_unstable();
            e.bundle.dedup();
            if e.bundle.iter().any(|&i| i >= 32) {
                return Err(Error::InvalidMember { reason: format!("good index out of range in {:?}", e.bundle) });
            }
            if e.bundle.is_empty() && e.price != 0.0 {
                return Err(Error::InvalidMember { reason: "the empty bundle must cost 0".into() });
            }
            if out.iter().any(|o| o.bundle == e.bundle) {
                return Err(Error::InvalidMember { reason: format!("bundle {:?} listed twice", e.bundle) });
            }
            out.push(e);
        }
        if !out.iter().any(|e| e.bundle.is_empty()) {
            out.insert(0, MenuEntry { bundle: Vec::new(), price: 0.0 });
        }
        Ok(Self { entries: out })
    }

    /// Menu selling only the grand bundle of `m` goods at `price`.
    pub fn bundling(m: usize, price: f64) -> Result<Self> {
        Self::new(vec![MenuEntry { bundle: (0..m).collect(), price }])
    }

    pub fn entries(&self) -> &[MenuEntry] {
        &self.entries
    }
}

/// Allocation and payment per lattice point; allocations are good bitmasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismTables {
    pub allocation: Vec<u32>,
    pub payment: Vec<f64>,
}

impl MechanismTables {
    /// Tables of the pure bundling mechanism at price `p`.
    pub fn bundling(lattice: &BidLattice, p: f64) -> Self {
        let full = lattice.full_mask();
        let mut allocation = Vec::with_capacity(lattice.len());
        let mut payment = Vec::with_capacity(lattice.len());
        for v in 0..lattice.len() {
            if lattice.bundle_value(v, full) >= p {
                allocation.push(full);
                payment.push(p);
            } else {
                allocation.push(0);
                payment.push(0.0);
            }
        }
        Self { allocation, payment }
    }

    /// Expected payment under the lattice law.
    pub fn revenue(&self, lattice: &BidLattice) -> f64 {
        let terms: Vec<f64> = self.payment.iter().zip(lattice.probs()).map(|(p, w)| p * w).collect();
        pairwise_sum(&terms)
    }
}

/// Which truthfulness condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    IncentiveCompatibility,
    IndividualRationality,
}

/// First failed check: type `truthful` gains `gain` by reporting `report` (or by walking away).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub truthful: usize,
    pub report: Option<usize>,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruthfulnessReport {
    pub ok: bool,
    pub violation: Option<Violation>,
}

/// Checks IR for every type and IC for every ordered pair, with absolute tolerance `1e-9`.
pub fn verify_truthful(tables: &MechanismTables, lattice: &BidLattice) -> Result<TruthfulnessReport> {
    let n = lattice.len();
    if tables.allocation.len() != n || tables.payment.len() != n {
        return Err(Error::LengthMismatch { got: tables.allocation.len().min(tables.payment.len()), expected: n });
    }
    let utility = |v: usize, w: usize| lattice.bundle_value(v, tables.allocation[w]) - tables.payment[w];
    for v in 0..n {
        let own = utility(v, v);
        if own < -TRUTHFUL_TOL {
            let violation =
                Violation { kind: ViolationKind::IndividualRationality, truthful: v, report: None, gain: -own };
            return Ok(TruthfulnessReport { ok: false, violation: Some(violation) });
        }
        for w in 0..n {
            let gain = utility(v, w) - own;
            if gain > TRUTHFUL_TOL {
                let violation =
                    Violation { kind: ViolationKind::IncentiveCompatibility, truthful: v, report: Some(w), gain };
                return Ok(TruthfulnessReport { ok: false, violation: Some(violation) });
            }
        }
    }
    Ok(TruthfulnessReport { ok: true, violation: None })
}

fn mask_of(bundle: &[usize]) -> u32 {
    bundle.iter().fold(0u32, |acc, &i| acc | 1 << i)
}

// Lexicographic order of the sorted index lists of two bundles.
fn lex_cmp(a: u32, b: u32) -> Ordering {
    let mut a = a;
    let mut b = b;
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
        if ia != ib {
            return ia.cmp(&ib);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    utility: f64,
    price: f64,
    bundle: u32,
}

const NOTHING: Choice = Choice { utility: 0.0, price: 0.0, bundle: 0 };

// true if the buyer prefers `new` over `cur`
fn prefers(new: &Choice, cur: &Choice, tie_tol: f64) -> bool {
    let du = new.utility - cur.utility;
    if du > tie_tol {
        return true;
    }
    if du < -tie_tol {
        return false;
    }
    if new.price != cur.price {
        return new.price > cur.price;
    }
    let (sn, sc) = (new.bundle.count_ones(), cur.bundle.count_ones());
    if sn != sc {
        return sn > sc;
    }
    lex_cmp(new.bundle, cur.bundle) == Ordering::Less
}

fn tie_tolerance(lattice: &BidLattice) -> f64 {
    let top = (0..lattice.len()).map(|v| lattice.bundle_value(v, lattice.full_mask())).fold(0.0, f64::max);
    TIE_REL_TOL * (1.0 + top)
}

/// Tables induced by the buyer choosing a favourite menu entry at every lattice point.
pub fn menu_to_tables(menu: &MenuMechanism, lattice: &BidLattice) -> Result<MechanismTables> {
    if let Some(e) = menu.entries.iter().find(|e| e.bundle.iter().any(|&i| i >= lattice.m)) {
        return Err(Error::InvalidMember {
            reason: format!("bundle {:?} names a good beyond m={}", e.bundle, lattice.m),
        });
    }
    let tol = tie_tolerance(lattice);
    let priced: Vec<(u32, f64)> = menu.entries.iter().map(|e| (mask_of(&e.bundle), e.price)).collect();
    let mut allocation = Vec::with_capacity(lattice.len());
    let mut payment = Vec::with_capacity(lattice.len());
    for v in 0..lattice.len() {
        let mut best = NOTHING;
        for &(mask, price) in &priced {
            let c = Choice { utility: lattice.bundle_value(v, mask) - price, price, bundle: mask };
            if prefers(&c, &best, tol) {
                best = c;
            }
        }
        allocation.push(best.bundle);
        payment.push(best.price);
    }
    Ok(MechanismTables { allocation, payment })
}

/// Exhaustive or size-symmetric enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMode {
    Full,
    Symmetric,
}

/// Optimal revenue and a menu attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub m: usize,
    pub mode: OptMode,
    pub revenue: f64,
    pub witness: MenuMechanism,
    pub menus_evaluated: u64,
}

// Price options for one enumeration slot: `None` leaves the slot off the menu.
fn slot_options(candidates: &[f64], max_value: f64) -> Vec<Option<f64>> {
    let mut opts = vec![None];
    opts.extend(candidates.iter().copied().filter(|&p| p <= max_value).map(Some));
    opts
}

struct Search<'a> {
    lattice: &'a BidLattice,
    // slot -> bundles priced together
    slots: Vec<Vec<u32>>,
    options: Vec<Vec<Option<f64>>>,
    // bundle value per (bundle mask, type)
    values: Vec<Vec<f64>>,
    tie_tol: f64,
}

#[derive(Debug, Clone)]
struct Best {
    revenue: f64,
    picks: Vec<usize>,
    evaluated: u64,
}

impl Search<'_> {
    fn leaf_revenue(&self, choices: &[Choice]) -> f64 {
        let nb = self.values.len();
        let mut mass = vec![0.0; nb];
        let mut price = vec![0.0; nb];
        for (c, w) in choices.iter().zip(self.lattice.probs()) {
            mass[c.bundle as usize] += w;
            price[c.bundle as usize] = c.price;
        }
        let terms: Vec<f64> = mass.iter().zip(&price).filter(|(m, _)| **m > 0.0).map(|(m, p)| m * p).collect();
        terms.iter().sum()
    }

    fn descend(&self, slot: usize, choices: &mut Vec<Choice>, picks: &mut Vec<usize>, best: &mut Best) {
        if slot == self.slots.len() {
            best.evaluated += 1;
            let rev = self.leaf_revenue(choices);
            if rev > best.revenue {
                best.revenue = rev;
                best.picks = picks.clone();
            }
            return;
        }
        for (k, opt) in self.options[slot].iter().enumerate() {
            picks.push(k);
            match opt {
                None => self.descend(slot + 1, choices, picks, best),
                Some(price) => {
                    let saved = choices.clone();
                    for &mask in &self.slots[slot] {
                        for (v, cur) in choices.iter_mut().enumerate() {
                            let c =
                                Choice { utility: self.values[mask as usize][v] - price, price: *price, bundle: mask };
                            if prefers(&c, cur, self.tie_tol) {
                                *cur = c;
                            }
                        }
                    }
                    self.descend(slot + 1, choices, picks, best);
                    *choices = saved;
                }
            }
            picks.pop();
        }
    }

    fn run(&self) -> Best {
        let n = self.lattice.len();
        let first: Vec<Best> = (0..self.options[0].len())
            .into_par_iter()
            .map(|k| {
                let mut choices = vec![NOTHING; n];
                let mut picks = vec![k];
                let mut best = Best { revenue: f64::NEG_INFINITY, picks: Vec::new(), evaluated: 0 };
                if let Some(price) = self.options[0][k] {
                    for &mask in &self.slots[0] {
                        for (v, cur) in choices.iter_mut().enumerate() {
                            let c = Choice { utility: self.values[mask as usize][v] - price, price, bundle: mask };
                            if prefers(&c, cur, self.tie_tol) {
                                *cur = c;
                            }
                        }
                    }
                }
                self.descend(1, &mut choices, &mut picks, &mut best);
                best
            })
            .collect();
        // index-ordered reduction: the first menu in canonical order wins ties
        let mut total = 0;
        let mut winner: Option<Best> = None;
        for b in first {
            total += b.evaluated;
            if winner.as_ref().is_none_or(|w| b.revenue > w.revenue) {
                winner = Some(b);
            }
        }
        let mut winner = winner.expect("at least one option per slot");
        winner.evaluated = total;
        winner
    }
}

/// Best expected revenue over deterministic truthful mechanisms on the lattice of `dists`.
///
/// `Full` enumerates a price for every bundle (`m <= 3`); `Symmetric` lets the
/// price depend only on bundle size (`m <= 4`).
pub fn opt_deterministic(dists: &[TwoPointDist], m: usize, mode: OptMode) -> Result<OptResult> {
    let cap = match mode {
        OptMode::Full => FULL_CAP,
        OptMode::Symmetric => SYMMETRIC_CAP,
    };
    if m == 0 || m > cap {
        return Err(Error::CapExceeded { m, cap });
    }
    let lattice = BidLattice::new(dists, m)?;
    let nb = 1usize << m;
    let values: Vec<Vec<f64>> =
        (0..nb).map(|mask| (0..lattice.len()).map(|v| lattice.bundle_value(v, mask as u32)).collect()).collect();

    let mut candidates: Vec<f64> = values[1..].iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let slots: Vec<Vec<u32>> = match mode {
        OptMode::Full => (1..nb as u32).map(|b| vec![b]).collect(),
        OptMode::Symmetric => {
            (1..=m as u32).map(|k| (1..nb as u32).filter(|b| b.count_ones() == k).collect()).collect()
        }
    };
    let options: Vec<Vec<Option<f64>>> = slots
        .iter()
        .map(|bundles| {
            let top = bundles.iter().flat_map(|&b| values[b as usize].iter().copied()).fold(0.0, f64::max);
            slot_options(&candidates, top)
        })
        .collect();

    let search = Search { lattice: &lattice, slots, options, values, tie_tol: tie_tolerance(&lattice) };
    let best = search.run();

    let mut entries = Vec::new();
    for (slot, &k) in best.picks.iter().enumerate() {
        if let Some(price) = search.options[slot][k] {
            for &mask in &search.slots[slot] {
                let bundle: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
                entries.push(MenuEntry { bundle, price });
            }
        }
    }
    let witness = MenuMechanism::new(entries)?;

    let mean_total: f64 = (0..lattice.len()).map(|v| lattice.probs[v] * search.values[nb - 1][v]).sum();
    if best.revenue > mean_total * (1.0 + 1e-9) {
        return Err(Error::NumericalInstability {
            reason: format!("optimal revenue {} exceeds the expected total value {}", best.revenue, mean_total),
        });
    }
    Ok(OptResult { m, mode, revenue: best.revenue, witness, menus_evaluated: best.evaluated })
}
