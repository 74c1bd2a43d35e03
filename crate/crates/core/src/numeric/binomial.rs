//! Binomial probabilities in log space.
//!
//! `ln_pmf` uses Loader's saddle-point decomposition (the algorithm behind R's
//! `dbinom`), which keeps full relative accuracy for every `k` and for
//! success probabilities far below machine epsilon. The success probability
//! `p` and its complement `q` are always passed separately so that callers
//! holding `1 - alpha` directly (e.g. `1e-300`) never lose it to rounding.

#![allow(clippy::excessive_precision)]

const LN_2PI: f64 = 1.837_877_066_409_345_5;

// stirlerr(n) = ln(n!) - ln(sqrt(2 pi n) (n/e)^n) at n = 0, 1, ..., 15
const STIRLERR_INT: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_2,
    0.041_340_695_955_409_294_093_822_1,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_567,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_318,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_152,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_690,
];

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;
const S5: f64 = 691.0 / 360_360.0;
const S6: f64 = 1.0 / 156.0;

/// Error of Stirling's approximation to `ln(n!)` for integer `n`.
fn stirlerr(n: u64) -> f64 {
    if n < STIRLERR_INT.len() as u64 {
        return STIRLERR_INT[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - (S4 - (S5 - S6 / nn) / nn) / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x/np) + np - x`, evaluated without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let d = x - np;
        let mut v = d / (x + np);
        let mut s = 0.5 * d * v;
        let mut ej = x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let prev = s;
            s += ej / (2 * j + 1) as f64;
            if s == prev {
                break;
            }
        }
        return 2.0 * s;
    }
    let ratio = x / np;
    let lg = if ratio.is_finite() && ratio > 0.0 { ratio.ln() } else { x.ln() - np.ln() };
    x * lg + np - x
}

/// `ln p` given the pair `(p, q = 1 - p)`, using whichever side is accurate.
pub fn ln_prob(p: f64, q: f64) -> f64 {
    if q < 0.5 {
        (-q).ln_1p()
    } else {
        p.ln()
    }
}

/// `ln P(K = k)` for `K ~ Binomial(n, p)`.
pub fn ln_pmf(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return n as f64 * ln_prob(q, p);
    }
    if k == n {
        return n as f64 * ln_prob(p, q);
    }
    let (kf, nf) = (k as f64, n as f64);
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln(n!)` from Stirling's series plus the tabulated correction.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    nf * nf.ln() - nf + 0.5 * (LN_2PI + nf.ln()) + stirlerr(n)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn pmf(k: u64, n: u64, p: f64, q: f64) -> f64 {
    ln_pmf(k, n, p, q).exp()
}

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Lentz evaluation of the continued fraction for the incomplete beta function.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `P(K >= k)` for `K ~ Binomial(n, p)`.
///
/// Evaluated as a regularized incomplete beta function `I_p(k, n-k+1)` whose
/// prefactor is the log-space pmf, so the smaller of the two tails is always
/// computed directly and never by cancellation.
pub fn upper_tail(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if q == 0.0 {
        return 1.0;
    }
    let a = k as f64;
    let b = (n - k + 1) as f64;
    if p < (a + 1.0) / (a + b + 2.0) {
        // I_p(a, b) = pmf(k) * q * cf(a, b, p)
        let pre = (ln_pmf(k, n, p, q) + ln_prob(q, p)).exp();
        (pre * beta_cf(a, b, p)).clamp(0.0, 1.0)
    } else {
        1.0 - lower_tail_direct(k - 1, n, p, q)
    }
}

/// `P(K <= k)`.
pub fn lower_tail(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    upper_tail(n - k, n, q, p)
}

// P(K <= j) through the mirrored fraction, valid when p is in the upper regime.
fn lower_tail_direct(j: u64, n: u64, p: f64, q: f64) -> f64 {
    // P(K <= j) = P(n - K >= n - j) with n - K ~ Binomial(n, q)
    let k2 = n - j;
    let a = k2 as f64;
    let b = (j + 1) as f64;
    let pre = (ln_pmf(k2, n, q, p) + ln_prob(p, q)).exp();
    (pre * beta_cf(a, b, q)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_pmf(k: u64, n: u64, p: f64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn pmf_matches_direct_product_small_n() {
        for &n in &[1u64, 2, 5, 17, 40] {
            for &p in &[0.01, 0.25, 0.5, 0.9] {
                for k in 0..=n {
                    let got = pmf(k, n, p, 1.0 - p);
                    let want = naive_pmf(k, n, p);
                    assert!((got - want).abs() <= 1e-13 * want.max(1e-300), "n={n} p={p} k={k}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn extreme_success_probability_stays_finite() {
        let p = 1e-300;
        let q = 1.0;
        let l1 = ln_pmf(1, 1000, p, q);
        // ln(1000 * 1e-300) with (1-p)^999 = 1
        assert!((l1 - (1000.0f64.ln() + p.ln())).abs() < 1e-10);
        assert_eq!(ln_pmf(0, 1000, p, q), -1000.0 * p);
    }

    #[test]
    fn log_factorials_match_products() {
        let mut acc = 0.0f64;
        for n in 1..=170u64 {
            acc += (n as f64).ln();
            assert!((ln_factorial(n) - acc).abs() <= 1e-13 * acc.max(1.0), "n={n}");
        }
        assert!((ln_choose(10, 3) - 120f64.ln()).abs() < 1e-13);
        assert_eq!(ln_choose(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn tails_are_complementary() {
        let (n, p) = (250u64, 0.37);
        for k in 0..=n + 1 {
            let up = upper_tail(k, n, p, 1.0 - p);
            let lo = if k == 0 { 0.0 } else { lower_tail(k - 1, n, p, 1.0 - p) };
            assert!((up + lo - 1.0).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn upper_tail_matches_summed_pmf() {
        let (n, p) = (60u64, 0.2);
        for k in 0..=n {
            let direct: f64 = (k..=n).map(|j| naive_pmf(j, n, p)).sum();
            let got = upper_tail(k, n, p, 1.0 - p);
            assert!((got - direct).abs() <= 1e-13 + 1e-12 * direct, "k={k}: {got} vs {direct}");
        }
    }
}
