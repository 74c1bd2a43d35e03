//! Numerical building blocks shared by the solvers.

pub mod binomial;
pub mod quadrature;
pub mod search;

/// Pairwise (tree) summation; error grows like `O(log n)` instead of `O(n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// `ln(sum(exp(v)))` without overflow; returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let terms: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    max + pairwise_sum(&terms).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_handles_many_small_terms() {
        let v = vec![0.1; 1_000_000];
        assert!((pairwise_sum(&v) - 100_000.0).abs() < 1e-8);
    }

    #[test]
    fn log_sum_exp_of_huge_negatives() {
        let v = [-1000.0, -1000.0];
        assert!((log_sum_exp(&v) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
