//! Water-filling power allocation.
//!
//! Maximizes `Σ_k log(1 + a_k s_k)` over `s_k ≥ 0` under a linear budget
//! `Σ_k b_k s_k = budget`. Stationarity gives `s_k = max(0, 1/(μ b_k) − 1/a_k)`
//! for a common water level `μ > 0`; the spent budget is strictly decreasing
//! in `μ`, so the level is found by bisection in the log domain — monotone,
//! branch-free, and it certifies the KKT conditions directly.

/// Number of bisection refinements of the water level. The bracket shrinks by
/// half (in log scale) per step, so 200 steps exhaust f64 resolution.
const BISECT_STEPS: usize = 200;

/// Allocates the budget across channels with `gains` `a_k` and budget
/// `weights` `b_k`, all strictly positive (callers pre-filter dead channels).
///
/// Returns `s` with `s_k ≥ 0` and `Σ b_k s_k = budget` to
/// [`crate::tol::WATER_BUDGET_REL`] relative (the final allocation is rescaled onto
/// the budget exactly, which moves the water level by at most the bisection
/// resolution).
pub fn water_fill(gains: &[f64], weights: &[f64], budget: f64) -> Vec<f64> {
    assert_eq!(gains.len(), weights.len(), "one weight per gain");
    assert!(!gains.is_empty(), "at least one channel");
    assert!(budget > 0.0 && budget.is_finite(), "positive budget");
    for (&a, &b) in gains.iter().zip(weights) {
        assert!(a > 0.0 && a.is_finite(), "gains must be positive");
        assert!(b > 0.0 && b.is_finite(), "weights must be positive");
    }

    let spend = |mu: f64| -> f64 {
        gains
            .iter()
            .zip(weights)
            .map(|(&a, &b)| (1.0 / mu - b / a).max(0.0))
            .sum()
    };

    // Bracket the level: at μ = max(a/b) nothing is funded; halve downward
    // until the budget is covered (spend → ∞ as μ → 0).
    let mut hi = gains
        .iter()
        .zip(weights)
        .map(|(&a, &b)| a / b)
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut lo = hi;
    while spend(lo) < budget {
        lo *= 0.5;
        assert!(lo > f64::MIN_POSITIVE, "water level bracket underflow");
    }

    for _ in 0..BISECT_STEPS {
        let mid = (lo * hi).sqrt();
        if spend(mid) < budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = (lo * hi).sqrt();

    let mut s: Vec<f64> = gains
        .iter()
        .zip(weights)
        .map(|(&a, &b)| (1.0 / (mu * b) - 1.0 / a).max(0.0))
        .collect();
    let spent: f64 = s.iter().zip(weights).map(|(&sk, &b)| b * sk).sum();
    if spent > 0.0 {
        let fix = budget / spent;
        for sk in &mut s {
            *sk *= fix;
        }
    }
    s
}
