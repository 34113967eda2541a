//! The Poisson clock driving graph evolution.
//!
//! Inter-arrival times are exponential with rate `λ`, so the number of
//! evolution steps completed by the horizon `T*` is `K* ~ Poisson(λT*)`.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::evolution::sample_poisson;
use crate::stats::KahanSum;

/// Default truncation budget for infinite Poisson mixtures.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockParams {
    rate: f64,
    horizon: f64,
}

impl ClockParams {
    pub fn new(rate: f64, horizon: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(format!(
                "clock rate must be positive and finite, got {rate}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(Self { rate, horizon })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `E[K*] = λT*`.
    pub fn mean_steps(&self) -> f64 {
        self.rate * self.horizon
    }
}

/// `P{X = k}` for `X ~ Poisson(mean)`, evaluated as
/// `exp(k ln(mean) - mean - lnΓ(k+1))`.
pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid(format!(
            "Poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    Ok(poisson_pmf_unchecked(mean, k))
}

pub(crate) fn poisson_pmf_unchecked(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as f64;
    (k * mean.ln() - mean - libm::lgamma(k + 1.0)).exp()
}

/// Draws `K* ~ Poisson(λT*)`.
pub fn sample_step_count<R: Rng + ?Sized>(params: &ClockParams, rng: &mut R) -> u64 {
    // The mean is validated positive and finite at construction.
    sample_poisson(params.mean_steps(), rng).expect("validated clock mean")
}

/// Smallest `k_max` such that `P{X > k_max} < epsilon` for `X ~ Poisson(mean)`,
/// found by cumulative summation of the pmf.
///
/// If `epsilon` is below what double precision can resolve, the search stops
/// once the pmf terms past the mode underflow to zero.
pub fn truncation_index(mean: f64, epsilon: f64) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid(format!(
            "Poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let mut cumulative = KahanSum::new();
    let mut k = 0u64;
    loop {
        let term = poisson_pmf_unchecked(mean, k);
        cumulative.add(term);
        if 1.0 - cumulative.value() < epsilon || (term == 0.0 && k as f64 > mean) {
            return Ok(k);
        }
        k += 1;
    }
}

/// Poisson weights `w_0..=w_{k_max}` for the truncated mixture, plus the
/// omitted tail mass `1 - Σ w_k`.
pub fn truncated_weights(mean: f64, epsilon: f64) -> Result<(Vec<f64>, f64)> {
    let k_max = truncation_index(mean, epsilon)?;
    let weights: Vec<f64> = (0..=k_max)
        .map(|k| poisson_pmf_unchecked(mean, k))
        .collect();
    let mass: KahanSum = weights.iter().copied().collect();
    Ok((weights, (1.0 - mass.value()).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_examples() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap(), 0.0);
        assert!((poisson_pmf(1.0, 0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(poisson_pmf(-1.0, 0).is_err());
        assert!(poisson_pmf(f64::NAN, 0).is_err());
    }

    #[test]
    fn pmf_large_mean_matches_high_precision_reference() {
        // 50-digit mpmath evaluation of 700^700 e^-700 / 700!
        let reference = 0.015_076_805_912_737_029;
        let got = poisson_pmf(700.0, 700).unwrap();
        assert!(got.is_finite() && got > 0.0);
        assert!((got / reference - 1.0).abs() < 1e-12, "{got}");

        // 300^250 e^-300 / 250!
        let reference = 3.036_565_919_541_353_8e-4;
        let got = poisson_pmf(300.0, 250).unwrap();
        assert!((got / reference - 1.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn clock_rejects_bad_params() {
        assert!(ClockParams::new(0.0, 1.0).is_err());
        assert!(ClockParams::new(1.0, -1.0).is_err());
        assert!(ClockParams::new(1.0, f64::INFINITY).is_err());
        assert_eq!(ClockParams::new(2.0, 1.5).unwrap().mean_steps(), 3.0);
    }

    #[test]
    fn step_count_moments() {
        let clock = ClockParams::new(1.0, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let draws: Vec<u64> = (0..n)
            .map(|_| sample_step_count(&clock, &mut rng))
            .collect();
        let mean = draws.iter().sum::<u64>() as f64 / n as f64;
        assert!(
            (mean - 5.0).abs() < 3.0 * (5.0f64 / n as f64).sqrt(),
            "{mean}"
        );

        let clock = ClockParams::new(2.0, 1.0).unwrap();
        let zeros = (0..n)
            .filter(|_| sample_step_count(&clock, &mut rng) == 0)
            .count();
        let p0 = (-2.0f64).exp();
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - p0).abs() < 3.0 * se);

        let clock = ClockParams::new(1e-9, 1e-3).unwrap();
        assert!((0..1000).all(|_| sample_step_count(&clock, &mut rng) == 0));
    }

    /// Tail mass beyond `k`, summed forward with the pmf recurrence instead of
    /// `lgamma`.
    fn brute_tail(mean: f64, k: u64) -> f64 {
        let mut term = (-mean).exp();
        for j in 1..=k {
            term *= mean / j as f64;
        }
        let mut tail = 0.0;
        for j in (k + 1)..(k + 2000) {
            term *= mean / j as f64;
            tail += term;
        }
        tail
    }

    #[test]
    fn truncation_index_examples() {
        assert_eq!(truncation_index(0.0, 1e-12).unwrap(), 0);
        // Independent cumulative-sum oracle (50-digit) gives 25, tail 3.05e-11.
        let k = truncation_index(5.0, 1e-10).unwrap();
        assert_eq!(k, 25);
        assert!(brute_tail(5.0, k) < 1e-10);
        assert!(brute_tail(5.0, k - 1) >= 1e-10);
        assert!(truncation_index(1.0, 0.0).is_err());
        assert!(truncation_index(1.0, 1.0).is_err());
        // Unreachable budgets terminate once terms underflow.
        assert!(truncation_index(3.0, 1e-300).unwrap() < 400);
    }

    #[test]
    fn weights_cover_budget() {
        for mean in [0.5, 3.0, 40.0, 300.0] {
            let (w, deficit) = truncated_weights(mean, DEFAULT_EPSILON).unwrap();
            let s: f64 = w.iter().sum();
            assert!(
                (1.0 - DEFAULT_EPSILON..=1.0 + 1e-12).contains(&s),
                "{mean}: {s}"
            );
            assert!(deficit < DEFAULT_EPSILON);
        }
    }

    proptest! {
        #[test]
        fn truncation_index_is_minimal(mean in 0.01f64..60.0, exp in 3i32..11) {
            let eps = 10f64.powi(-exp);
            let k = truncation_index(mean, eps).unwrap();
            // 1 - cumulative carries ~1e-15 absolute rounding
            prop_assert!(brute_tail(mean, k) < eps + 1e-14);
            if k > 0 {
                prop_assert!(brute_tail(mean, k - 1) >= eps - 1e-14);
            }
        }

        #[test]
        fn pmf_recurrence(mean in 0.01f64..200.0, k in 0u64..400) {
            let a = poisson_pmf(mean, k).unwrap();
            let b = poisson_pmf(mean, k + 1).unwrap();
            prop_assume!(a > 1e-250);
            let expected = a * mean / (k + 1) as f64;
            prop_assert!((b / expected - 1.0).abs() < 1e-12, "{} vs {}", b, expected);
        }
    }
}
