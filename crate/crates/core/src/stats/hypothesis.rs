use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::gamma_ur;

use super::{SampleSummary, StatsError};

/// Largest trial count for which the binomial test is computed exactly.
pub const EXACT_BINOMIAL_MAX_TRIALS: u64 = 1000;

/// Relative tolerance when comparing outcome probabilities in the exact test.
const EXACT_TEST_RELTOL: f64 = 1e-7;

/// Two-sided p-value for `successes` out of `trials` under `Binomial(trials, null_p)`.
///
/// Exact for `trials <= 1000`, normal approximation beyond. Zero trials
/// carry no evidence and return 1.
pub fn two_proportion_test(successes: u64, trials: u64, null_p: f64) -> f64 {
    assert!(successes <= trials, "successes exceed trials");
    if trials == 0 {
        return 1.0;
    }
    if trials <= EXACT_BINOMIAL_MAX_TRIALS {
        binomial_two_sided_exact(successes, trials, null_p)
    } else {
        binomial_two_sided_normal(successes, trials, null_p)
    }
}

/// Exact two-sided binomial test: total probability of outcomes no more
/// likely than the observed one.
pub fn binomial_two_sided_exact(successes: u64, trials: u64, null_p: f64) -> f64 {
    if null_p <= 0.0 {
        return if successes == 0 { 1.0 } else { 0.0 };
    }
    if null_p >= 1.0 {
        return if successes == trials { 1.0 } else { 0.0 };
    }
    let ln_p = null_p.ln();
    let ln_q = (1.0 - null_p).ln();
    let ln_pmf = |k: u64| ln_binomial(trials, k) + k as f64 * ln_p + (trials - k) as f64 * ln_q;
    let observed = ln_pmf(successes);
    let threshold = observed + (1.0 + EXACT_TEST_RELTOL).ln();
    let total: f64 = (0..=trials)
        .map(ln_pmf)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    total.clamp(0.0, 1.0)
}

/// Normal approximation (no continuity correction) to the two-sided binomial test.
pub fn binomial_two_sided_normal(successes: u64, trials: u64, null_p: f64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let n = trials as f64;
    let sd = (n * null_p * (1.0 - null_p)).sqrt();
    if sd == 0.0 {
        return if (successes as f64 - n * null_p).abs() < 0.5 {
            1.0
        } else {
            0.0
        };
    }
    let z = (successes as f64 - n * null_p) / sd;
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    /// Mean of the first sample minus mean of the second.
    pub delta: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// Standard error of `delta`.
    pub std_error: f64,
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<WelchResult, StatsError> {
    welch_from_summaries(
        &SampleSummary::from_slice(sample_a),
        &SampleSummary::from_slice(sample_b),
    )
}

/// Welch's test from sufficient statistics.
pub fn welch_from_summaries(a: &SampleSummary, b: &SampleSummary) -> Result<WelchResult, StatsError> {
    let smaller = a.n.min(b.n) as usize;
    if smaller < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: smaller,
        });
    }
    let delta = a.mean - b.mean;
    let va = a.variance() / a.n as f64;
    let vb = b.variance() / b.n as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        let (t, p_value) = if delta == 0.0 {
            (0.0, 1.0)
        } else {
            (delta.signum() * f64::INFINITY, 0.0)
        };
        return Ok(WelchResult {
            delta,
            t,
            df: (a.n + b.n - 2) as f64,
            p_value,
            std_error: 0.0,
        });
    }
    let se = se2.sqrt();
    let t = delta / se;
    let df = se2 * se2 / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    Ok(WelchResult {
        delta,
        t,
        df,
        p_value: student_t_two_sided(t, df),
        std_error: se,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on an `r x c` contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquareResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::InvalidTable(format!(
            "need a rectangular table of at least 2x2, got {rows} rows"
        )));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_sums.iter().sum();
    if row_sums.iter().chain(&col_sums).any(|&s| s == 0.0) {
        return Err(StatsError::InvalidTable("empty row or column".into()));
    }
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            statistic += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as u64;
    let p_value = gamma_ur(df as f64 / 2.0, statistic / 2.0).clamp(0.0, 1.0);
    Ok(ChiSquareResult { statistic, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact two-sided binomial p-value by direct multiplicative pmf recursion.
    fn binomial_oracle(k: u64, n: u64, p: f64) -> f64 {
        let mut pmf = vec![0.0f64; n as usize + 1];
        pmf[0] = (1.0 - p).powi(n as i32);
        for i in 1..=n as usize {
            pmf[i] = pmf[i - 1] * (n as f64 - i as f64 + 1.0) / i as f64 * p / (1.0 - p);
        }
        let obs = pmf[k as usize];
        pmf.iter().filter(|&&x| x <= obs * (1.0 + 1e-7)).sum()
    }

    #[test]
    fn exact_binomial_examples() {
        assert!((two_proportion_test(50, 100, 0.5) - 1.0).abs() < 1e-9);
        let p60 = two_proportion_test(60, 100, 0.5);
        assert!((p60 - binomial_oracle(60, 100, 0.5)).abs() < 1e-12);
        // Frozen from the oracle above.
        assert!((p60 - 0.056_887_933_640_980_78).abs() < 1e-9, "{p60}");
        let p100 = two_proportion_test(100, 100, 0.5);
        assert!(p100 < 1e-20);
        assert!((p100 - 2.0 * 0.5f64.powi(100)).abs() < 1e-40);
    }

    #[test]
    fn exact_matches_oracle_across_grid() {
        for &(n, p) in &[(7u64, 0.5), (20, 0.3), (135, 0.5), (400, 0.07)] {
            for k in 0..=n {
                let got = binomial_two_sided_exact(k, n, p);
                let want = binomial_oracle(k, n, p).min(1.0);
                assert!((got - want).abs() < 1e-9, "k={k} n={n} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn normal_approximation_beyond_threshold() {
        let got = binomial_two_sided_normal(60, 100, 0.5);
        // statrs erfc carries about 1e-10 relative error.
        assert!((got - 0.045_500_263_896_358_4).abs() < 1e-10, "{got:e}");
        let p = two_proportion_test(1050, 2000, 0.5);
        assert!((p - binomial_two_sided_normal(1050, 2000, 0.5)).abs() < 1e-15);
        assert_eq!(two_proportion_test(0, 0, 0.5), 1.0);
    }

    #[test]
    fn monotone_in_distance_from_null() {
        for n in [30u64, 1000, 5000] {
            let mut prev = 1.0 + 1e-12;
            for k in (n / 2)..=n {
                let p = two_proportion_test(k, n, 0.5);
                assert!(p <= prev + 1e-12, "n={n} k={k}");
                prev = p;
            }
        }
    }

    // Reference values: scipy.stats.ttest_ind(a, b, equal_var=False).
    #[test]
    fn welch_matches_reference() {
        let a = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8];
        let b = [1.2, 0.8, 2.5, 1.9, 1.1];
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t - 3.202_158_236_695_762).abs() < 1e-9, "{}", r.t);
        assert!((r.df - 9.455_462_944_385_355).abs() < 1e-9, "{}", r.df);
        assert!((r.p_value - 0.010_140_188_753_890_96).abs() < 1e-9, "{}", r.p_value);

        let a = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let b = [1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t - -2.010_069_662_351_516).abs() < 1e-9, "{}", r.t);
        assert!((r.p_value - 0.062_263_645_300_188_03).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn welch_identities() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.delta, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = a.iter().map(|x| x + 0.75).collect();
        let r = welch_t_test(&shifted, &a).unwrap();
        assert!((r.delta - 0.75).abs() < 1e-12);

        let r = welch_t_test(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = welch_t_test(&[3.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    // Reference: scipy.stats.chi2_contingency(table, correction=False).
    #[test]
    fn chi_square_reference() {
        let table = vec![vec![30, 10], vec![20, 40]];
        let r = chi_square_independence(&table).unwrap();
        assert!((r.statistic - 16.666_666_666_666_668).abs() < 1e-9);
        assert_eq!(r.df, 1);
        assert!((r.p_value - 4.455_709_060_405_612e-5).abs() < 1e-12);
        assert!(chi_square_independence(&[vec![1, 2]]).is_err());
    }
}
