//! Test statistics and intervals.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided normal quantile for a confidence level, e.g. 2.5758 for 0.99.
pub fn z_for(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `count` successes in `n` trials.
pub fn wilson(count: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    let d = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    d.sf(stat).clamp(0.0, 1.0)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Smallest expected count among the (pooled) cells.
    pub min_expected: f64,
}

/// Minimum expected count a cell should have after pooling.
pub const MIN_EXPECTED: f64 = 5.0;

/// Goodness of fit of `observed` counts against `expected` probabilities.
/// Cells with small expected counts are pooled. Any observation in a cell of
/// probability zero gives an infinite statistic.
pub fn chi_square_gof(observed: &[u64], expected_p: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected_p.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    if observed.iter().zip(expected_p).any(|(&o, &p)| o > 0 && p <= 0.0) {
        return ChiSquare { statistic: f64::INFINITY, df: 1, p_value: 0.0, min_expected: 0.0 };
    }
    let mut cells: Vec<(f64, f64)> =
        observed.iter().zip(expected_p).filter(|(_, &p)| p > 0.0).map(|(&o, &p)| (o as f64, p * nf)).collect();
    cells.sort_by(|a, b| a.1.total_cmp(&b.1));
    let pooled = pool_small(cells);
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = pooled.len().saturating_sub(1);
    let min_expected = pooled.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    ChiSquare { statistic: stat, df, p_value: chi_square_sf(stat, df), min_expected }
}

/// Merges cells (sorted by increasing expected count) until each pooled
/// cell expects at least [`MIN_EXPECTED`].
fn pool_small(cells: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= MIN_EXPECTED {
            out.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        match out.first_mut() {
            Some(first) => *first = (first.0 + acc.0, first.1 + acc.1),
            None => out.push(acc),
        }
    }
    out
}

/// Chi-square test of independence on a contingency table (rows × columns).
/// Empty rows and columns are dropped; columns with small totals are pooled.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquare {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.len() < 2 {
        return ChiSquare { statistic: 0.0, df: 0, p_value: 1.0, min_expected: f64::INFINITY };
    }
    let ncol = rows[0].len();
    let total: f64 = rows.iter().flat_map(|r| r.iter()).sum::<u64>() as f64;
    let row_tot: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let min_row = row_tot.iter().copied().fold(f64::INFINITY, f64::min);
    // columns expected to give every row at least MIN_EXPECTED stay; others are pooled
    let col_tot: Vec<f64> = (0..ncol).map(|j| rows.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let mut order: Vec<usize> = (0..ncol).filter(|&j| col_tot[j] > 0.0).collect();
    order.sort_by(|&a, &b| col_tot[a].total_cmp(&col_tot[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut acc = Vec::new();
    let mut acc_tot = 0.0;
    for j in order {
        acc.push(j);
        acc_tot += col_tot[j];
        if acc_tot * min_row / total >= MIN_EXPECTED {
            groups.push(std::mem::take(&mut acc));
            acc_tot = 0.0;
        }
    }
    if !acc.is_empty() {
        match groups.first_mut() {
            Some(g) => g.extend(acc),
            None => groups.push(acc),
        }
    }
    if groups.len() < 2 {
        return ChiSquare { statistic: 0.0, df: 0, p_value: 1.0, min_expected: min_row };
    }
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for (i, r) in rows.iter().enumerate() {
        for g in &groups {
            let o: f64 = g.iter().map(|&j| r[j] as f64).sum();
            let ct: f64 = g.iter().map(|&j| col_tot[j]).sum();
            let e = row_tot[i] * ct / total;
            min_expected = min_expected.min(e);
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = (rows.len() - 1) * (groups.len() - 1);
    ChiSquare { statistic: stat, df, p_value: chi_square_sf(stat, df), min_expected }
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` at sample size `n`, with
/// Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of samples against Uniform[0,1).
pub fn ks_uniform(samples: &mut [f64]) -> (f64, f64) {
    let d = ks_statistic(samples, |x| x.clamp(0.0, 1.0));
    (d, ks_p_value(d, samples.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson(50, 100, z_for(0.99));
        assert!(lo < 0.5 && hi > 0.5 && hi - lo < 0.3);
        let (lo, hi) = wilson(0, 1000, z_for(0.99));
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        assert!((z_for(0.99) - 2.5758).abs() < 1e-3);
    }

    #[test]
    fn chi_square_known_values() {
        // sf(3.841, 1) is about 0.05
        assert!((chi_square_sf(3.841, 1) - 0.05).abs() < 1e-3);
        let r = chi_square_gof(&[50, 50], &[0.5, 0.5]);
        assert_eq!(r.statistic, 0.0);
        assert!(chi_square_gof(&[1, 99], &[0.0, 1.0]).p_value == 0.0);
        let t = chi_square_independence(&[vec![90, 10], vec![10, 90]]);
        assert!(t.p_value < 1e-10);
        let u = chi_square_independence(&[vec![50, 50], vec![50, 50]]);
        assert!(u.p_value > 0.99);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_skew() {
        let mut r = crate::rng::stream_rng(1, 1);
        let mut u: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
        assert!(ks_uniform(&mut u).1 > 0.01);
        let mut s: Vec<f64> = (0..10_000).map(|_| r.random::<f64>().powi(2)).collect();
        assert!(ks_uniform(&mut s).1 < 1e-6);
    }

    #[test]
    fn pooling_keeps_totals() {
        let pooled = pool_small(vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (10.0, 10.0)]);
        let (o, e): (f64, f64) = pooled.iter().fold((0.0, 0.0), |a, c| (a.0 + c.0, a.1 + c.1));
        assert_eq!((o, e), (16.0, 16.0));
        assert!(pooled.iter().all(|c| c.1 >= MIN_EXPECTED));
    }
}
