//! Summary statistics used by the experiment reports.

use krc_core::normal;
use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Mean absolute off-diagonal Pearson correlation between the columns of
/// `samples` (one row per replication). Constant columns are skipped.
pub fn mean_abs_correlation(samples: &[Vec<f64>]) -> f64 {
    let reps = samples.len();
    if reps < 2 {
        return f64::NAN;
    }
    let k = samples[0].len();
    let means: Vec<f64> = (0..k)
        .map(|c| samples.iter().map(|r| r[c]).sum::<f64>() / reps as f64)
        .collect();
    let centred: Vec<Vec<f64>> = (0..k)
        .map(|c| samples.iter().map(|r| r[c] - means[c]).collect())
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for a in 0..k {
        for b in a + 1..k {
            if norms[a] == 0.0 || norms[b] == 0.0 {
                continue;
            }
            let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            total += (dot / (norms[a] * norms[b])).abs();
            count += 1;
        }
    }
    total / count as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AndersonDarling {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

/// Anderson–Darling test of `z` against a fully specified `N(0, 1)`.
/// The p-value uses the Marsaglia–Marsaglia approximation of the limiting
/// distribution, adequate for the large samples used here.
pub fn anderson_darling_normal(z: &[f64]) -> AndersonDarling {
    let mut v = z.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let nf = n as f64;
    let eps = 1e-300;
    let mut s = 0.0;
    for i in 0..n {
        let lo = normal::cdf(v[i]).max(eps).ln();
        let hi = (1.0 - normal::cdf(v[n - 1 - i])).max(eps).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let statistic = -nf - s / nf;
    AndersonDarling {
        statistic,
        p_value: 1.0 - ad_limit_cdf(statistic),
        samples: n,
    }
}

fn ad_limit_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.233_714_1 / z).exp() / z.sqrt()
            * (2.000_12
                + (0.247_105
                    - (0.064_982_1 - (0.034_796_2 - (0.011_672 - 0.001_686_91 * z) * z) * z) * z)
                    * z)
    } else {
        (-(1.077_6
            - (2.306_95 - (0.434_24 - (0.082_433 - (0.008_056 - 0.000_314_6 * z) * z) * z) * z) * z)
            .exp())
        .exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_summaries() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
        assert!((std_dev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_correlation() {
        let s: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64, 2.0 * k as f64, -(k as f64)]).collect();
        assert!((mean_abs_correlation(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ad_limit_known_points() {
        // upper quantiles of the limiting A² distribution
        assert!((1.0 - ad_limit_cdf(2.492) - 0.05).abs() < 2e-3);
        assert!((1.0 - ad_limit_cdf(3.857) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ad_accepts_normal_quantiles_and_rejects_shift() {
        let n = 2000;
        let z: Vec<f64> = (0..n)
            .map(|k| normal::quantile((k as f64 + 0.5) / n as f64))
            .collect();
        assert!(anderson_darling_normal(&z).p_value > 0.5);
        let shifted: Vec<f64> = z.iter().map(|x| x + 0.3).collect();
        assert!(anderson_darling_normal(&shifted).p_value < 1e-3);
    }
}
