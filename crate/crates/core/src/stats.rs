//! Small statistics helpers shared by the experiments.

use statrs::distribution::{Beta, ContinuousCDF};

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Unbiased sample variance.
pub fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `√(p(1−p)/n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Kendall's `S` statistic of `ys` against their index order
/// (concordant minus discordant pairs; ties count zero).
pub fn kendall_s(ys: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            if ys[j] > ys[i] {
                s += 1;
            } else if ys[j] < ys[i] {
                s -= 1;
            }
        }
    }
    s
}

pub fn kendall_tau(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    kendall_s(ys) as f64 / (n * (n - 1.0) / 2.0)
}

/// One-sided p-value `P(S ≥ s_obs)` for an increasing trend under the
/// exchangeable null, exact via the inversion-count distribution.
pub fn kendall_increasing_pvalue(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 1.0;
    }
    let pairs = n * (n - 1) / 2;
    // counts[i] = #permutations with i inversions
    let mut counts = vec![1f64];
    for m in 2..=n {
        let mut next = vec![0f64; counts.len() + m - 1];
        for (i, &c) in counts.iter().enumerate() {
            for j in 0..m {
                next[i + j] += c;
            }
        }
        counts = next;
    }
    let total: f64 = counts.iter().sum();
    let s_obs = kendall_s(ys);
    // S = pairs − 2·inv
    let tail: f64 = counts
        .iter()
        .enumerate()
        .filter(|(inv, _)| pairs as i64 - 2 * *inv as i64 >= s_obs)
        .map(|(_, c)| c)
        .sum();
    tail / total
}

/// One-sided Clopper–Pearson lower confidence bound for a binomial
/// proportion at level `conf`.
pub fn clopper_pearson_lower(successes: u64, trials: u64, conf: f64) -> f64 {
    if successes == 0 {
        return 0.0;
    }
    let a = successes as f64;
    let b = (trials - successes) as f64 + 1.0;
    // bisection on the Beta cdf; the library quantile is too coarse here
    let Ok(d) = Beta::new(a, b) else { return 0.0 };
    let target = 1.0 - conf;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    lo
}
