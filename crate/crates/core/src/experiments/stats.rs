//! Small statistics utilities: Wilson score intervals and two-sample
//! Kolmogorov-Smirnov tests.

/// Wilson 95% score interval for `k` successes out of `n`.
pub fn wilson_ci95(k: u64, n: u64) -> (f64, f64) {
    wilson_ci(k, n, 1.959963984540054)
}

/// Wilson score interval at critical value `z`.
pub fn wilson_ci(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Whether the two samples differ at significance `alpha` (asymptotic
/// critical value `c(alpha) * sqrt((n + m) / (n m))`).
pub fn ks_reject(a: &[f64], b: &[f64], alpha: f64) -> bool {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (a.len() as f64, b.len() as f64);
    ks_statistic(a, b) > c * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route to the Wilson endpoints: the score statistic
    /// `f(p) = (p_hat - p)^2 - z^2 p (1 - p) / n` is an upward parabola
    /// whose two roots are the interval; bisect for each root.
    fn wilson_by_bisection(k: u64, n: u64, z: f64) -> (f64, f64) {
        let p_hat = k as f64 / n as f64;
        let f = |p: f64| (p_hat - p).powi(2) - z * z * p * (1.0 - p) / n as f64;
        // lower root on [0, p_hat]: f >= 0 left of it, <= 0 right of it
        let mut lo = 0.0;
        let mut hi = p_hat;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lower = 0.5 * (lo + hi);
        // upper root on [p_hat, 1]
        let mut lo = p_hat;
        let mut hi = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lower, 0.5 * (lo + hi))
    }

    #[test]
    fn wilson_matches_score_equation() {
        for n in [5u64, 10, 40, 100] {
            for k in 0..=n {
                let (lo, hi) = wilson_ci95(k, n);
                let (blo, bhi) = wilson_by_bisection(k, n, 1.959963984540054);
                assert!((lo - blo).abs() < 1e-9, "k={k} n={n}: {lo} vs {blo}");
                assert!((hi - bhi).abs() < 1e-9, "k={k} n={n}: {hi} vs {bhi}");
                assert!(lo <= k as f64 / n as f64 && k as f64 / n as f64 <= hi);
            }
        }
    }

    #[test]
    fn wilson_edge_cases() {
        let (lo, hi) = wilson_ci95(0, 20);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.25);
        let (lo, hi) = wilson_ci95(20, 20);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.75);
    }

    #[test]
    fn ks_detects_shift_and_accepts_identical() {
        let a: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
        let b: Vec<f64> = (0..400).map(|i| i as f64 / 400.0 + 0.3).collect();
        assert!(ks_reject(&a, &b, 0.01));
        let c: Vec<f64> = (0..400).map(|i| (i as f64 + 0.5) / 400.0).collect();
        assert!(!ks_reject(&a, &c, 0.01));
        assert!(ks_statistic(&a, &a) < 1e-12);
    }
}
