use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTest {
    /// Mann-Whitney U of the first sample: pairs with `a > b`, ties count half.
    pub u: f64,
    pub p_value: f64,
}

/// One-sided Mann-Whitney test of "`a` tends to be smaller than `b`", using
/// the normal approximation with tie correction and continuity correction.
pub fn mann_whitney_less(a: &[f64], b: &[f64]) -> Option<RankTest> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 || a.iter().chain(b).any(|v| v.is_nan()) {
        return None;
    }
    let mut all: Vec<(f64, bool)> = a.iter().map(|v| (*v, true)).chain(b.iter().map(|v| (*v, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));

    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum_a += avg * all[i..j].iter().filter(|x| x.1).count() as f64;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let (na, nb, n) = (na as f64, nb as f64, n as f64);
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_value = if var > 0.0 {
        let z = (u - mu + 0.5) / var.sqrt();
        Normal::standard().cdf(z)
    } else {
        1.0
    };
    Some(RankTest { u, p_value })
}
