use thiserror::Error;

use super::{Params, SwarmConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("entropy needs at least one fitness value")]
    Empty,
    #[error("fitness values must be finite")]
    NonFinite,
    #[error("entropy needs at least 2 bins, got {0}")]
    TooFewBins(usize),
}

/// Shannon entropy (natural log) of the `bins`-interval histogram of the
/// fitness values over `[min, max]`. Zero when all values coincide.
pub fn compute_entropy(fitnesses: &[f64], bins: usize) -> Result<f64, EntropyError> {
    if bins < 2 {
        return Err(EntropyError::TooFewBins(bins));
    }
    if fitnesses.is_empty() {
        return Err(EntropyError::Empty);
    }
    if fitnesses.iter().any(|f| !f.is_finite()) {
        return Err(EntropyError::NonFinite);
    }
    let (lo, hi) = fitnesses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    for &f in fitnesses {
        let j = ((f - lo) / span * bins as f64).floor() as usize;
        counts[j.min(bins - 1)] += 1;
    }
    let total = fitnesses.len() as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / total;
            -q * q.ln()
        })
        .sum::<f64>();
    Ok(h.clamp(0.0, (bins as f64).ln()))
}

/// Maps entropy onto the coefficient ranges: `w` and `c2` grow with
/// `H / ln(m)` and `c1` shrinks with it. Out-of-range entropy is clamped.
pub fn adapt_params(entropy: f64, config: &SwarmConfig) -> Params {
    let h_max = (config.entropy_bins as f64).ln();
    let ratio = if h_max > 0.0 && entropy.is_finite() {
        (entropy / h_max).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let lerp = |r: super::ParamRange, t: f64| r.min + (r.max - r.min) * t;
    Params {
        w: lerp(config.w_range, ratio),
        c1: lerp(config.c1_range, 1.0 - ratio),
        c2: lerp(config.c2_range, ratio),
    }
}

/// Indices of the `floor(alpha * N)` largest fitness values, ties going to
/// the lower index. Returned in ascending index order.
pub fn select_worst(fitnesses: &[f64], reset_rate: f64) -> Vec<usize> {
    let n = fitnesses.len();
    // tolerance keeps e.g. 0.29 * 100 from flooring to 28
    let count = ((reset_rate * n as f64) + 1e-9).floor().max(0.0) as usize;
    let count = count.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (sanitize(fitnesses[a]), sanitize(fitnesses[b]));
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut worst: Vec<usize> = order.into_iter().take(count).collect();
    worst.sort_unstable();
    worst
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pso::ParamRange;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn identical_fitnesses_have_zero_entropy() {
        assert_eq!(compute_entropy(&[3.5; 17], 10).unwrap(), 0.0);
        assert_eq!(compute_entropy(&[1.0], 10).unwrap(), 0.0);
    }

    #[test]
    fn one_value_per_bin_is_maximal() {
        let m = 12;
        let f: Vec<f64> = (0..m).map(|j| j as f64).collect();
        assert_abs_diff_eq!(compute_entropy(&f, m).unwrap(), (m as f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_bins_half_and_half() {
        assert_abs_diff_eq!(compute_entropy(&[1.0, 1.0, 2.0, 2.0], 2).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn entropy_input_errors() {
        assert_eq!(compute_entropy(&[], 10), Err(EntropyError::Empty));
        assert_eq!(compute_entropy(&[1.0, f64::NAN], 10), Err(EntropyError::NonFinite));
        assert_eq!(compute_entropy(&[1.0], 1), Err(EntropyError::TooFewBins(1)));
    }

    fn ranges() -> SwarmConfig {
        SwarmConfig {
            w_range: ParamRange::new(0.4, 0.9),
            c1_range: ParamRange::new(1.0, 2.0),
            c2_range: ParamRange::new(1.0, 2.0),
            ..SwarmConfig::default()
        }
    }

    #[test]
    fn adaptation_endpoints_and_midpoint() {
        let c = ranges();
        let h_max = (c.entropy_bins as f64).ln();
        assert_eq!(adapt_params(h_max, &c), Params { w: 0.9, c1: 1.0, c2: 2.0 });
        assert_eq!(adapt_params(0.0, &c), Params { w: 0.4, c1: 2.0, c2: 1.0 });
        let mid = adapt_params(h_max / 2.0, &c);
        assert_abs_diff_eq!(mid.w, 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.c1, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.c2, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn adaptation_clamps_out_of_range_entropy() {
        let c = ranges();
        assert_eq!(adapt_params(-0.1, &c), adapt_params(0.0, &c));
        assert_eq!(adapt_params(100.0, &c), adapt_params((c.entropy_bins as f64).ln(), &c));
    }

    #[test]
    fn worst_half_of_ten() {
        let f: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(select_worst(&f, 0.5), vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(select_worst(&[2.0; 4], 0.5), vec![0, 1]);
    }

    #[test]
    fn count_is_floored() {
        assert_eq!(select_worst(&[1.0, 3.0, 2.0], 0.5), vec![1]);
        assert_eq!(select_worst(&[0.0; 100], 0.29).len(), 29);
    }

    #[test]
    fn nan_counts_as_worst() {
        assert_eq!(select_worst(&[1.0, f64::NAN, 5.0, 2.0], 0.25), vec![1]);
    }

    proptest! {
        #[test]
        fn entropy_within_bounds(f in proptest::collection::vec(-1e6f64..1e6, 1..200), m in 2usize..30) {
            let h = compute_entropy(&f, m).unwrap();
            prop_assert!(h >= 0.0 && h <= (m as f64).ln() + 1e-12);
        }

        #[test]
        fn adapted_params_within_ranges(h in -1.0f64..5.0, m in 2usize..30) {
            let c = SwarmConfig { entropy_bins: m, ..SwarmConfig::default() };
            let p = adapt_params(h, &c);
            prop_assert!(c.w_range.contains(p.w) && c.c1_range.contains(p.c1) && c.c2_range.contains(p.c2));
        }

        #[test]
        fn worst_selection_is_scale_invariant(f in proptest::collection::vec(-1e3f64..1e3, 2..80), scale in 1e-3f64..1e3, a in 0.05f64..0.95) {
            let scaled: Vec<f64> = f.iter().map(|x| x * scale).collect();
            prop_assert_eq!(select_worst(&f, a), select_worst(&scaled, a));
        }
    }
}
