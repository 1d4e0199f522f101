//! Small numeric helpers shared by the solvers.

/// Base-2 logarithm clamped so that tiny arguments never produce values below one.
pub fn lg(x: f64) -> f64 {
    x.max(2.0).log2()
}

/// Natural logarithm clamped the same way as [`lg`].
pub fn ln2(x: f64) -> f64 {
    x.max(2.0).ln()
}

/// Dyadic scale `2^floor(log2 v)` of a positive value, i.e. the bucket `[s, 2s)` containing `v`.
pub fn dyadic_floor(v: f64) -> f64 {
    debug_assert!(v > 0.0);
    let mut s = 2f64.powi(v.log2().floor() as i32);
    // Guard against rounding in log2 near exact powers of two.
    if s > v {
        s /= 2.0;
    }
    if 2.0 * s <= v {
        s *= 2.0;
    }
    s
}

/// Powers of two `1, 2, 4, ...` not exceeding `limit` (always contains 1).
pub fn dyadic_up_to(limit: usize) -> Vec<usize> {
    let mut out = vec![1];
    while out.last().unwrap() * 2 <= limit {
        out.push(out.last().unwrap() * 2);
    }
    out
}

/// Powers of two `1, 2, 4, ...` up to and including the first value `>= limit`.
pub fn doubling_ladder(limit: usize) -> Vec<usize> {
    let mut out = vec![1];
    while *out.last().unwrap() < limit {
        out.push(out.last().unwrap() * 2);
    }
    out
}

/// Sorts and deduplicates in place, reporting whether anything changed.
pub fn normalize_ids(ids: &mut Vec<usize>) -> bool {
    let before = ids.clone();
    ids.sort_unstable();
    ids.dedup();
    *ids != before
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_logs() {
        assert_eq!(lg(0.0), 1.0);
        assert_eq!(lg(1.0), 1.0);
        assert_eq!(lg(8.0), 3.0);
        assert!((ln2(1.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dyadic_buckets() {
        assert_eq!(dyadic_floor(1.0), 1.0);
        assert_eq!(dyadic_floor(0.5), 0.5);
        assert_eq!(dyadic_floor(0.75), 0.5);
        assert_eq!(dyadic_floor(0.2), 0.125);
        assert_eq!(dyadic_floor(3.0), 2.0);
        assert_eq!(dyadic_up_to(5), vec![1, 2, 4]);
        assert_eq!(dyadic_up_to(0), vec![1]);
        assert_eq!(doubling_ladder(5), vec![1, 2, 4, 8]);
        assert_eq!(doubling_ladder(1), vec![1]);
    }

    #[test]
    fn normalization_flag() {
        let mut v = vec![3, 1, 3];
        assert!(normalize_ids(&mut v));
        assert_eq!(v, vec![1, 3]);
        assert!(!normalize_ids(&mut v));
    }
}
