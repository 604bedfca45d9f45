//! Small numeric helpers shared by the metric modules.

/// Correctly rounded sum of `values` (Shewchuk's partials algorithm, as in
/// Python's `math.fsum`). The result does not depend on input order.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    // Sum the non-overlapping partials from the top, fixing the final
    // half-way rounding case.
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Resolution of the grid that unit-interval scores are stored on.
pub const UNIT_GRID: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

/// Rounds `x ∈ [0, 1]` to the nearest multiple of 2^-53.
///
/// Every multiple of 2^-53 in `[0, 1]` is an f64, and so is the difference of
/// any two of them, so running sums of stage-to-stage differences are exact.
pub fn snap_unit(x: f64) -> f64 {
    (x / UNIT_GRID).round() * UNIT_GRID
}

/// Integer percent with halves rounded up. A 1e-9 allowance absorbs binary
/// representation error so that e.g. 0.145 displays as 15.
pub fn display_percent(x: f64) -> i64 {
    (x * 100.0 + 0.5 + 1e-9).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sum_cases() {
        assert_eq!(exact_sum([]), 0.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.8, 0.0, 0.5]), 1.3);
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(display_percent(0.11 / 6.0), 2);
        assert_eq!(display_percent(0.17 / 6.0), 3);
        assert_eq!(display_percent(0.48 / 6.0), 8);
        assert_eq!(display_percent(0.145), 15);
        assert_eq!(display_percent(0.125), 13);
        assert_eq!(display_percent(0.0), 0);
        assert_eq!(display_percent(1.0), 100);
    }

    #[test]
    fn snap_keeps_representable_points() {
        assert_eq!(snap_unit(1.0), 1.0);
        assert_eq!(snap_unit(0.0), 0.0);
        assert_eq!(snap_unit(0.5), 0.5);
        assert!((snap_unit(0.2) - 0.2).abs() <= UNIT_GRID / 2.0);
    }

    proptest! {
        #[test]
        fn exact_sum_is_order_independent(mut v in proptest::collection::vec(-1e6f64..1e6, 0..40), seed in any::<u64>()) {
            let a = exact_sum(v.iter().copied());
            // deterministic shuffle
            let mut s = seed | 1;
            for i in (1..v.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                v.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(a, exact_sum(v.iter().copied()));
        }

        #[test]
        fn snapped_differences_telescope(v in proptest::collection::vec(0.0f64..=1.0, 1..30)) {
            let q: Vec<f64> = v.iter().map(|&x| snap_unit(x)).collect();
            let mut total = 0.0;
            for w in q.windows(2) {
                total += w[1] - w[0];
            }
            prop_assert_eq!(total, q[q.len() - 1] - q[0]);
        }
    }
}
