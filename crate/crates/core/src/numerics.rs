//! Small numeric helpers shared by the solver modules.

/// Bisection on a bracket with a single sign change. The function need not
/// be monotone on the whole bracket as long as it crosses zero exactly once.
/// Newton steps are deliberately avoided: the bracket never escapes.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        (flo > 0.0) != (fhi > 0.0),
        "bisection bracket [{lo}, {hi}] does not change sign: f = ({flo}, {fhi})"
    );
    let positive_left = flo > 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == positive_left {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::bisect;

    #[test]
    fn finds_cube_root() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0);
        assert!((r - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn handles_decreasing_functions() {
        let r = bisect(|x| 1.0 - x * x, 0.0, 5.0);
        assert!((r - 1.0).abs() < 1e-13);
    }
}
