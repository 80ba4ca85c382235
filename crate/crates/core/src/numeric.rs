//! Small numerical kernels shared by the analysis modules.

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Bisection on a bracket `[lo, hi]` whose endpoint values have opposite
/// signs. Stops when `|f| ≤ ftol` or the bracket stops shrinking.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, ftol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() <= ftol {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Samples `f` on `[lo, hi]` at spacing `step` (endpoints included) and
/// polishes the best sample by golden-section search on its neighbours.
/// Returns `(argmax, max)`.
pub fn sampled_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let count = ((hi - lo) / step).ceil().max(1.0) as usize;
    let at = |k: usize| {
        if k >= count {
            hi
        } else {
            lo + (hi - lo) * k as f64 / count as f64
        }
    };
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..=count {
        let x = at(k);
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let a = at(best_k.saturating_sub(1));
    let b = at((best_k + 1).min(count));
    let polished = golden_max(&f, a, b);
    if polished.1 > best.1 {
        polished
    } else {
        best
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sampled_max_polishes_off_grid_peak() {
        let (x, v) = sampled_max(|x| -(x - 0.123_456_7f64).powi(2), 0.0, 1.0, 1e-2);
        assert!((x - 0.123_456_7).abs() < 1e-7);
        assert!(v.abs() < 1e-14);
        let (x, _) = sampled_max(|x| x, 0.0, 0.3, 1e-4);
        assert_eq!(x, 0.3);
    }
}
