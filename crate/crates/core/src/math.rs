//! Scalar math that works with or without `std`, plus a stable log-sum-exp.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("mner-core requires either the `std` or the `libm` feature");

use alloc::vec::Vec;

macro_rules! float_fn {
    ($name:ident, $libm:ident) => {
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

float_fn!(exp, exp);
float_fn!(ln, log);
float_fn!(ln_1p, log1p);
float_fn!(tanh, tanh);
float_fn!(sqrt, sqrt);

/// `|x|` without the std-only `f64::abs`.
#[inline]
pub fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & (u64::MAX >> 1))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

/// log Σ exp(xs), stabilized by subtracting the maximum.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`;
/// propagates NaN instead of folding it into the `-inf` case.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() {
            return f64::NAN;
        }
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &x in xs {
        sum += exp(x - max);
    }
    max + ln(sum)
}

/// Two-argument log-sum-exp, used where allocating a slice would be noise.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if a > b {
        a + ln_1p(exp(b - a))
    } else {
        b + ln_1p(exp(a - b))
    }
}

/// L2 norm of a slice.
pub fn l2_norm(xs: &[f64]) -> f64 {
    sqrt(xs.iter().map(|x| x * x).sum())
}

pub fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Softmax in log space; exponentiates `xs - logsumexp(xs)`.
pub fn softmax_from_logits(xs: &[f64]) -> Vec<f64> {
    let z = logsumexp(xs);
    xs.iter().map(|&x| exp(x - z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_two_equal_paths() {
        let v = logsumexp(&[0.0, 0.0]);
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn logsumexp_matches_naive_on_small_inputs() {
        let xs = [0.5f64, -1.25, 2.0, 0.0];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn logsumexp_survives_large_magnitudes() {
        let v = logsumexp(&[1234.0, 1232.0]);
        // 1232 + log(exp(2) + 1)
        let expected = 1232.0 + (2.0f64.exp() + 1.0).ln();
        assert!((v - expected).abs() < 1e-12);
        assert!(logsumexp(&[-1234.0, -1236.0]).is_finite());
    }

    #[test]
    fn logsumexp_all_neg_inf() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn logaddexp_agrees_with_slice_version() {
        for (a, b) in [(0.5, 2.0), (12.0, 5.0), (-3.0, -3.0)] {
            assert!((logaddexp(a, b) - logsumexp(&[a, b])).abs() < 1e-14);
        }
    }

    #[test]
    fn sigmoid_midpoint_and_saturation() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(40.0) > 1.0 - 1e-12);
        assert!(sigmoid(-40.0) < 1e-12);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax_from_logits(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
