//! One-dimensional resampling of position-indexed signals.

/// Linearly resamples `values` (length `n`) to `len` points with endpoint
/// alignment: output position `t` reads input coordinate
/// `t * (n - 1) / (len - 1)`. The first and last values are preserved, and
/// `n == len` is the identity.
pub fn resample_linear(values: &[f64], len: usize) -> Vec<f64> {
    let n = values.len();
    if len == 0 || n == 0 {
        return vec![0.0; len];
    }
    if n == len {
        return values.to_vec();
    }
    if n == 1 || len == 1 {
        return vec![values[0]; len];
    }
    let span = (n - 1) as f64;
    let steps = (len - 1) as f64;
    (0..len)
        .map(|t| {
            let x = (t * (n - 1)) as f64 / steps;
            let lo = (x.floor() as usize).min(n - 1);
            if lo as f64 == span {
                return values[n - 1];
            }
            let frac = x - lo as f64;
            values[lo] * (1.0 - frac) + values[lo + 1] * frac
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_to_four() {
        let l = resample_linear(&[1.0, 0.0], 4);
        let want = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (a, b) in l.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{l:?}");
        }
    }

    #[test]
    fn identity_when_lengths_match() {
        let v = [0.0, 1.0, 1.0, 0.0, 1.0];
        assert_eq!(resample_linear(&v, 5), v.to_vec());
    }

    #[test]
    fn endpoints_preserved() {
        let v = [0.3, 0.9, 0.1];
        let l = resample_linear(&v, 11);
        assert_eq!(l[0], 0.3);
        assert_eq!(l[10], 0.1);
        assert!((l[5] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn single_value_broadcasts() {
        assert_eq!(resample_linear(&[1.0], 3), vec![1.0; 3]);
    }
}
