//! Dolph-Chebyshev amplitude taper.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Dolph-Chebyshev window of `n` real amplitudes, max-normalized to 1.
///
/// A uniformly spaced array excited with these amplitudes has equiripple
/// sidelobes `sll_db` below the main-lobe peak. Built by sampling the
/// Chebyshev polynomial `T_{n-1}(x0 cos(pi k / n))` and taking a direct
/// DFT, which is plenty fast for array-sized `n`.
pub fn chebyshev_taper(n: usize, sll_db: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("Chebyshev taper needs at least two elements"));
    }
    if !(sll_db > 0.0) || !sll_db.is_finite() {
        return Err(Error::InvalidArgument("sidelobe level must be a positive dB value"));
    }
    let order = (n - 1) as f64;
    let ratio = 10f64.powf(sll_db / 20.0);
    let x0 = (ratio.acosh() / order).cosh();

    let odd_sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let spectrum: Vec<f64> = (0..n)
        .map(|k| {
            let x = x0 * (PI * k as f64 / n as f64).cos();
            if x > 1.0 {
                (order * x.acosh()).cosh()
            } else if x < -1.0 {
                odd_sign * (order * (-x).acosh()).cosh()
            } else {
                (order * x.acos()).cos()
            }
        })
        .collect();

    // Real part of the forward DFT; even lengths need a half-sample shift.
    let half_shift = if n.is_multiple_of(2) { PI / n as f64 } else { 0.0 };
    let dft_re = |i: usize| -> f64 {
        spectrum
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let angle = half_shift * k as f64 - 2.0 * PI * (i * k) as f64 / n as f64;
                p * angle.cos()
            })
            .sum()
    };

    let mut w = Vec::with_capacity(n);
    if n % 2 == 1 {
        let half = n.div_ceil(2);
        let head: Vec<f64> = (0..half).map(dft_re).collect();
        w.extend(head[1..].iter().rev());
        w.extend(head.iter());
    } else {
        let half = n / 2 + 1;
        let head: Vec<f64> = (0..half).map(dft_re).collect();
        w.extend(head[1..].iter().rev());
        w.extend(head[1..].iter());
    }
    let max = w.iter().cloned().fold(f64::MIN, f64::max);
    for v in &mut w {
        *v /= max;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    // Reference values from scipy.signal.windows.chebwin.
    #[test]
    fn matches_reference_windows() {
        let cases: [(usize, f64, &[f64]); 3] = [
            (
                8,
                30.0,
                &[
                    0.2622164911915373,
                    0.5187470541275411,
                    0.8119600672627041,
                    1.0,
                    1.0,
                    0.8119600672627041,
                    0.5187470541275411,
                    0.2622164911915373,
                ],
            ),
            (
                5,
                20.0,
                &[0.5176154563943078, 0.8325944643226155, 1.0, 0.8325944643226155, 0.5176154563943078],
            ),
            (
                10,
                15.0,
                &[
                    1.0,
                    0.6167195075525915,
                    0.7435004912178944,
                    0.8376740242556401,
                    0.8878550912098007,
                    0.8878550912098007,
                    0.8376740242556401,
                    0.7435004912178944,
                    0.6167195075525915,
                    1.0,
                ],
            ),
        ];
        for (n, sll, want) in cases {
            let got = chebyshev_taper(n, sll).unwrap();
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12, "n={n} sll={sll}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn two_elements_are_uniform() {
        for sll in [3.0, 30.0, 90.0] {
            assert_eq!(chebyshev_taper(2, sll).unwrap(), vec![1.0, 1.0]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(chebyshev_taper(1, 30.0).is_err());
        assert!(chebyshev_taper(8, 0.0).is_err());
        assert!(chebyshev_taper(8, -5.0).is_err());
    }

    #[test]
    fn symmetric_and_edge_ratio_grows_with_sll() {
        let mut last_ratio = 0.0;
        for sll in [20.0, 30.0, 40.0, 60.0, 80.0, 100.0] {
            let w = chebyshev_taper(8, sll).unwrap();
            for i in 0..8 {
                assert!((w[i] - w[7 - i]).abs() < 1e-12);
            }
            let ratio = w[3] / w[0];
            assert!(ratio > last_ratio, "center/edge ratio must grow with sll");
            last_ratio = ratio;
            // monotone from the edge toward the center
            for i in 0..3 {
                assert!(w[i] < w[i + 1]);
            }
        }
    }
}
