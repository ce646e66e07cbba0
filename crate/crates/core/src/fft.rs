//! FFT-backed linear convolution and sliding dot products.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

/// Below this kernel length the direct O(N·k) loop beats the transform.
const DIRECT_KERNEL_MAX: usize = 48;

/// Full linear convolution `out[t] = Σ_s a[s]·b[t−s]`, length `a.len() + b.len() − 1`.
pub(crate) fn convolve<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<T>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let pad = |src: &[T]| {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); size];
        for (dst, &x) in buf.iter_mut().zip(src) {
            dst.re = x;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    inverse.process(&mut fa);
    let scale = T::one() / T::from_usize_lossy(size);
    fa.iter().take(out_len).map(|c| c.re * scale).collect()
}

/// Sliding dot products `out[i] = Σ_m weights[m]·data[i+m]` for every
/// `i` with `i + weights.len() <= data.len()`.
pub(crate) fn sliding_dot<T: Real>(data: &[T], weights: &[T]) -> Vec<T> {
    let k = weights.len();
    if k == 0 || data.len() < k {
        return Vec::new();
    }
    let count = data.len() - k + 1;
    if k <= DIRECT_KERNEL_MAX {
        return (0..count)
            .map(|i| {
                data[i..i + k]
                    .iter()
                    .zip(weights)
                    .fold(T::zero(), |acc, (&x, &w)| acc + x * w)
            })
            .collect();
    }
    let reversed: Vec<T> = weights.iter().rev().copied().collect();
    let full = convolve(data, &reversed);
    full[k - 1..k - 1 + count].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(data: &[f64], w: &[f64]) -> Vec<f64> {
        (0..=data.len() - w.len())
            .map(|i| w.iter().enumerate().map(|(m, &x)| x * data[i + m]).sum())
            .collect()
    }

    #[test]
    fn convolution_of_small_sequences() {
        let out = convolve(&[1.0_f64, 2.0, 3.0], &[0.0, 1.0, 0.5]);
        let expected = [0.0, 1.0, 2.5, 4.0, 1.5];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_path_matches_direct_loop() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let w: Vec<f64> = (0..200).map(|i| (i as f64 * 0.01).cos()).collect();
        let fast = sliding_dot(&data, &w);
        let slow = direct(&data, &w);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn kernel_longer_than_data_is_empty() {
        assert!(sliding_dot(&[1.0_f64, 2.0], &[1.0, 1.0, 1.0]).is_empty());
    }
}
