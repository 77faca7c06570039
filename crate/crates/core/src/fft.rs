//! Cyclic convolution and correlation through rustfft.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

/// Lengths above this use the transform path; at or below, direct sums.
pub const FAST_PATH_THRESHOLD: usize = 512;

fn spectra<R: Real>(a: &[R], b: &[R]) -> (Vec<Complex<R>>, Vec<Complex<R>>, FftPlanner<R>) {
    let n = a.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut fa: Vec<Complex<R>> = a.iter().map(|&v| Complex::new(v, R::zero())).collect();
    let mut fb: Vec<Complex<R>> = b.iter().map(|&v| Complex::new(v, R::zero())).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    (fa, fb, planner)
}

fn inverse_real<R: Real>(mut spec: Vec<Complex<R>>, planner: &mut FftPlanner<R>) -> Vec<R> {
    let n = spec.len();
    planner.plan_fft_inverse(n).process(&mut spec);
    let scale = R::from_count(n).recip();
    spec.into_iter().map(|c| c.re * scale).collect()
}

/// `out[n] = Σ_k a[k]·b[(n−k) mod N]`.
pub fn cyclic_convolve<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    assert_eq!(a.len(), b.len());
    let (fa, fb, mut planner) = spectra(a, b);
    let prod = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    inverse_real(prod, &mut planner)
}

/// `out[l] = Σ_n a[n]·b[(n−l) mod N]`.
pub fn cyclic_correlate<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    assert_eq!(a.len(), b.len());
    let (fa, fb, mut planner) = spectra(a, b);
    let prod = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    inverse_real(prod, &mut planner)
}

pub fn cyclic_convolve_direct<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    let n = a.len();
    (0..n)
        .map(|out| {
            (0..n).fold(R::zero(), |acc, k| acc + a[k] * b[(out + n - k) % n])
        })
        .collect()
}

pub fn cyclic_correlate_direct<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    let n = a.len();
    (0..n)
        .map(|lag| (0..n).fold(R::zero(), |acc, i| acc + a[i] * b[(i + n - lag) % n]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_and_direct_paths_agree() {
        let a: Vec<f64> = (0..37).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..37).map(|i| ((i * 3) % 5) as f64 * 0.5).collect();
        for (x, y) in cyclic_convolve(&a, &b).iter().zip(cyclic_convolve_direct(&a, &b)) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in cyclic_correlate(&a, &b).iter().zip(cyclic_correlate_direct(&a, &b)) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
