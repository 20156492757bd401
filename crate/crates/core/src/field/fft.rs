use crate::scalar::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Square 2-D FFT of side `n` on row-major data. Unnormalized in both
/// directions; `inverse` divides by `n²` so that `inverse ∘ forward = id`.
pub struct Fft2<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    fn run(&self, plan: &Arc<dyn Fft<T>>, data: &mut [Complex<T>]) {
        assert_eq!(data.len(), self.n * self.n, "fft2 buffer size");
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(&self.fwd, data);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(&self.inv, data);
        let scale = T::one() / T::from_usize_lossy(self.n * self.n);
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

fn transpose_square<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Angular frequency of DFT bin `k` for `n` samples spaced `h`, with bins
/// above `n/2` folded to negative frequencies.
#[inline]
pub fn angular_freq<T: Real>(k: usize, n: usize, h: T) -> T {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    T::lit(2.0 * std::f64::consts::PI * kk / n as f64) / h
}

/// Signed index `m ∈ (-n/2, n/2]` of bin `k` in wrap-around order.
#[inline]
pub fn wrapped_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Apply a Fourier multiplier `m(ξ₁, ξ₂)` to a periodic square array with
/// spacing `h`. Row index is `ξ₂` (imaginary axis), column index `ξ₁`.
pub fn apply_multiplier<T: Real, F>(fft: &Fft2<T>, data: &mut [Complex<T>], h: T, symbol: F)
where
    F: Fn(T, T) -> Complex<T>,
{
    let n = fft.side();
    fft.forward(data);
    for i in 0..n {
        let xi2 = angular_freq(i, n, h);
        for j in 0..n {
            let xi1 = angular_freq(j, n, h);
            data[i * n + j] = data[i * n + j] * symbol(xi1, xi2);
        }
    }
    fft.inverse(data);
}

/// Spectral partial derivative `∂_x^a ∂_y^b` of a periodic array. Odd
/// orders drop the Nyquist bin so that real input stays real.
pub fn spectral_derivative<T: Real>(
    fft: &Fft2<T>,
    data: &[Complex<T>],
    h: T,
    ax: u32,
    ay: u32,
) -> Vec<Complex<T>> {
    let mut out = data.to_vec();
    let nyq = T::lit(std::f64::consts::PI) / h;
    apply_multiplier(fft, &mut out, h, |x1, x2| {
        let mut m = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        for (xi, order) in [(x1, ax), (x2, ay)] {
            if order % 2 == 1 && (xi.abs() - nyq).abs() < nyq * T::lit(1e-9) {
                return Complex::new(T::zero(), T::zero());
            }
            for _ in 0..order {
                m = m * i * xi;
            }
        }
        m
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let f = Fft2::<f64>::new(n);
        let orig: Vec<Complex<f64>> = (0..n * n)
            .map(|k| Complex::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        let err = d.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let n = 32;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let f = Fft2::<f64>::new(n);
        let data: Vec<Complex<f64>> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                Complex::new((3.0 * j as f64 * h).sin() * (2.0 * i as f64 * h).cos(), 0.0)
            })
            .collect();
        let d = spectral_derivative(&f, &data, h, 1, 1);
        for k in 0..n * n {
            let (i, j) = (k / n, k % n);
            let exact = -6.0 * (3.0 * j as f64 * h).cos() * (2.0 * i as f64 * h).sin();
            assert!((d[k].re - exact).abs() < 1e-10 && d[k].im.abs() < 1e-10);
        }
    }
}
