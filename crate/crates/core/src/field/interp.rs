use super::{angular_freq, ComplexField, Fft2, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;

fn out_of_grid<T: Real>(z: Complex<T>) -> Error {
    Error::invalid(format!("point {z} lies outside the grid"))
}

/// Bilinear interpolation of `f` at `z`.
pub fn bilinear<T: Real>(f: &ComplexField<T>, z: Complex<T>) -> Result<Complex<T>> {
    let g = f.grid();
    let n = g.n_side;
    let (r, c) = g.locate(z);
    let top = T::from_usize_lossy(n - 1);
    if !(r >= T::zero() && c >= T::zero() && r <= top && c <= top) {
        return Err(out_of_grid(z));
    }
    let r0 = r.floor().to_usize().unwrap().min(n - 2);
    let c0 = c.floor().to_usize().unwrap().min(n - 2);
    let tr = r - T::from_usize_lossy(r0);
    let tc = c - T::from_usize_lossy(c0);
    let one = T::one();
    Ok(f.get(r0, c0) * ((one - tr) * (one - tc))
        + f.get(r0, c0 + 1) * ((one - tr) * tc)
        + f.get(r0 + 1, c0) * (tr * (one - tc))
        + f.get(r0 + 1, c0 + 1) * (tr * tc))
}

// Keys cubic convolution weights (a = -1/2) for offset t ∈ [0, 1).
fn cubic_weights<T: Real>(t: T) -> [T; 4] {
    let h = T::lit(0.5);
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    [
        h * (-t3 + two * t2 - t),
        h * (three * t3 - T::lit(5.0) * t2 + two),
        h * (-three * t3 + T::lit(4.0) * t2 + t),
        h * (t3 - t2),
    ]
}

/// Bicubic (cubic convolution) interpolation of `f` at `z`; stencils are
/// clamped at the grid edge.
pub fn bicubic<T: Real>(f: &ComplexField<T>, z: Complex<T>) -> Result<Complex<T>> {
    let g = f.grid();
    let n = g.n_side as i64;
    let (r, c) = g.locate(z);
    let top = T::from_usize_lossy(g.n_side - 1);
    if !(r >= T::zero() && c >= T::zero() && r <= top && c <= top) {
        return Err(out_of_grid(z));
    }
    let r0 = r.floor().to_i64().unwrap();
    let c0 = c.floor().to_i64().unwrap();
    let wr = cubic_weights(r - T::lit(r0 as f64));
    let wc = cubic_weights(c - T::lit(c0 as f64));
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, wa) in wr.iter().enumerate() {
        let ri = (r0 - 1 + a as i64).clamp(0, n - 1) as usize;
        let mut row = Complex::new(T::zero(), T::zero());
        for (b, wb) in wc.iter().enumerate() {
            let ci = (c0 - 1 + b as i64).clamp(0, n - 1) as usize;
            row = row + f.get(ri, ci) * *wb;
        }
        acc = acc + row * *wa;
    }
    Ok(acc)
}

/// Trigonometric (zero-padded FFT) interpolation onto a grid with `factor`
/// times as many nodes over the same square. Exact for band-limited data;
/// intended for fields that vanish near the grid edge.
pub fn upsample<T: Real>(f: &ComplexField<T>, factor: usize) -> Result<ComplexField<T>> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::invalid("upsampling factor must be a power of two"));
    }
    let g = *f.grid();
    if factor == 1 {
        return Ok(f.clone());
    }
    let n = g.n_side;
    let m = n * factor;
    let fine = GridSpec::new(g.center, g.half_width, m, g.offset)?;
    let h = g.cell();
    let d = (fine.node(0, 0) - g.node(0, 0)).re;
    let mut spec = f.values().to_vec();
    Fft2::new(n).forward(&mut spec);
    // Map a coarse bin to its fine-grid bin(s); Nyquist is split in half.
    let targets = |k: usize| -> Vec<(usize, T)> {
        if k < n / 2 {
            vec![(k, T::one())]
        } else if k > n / 2 {
            vec![(m - (n - k), T::one())]
        } else {
            vec![(n / 2, T::lit(0.5)), (m - n / 2, T::lit(0.5))]
        }
    };
    let freq = |kf: usize| angular_freq::<T>(kf, m, h / T::from_usize_lossy(factor));
    let mut out = vec![Complex::new(T::zero(), T::zero()); m * m];
    let scale = T::from_usize_lossy(factor * factor);
    for i in 0..n {
        for (fi, wi) in targets(i) {
            let pi = freq(fi) * d;
            for j in 0..n {
                for (fj, wj) in targets(j) {
                    let phase = pi + freq(fj) * d;
                    let rot = Complex::new(phase.cos(), phase.sin());
                    out[fi * m + fj] = out[fi * m + fj] + spec[i * n + j] * rot * (wi * wj * scale);
                }
            }
        }
    }
    Fft2::new(m).inverse(&mut out);
    ComplexField::new(fine, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolants_reproduce_low_degree() {
        let g = GridSpec::<f64>::new(Complex::new(0.1, 0.2), 1.0, 16, true).unwrap();
        let lin = ComplexField::from_fn(g, |z| z * 2.0 + z.conj() * Complex::new(0.0, 1.0)).unwrap();
        let cub = ComplexField::from_fn(g, |z| Complex::new(z.re * z.re * z.im - z.im * z.im, z.re)).unwrap();
        let p = Complex::new(0.33, -0.41);
        let exact_lin = p * 2.0 + p.conj() * Complex::new(0.0, 1.0);
        assert!((bilinear(&lin, p).unwrap() - exact_lin).norm() < 1e-13);
        assert!((bicubic(&lin, p).unwrap() - exact_lin).norm() < 1e-13);
        // Keys' kernel reproduces quadratics exactly in each direction
        let q = ComplexField::from_fn(g, |z| Complex::new(z.re * z.re + z.im * z.im, 0.0)).unwrap();
        assert!((bicubic(&q, p).unwrap().re - p.norm_sqr()).abs() < 1e-13);
        assert!(bicubic(&cub, Complex::new(5.0, 0.0)).is_err());
    }

    #[test]
    fn upsampling_is_exact_on_gaussians() {
        for offset in [false, true] {
            let g = GridSpec::<f64>::centered(4.0, 64, offset).unwrap();
            let f = |z: Complex<f64>| Complex::new((-2.0 * z.norm_sqr()).exp() * (1.0 + z.re), 0.0);
            let coarse = ComplexField::from_fn(g, f).unwrap();
            let fine = upsample(&coarse, 4).unwrap();
            let mut worst: f64 = 0.0;
            for (k, v) in fine.values().iter().enumerate() {
                worst = worst.max((v - f(fine.grid().node_at(k))).norm());
            }
            assert!(worst < 1e-9, "offset={offset} err={worst}");
        }
    }
}
