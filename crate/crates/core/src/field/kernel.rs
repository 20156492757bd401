//! Periodized FFT convolution with the Cauchy kernel `1/(πz)` and with
//! Faddeev's Green's function.
//!
//! Each kernel is split as `K = A + R` where `A` carries the singularity
//! and has a closed-form Fourier transform (evaluated exactly on the DFT
//! frequencies), and `R` is smooth: `R` is sampled in real space, truncated
//! by a smooth radial cutoff, and transformed numerically. Since the
//! transform of `A` is an entire function of `ξ`, no frequency node is ever
//! singular, for any `λ`.

use super::{angular_freq, wrapped_index, ComplexField, Fft2, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special;
use num_complex::{Complex, Complex64};

/// Minimum cutoff transition half-width, in cells.
const CUTOFF_CELLS: f64 = 14.0;
/// Minimum Gaussian screening length, in cells.
const SCREEN_CELLS: f64 = 3.5;
/// Largest screening length used by the Faddeev split.
const SCREEN_MAX: f64 = 0.25;
const PADS: [usize; 8] = [1, 2, 3, 4, 6, 8, 12, 16];

/// `(1 - e^{-x}) / x`, entire in `x`.
fn phi(x: Complex64) -> Complex64 {
    if x.norm() < 1e-3 {
        Complex64::new(1.0, 0.0) - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else {
        (Complex64::new(1.0, 0.0) - (-x).exp()) / x
    }
}

/// A translation-invariant kernel prepared for zero-padded periodic FFT
/// convolution of data living on `grid`.
pub struct PeriodicKernel<T: Real> {
    grid: GridSpec<T>,
    pad: usize,
    reach: T,
    fft: Fft2<T>,
    spectrum: Vec<Complex<T>>,
}

/// Cutoff geometry shared by both kernels.
struct Layout {
    pad: usize,
    n: usize,
    h: f64,
    r_mid: f64,
    half_width: f64,
}

fn layout<T: Real>(grid: &GridSpec<T>, reach: f64) -> Result<Layout> {
    let h = grid.cell().f64();
    let s = grid.half_width.f64();
    if !(reach > 0.0) || !reach.is_finite() {
        return Err(Error::invalid(format!("kernel reach must be positive, got {reach}")));
    }
    for &pad in &PADS {
        let half_box = s * pad as f64;
        let hw = 0.5 * (half_box - reach);
        if hw >= CUTOFF_CELLS * h {
            return Ok(Layout {
                pad,
                n: grid.n_side * pad,
                h,
                r_mid: reach + hw,
                half_width: hw,
            });
        }
    }
    Err(Error::invalid(format!(
        "kernel reach {reach} too large for grid half-width {s}"
    )))
}

impl<T: Real> PeriodicKernel<T> {
    fn build(
        grid: &GridSpec<T>,
        reach: f64,
        smooth: impl Fn(Complex64) -> Complex64,
        analytic: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        grid.validate()?;
        let lay = layout(grid, reach)?;
        let n = lay.n;
        let h2 = lay.h * lay.h;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n * n];
        let outer = lay.r_mid + 1.2 * lay.half_width;
        for i in 0..n {
            let y = wrapped_index(i, n) as f64 * lay.h;
            for j in 0..n {
                let x = wrapped_index(j, n) as f64 * lay.h;
                let r = x.hypot(y);
                if r > outer {
                    continue;
                }
                let w = special::soft_cutoff(r, lay.r_mid, lay.half_width);
                if w == 0.0 {
                    continue;
                }
                let v = smooth(Complex64::new(x, y)) * (w * h2);
                buf[i * n + j] = Complex::new(T::lit(v.re), T::lit(v.im));
            }
        }
        let fft = Fft2::new(n);
        fft.forward(&mut buf);
        let hh = T::lit(lay.h);
        for i in 0..n {
            let xi2 = angular_freq(i, n, hh).f64();
            for j in 0..n {
                let xi1 = angular_freq(j, n, hh).f64();
                let a = analytic(xi1, xi2);
                buf[i * n + j] = buf[i * n + j] + Complex::new(T::lit(a.re), T::lit(a.im));
            }
        }
        if buf.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::numerical(
                crate::error::Stage::FieldCore,
                "non-finite kernel spectrum",
            ));
        }
        Ok(Self {
            grid: *grid,
            pad: lay.pad,
            reach: T::lit(reach),
            fft,
            spectrum: buf,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// Zero-padding factor per side.
    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Largest source–target distance for which the periodized convolution
    /// equals the free-space one.
    pub fn reach(&self) -> T {
        self.reach
    }

    /// Grid of the padded periodic box (shares node 0 with `grid`).
    pub fn padded_grid(&self) -> GridSpec<T> {
        self.grid.padded(self.pad)
    }

    /// Kernel transform on the padded DFT frequencies (wrap-around order).
    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.spectrum
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    /// Convolution evaluated on the whole padded box.
    pub fn apply_padded(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.grid.n_side;
        let big = n * self.pad;
        assert_eq!(f.len(), n * n, "kernel input size");
        let mut buf = vec![Complex::new(T::zero(), T::zero()); big * big];
        for i in 0..n {
            buf[i * big..i * big + n].copy_from_slice(&f[i * n..(i + 1) * n]);
        }
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b = *b * *k;
        }
        self.fft.inverse(&mut buf);
        buf
    }

    /// Convolution restricted back to the source grid.
    pub fn apply(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.grid.n_side;
        let big = n * self.pad;
        if self.pad == 1 {
            return self.apply_padded(f);
        }
        let full = self.apply_padded(f);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.extend_from_slice(&full[i * big..i * big + n]);
        }
        out
    }

    pub fn apply_field(&self, f: &ComplexField<T>) -> Result<ComplexField<T>> {
        self.grid.ensure_same(f.grid())?;
        ComplexField::new(self.grid, self.apply(f.values()))
    }
}

fn full_reach<T: Real>(grid: &GridSpec<T>) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * grid.half_width.f64()
}

/// Kernel `1/(πz)`, the inverse of `∂/∂z̄`.
pub struct CauchyKernel;

impl CauchyKernel {
    /// `reach` defaults to the grid diagonal, i.e. any source to any node.
    pub fn new<T: Real>(grid: &GridSpec<T>, reach: Option<f64>) -> Result<PeriodicKernel<T>> {
        let a = 4.0 * grid.cell().f64();
        PeriodicKernel::build(
            grid,
            reach.unwrap_or_else(|| full_reach(grid)),
            |z| special::cauchy_remainder(z, a),
            |x1, x2| {
                let zeta_bar = Complex64::new(x1, -x2);
                let x = a * a * (x1 * x1 + x2 * x2) / 4.0;
                Complex64::new(0.0, -2.0) * zeta_bar * (a * a / 4.0) * phi(Complex64::new(x, 0.0))
            },
        )
    }
}

/// Faddeev's Green's function `g_λ`, the decaying fundamental solution of
/// `-Δ - 4iλ∂/∂z̄`. At `λ = 0` this is `-(1/2π) ln|z|`.
pub struct FaddeevKernel;

impl FaddeevKernel {
    pub fn new<T: Real>(
        grid: &GridSpec<T>,
        lambda: Complex<T>,
        reach: Option<f64>,
    ) -> Result<PeriodicKernel<T>> {
        let lam = Complex64::new(lambda.re.f64(), lambda.im.f64());
        if !lam.re.is_finite() || !lam.im.is_finite() {
            return Err(Error::invalid("non-finite λ"));
        }
        let h = grid.cell().f64();
        let mut a = SCREEN_MAX;
        if lam.norm() > 0.0 {
            a = a.min(3.0 / lam.norm());
        }
        a = a.max(SCREEN_CELLS * h);
        if lam.norm() * a > 6.0 {
            return Err(Error::invalid(format!(
                "|λ| = {} is not resolved by cell {h}; refine the z-grid",
                lam.norm()
            )));
        }
        PeriodicKernel::build(
            grid,
            reach.unwrap_or_else(|| full_reach(grid)),
            |z| special::faddeev_remainder(lam, z, a),
            |x1, x2| {
                let q = Complex64::new(x1 * x1 + x2 * x2, 0.0) + lam * Complex64::new(x1, x2) * 2.0;
                phi(q * (a * a / 4.0)) * (a * a / 4.0)
            },
        )
    }
}

/// Solid Cauchy transform `(1/π) ∫ f(w) / (z - w) dA(w)`, so that
/// `∂̄ solid_cauchy(f) = f`.
pub fn solid_cauchy<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    CauchyKernel::new(f.grid(), None)?.apply_field(f)
}

/// `g_λ ∗ f` on the grid of `f`.
pub fn faddeev_convolve<T: Real>(lambda: Complex<T>, f: &ComplexField<T>) -> Result<ComplexField<T>> {
    FaddeevKernel::new(f.grid(), lambda, None)?.apply_field(f)
}
