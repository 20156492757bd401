//! Complex fields on uniform square grids, and the FFT machinery built on
//! top of them.

mod cgrid;
mod fft;
mod grid;
mod interp;
mod kernel;

pub use cgrid::{read_cgrid, read_cgrid_from, write_cgrid, write_cgrid_to, CGRID_MAGIC};
pub use fft::{angular_freq, apply_multiplier, spectral_derivative, wrapped_index, Fft2};
pub use grid::GridSpec;
pub use interp::{bicubic, bilinear, upsample};
pub use kernel::{
    faddeev_convolve, solid_cauchy, CauchyKernel, FaddeevKernel, PeriodicKernel,
};

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;

/// Samples of a complex function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T: Real> {
    grid: GridSpec<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexField<T> {
    /// Build from explicit values. Rejects wrong lengths and non-finite data.
    pub fn new(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at node {k} ({}, {})",
                k / grid.n_side,
                k % grid.n_side
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self::constant(grid, Complex::new(T::zero(), T::zero()))
    }

    pub fn constant(grid: GridSpec<T>, c: Complex<T>) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(Complex<T>) -> Complex<T>) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: GridSpec<T>, f: impl Fn(Complex<T>) -> T) -> Result<Self> {
        Self::from_fn(grid, |z| Complex::new(f(z), T::zero()))
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.grid.n_side + j]
    }

    /// Pointwise map producing a new field.
    pub fn map(&self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.grid.node_at(k), v))
            .collect();
        Self::new(self.grid, values)
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max))
    }

    /// Grid quadrature `(Σ |f|^p h²)^{1/p}`; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> T {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let pp = T::lit(p);
        let s: T = self.values.iter().map(|v| v.norm().powf(pp)).sum();
        (s * self.grid.cell_area()).powf(T::one() / pp)
    }

    /// Grid quadrature of the field, `Σ f h²`.
    pub fn integral(&self) -> Complex<T> {
        let s = self
            .values
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v);
        s * self.grid.cell_area()
    }

    pub fn max_imag(&self) -> T {
        self.values.iter().map(|v| v.im.abs()).fold(T::zero(), T::max)
    }
}

/// `e_λ(z) = exp(i(zλ + z̄λ̄)) = exp(2i Re(zλ))` on every node.
pub fn e_lambda<T: Real>(grid: &GridSpec<T>, lambda: Complex<T>) -> ComplexField<T> {
    let two = T::lit(2.0);
    let values = grid
        .nodes()
        .map(|z| {
            let phase = two * (z * lambda).re;
            Complex::new(phase.cos(), phase.sin())
        })
        .collect();
    ComplexField {
        grid: *grid,
        values,
    }
}

/// Max over interior nodes of `|∂̄f - rhs|`, with `∂̄ = (∂x + i∂y)/2`
/// approximated by centred differences.
pub fn dbar_residual<T: Real>(f: &ComplexField<T>, rhs: &ComplexField<T>) -> Result<T> {
    f.grid.ensure_same(&rhs.grid)?;
    let n = f.grid.n_side;
    let inv = T::one() / (T::lit(4.0) * f.grid.cell());
    let i = Complex::new(T::zero(), T::one());
    let mut worst = T::zero();
    for r in 1..n - 1 {
        for c in 1..n - 1 {
            let dx = f.get(r, c + 1) - f.get(r, c - 1);
            let dy = f.get(r + 1, c) - f.get(r - 1, c);
            let d = (dx + i * dy) * inv;
            worst = worst.max((d - rhs.get(r, c)).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec<f64> {
        GridSpec::new(Complex::new(0.25, -0.5), 2.0, 32, true).unwrap()
    }

    #[test]
    fn e_lambda_unit_modulus() {
        let g = grid();
        for lam in [Complex::new(0.0, 0.0), Complex::new(3.0, -7.5), Complex::new(-40.0, 12.0)] {
            let e = e_lambda(&g, lam);
            for v in e.values() {
                assert!((v.norm() - 1.0).abs() < 1e-14);
            }
        }
        let e0 = e_lambda(&g, Complex::new(0.0, 0.0));
        assert!(e0.values().iter().all(|v| *v == Complex::new(1.0, 0.0)));
        let g0 = GridSpec::<f64>::centered(1.0, 8, false).unwrap();
        let e1 = e_lambda(&g0, Complex::new(1.0, 0.0));
        // node (i=..., j=4) is z = i·y; with λ = 1, zλ + z̄λ̄ = 0
        for i in 0..8 {
            let z = g0.node(i, 4);
            assert!(z.re.abs() < 1e-15);
            assert!((e1.get(i, 4) - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid();
        let mut v = vec![Complex::new(0.0, 0.0); g.len()];
        v[7] = Complex::new(f64::NAN, 0.0);
        assert!(ComplexField::new(g, v).is_err());
        assert!(ComplexField::new(g, vec![Complex::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn dbar_residual_exact_on_linears() {
        let g = grid();
        let c = ComplexField::constant(g, Complex::new(2.0, -1.0));
        let zero = ComplexField::zeros(g);
        assert_eq!(dbar_residual(&c, &zero).unwrap(), 0.0);
        let f = ComplexField::from_fn(g, |z| z.conj()).unwrap();
        let one = ComplexField::constant(g, Complex::new(1.0, 0.0));
        assert!(dbar_residual(&f, &one).unwrap() < 1e-13);
        let f = ComplexField::from_fn(g, |z| z).unwrap();
        assert!(dbar_residual(&f, &zero).unwrap() < 1e-13);
    }

    #[test]
    fn dbar_residual_second_order_on_quadratics() {
        let mut ratios = Vec::new();
        for n in [32, 64] {
            let g = GridSpec::<f64>::centered(1.0, n, true).unwrap();
            let f = ComplexField::from_fn(g, |z| z.conj() * z.conj()).unwrap();
            let rhs = ComplexField::from_fn(g, |z| z.conj() * 2.0).unwrap();
            let r = dbar_residual(&f, &rhs).unwrap();
            // z̄² is a polynomial of degree 2, so centred differences are exact
            assert!(r < 1e-12);
            // anti-holomorphic data would cancel the h² term; use a generic one
            let f = ComplexField::from_fn(g, |z| Complex::new(z.re.exp() * z.im.sin(), 0.0)).unwrap();
            let rhs = ComplexField::from_fn(g, |z| {
                Complex::new(z.im.sin(), z.im.cos()) * (0.5 * z.re.exp())
            })
            .unwrap();
            let r = dbar_residual(&f, &rhs).unwrap();
            ratios.push(r / (g.cell() * g.cell()));
        }
        assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.1, "{ratios:?}");
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = ComplexField::zeros(grid());
        let b = ComplexField::zeros(GridSpec::centered(2.0, 32, true).unwrap());
        assert!(matches!(dbar_residual(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn lp_norms_of_indicator() {
        let g = GridSpec::<f64>::centered(1.0, 16, true).unwrap();
        let mut v = vec![Complex::new(0.0, 0.0); g.len()];
        v[40] = Complex::new(1.0, 0.0);
        let f = ComplexField::new(g, v).unwrap();
        assert!((f.lp_norm(1.0) - g.cell_area()).abs() < 1e-15);
        assert!((f.lp_norm(2.0) - g.cell_area().sqrt()).abs() < 1e-15);
        assert_eq!(f.lp_norm(f64::INFINITY), 1.0);
    }
}
