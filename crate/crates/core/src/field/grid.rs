use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Uniform square grid of `n_side × n_side` nodes covering
/// `[center - s, center + s]²` in the complex plane.
///
/// Row `i` runs along the imaginary axis and column `j` along the real axis;
/// values are stored row-major. With `offset` set, nodes sit at cell
/// centres so that no node coincides with `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct GridSpec<T> {
    pub center: Complex<T>,
    pub half_width: T,
    pub n_side: usize,
    pub offset: bool,
}

impl<T: Real> GridSpec<T> {
    pub fn new(center: Complex<T>, half_width: T, n_side: usize, offset: bool) -> Result<Self> {
        let g = Self {
            center,
            half_width,
            n_side,
            offset,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid centred at the origin.
    pub fn centered(half_width: T, n_side: usize, offset: bool) -> Result<Self> {
        Self::new(Complex::new(T::zero(), T::zero()), half_width, n_side, offset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_side < 8 || !self.n_side.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_side must be a power of two >= 8, got {}",
                self.n_side
            )));
        }
        if !(self.half_width > T::zero()) || !self.half_width.is_finite() {
            return Err(Error::invalid(format!(
                "half_width must be positive and finite, got {}",
                self.half_width
            )));
        }
        if !self.center.re.is_finite() || !self.center.im.is_finite() {
            return Err(Error::invalid("grid center must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_side * self.n_side
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n_side == 0
    }

    #[inline]
    pub fn cell(&self) -> T {
        (self.half_width + self.half_width) / T::from_usize_lossy(self.n_side)
    }

    #[inline]
    pub fn cell_area(&self) -> T {
        let h = self.cell();
        h * h
    }

    #[inline]
    fn shift(&self) -> T {
        if self.offset {
            T::lit(0.5)
        } else {
            T::zero()
        }
    }

    /// Offset of node `k` from the centre along either axis.
    #[inline]
    pub fn axis_coord(&self, k: usize) -> T {
        -self.half_width + (T::from_usize_lossy(k) + self.shift()) * self.cell()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex<T> {
        Complex::new(
            self.center.re + self.axis_coord(j),
            self.center.im + self.axis_coord(i),
        )
    }

    #[inline]
    pub fn node_at(&self, idx: usize) -> Complex<T> {
        self.node(idx / self.n_side, idx % self.n_side)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        (0..self.len()).map(move |k| self.node_at(k))
    }

    /// Fractional (row, column) position of a point, in node units.
    #[inline]
    pub fn locate(&self, z: Complex<T>) -> (T, T) {
        let h = self.cell();
        let col = (z.re - self.center.re + self.half_width) / h - self.shift();
        let row = (z.im - self.center.im + self.half_width) / h - self.shift();
        (row, col)
    }

    /// Index of the node nearest to `z`, if `z` lies inside the grid.
    pub fn nearest(&self, z: Complex<T>) -> Option<usize> {
        let (r, c) = self.locate(z);
        let r = r.round();
        let c = c.round();
        let n = T::from_usize_lossy(self.n_side);
        if r < T::zero() || c < T::zero() || r >= n || c >= n {
            return None;
        }
        Some(r.to_usize()? * self.n_side + c.to_usize()?)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n_side == other.n_side
            && self.offset == other.offset
            && (self.half_width - other.half_width).abs() <= T::epsilon() * self.half_width * T::lit(16.0)
            && (self.center - other.center).norm() <= T::epsilon() * self.half_width * T::lit(16.0)
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "n={} s={} c={} offset={} vs n={} s={} c={} offset={}",
                self.n_side,
                self.half_width,
                self.center,
                self.offset,
                other.n_side,
                other.half_width,
                other.center,
                other.offset
            )))
        }
    }

    /// Grid with `factor` times as many nodes per side, sharing node 0 and
    /// the cell size. Used for zero-padded FFT convolution.
    pub fn padded(&self, factor: usize) -> Self {
        let s_new = self.half_width * T::from_usize_lossy(factor);
        let shift = s_new - self.half_width;
        Self {
            center: self.center + Complex::new(shift, shift),
            half_width: s_new,
            n_side: self.n_side * factor,
            offset: self.offset,
        }
    }

    pub fn cast<U: Real>(&self) -> GridSpec<U> {
        GridSpec {
            center: Complex::new(U::lit(self.center.re.f64()), U::lit(self.center.im.f64())),
            half_width: U::lit(self.half_width.f64()),
            n_side: self.n_side,
            offset: self.offset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::<f64>::centered(1.0, 4, false).is_err());
        assert!(GridSpec::<f64>::centered(1.0, 24, false).is_err());
        assert!(GridSpec::<f64>::centered(0.0, 16, false).is_err());
        assert!(GridSpec::<f64>::centered(1.0, 16, false).is_ok());
    }

    #[test]
    fn offset_grid_avoids_center() {
        let g = GridSpec::<f64>::new(Complex::new(0.3, -0.2), 2.0, 32, true).unwrap();
        for z in g.nodes() {
            assert!((z - g.center).norm() > 0.25 * g.cell());
        }
        let g0 = GridSpec::<f64>::new(Complex::new(0.3, -0.2), 2.0, 32, false).unwrap();
        assert!(g0.nodes().any(|z| (z - g0.center).norm() < 1e-12));
    }

    #[test]
    fn padded_grid_shares_origin_node() {
        let g = GridSpec::<f64>::centered(1.5, 16, true).unwrap();
        let p = g.padded(3);
        assert_eq!(p.n_side, 48);
        assert!((p.cell() - g.cell()).abs() < 1e-15);
        assert!((p.node(0, 0) - g.node(0, 0)).norm() < 1e-14);
        assert!((p.node(5, 7) - g.node(5, 7)).norm() < 1e-14);
    }

    #[test]
    fn locate_inverts_node() {
        let g = GridSpec::<f64>::centered(2.0, 64, true).unwrap();
        let (r, c) = g.locate(g.node(10, 41));
        assert!((r - 10.0).abs() < 1e-12 && (c - 41.0).abs() < 1e-12);
        assert_eq!(g.nearest(g.node(3, 5)), Some(3 * 64 + 5));
    }
}
