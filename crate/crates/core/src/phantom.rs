//! Conductivities, the conductivity-type potentials they induce, and the
//! smoothness norms that parametrize the stability estimates.

use crate::error::{Error, Result};
use crate::field::{spectral_derivative, ComplexField, Fft2, GridSpec};
use crate::scalar::Real;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Largest multi-index order accepted by [`norm_w_m1`].
pub const MAX_SMOOTHNESS: u32 = 8;

/// A real positive conductivity, identically 1 outside `|z| ≤ support_radius`.
#[derive(Debug, Clone)]
pub struct Conductivity<T: Real> {
    pub field: ComplexField<T>,
    pub sigma_min: T,
    pub sigma_max: T,
    pub support_radius: T,
}

/// A real potential `v = Δσ^{1/2}/σ^{1/2}` with its smoothness norms.
#[derive(Debug, Clone)]
pub struct Potential<T: Real> {
    pub field: ComplexField<T>,
    pub m: u32,
    pub support_radius: T,
    /// `max_{|J|≤m} ‖∂^J v‖_{L¹}`.
    pub norm_m1: T,
    /// `sup_p (1+|p|²)^{m/2} |v̂(p)|`.
    pub norm_hat_m: T,
}

fn check_support<T: Real>(f: &ComplexField<T>, rho: T, what: &str) -> Result<()> {
    if !(rho > T::zero() && rho <= T::one()) {
        return Err(Error::invalid(format!("{what}: support radius {rho} must lie in (0, 1]")));
    }
    let g = f.grid();
    if g.half_width - g.center.re.abs().max(g.center.im.abs()) < rho + T::lit(2.0) * g.cell() {
        return Err(Error::invalid(format!(
            "{what}: grid must contain the disk |z| ≤ {rho} with a margin of two cells"
        )));
    }
    Ok(())
}

impl<T: Real> Conductivity<T> {
    pub fn new(field: ComplexField<T>, support_radius: T) -> Result<Self> {
        check_support(&field, support_radius, "conductivity")?;
        let tol = T::lit(1e-14);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (k, v) in field.values().iter().enumerate() {
            if v.im.abs() > tol * v.re.abs().max(T::one()) {
                return Err(Error::invalid("conductivity must be real"));
            }
            if !(v.re > T::zero()) {
                return Err(Error::invalid(format!("conductivity not positive at node {k}")));
            }
            if field.grid().node_at(k).norm() > support_radius && (v.re - T::one()).abs() > tol {
                return Err(Error::invalid(format!(
                    "conductivity differs from 1 outside |z| ≤ {support_radius}"
                )));
            }
            lo = lo.min(v.re);
            hi = hi.max(v.re);
        }
        Ok(Self {
            field,
            sigma_min: lo,
            sigma_max: hi,
            support_radius,
        })
    }

    /// σ ≡ 1 on `grid`.
    pub fn constant_one(grid: GridSpec<T>) -> Result<Self> {
        let rho = T::lit(0.5).min(grid.half_width * T::lit(0.5));
        Self::new(ComplexField::constant(grid, Complex::new(T::one(), T::zero())), rho)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.field.grid()
    }

    /// Pointwise value of σ (real part of the stored samples).
    pub fn value(&self, i: usize, j: usize) -> T {
        self.field.get(i, j).re
    }
}

impl<T: Real> Potential<T> {
    /// Wrap a real, compactly supported field, computing both norms.
    pub fn new(field: ComplexField<T>, m: u32, support_radius: T) -> Result<Self> {
        if m <= 2 {
            return Err(Error::invalid(format!("smoothness m must exceed 2, got {m}")));
        }
        if m > MAX_SMOOTHNESS {
            return Err(Error::invalid(format!("smoothness m is capped at {MAX_SMOOTHNESS}, got {m}")));
        }
        check_support(&field, support_radius, "potential")?;
        let scale = field.sup_norm().max(T::one());
        if field.max_imag() > T::lit(1e-12) * scale {
            return Err(Error::invalid("potential must be real"));
        }
        for (k, v) in field.values().iter().enumerate() {
            if field.grid().node_at(k).norm() > support_radius && v.norm() != T::zero() {
                return Err(Error::invalid(format!(
                    "potential must vanish outside |z| ≤ {support_radius}"
                )));
            }
        }
        let norm_m1 = norm_w_m1(&field, m)?;
        let norm_hat_m = norm_hat_m(&field, m);
        Ok(Self {
            field,
            m,
            support_radius,
            norm_m1,
            norm_hat_m,
        })
    }

    pub fn zero(grid: GridSpec<T>, m: u32) -> Result<Self> {
        let rho = T::lit(0.5).min(grid.half_width * T::lit(0.5));
        Self::new(ComplexField::zeros(grid), m, rho)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.field.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.field.values().iter().all(|v| v.norm() == T::zero())
    }
}

/// The C^∞ bump profile `exp(1 - 1/(1 - ρ²))` for `ρ < 1`, else 0.
pub fn bump_profile<T: Real>(rho2: T) -> T {
    if rho2 >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - rho2)).exp()
    }
}

/// `σ(z) = 1 + t·exp(1 - 1/(1 - |z-c|²/r²))` inside the bump, 1 outside.
pub fn make_radial_bump<T: Real>(
    t: T,
    center: Complex<T>,
    radius: T,
    grid: &GridSpec<T>,
) -> Result<Conductivity<T>> {
    grid.validate()?;
    if !(t > -T::one()) || !t.is_finite() {
        return Err(Error::invalid(format!("bump amplitude must exceed -1, got {t}")));
    }
    if !(radius > T::zero()) {
        return Err(Error::invalid(format!("bump radius must be positive, got {radius}")));
    }
    let rho = center.norm() + radius;
    if rho >= T::one() {
        return Err(Error::invalid(format!(
            "bump |c| + r = {rho} leaves the unit disk"
        )));
    }
    let field = ComplexField::from_real_fn(*grid, |z| {
        T::one() + t * bump_profile((z - center).norm_sqr() / (radius * radius))
    })?;
    Conductivity::new(field, rho)
}

/// `v = Δσ^{1/2}/σ^{1/2}`, with the Laplacian taken spectrally on the
/// compactly supported `σ^{1/2} - 1`. Nodes outside the support are set to 0.
pub fn potential_from_conductivity<T: Real>(sigma: &Conductivity<T>, m: u32) -> Result<Potential<T>> {
    potential_from_samples(&sigma.field, sigma.support_radius, m)
}

/// As [`potential_from_conductivity`] for raw samples of a positive `σ`
/// that is constant (not necessarily 1) outside `|z| ≤ support_radius`.
pub fn potential_from_samples<T: Real>(
    sigma: &ComplexField<T>,
    support_radius: T,
    m: u32,
) -> Result<Potential<T>> {
    let g = *sigma.grid();
    if sigma.values().iter().any(|v| !(v.re > T::zero())) {
        return Err(Error::invalid("conductivity touches zero"));
    }
    let exterior = sigma.values()[0].re.sqrt();
    let root: Vec<Complex<T>> = sigma
        .values()
        .iter()
        .map(|v| Complex::new(v.re.sqrt() - exterior, T::zero()))
        .collect();
    let fft = Fft2::new(g.n_side);
    let h = g.cell();
    let dxx = spectral_derivative(&fft, &root, h, 2, 0);
    let dyy = spectral_derivative(&fft, &root, h, 0, 2);
    let values = (0..g.len())
        .map(|k| {
            if g.node_at(k).norm() > support_radius {
                return Complex::new(T::zero(), T::zero());
            }
            let s = root[k].re + exterior;
            Complex::new((dxx[k].re + dyy[k].re) / s, T::zero())
        })
        .collect();
    Potential::new(ComplexField::new(g, values)?, m, support_radius)
}

/// `max_{|J| ≤ m} ‖∂^J v‖_{L¹}` with spectral derivatives and grid
/// quadrature.
pub fn norm_w_m1<T: Real>(v: &ComplexField<T>, m: u32) -> Result<T> {
    if m > MAX_SMOOTHNESS {
        return Err(Error::invalid(format!("multi-index order capped at {MAX_SMOOTHNESS}")));
    }
    let g = v.grid();
    let fft = Fft2::new(g.n_side);
    let mut best = T::zero();
    for total in 0..=m {
        for a in 0..=total {
            let d = if total == 0 {
                v.values().to_vec()
            } else {
                spectral_derivative(&fft, v.values(), g.cell(), a, total - a)
            };
            let l1 = d.iter().map(|x| x.norm()).sum::<T>() * g.cell_area();
            best = best.max(l1);
        }
    }
    Ok(best)
}

/// `sup_p (1+|p|²)^{m/2} |v̂(p)|` over the DFT frequencies, where
/// `v̂(p) = (2π)⁻² ∫ e^{ip·x} v(x) dx` is approximated by `(2π)⁻² h² |DFT(v)|`
/// (the node-origin phase drops out of the modulus).
pub fn norm_hat_m<T: Real>(v: &ComplexField<T>, m: u32) -> T {
    let g = v.grid();
    let n = g.n_side;
    let mut buf = v.values().to_vec();
    Fft2::new(n).forward(&mut buf);
    let h = g.cell();
    let scale = g.cell_area() / T::lit(4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let half_m = T::lit(m as f64 / 2.0);
    let mut best = T::zero();
    for i in 0..n {
        let p2 = crate::field::angular_freq(i, n, h);
        for j in 0..n {
            let p1 = crate::field::angular_freq(j, n, h);
            let w = (T::one() + p1 * p1 + p2 * p2).powf(half_m);
            best = best.max(w * buf[i * n + j].norm() * scale);
        }
    }
    best
}

/// Serializable grid description used by recipes and configs.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecipe {
    pub s: f64,
    pub n: usize,
    #[serde(default)]
    pub offset: bool,
}

impl GridRecipe {
    pub fn to_grid<T: Real>(&self) -> Result<GridSpec<T>> {
        GridSpec::centered(T::lit(self.s), self.n, self.offset)
    }
}

fn default_m() -> u32 {
    4
}

/// JSON phantom recipe.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhantomRecipe {
    RadialBump {
        t: f64,
        center: [f64; 2],
        radius: f64,
        grid: GridRecipe,
        #[serde(default = "default_m")]
        m: u32,
    },
}

impl PhantomRecipe {
    pub fn radial_bump(t: f64, center: [f64; 2], radius: f64, grid: GridRecipe) -> Self {
        Self::RadialBump { t, center, radius, grid, m: default_m() }
    }

    pub fn m(&self) -> u32 {
        match self {
            Self::RadialBump { m, .. } => *m,
        }
    }

    pub fn grid(&self) -> GridRecipe {
        match self {
            Self::RadialBump { grid, .. } => *grid,
        }
    }

    pub fn conductivity<T: Real>(&self) -> Result<Conductivity<T>> {
        match self {
            Self::RadialBump { t, center, radius, grid, .. } => make_radial_bump(
                T::lit(*t),
                Complex::new(T::lit(center[0]), T::lit(center[1])),
                T::lit(*radius),
                &grid.to_grid()?,
            ),
        }
    }

    pub fn potential<T: Real>(&self) -> Result<Potential<T>> {
        potential_from_conductivity(&self.conductivity()?, self.m())
    }

    /// Stable identifier (canonical JSON).
    pub fn id(&self) -> String {
        serde_json::to_string(self).expect("recipe serializes")
    }
}
