//! Scattering amplitude from boundary data through the Alessandrini
//! identity `h(λ) = ∫_{∂D} e^{iz̄λ̄} (Φ - Φ₀) ψ dθ`.

use crate::error::{Error, Result};
use crate::faddeev::{mu_at_points, solve_mu_support, FaddeevConfig, Provenance, ScatteringAmplitude};
use crate::field::{bilinear, ComplexField, GridSpec};
use crate::forward::BoundaryOperator;
use crate::phantom::Potential;
use crate::scalar::Real;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Fourier coefficients of a function on the unit circle, modes
/// `-n_modes..=n_modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> BoundaryFunction<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::invalid("coefficient vector must have odd length 2N_b+1"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("non-finite boundary coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient of `e^{ikθ}`.
    pub fn mode(&self, k: i64) -> Complex<T> {
        self.coeffs[(k + self.n_modes() as i64) as usize]
    }

    /// Project samples at `θ_l = 2πl/M` onto modes `|k| ≤ n_modes`.
    pub fn from_samples(samples: &[Complex<T>], n_modes: usize) -> Result<Self> {
        let m = samples.len();
        if m < 2 * n_modes + 1 {
            return Err(Error::invalid(format!("{m} samples cannot resolve {n_modes} modes")));
        }
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|s| Complex::new(s.re.f64(), s.im.f64())).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let coeffs = (-(n_modes as i64)..=n_modes as i64)
            .map(|k| {
                let c = buf[k.rem_euclid(m as i64) as usize] * scale;
                Complex::new(T::lit(c.re), T::lit(c.im))
            })
            .collect();
        Self::new(coeffs)
    }
}

/// `4 N_b` equispaced points on the unit circle.
pub fn circle_points<T: Real>(n_modes: usize) -> Vec<Complex<T>> {
    let m = 4 * n_modes;
    (0..m)
        .map(|l| {
            let th = 2.0 * std::f64::consts::PI * l as f64 / m as f64;
            Complex::new(T::lit(th.cos()), T::lit(th.sin()))
        })
        .collect()
}

fn plane_wave<T: Real>(lambda: Complex<T>, z: Complex<T>) -> Complex<T> {
    (Complex::new(T::zero(), T::one()) * z * lambda).exp()
}

/// Trace of `ψ = e^{izλ} μ` on the unit circle.
pub fn boundary_trace_psi<T: Real>(mu: &ComplexField<T>, lambda: Complex<T>, n_modes: usize) -> Result<BoundaryFunction<T>> {
    let g = mu.grid();
    let reach = T::one() + T::lit(4.0) * g.cell();
    let lo = g.node(0, 0);
    let hi = g.node(g.n_side - 1, g.n_side - 1);
    if lo.re > -reach || lo.im > -reach || hi.re < reach || hi.im < reach {
        return Err(Error::invalid("μ grid does not cover the unit circle with a four-cell margin"));
    }
    let samples = circle_points::<T>(n_modes)
        .into_iter()
        .map(|z| Ok(plane_wave(lambda, z) * bilinear(mu, z)?))
        .collect::<Result<Vec<_>>>()?;
    BoundaryFunction::from_samples(&samples, n_modes)
}

/// Boundary trace of the unperturbed solution `e^{izλ}`.
pub fn born_trace<T: Real>(lambda: Complex<T>, n_modes: usize) -> Result<BoundaryFunction<T>> {
    let samples: Vec<_> = circle_points::<T>(n_modes).into_iter().map(|z| plane_wave(lambda, z)).collect();
    BoundaryFunction::from_samples(&samples, n_modes)
}

/// Trace of ψ for the potential `v`, from the Lippmann–Schwinger solution
/// evaluated directly on the unit circle.
pub fn oracle_trace<T: Real>(
    v: &Potential<T>,
    lambda: Complex<T>,
    n_modes: usize,
    cfg: &FaddeevConfig,
) -> Result<BoundaryFunction<T>> {
    let pts = circle_points::<T>(n_modes);
    if v.is_zero() {
        return born_trace(lambda, n_modes);
    }
    let sol = solve_mu_support(v, lambda, cfg)?;
    let mu = mu_at_points(v, lambda, &sol.mu, &pts)?;
    let samples: Vec<_> = pts.iter().zip(mu).map(|(&z, m)| plane_wave(lambda, z) * m).collect();
    BoundaryFunction::from_samples(&samples, n_modes)
}

/// `h(λ) = 2π Σ_{j≥0} (iλ̄)^j/j! [(Φ - Φ₀) b]_j`: the coefficients of
/// `e^{iz̄λ̄}` on the circle paired bilinearly with the Neumann data.
pub fn h_from_dtn<T: Real>(
    phi: &BoundaryOperator<T>,
    phi0: &BoundaryOperator<T>,
    lambda: Complex<T>,
    psi: &BoundaryFunction<T>,
) -> Result<Complex<T>> {
    let nb = phi.n_modes;
    if phi0.n_modes != nb || psi.n_modes() != nb {
        return Err(Error::Dimension { expected: 2 * nb + 1, got: 2 * phi0.n_modes.max(psi.n_modes()) + 1 });
    }
    let b = psi.coeffs();
    let il = Complex::new(T::zero(), T::one()) * lambda.conj();
    let mut weight = Complex::new(T::one(), T::zero());
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..=nb as i64 {
        if j > 0 {
            weight = weight * il / T::from_usize_lossy(j as usize);
        }
        let mut row = Complex::new(T::zero(), T::zero());
        for k in -(nb as i64)..=nb as i64 {
            row = row + (phi.get(j, k) - phi0.get(j, k)) * b[(k + nb as i64) as usize];
        }
        acc = acc + weight * row;
    }
    Ok(acc * T::lit(2.0 * std::f64::consts::PI))
}

/// How the ψ traces are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    Oracle,
    Born,
}

/// Source of ψ traces for a λ-sweep.
pub enum PsiSource<'a, T: Real> {
    Oracle { v: &'a Potential<T>, cfg: FaddeevConfig },
    Born,
}

impl<T: Real> PsiSource<'_, T> {
    pub fn mode(&self) -> PsiMode {
        match self {
            PsiSource::Oracle { .. } => PsiMode::Oracle,
            PsiSource::Born => PsiMode::Born,
        }
    }

    pub fn trace(&self, lambda: Complex<T>, n_modes: usize) -> Result<BoundaryFunction<T>> {
        match self {
            PsiSource::Oracle { v, cfg } => oracle_trace(v, lambda, n_modes, cfg),
            PsiSource::Born => born_trace(lambda, n_modes),
        }
    }
}

/// `h_from_dtn` at arbitrary λ values, in parallel.
pub fn h_from_dtn_at<T: Real>(
    phi: &BoundaryOperator<T>,
    phi0: &BoundaryOperator<T>,
    lambdas: &[Complex<T>],
    source: &PsiSource<'_, T>,
) -> Result<Vec<Complex<T>>> {
    let nb = phi.n_modes;
    lambdas
        .par_iter()
        .map(|&l| h_from_dtn(phi, phi0, l, &source.trace(l, nb)?))
        .collect()
}

/// `h_from_dtn` on every node of `lambda_grid`.
pub fn h_grid_from_dtn<T: Real>(
    phi: &BoundaryOperator<T>,
    phi0: &BoundaryOperator<T>,
    lambda_grid: &GridSpec<T>,
    source: &PsiSource<'_, T>,
    m: u32,
) -> Result<ScatteringAmplitude<T>> {
    lambda_grid.validate()?;
    let lambdas: Vec<_> = lambda_grid.nodes().collect();
    let values = h_from_dtn_at(phi, phi0, &lambdas, source)?;
    let provenance = match source.mode() {
        PsiMode::Oracle => Provenance::FromDtnOracle,
        PsiMode::Born => Provenance::FromDtnBorn,
    };
    ScatteringAmplitude::new(ComplexField::new(*lambda_grid, values)?, m, provenance)
}
