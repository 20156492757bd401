//! Dirichlet problems on the unit disk and their Dirichlet-to-Neumann maps
//! in the boundary Fourier basis.
//!
//! Discretization: cell-centred radial nodes `r_i = (i - 1/2)Δr`,
//! `Δr = 1/(N_r + 1/2)`, so the boundary `r = 1` is a node and `r = 0` is
//! not; conservative radial differences (no flux through the origin), and
//! Fourier collocation in `θ`. Systems are solved by GMRES right
//! preconditioned with the exact discrete Laplacian (FFT in `θ`,
//! tridiagonal in `r`).

use crate::error::{Error, Result, Stage};
use crate::field::{bicubic, upsample, ComplexField};
use crate::krylov::{gmres, GmresConfig, Linearity};
use crate::phantom::{Conductivity, Potential};
use crate::scalar::Real;
use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Which boundary value problem a DtN map belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `Φ`, for `(-Δ + v)u = 0`.
    Schrodinger,
    /// `Λ`, for `div(σ∇u) = 0`.
    Conductivity,
}

impl OperatorKind {
    fn byte(self) -> u8 {
        match self {
            Self::Schrodinger => 0,
            Self::Conductivity => 1,
        }
    }
}

/// Dense DtN matrix: entry `(j, k)` is the coefficient of `e^{ijθ}` in the
/// image of `e^{ikθ}`, for `|j|, |k| ≤ n_modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOperator<T: Real> {
    pub n_modes: usize,
    pub kind: OperatorKind,
    matrix: Vec<Complex<T>>,
}

impl<T: Real> BoundaryOperator<T> {
    pub fn new(n_modes: usize, kind: OperatorKind, matrix: Vec<Complex<T>>) -> Result<Self> {
        let m = 2 * n_modes + 1;
        if matrix.len() != m * m {
            return Err(Error::Dimension { expected: m * m, got: matrix.len() });
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("boundary operator has non-finite entries"));
        }
        Ok(Self { n_modes, kind, matrix })
    }

    /// The DtN map of the Laplacian, `diag(|k|)`.
    pub fn laplace(n_modes: usize, kind: OperatorKind) -> Self {
        let m = 2 * n_modes + 1;
        let mut matrix = vec![Complex::new(T::zero(), T::zero()); m * m];
        for k in 0..m {
            let kk = (k as i64 - n_modes as i64).abs();
            matrix[k * m + k] = Complex::new(T::lit(kk as f64), T::zero());
        }
        Self { n_modes, kind, matrix }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.n_modes + 1
    }

    /// Entry for modes `j`, `k` in `[-n_modes, n_modes]`.
    #[inline]
    pub fn get(&self, j: i64, k: i64) -> Complex<T> {
        let n = self.n_modes as i64;
        self.matrix[((j + n) as usize) * self.dim() + (k + n) as usize]
    }

    #[inline]
    pub fn set(&mut self, j: i64, k: i64, v: Complex<T>) {
        let n = self.n_modes as i64;
        let d = self.dim();
        self.matrix[((j + n) as usize) * d + (k + n) as usize] = v;
    }

    pub fn matrix(&self) -> &[Complex<T>] {
        &self.matrix
    }

    /// Apply to a coefficient vector indexed `-n_modes..=n_modes`.
    pub fn apply(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let d = self.dim();
        if b.len() != d {
            return Err(Error::Dimension { expected: d, got: b.len() });
        }
        Ok((0..d)
            .map(|j| {
                (0..d).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + self.matrix[j * d + k] * b[k])
            })
            .collect())
    }

    /// `max |A_{-j,-k} - conj(A_{j,k})|`: vanishes when real data map to
    /// real data.
    pub fn realness_defect(&self) -> T {
        let n = self.n_modes as i64;
        let mut worst = T::zero();
        for j in -n..=n {
            for k in -n..=n {
                worst = worst.max((self.get(-j, -k) - self.get(j, k).conj()).norm());
            }
        }
        worst
    }

    /// `max |A_{j,k} - conj(A_{k,j})|`: self-adjointness in `L²(∂D)`.
    pub fn hermitian_defect(&self) -> T {
        let n = self.n_modes as i64;
        let mut worst = T::zero();
        for j in -n..=n {
            for k in -n..=n {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.n_modes != other.n_modes {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max))
    }

    /// Element-wise `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: T) -> Result<Self> {
        if self.n_modes != other.n_modes {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        let matrix = self.matrix.iter().zip(&other.matrix).map(|(a, b)| a + b * s).collect();
        Self::new(self.n_modes, self.kind, matrix)
    }
}

pub const BOP_MAGIC: &[u8; 5] = b"BOP1\0";

/// `BOP1` format: magic `BOP1\0`, `u32` N_b, kind byte (0 = Φ, 1 = Λ),
/// then `(2N_b+1)²` complex `f64` (re, im) row-major, little-endian.
pub fn write_bop_to<T: Real, W: Write>(op: &BoundaryOperator<T>, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(10 + 16 * op.matrix.len());
    buf.extend_from_slice(BOP_MAGIC);
    buf.extend_from_slice(&(op.n_modes as u32).to_le_bytes());
    buf.push(op.kind.byte());
    for v in &op.matrix {
        buf.extend_from_slice(&v.re.f64().to_le_bytes());
        buf.extend_from_slice(&v.im.f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_bop_from<T: Real, R: Read>(mut r: R) -> Result<BoundaryOperator<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 10 || &bytes[..5] != BOP_MAGIC {
        return Err(Error::Format("missing BOP1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let kind = match bytes[9] {
        0 => OperatorKind::Schrodinger,
        1 => OperatorKind::Conductivity,
        b => return Err(Error::Format(format!("unknown operator kind {b}"))),
    };
    let m = 2 * n + 1;
    if bytes.len() != 10 + 16 * m * m {
        return Err(Error::Format(format!("BOP1 payload size mismatch for N_b = {n}")));
    }
    let at = |o: usize| T::lit(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()));
    let matrix = (0..m * m).map(|k| Complex::new(at(10 + 16 * k), at(18 + 16 * k))).collect();
    BoundaryOperator::new(n, kind, matrix)
}

pub fn write_bop<T: Real>(op: &BoundaryOperator<T>, path: impl AsRef<Path>) -> Result<()> {
    write_bop_to(op, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn read_bop<T: Real>(path: impl AsRef<Path>) -> Result<BoundaryOperator<T>> {
    read_bop_from(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Resolution and solver settings for the polar Dirichlet solves.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    pub n_modes: usize,
    pub n_r: usize,
    pub n_theta: usize,
    #[serde(default = "default_forward_tol")]
    pub tol: f64,
    #[serde(default = "default_forward_iter")]
    pub max_iter: usize,
}

fn default_forward_tol() -> f64 {
    1e-9
}

fn default_forward_iter() -> usize {
    500
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self { n_modes: 16, n_r: 256, n_theta: 256, tol: default_forward_tol(), max_iter: default_forward_iter() }
    }
}

impl ForwardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::invalid("n_modes must be positive"));
        }
        if self.n_r < 4 * self.n_modes || self.n_theta < 4 * self.n_modes {
            return Err(Error::invalid(format!(
                "polar resolution ({}, {}) must be at least 4·N_b = {}",
                self.n_r,
                self.n_theta,
                4 * self.n_modes
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("forward tolerance must be positive"));
        }
        Ok(())
    }
}

/// Solutions whose size exceeds the data by this factor are treated as a
/// (near) Dirichlet eigenvalue.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Polar discretization of `-(1/r)∂_r(rσ∂_r u) - (1/r²)∂_θ(σ∂_θ u) + v u`.
struct PolarProblem<T: Real> {
    n_r: usize,
    n_th: usize,
    dr: T,
    r: Vec<T>,
    /// `r σ` at `r_{i+1/2}`, `i = 0..n_r` (row `n_r` is the boundary face).
    flux_coef: Vec<T>,
    /// `σ` at the nodes, when not identically 1.
    sigma: Option<Vec<T>>,
    /// `σ` at the face midway between the last node and the boundary.
    sigma_face: Option<Vec<T>>,
    v: Option<Vec<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    /// Per Fourier mode: Thomas factors of the Laplacian preconditioner.
    precond: Vec<(Vec<T>, Vec<T>, Vec<T>)>,
}

fn wrapped(m: usize, n: usize) -> T64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}
type T64 = f64;

impl<T: Real> PolarProblem<T> {
    fn new(n_r: usize, n_th: usize, sigma_at: Option<&dyn Fn(T, T) -> T>, v_at: Option<&dyn Fn(T, T) -> T>) -> Self {
        let dr = T::one() / (T::from_usize_lossy(n_r) + T::lit(0.5));
        let r: Vec<T> = (0..n_r).map(|i| (T::from_usize_lossy(i) + T::lit(0.5)) * dr).collect();
        let theta = |j: usize| T::lit(2.0 * std::f64::consts::PI * j as f64 / n_th as f64);
        let mut flux_coef = vec![T::zero(); (n_r + 1) * n_th];
        let mut sigma = None;
        let mut sigma_face = None;
        if let Some(sig) = sigma_at {
            let mut s = vec![T::zero(); n_r * n_th];
            for i in 0..n_r {
                for j in 0..n_th {
                    s[i * n_th + j] = sig(r[i], theta(j));
                }
            }
            for i in 1..=n_r {
                let rf = T::from_usize_lossy(i) * dr;
                for j in 0..n_th {
                    flux_coef[i * n_th + j] = rf * sig(rf, theta(j));
                }
            }
            let rm = T::one() - dr * T::lit(0.5);
            sigma_face = Some((0..n_th).map(|j| sig(rm, theta(j))).collect());
            sigma = Some(s);
        } else {
            for i in 1..=n_r {
                let rf = T::from_usize_lossy(i) * dr;
                for j in 0..n_th {
                    flux_coef[i * n_th + j] = rf;
                }
            }
        }
        let v = v_at.map(|vf| {
            let mut out = vec![T::zero(); n_r * n_th];
            for i in 0..n_r {
                for j in 0..n_th {
                    out[i * n_th + j] = vf(r[i], theta(j));
                }
            }
            out
        });
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_th);
        let inv = planner.plan_fft_inverse(n_th);
        // Laplacian (σ = 1) tridiagonal per mode: a_i u_{i-1} + b_i u_i + c_i u_{i+1}
        let dr2 = dr * dr;
        let precond = (0..n_th)
            .map(|m| {
                let mm = T::lit(wrapped(m, n_th));
                let mut a = vec![T::zero(); n_r];
                let mut b = vec![T::zero(); n_r];
                let mut c = vec![T::zero(); n_r];
                for i in 0..n_r {
                    let lo = T::from_usize_lossy(i) * dr;
                    let hi = T::from_usize_lossy(i + 1) * dr;
                    let w = r[i] * dr2;
                    a[i] = -lo / w;
                    c[i] = -hi / w;
                    b[i] = (lo + hi) / w + mm * mm / (r[i] * r[i]);
                }
                // Thomas forward sweep, stored as (lower, modified diag, upper)
                let mut bp = b.clone();
                for i in 1..n_r {
                    let f = a[i] / bp[i - 1];
                    bp[i] = bp[i] - f * c[i - 1];
                }
                (a, bp, c)
            })
            .collect();
        Self { n_r, n_th, dr, r, flux_coef, sigma, sigma_face, v, fwd, inv, precond }
    }

    fn fft_rows(&self, data: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        if inverse {
            let s = T::one() / T::from_usize_lossy(self.n_th);
            for x in data.iter_mut() {
                *x = *x * s;
            }
        }
    }

    /// `∂_θ(σ ∂_θ u)` on one ring, or `∂²_θ u` when σ is absent.
    fn theta_part(&self, row: &[Complex<T>], sigma: Option<&[T]>) -> Vec<Complex<T>> {
        let n = self.n_th;
        let mut w = row.to_vec();
        self.fft_rows(&mut w, false);
        match sigma {
            None => {
                for (m, x) in w.iter_mut().enumerate() {
                    let k = T::lit(wrapped(m, n));
                    *x = -*x * (k * k);
                }
                self.fft_rows(&mut w, true);
            }
            Some(s) => {
                let ik = |m: usize| {
                    if m == n / 2 {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::lit(wrapped(m, n)))
                    }
                };
                for (m, x) in w.iter_mut().enumerate() {
                    *x = *x * ik(m);
                }
                self.fft_rows(&mut w, true);
                for (x, sv) in w.iter_mut().zip(s) {
                    *x = *x * *sv;
                }
                self.fft_rows(&mut w, false);
                for (m, x) in w.iter_mut().enumerate() {
                    *x = *x * ik(m);
                }
                self.fft_rows(&mut w, true);
            }
        }
        w
    }

    /// Operator applied to interior values `u` with boundary data `ub`.
    fn apply(&self, u: &[Complex<T>], ub: Option<&[Complex<T>]>) -> Vec<Complex<T>> {
        let (n_r, n_th) = (self.n_r, self.n_th);
        let dr2 = self.dr * self.dr;
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; n_r * n_th];
        for i in 0..n_r {
            let row = &u[i * n_th..(i + 1) * n_th];
            let sig = self.sigma.as_ref().map(|s| &s[i * n_th..(i + 1) * n_th]);
            let th = self.theta_part(row, sig);
            let inv_r2 = T::one() / (self.r[i] * self.r[i]);
            let w = T::one() / (self.r[i] * dr2);
            for j in 0..n_th {
                let k = i * n_th + j;
                let lo = self.flux_coef[i * n_th + j];
                let hi = self.flux_coef[(i + 1) * n_th + j];
                let below = if i > 0 { u[k - n_th] } else { zero };
                let above = if i + 1 < n_r { u[k + n_th] } else { ub.map_or(zero, |b| b[j]) };
                let mut val = -(above - row[j]) * (hi * w) + (row[j] - below) * (lo * w) - th[j] * inv_r2;
                if let Some(v) = &self.v {
                    val = val + row[j] * v[k];
                }
                out[k] = val;
            }
        }
        out
    }

    /// Exact inverse of the discrete Laplacian with zero boundary data.
    fn precondition(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        let (n_r, n_th) = (self.n_r, self.n_th);
        let mut w = rhs.to_vec();
        for i in 0..n_r {
            self.fft_rows(&mut w[i * n_th..(i + 1) * n_th], false);
        }
        let mut col = vec![Complex::new(T::zero(), T::zero()); n_r];
        for m in 0..n_th {
            let (a, bp, c) = &self.precond[m];
            for i in 0..n_r {
                col[i] = w[i * n_th + m];
            }
            for i in 1..n_r {
                let f = a[i] / bp[i - 1];
                col[i] = col[i] - col[i - 1] * f;
            }
            col[n_r - 1] = col[n_r - 1] / bp[n_r - 1];
            for i in (0..n_r - 1).rev() {
                col[i] = (col[i] - col[i + 1] * c[i]) / bp[i];
            }
            for i in 0..n_r {
                w[i * n_th + m] = col[i];
            }
        }
        for i in 0..n_r {
            self.fft_rows(&mut w[i * n_th..(i + 1) * n_th], true);
        }
        w
    }

    /// Solve with boundary data `e^{ikθ}` and return the normal flux
    /// `σ ∂_r u` at `r = 1` sampled on the ring.
    fn column(&self, k: i64, cfg: &ForwardConfig) -> Result<Vec<Complex<T>>> {
        let (n_r, n_th) = (self.n_r, self.n_th);
        let ub: Vec<Complex<T>> = (0..n_th)
            .map(|j| {
                let ph = T::lit(2.0 * std::f64::consts::PI * (k as f64) * j as f64 / n_th as f64);
                Complex::new(ph.cos(), ph.sin())
            })
            .collect();
        let zero = Complex::new(T::zero(), T::zero());
        // b = -(boundary contribution of A applied to (0, ub))
        let b: Vec<Complex<T>> = self.apply(&vec![zero; n_r * n_th], Some(&ub)).into_iter().map(|x| -x).collect();
        let gcfg = GmresConfig {
            restart: 50,
            max_iter: cfg.max_iter,
            tol: T::lit(cfg.tol),
            linearity: Linearity::Complex,
        };
        let out = gmres(|x| self.apply(x, None), |x| self.precondition(x), &b, vec![zero; n_r * n_th], &gcfg);
        let size = out.x.iter().map(|x| x.norm()).fold(T::zero(), T::max);
        if !size.is_finite() || size.f64() > CONDITION_LIMIT {
            return Err(Error::numerical(
                Stage::Forward,
                format!("condition estimate exceeds {CONDITION_LIMIT:e} for mode {k}: 0 is (nearly) a Dirichlet eigenvalue"),
            ));
        }
        if !out.converged {
            return Err(Error::NoConvergence {
                stage: Stage::Forward,
                iterations: out.iterations,
                residual: out.residual.f64(),
                context: format!("Dirichlet solve for boundary mode {k}; 0 may be a Dirichlet eigenvalue"),
            });
        }
        let u = out.x;
        // Flux at the face r_m = 1 - Δr/2, carried to r = 1 with the
        // trapezoid rule on ∂_r(rσ∂_r u) = r v u - (1/r)∂_θ(σ∂_θ u).
        let last = (n_r - 1) * n_th;
        let rm = T::one() - self.dr * T::lit(0.5);
        let um: Vec<Complex<T>> = (0..n_th).map(|j| (u[last + j] + ub[j]) * T::lit(0.5)).collect();
        let th_m = self.theta_part(&um, self.sigma_face.as_deref());
        let th_b = self.theta_part(&ub, None);
        let half = self.dr * T::lit(0.5);
        let flux = (0..n_th)
            .map(|j| {
                let face = (ub[j] - u[last + j]) * (self.flux_coef[n_r * n_th + j] / self.dr);
                let mut sm = -th_m[j] / rm;
                if let Some(v) = &self.v {
                    sm = sm + um[j] * (rm * v[last + j]);
                }
                let sb = -th_b[j];
                face + (sm + sb) * (half * T::lit(0.5))
            })
            .collect();
        Ok(flux)
    }

    fn assemble(&self, cfg: &ForwardConfig, kind: OperatorKind) -> Result<BoundaryOperator<T>> {
        let nb = cfg.n_modes as i64;
        let cols: Vec<Result<Vec<Complex<T>>>> = (-nb..=nb).into_par_iter().map(|k| self.column(k, cfg)).collect();
        let d = (2 * nb + 1) as usize;
        let mut matrix = vec![Complex::new(T::zero(), T::zero()); d * d];
        for (kc, col) in cols.into_iter().enumerate() {
            let mut c = col?;
            self.fft_rows(&mut c, false);
            let scale = T::one() / T::from_usize_lossy(self.n_th);
            for jr in 0..d {
                let j = jr as i64 - nb;
                let bin = j.rem_euclid(self.n_th as i64) as usize;
                matrix[jr * d + kc] = c[bin] * scale;
            }
        }
        BoundaryOperator::new(cfg.n_modes, kind, matrix)
    }
}

/// Sampler for a Cartesian field at polar points: trigonometric upsampling
/// followed by bicubic interpolation; values beyond `cut` are `exterior`.
fn polar_sampler<T: Real>(
    field: &ComplexField<T>,
    cut: T,
    exterior: T,
    dr: T,
) -> Result<impl Fn(T, T) -> T> {
    let g = field.grid();
    if g.center.norm() + T::one() > g.half_width {
        return Err(Error::invalid("grid must cover the unit disk"));
    }
    let mut factor = 1;
    while g.cell() / T::from_usize_lossy(factor) > dr && g.n_side * factor < 2048 {
        factor *= 2;
    }
    let shifted = field.map(|_, x| Complex::new(x.re - exterior, T::zero()))?;
    let fine = upsample(&shifted, factor)?;
    Ok(move |r: T, th: T| {
        if r > cut {
            return exterior;
        }
        let z = Complex::new(r * th.cos(), r * th.sin());
        bicubic(&fine, z).map(|c| c.re).unwrap_or(T::zero()) + exterior
    })
}

/// Φ for `(-Δ + v)u = 0`.
pub fn dtn_schrodinger<T: Real>(v: &Potential<T>, cfg: &ForwardConfig) -> Result<BoundaryOperator<T>> {
    cfg.validate()?;
    if v.is_zero() {
        let p = PolarProblem::<T>::new(cfg.n_r, cfg.n_theta, None, None);
        return p.assemble(cfg, OperatorKind::Schrodinger);
    }
    let dr = T::one() / (T::from_usize_lossy(cfg.n_r) + T::lit(0.5));
    let sample = polar_sampler(&v.field, v.support_radius, T::zero(), dr)?;
    let p = PolarProblem::new(cfg.n_r, cfg.n_theta, None, Some(&sample));
    p.assemble(cfg, OperatorKind::Schrodinger)
}

/// Λ for `div(σ∇u) = 0`.
pub fn dtn_conductivity<T: Real>(sigma: &Conductivity<T>, cfg: &ForwardConfig) -> Result<BoundaryOperator<T>> {
    cfg.validate()?;
    let dr = T::one() / (T::from_usize_lossy(cfg.n_r) + T::lit(0.5));
    let constant = sigma.field.values().iter().all(|x| x.re == T::one());
    if constant {
        let p = PolarProblem::<T>::new(cfg.n_r, cfg.n_theta, None, None);
        return p.assemble(cfg, OperatorKind::Conductivity);
    }
    let sample = polar_sampler(&sigma.field, sigma.support_radius, T::one(), dr)?;
    let p = PolarProblem::new(cfg.n_r, cfg.n_theta, Some(&sample), None);
    p.assemble(cfg, OperatorKind::Conductivity)
}

/// `H^{1/2} → H^{-1/2}` norm of `A - B`: the largest singular value of
/// `W₋ (A - B) W₊⁻¹` with weights `(1+k²)^{∓1/4}`.
pub fn op_norm_h12_hm12<T: Real>(a: &BoundaryOperator<T>, b: &BoundaryOperator<T>) -> Result<T> {
    if a.n_modes != b.n_modes {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    let d = a.dim();
    let n = a.n_modes as i64;
    let w = |k: usize| (1.0 + ((k as i64 - n) as f64).powi(2)).powf(-0.25);
    let m = DMatrix::from_fn(d, d, |j, k| {
        let x = a.matrix[j * d + k] - b.matrix[j * d + k];
        Complex64::new(x.re.f64(), x.im.f64()) * (w(j) * w(k))
    });
    let sv = m.singular_values();
    Ok(T::lit(sv.iter().cloned().fold(0.0, f64::max)))
}
