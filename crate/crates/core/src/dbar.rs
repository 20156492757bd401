//! The ∂̄-equation in the spectral variable,
//! `∂μ/∂λ̄ = h(λ) e_{-λ}(z) conj(μ) / (4πλ̄)`, solved as
//! `μ = 1 + C[T_z μ̄]` with the solid Cauchy transform `C`, and the
//! reconstructions of σ and v built on it.
//!
//! Integrals over λ use the area measure: `dλ dλ̄ = -2i dA`.

use crate::error::{Error, Result, Stage};
use crate::faddeev::ScatteringAmplitude;
use crate::field::{dbar_residual, CauchyKernel, ComplexField, GridSpec, PeriodicKernel};
use crate::krylov::{gmres, GmresConfig, Linearity};
use crate::phantom::{Conductivity, Potential};
use crate::scalar::Real;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Radius of the domain `D` on which reconstructions are reported.
pub const DOMAIN_RADIUS: f64 = 1.0;

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbarConfig {
    /// Relative Krylov tolerance.
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    /// Bound on the finite-difference ∂̄ residual of an accepted slice.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Largest tolerated `|Im σ|` before the reconstruction is rejected.
    #[serde(default = "default_imag_tol")]
    pub sigma_imag_tol: f64,
    /// Largest tolerated `‖Im v‖∞ / ‖v‖∞`.
    #[serde(default = "default_residue_tol")]
    pub v_residue_tol: f64,
}

fn default_krylov_tol() -> f64 {
    1e-10
}
fn default_residual_tol() -> f64 {
    5e-2
}
fn default_restart() -> usize {
    50
}
fn default_max_iter() -> usize {
    500
}
fn default_imag_tol() -> f64 {
    0.05
}
fn default_residue_tol() -> f64 {
    0.1
}

impl Default for DbarConfig {
    fn default() -> Self {
        Self {
            krylov_tol: default_krylov_tol(),
            residual_tol: default_residual_tol(),
            restart: default_restart(),
            max_iter: default_max_iter(),
            sigma_imag_tol: default_imag_tol(),
            v_residue_tol: default_residue_tol(),
        }
    }
}

/// `μ(z, ·)` on the λ-grid for one probe point `z`.
#[derive(Debug, Clone)]
pub struct MuSlice<T: Real> {
    pub z: Complex<T>,
    pub values: ComplexField<T>,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> MuSlice<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        self.values.grid()
    }
}

/// Reusable ∂̄ solver for one scattering amplitude.
pub struct DbarSolver<'a, T: Real> {
    h: &'a ScatteringAmplitude<T>,
    kernel: Option<PeriodicKernel<T>>,
    /// `h(λ) / (4πλ̄)` per node.
    weight: Vec<Complex<T>>,
    cfg: DbarConfig,
}

impl<'a, T: Real> DbarSolver<'a, T> {
    pub fn new(h: &'a ScatteringAmplitude<T>, cfg: DbarConfig) -> Result<Self> {
        let g = h.grid();
        let four_pi = T::lit(4.0 * PI);
        let mut weight = Vec::with_capacity(g.len());
        for (k, hv) in h.field.values().iter().enumerate() {
            let l = g.node_at(k);
            if l.norm() == T::zero() {
                return Err(Error::invalid("λ-grid has a node at λ = 0"));
            }
            weight.push(*hv / (l.conj() * four_pi));
        }
        let kernel = if h.is_zero() { None } else { Some(CauchyKernel::new(g, None)?) };
        Ok(Self { h, kernel, weight, cfg })
    }

    pub fn amplitude(&self) -> &ScatteringAmplitude<T> {
        self.h
    }

    /// `T_z(λ) = h(λ) e_{-λ}(z) / (4πλ̄)`.
    fn t_z(&self, z: Complex<T>) -> Vec<Complex<T>> {
        let g = self.h.grid();
        let two = T::lit(2.0);
        self.weight
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let ph = -two * (z * g.node_at(k)).re;
                *w * Complex::new(ph.cos(), ph.sin())
            })
            .collect()
    }

    pub fn solve(&self, z: Complex<T>) -> Result<MuSlice<T>> {
        let g = *self.h.grid();
        let one = Complex::new(T::one(), T::zero());
        let Some(kernel) = &self.kernel else {
            return Ok(MuSlice { z, values: ComplexField::constant(g, one), residual: T::zero(), iterations: 0 });
        };
        let t = self.t_z(z);
        let op = |x: &[Complex<T>]| -> Vec<Complex<T>> {
            let src: Vec<_> = x.iter().zip(&t).map(|(xi, ti)| *ti * xi.conj()).collect();
            let c = kernel.apply(&src);
            x.iter().zip(c).map(|(xi, ci)| xi - ci).collect()
        };
        let b = vec![one; g.len()];
        let gcfg = GmresConfig {
            restart: self.cfg.restart,
            max_iter: self.cfg.max_iter,
            tol: T::lit(self.cfg.krylov_tol),
            linearity: Linearity::Real,
        };
        let out = gmres(op, |x| x.to_vec(), &b, b.clone(), &gcfg);
        if !out.converged {
            return Err(Error::NoConvergence {
                stage: Stage::DbarSolve,
                iterations: out.iterations,
                residual: out.residual.f64(),
                context: format!("∂̄ solve at z = {z}"),
            });
        }
        let values = ComplexField::new(g, out.x)?;
        let rhs: Vec<_> = values.values().iter().zip(&t).map(|(m, ti)| *ti * m.conj()).collect();
        let residual = dbar_residual(&values, &ComplexField::new(g, rhs)?)?;
        if !(residual <= T::lit(self.cfg.residual_tol)) {
            return Err(Error::numerical(
                Stage::DbarSolve,
                format!(
                    "∂̄ residual {residual:e} at z = {z} exceeds {:e}: quadrature or convention fault",
                    self.cfg.residual_tol
                ),
            ));
        }
        Ok(MuSlice { z, values, residual, iterations: out.iterations })
    }
}

/// Solve the ∂̄-equation for `μ(z, ·)` at one point.
pub fn solve_mu_from_h<T: Real>(h: &ScatteringAmplitude<T>, z: Complex<T>, cfg: &DbarConfig) -> Result<MuSlice<T>> {
    DbarSolver::new(h, *cfg)?.solve(z)
}

/// Step of the local central differences in z. It is independent of the
/// output grid because μ(z, λ) oscillates in z with frequency up to
/// `2|λ|`, far beyond what a reconstruction grid resolves.
pub const Z_STEP: f64 = 1e-3;

/// Per-node quantities of a reconstruction.
#[derive(Debug, Clone, Copy)]
struct NodeResult<T: Real> {
    /// μ averaged over the innermost λ ring.
    mu0: Complex<T>,
    /// `(v_explicit, v_asymptotic)`, when derivatives were computed.
    v: Option<(Complex<T>, Complex<T>)>,
    residual: T,
    /// `max |λ| |μ(z, λ) - 1|` over the outermost λ ring.
    outer_ring: T,
}

/// ∂̄ solves over the nodes of a z-grid inside the unit disk, reduced to
/// σ, v (both formulas) and diagnostics.
pub struct Reconstruction<T: Real> {
    zgrid: GridSpec<T>,
    m: u32,
    nodes: Vec<Option<NodeResult<T>>>,
    cfg: DbarConfig,
}

fn in_domain<T: Real>(z: Complex<T>) -> bool {
    z.norm() <= T::lit(DOMAIN_RADIUS)
}

/// Indices of the λ nodes with the smallest (`inner`) or largest modulus.
fn ring<T: Real>(g: &GridSpec<T>, inner: bool) -> Vec<usize> {
    let r = |k: usize| g.node_at(k).norm();
    let target = if inner {
        (0..g.len()).map(r).fold(T::infinity(), T::min)
    } else {
        (0..g.len()).map(r).fold(T::zero(), T::max)
    };
    let tol = T::lit(1e-9) * g.cell();
    (0..g.len()).filter(|&k| (r(k) - target).abs() <= tol).collect()
}

impl<T: Real> Reconstruction<T> {
    /// Everything: σ and both v formulas.
    pub fn new(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig) -> Result<Self> {
        Self::build(h, zgrid, cfg, true)
    }

    /// Only the λ → 0 limit, one ∂̄ solve per node.
    pub fn sigma_only(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig) -> Result<Self> {
        Self::build(h, zgrid, cfg, false)
    }

    fn build(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig, with_v: bool) -> Result<Self> {
        zgrid.validate()?;
        let margin = zgrid.half_width - zgrid.center.re.abs().max(zgrid.center.im.abs());
        if margin < T::lit(DOMAIN_RADIUS) + T::lit(2.0) * zgrid.cell() {
            return Err(Error::invalid("z-grid must contain the unit disk with a margin of two cells"));
        }
        let solver = DbarSolver::new(h, *cfg)?;
        let inner = ring(h.grid(), true);
        let outer = ring(h.grid(), false);
        let nodes = (0..zgrid.len())
            .into_par_iter()
            .map(|k| {
                let z = zgrid.node_at(k);
                if in_domain(z) {
                    node_result(&solver, z, &inner, &outer, with_v).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { zgrid: *zgrid, m: h.m, nodes, cfg: *cfg })
    }

    pub fn zgrid(&self) -> &GridSpec<T> {
        &self.zgrid
    }

    /// Largest ∂̄ residual over the accepted slices.
    pub fn max_residual(&self) -> T {
        self.nodes.iter().flatten().map(|r| r.residual).fold(T::zero(), T::max)
    }

    /// `c` in `|μ(z, λ) - 1| ≤ c/|λ|` on the outermost λ ring, over all z.
    pub fn outer_ring_constant(&self) -> T {
        self.nodes.iter().flatten().map(|r| r.outer_ring).fold(T::zero(), T::max)
    }

    /// `μ(z, λ→0)` (innermost-ring average) on the z-grid; 1 outside the
    /// domain.
    pub fn mu0_field(&self) -> Result<ComplexField<T>> {
        let one = Complex::new(T::one(), T::zero());
        let values = self.nodes.iter().map(|n| n.as_ref().map_or(one, |n| n.mu0)).collect();
        ComplexField::new(self.zgrid, values)
    }

    /// `σ = μ(z, λ→0)²`, with μ averaged over the innermost λ ring.
    pub fn sigma(&self) -> Result<Conductivity<T>> {
        let one = Complex::new(T::one(), T::zero());
        let imag_tol = T::lit(self.cfg.sigma_imag_tol);
        let mut values = vec![one; self.zgrid.len()];
        for (k, (out, node)) in values.iter_mut().zip(&self.nodes).enumerate() {
            let Some(node) = node else { continue };
            let sig = node.mu0 * node.mu0;
            if sig.im.abs() > imag_tol {
                return Err(Error::numerical(
                    Stage::DbarSolve,
                    format!("Im σ = {} at z = {} exceeds {}", sig.im, self.zgrid.node_at(k), imag_tol),
                ));
            }
            if !(sig.re > T::zero()) {
                return Err(Error::numerical(
                    Stage::DbarSolve,
                    format!("reconstructed σ = {} ≤ 0 at z = {}", sig.re, self.zgrid.node_at(k)),
                ));
            }
            *out = Complex::new(sig.re, T::zero());
        }
        Conductivity::new(ComplexField::new(self.zgrid, values)?, T::lit(DOMAIN_RADIUS))
    }

    fn finish_v(&self, explicit: bool) -> Result<Potential<T>> {
        let mut values = vec![Complex::new(T::zero(), T::zero()); self.zgrid.len()];
        for (out, node) in values.iter_mut().zip(&self.nodes) {
            if let Some(node) = node {
                let (e, a) = node.v.ok_or_else(|| Error::invalid("reconstruction was built without z-derivatives"))?;
                *out = if explicit { e } else { a };
            }
        }
        let vmax = values.iter().map(|v| v.re.abs()).fold(T::zero(), T::max);
        let imax = values.iter().map(|v| v.im.abs()).fold(T::zero(), T::max);
        if vmax > T::zero() && imax > T::lit(self.cfg.v_residue_tol) * vmax {
            return Err(Error::numerical(
                Stage::DbarSolve,
                format!("imaginary residue {imax:e} exceeds {} of ‖v‖∞ = {vmax:e}", self.cfg.v_residue_tol),
            ));
        }
        let real = values.into_iter().map(|v| Complex::new(v.re, T::zero())).collect();
        Potential::new(ComplexField::new(self.zgrid, real)?, self.m, T::lit(DOMAIN_RADIUS))
    }

    /// `v = (1/π²) ∫ e_{-λ}(z) [h μ̄ + i (h/λ̄) conj(∂μ/∂z)] dA(λ)`.
    pub fn v_explicit(&self) -> Result<Potential<T>> {
        self.finish_v(true)
    }

    /// `v = 4i ∂μ₋₁/∂z̄`, `μ₋₁(z) = (1/4π²) ∫ (h/λ̄) e_{-λ}(z) μ̄ dA(λ)`.
    pub fn v_asymptotic(&self) -> Result<Potential<T>> {
        self.finish_v(false)
    }
}

fn node_result<T: Real>(
    solver: &DbarSolver<'_, T>,
    z: Complex<T>,
    inner: &[usize],
    outer: &[usize],
    with_v: bool,
) -> Result<NodeResult<T>> {
    let h = solver.amplitude();
    let lg = h.grid();
    let zero = Complex::new(T::zero(), T::zero());
    let centre = solver.solve(z)?;
    let mu = centre.values.values();
    let mu0 = inner.iter().fold(zero, |a, &l| a + mu[l]) / T::from_usize_lossy(inner.len().max(1));
    let outer_ring = outer
        .iter()
        .map(|&l| lg.node_at(l).norm() * (mu[l] - Complex::new(T::one(), T::zero())).norm())
        .fold(T::zero(), T::max);
    let mut residual = centre.residual;
    let v = if with_v {
        let (vv, r) = v_at_node(solver, z, mu)?;
        residual = residual.max(r);
        Some(vv)
    } else {
        None
    };
    Ok(NodeResult { mu0, v, residual, outer_ring })
}

/// Both v formulas at `z`, with `∂_z μ` and `∂_z̄ μ₋₁` from central
/// differences of step [`Z_STEP`].
fn v_at_node<T: Real>(solver: &DbarSolver<'_, T>, z: Complex<T>, mu: &[Complex<T>]) -> Result<((Complex<T>, Complex<T>), T)> {
    let h = solver.amplitude();
    let lg = h.grid();
    let zero = Complex::new(T::zero(), T::zero());
    let i_unit = Complex::new(T::zero(), T::one());
    let dz = T::lit(Z_STEP);
    // Neighbours in the order +x, -x, +y, -y.
    let offsets = [Complex::new(dz, T::zero()), Complex::new(-dz, T::zero()), Complex::new(T::zero(), dz), Complex::new(T::zero(), -dz)];
    let mut side = Vec::with_capacity(4);
    let mut residual = T::zero();
    for o in offsets {
        let s = solver.solve(z + o)?;
        residual = residual.max(s.residual);
        side.push(s);
    }
    let two_dz = T::lit(2.0) * dz;
    let e_minus = |w: Complex<T>, l: usize| {
        let ph = -T::lit(2.0) * (w * lg.node_at(l)).re;
        Complex::new(ph.cos(), ph.sin())
    };
    let mu_minus_one = |w: Complex<T>, vals: &[Complex<T>]| {
        let mut acc = zero;
        for (l, hl) in h.field.values().iter().enumerate() {
            acc = acc + *hl / lg.node_at(l).conj() * e_minus(w, l) * vals[l].conj();
        }
        acc * lg.cell_area() / T::lit(4.0 * PI * PI)
    };

    let mut v_expl = zero;
    for (l, hl) in h.field.values().iter().enumerate() {
        if hl.norm() == T::zero() {
            continue;
        }
        let ddx = (side[0].values.values()[l] - side[1].values.values()[l]) / two_dz;
        let ddy = (side[2].values.values()[l] - side[3].values.values()[l]) / two_dz;
        let dmu = (ddx - i_unit * ddy) * T::lit(0.5);
        v_expl = v_expl + e_minus(z, l) * (*hl * mu[l].conj() + i_unit * *hl / lg.node_at(l).conj() * dmu.conj());
    }
    v_expl = v_expl * lg.cell_area() / T::lit(PI * PI);

    let m1: Vec<_> = side.iter().zip(offsets).map(|(s, o)| mu_minus_one(z + o, s.values.values())).collect();
    let dbar_m1 = ((m1[0] - m1[1]) + i_unit * (m1[2] - m1[3])) / (T::lit(2.0) * two_dz);
    let v_asym = Complex::new(T::zero(), T::lit(4.0)) * dbar_m1;
    Ok(((v_expl, v_asym), residual))
}

pub fn reconstruct_sigma<T: Real>(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig) -> Result<Conductivity<T>> {
    Reconstruction::sigma_only(h, zgrid, cfg)?.sigma()
}

pub fn reconstruct_v_explicit<T: Real>(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig) -> Result<Potential<T>> {
    Reconstruction::new(h, zgrid, cfg)?.v_explicit()
}

pub fn reconstruct_v_asymptotic<T: Real>(h: &ScatteringAmplitude<T>, zgrid: &GridSpec<T>, cfg: &DbarConfig) -> Result<Potential<T>> {
    Reconstruction::new(h, zgrid, cfg)?.v_asymptotic()
}
