//! Faddeev's exponentially growing solutions `ψ = e^{izλ} μ` of
//! `(-Δ + v)ψ = 0` and the scattering amplitude
//! `h(λ) = ∫ e_λ(z) v(z) μ(z, λ) dA`.

use crate::error::{Error, Result, Stage};
use crate::field::{bicubic, read_cgrid, write_cgrid, ComplexField, FaddeevKernel, GridSpec, PeriodicKernel};
use crate::krylov::{gmres, GmresConfig, Linearity};
use crate::phantom::{PhantomRecipe, Potential};
use crate::scalar::Real;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where a scattering amplitude came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    FromDtnOracle,
    FromDtnBorn,
}

/// `h(λ)` sampled on an (offset) λ-grid.
#[derive(Debug, Clone)]
pub struct ScatteringAmplitude<T: Real> {
    pub field: ComplexField<T>,
    pub lambda_max: T,
    pub m: u32,
    pub provenance: Provenance,
    pub phantom_recipe: Option<PhantomRecipe>,
}

/// JSON sidecar stored next to the `CGRID1` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeMeta {
    pub lambda_max: f64,
    pub m: u32,
    pub provenance: Provenance,
    pub phantom_recipe: Option<PhantomRecipe>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl<T: Real> ScatteringAmplitude<T> {
    pub fn new(field: ComplexField<T>, m: u32, provenance: Provenance) -> Result<Self> {
        let g = field.grid();
        if g.nearest(Complex::new(T::zero(), T::zero())).map_or(false, |k| g.node_at(k).norm() == T::zero()) {
            return Err(Error::invalid("λ-grid has a node at λ = 0; enable the grid offset"));
        }
        Ok(Self {
            lambda_max: g.half_width,
            field,
            m,
            provenance,
            phantom_recipe: None,
        })
    }

    pub fn zeros(grid: GridSpec<T>, m: u32, provenance: Provenance) -> Result<Self> {
        Self::new(ComplexField::zeros(grid), m, provenance)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.field.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.field.values().iter().all(|v| v.norm() == T::zero())
    }

    pub fn meta(&self) -> AmplitudeMeta {
        AmplitudeMeta {
            lambda_max: self.lambda_max.f64(),
            m: self.m,
            provenance: self.provenance,
            phantom_recipe: self.phantom_recipe.clone(),
        }
    }

    /// Write `path` (CGRID1) and `path.json` (metadata).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_cgrid(&self.field, path)?;
        std::fs::write(sidecar(path), serde_json::to_string_pretty(&self.meta())? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let field = read_cgrid(path)?;
        let meta: AmplitudeMeta = serde_json::from_str(&std::fs::read_to_string(sidecar(path))?)?;
        let mut h = Self::new(field, meta.m, meta.provenance)?;
        h.lambda_max = T::lit(meta.lambda_max);
        h.phantom_recipe = meta.phantom_recipe;
        Ok(h)
    }
}

/// Lippmann–Schwinger solver settings.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaddeevConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_restart() -> usize {
    50
}
fn default_max_iter() -> usize {
    500
}

impl Default for FaddeevConfig {
    fn default() -> Self {
        Self { tol: default_tol(), restart: default_restart(), max_iter: default_max_iter() }
    }
}

/// Solution of `μ = 1 - g_λ ∗ (vμ)` together with solver statistics.
pub struct MuSolution<T: Real> {
    /// μ on the z-grid; only nodes with `|z| ≤ support_radius` are valid
    /// unless produced by [`solve_mu`].
    pub mu: ComplexField<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Nodes inside the support of `v`.
fn support_nodes<T: Real>(v: &Potential<T>) -> Vec<usize> {
    let g = v.grid();
    (0..g.len()).filter(|&k| g.node_at(k).norm() <= v.support_radius).collect()
}

fn solve_on_support<T: Real>(
    v: &Potential<T>,
    lambda: Complex<T>,
    cfg: &FaddeevConfig,
    nodes: &[usize],
) -> Result<(PeriodicKernel<T>, Vec<Complex<T>>, usize, T)> {
    let g = *v.grid();
    let kernel = FaddeevKernel::new(&g, lambda, Some(2.0 * v.support_radius.f64()))?;
    let zero = Complex::new(T::zero(), T::zero());
    let vals = v.field.values();
    let op = |x: &[Complex<T>]| -> Vec<Complex<T>> {
        let mut full = vec![zero; g.len()];
        for (xi, &k) in x.iter().zip(nodes) {
            full[k] = *xi * vals[k].re;
        }
        let conv = kernel.apply(&full);
        x.iter().zip(nodes).map(|(xi, &k)| xi + conv[k]).collect()
    };
    let b = vec![Complex::new(T::one(), T::zero()); nodes.len()];
    let gcfg = GmresConfig {
        restart: cfg.restart,
        max_iter: cfg.max_iter,
        tol: T::lit(cfg.tol),
        linearity: Linearity::Complex,
    };
    let out = gmres(op, |x| x.to_vec(), &b, b.clone(), &gcfg);
    if !out.converged {
        return Err(Error::NoConvergence {
            stage: Stage::Faddeev,
            iterations: out.iterations,
            residual: out.residual.f64(),
            context: format!("Lippmann–Schwinger solve at λ = {lambda} (m = {}, support {})", v.m, v.support_radius),
        });
    }
    Ok((kernel, out.x, out.iterations, out.residual))
}

fn source<T: Real>(v: &Potential<T>, nodes: &[usize], mu_s: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut full = vec![Complex::new(T::zero(), T::zero()); v.grid().len()];
    for (m, &k) in mu_s.iter().zip(nodes) {
        full[k] = *m * v.field.values()[k].re;
    }
    full
}

/// μ valid on the support disk only (cheap path for amplitudes/probes).
pub fn solve_mu_support<T: Real>(v: &Potential<T>, lambda: Complex<T>, cfg: &FaddeevConfig) -> Result<MuSolution<T>> {
    let g = *v.grid();
    let nodes = support_nodes(v);
    if v.is_zero() {
        return Ok(MuSolution { mu: ComplexField::constant(g, Complex::new(T::one(), T::zero())), iterations: 0, residual: T::zero() });
    }
    let (kernel, mu_s, iterations, residual) = solve_on_support(v, lambda, cfg, &nodes)?;
    let conv = kernel.apply(&source(v, &nodes, &mu_s));
    let values = conv.iter().map(|c| Complex::new(T::one(), T::zero()) - c).collect();
    Ok(MuSolution { mu: ComplexField::new(g, values)?, iterations, residual })
}

/// Solve `μ = 1 - g_λ ∗ (vμ)` and return μ on the whole z-grid.
pub fn solve_mu<T: Real>(v: &Potential<T>, lambda: Complex<T>, tol: T) -> Result<ComplexField<T>> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let cfg = FaddeevConfig { tol: tol.f64(), ..Default::default() };
    let g = *v.grid();
    if v.is_zero() {
        return Ok(ComplexField::constant(g, Complex::new(T::one(), T::zero())));
    }
    let nodes = support_nodes(v);
    let (_, mu_s, _, _) = solve_on_support(v, lambda, &cfg, &nodes)?;
    let reach = v.support_radius.f64() + (g.center.norm() + g.half_width * T::lit(std::f64::consts::SQRT_2)).f64();
    let wide = FaddeevKernel::new(&g, lambda, Some(reach))?;
    let conv = wide.apply(&source(v, &nodes, &mu_s));
    ComplexField::new(g, conv.iter().map(|c| Complex::new(T::one(), T::zero()) - c).collect())
}

/// `h(λ) = Σ e_λ(z) v(z) μ(z) h²` over the support of `v`.
pub fn amplitude_from_mu<T: Real>(v: &Potential<T>, lambda: Complex<T>, mu: &ComplexField<T>) -> Complex<T> {
    let g = v.grid();
    let two = T::lit(2.0);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, vv) in v.field.values().iter().enumerate() {
        if vv.re == T::zero() {
            continue;
        }
        let z = g.node_at(k);
        let ph = two * (z * lambda).re;
        acc = acc + Complex::new(ph.cos(), ph.sin()) * mu.values()[k] * vv.re;
    }
    acc * g.cell_area()
}

/// Scattering amplitude at one λ by solving for μ and integrating.
pub fn scattering_direct<T: Real>(v: &Potential<T>, lambda: Complex<T>, cfg: &FaddeevConfig) -> Result<Complex<T>> {
    if v.is_zero() {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let sol = solve_mu_support(v, lambda, cfg)?;
    Ok(amplitude_from_mu(v, lambda, &sol.mu))
}

/// Output of a λ-sweep.
pub struct ScatteringSweep<T: Real> {
    pub amplitude: ScatteringAmplitude<T>,
    /// `probes[p][k]` = μ(z_p, λ_k) for each requested probe point.
    pub probes: Vec<Vec<Complex<T>>>,
    pub failed: Vec<usize>,
    pub max_iterations: usize,
}

/// `h` on every node of `lambda_grid`, optionally recording μ at probe
/// points inside the support. Nodes are independent and run in parallel;
/// the result does not depend on the thread count.
pub fn scattering_sweep<T: Real>(
    v: &Potential<T>,
    lambda_grid: &GridSpec<T>,
    cfg: &FaddeevConfig,
    probes: &[Complex<T>],
) -> Result<ScatteringSweep<T>> {
    lambda_grid.validate()?;
    for p in probes {
        if p.norm() + T::lit(3.0) * v.grid().cell() > v.support_radius && !v.is_zero() {
            return Err(Error::invalid(format!("probe {p} must lie inside the support disk")));
        }
    }
    let per_node: Vec<Result<(Complex<T>, Vec<Complex<T>>, usize)>> = (0..lambda_grid.len())
        .into_par_iter()
        .map(|k| {
            let lambda = lambda_grid.node_at(k);
            let sol = solve_mu_support(v, lambda, cfg)?;
            let h = if v.is_zero() { Complex::new(T::zero(), T::zero()) } else { amplitude_from_mu(v, lambda, &sol.mu) };
            let pv = probes.iter().map(|&z| bicubic(&sol.mu, z)).collect::<Result<Vec<_>>>()?;
            Ok((h, pv, sol.iterations))
        })
        .collect();
    let mut values = Vec::with_capacity(per_node.len());
    let mut probe_vals = vec![Vec::with_capacity(per_node.len()); probes.len()];
    let mut failed = Vec::new();
    let mut first_err = None;
    let mut max_iterations = 0;
    for (k, r) in per_node.into_iter().enumerate() {
        match r {
            Ok((h, pv, it)) => {
                values.push(h);
                for (dst, x) in probe_vals.iter_mut().zip(pv) {
                    dst.push(x);
                }
                max_iterations = max_iterations.max(it);
            }
            Err(e) => {
                log::warn!("λ node {k} failed: {e}");
                failed.push(k);
                values.push(Complex::new(T::zero(), T::zero()));
                for dst in probe_vals.iter_mut() {
                    dst.push(Complex::new(T::one(), T::zero()));
                }
                first_err.get_or_insert(e);
            }
        }
    }
    if failed.len() * 100 > lambda_grid.len() {
        let e = first_err.unwrap();
        return Err(Error::numerical(
            Stage::Faddeev,
            format!("{} of {} λ nodes failed (first: {e})", failed.len(), lambda_grid.len()),
        ));
    }
    let field = ComplexField::new(*lambda_grid, values)?;
    Ok(ScatteringSweep {
        amplitude: ScatteringAmplitude::new(field, v.m, Provenance::Direct)?,
        probes: probe_vals,
        failed,
        max_iterations,
    })
}

/// `h` on every node of `lambda_grid` by direct quadrature.
pub fn scattering_grid<T: Real>(
    v: &Potential<T>,
    lambda_grid: &GridSpec<T>,
    cfg: &FaddeevConfig,
) -> Result<ScatteringAmplitude<T>> {
    Ok(scattering_sweep(v, lambda_grid, cfg, &[])?.amplitude)
}

/// `μ(z) = 1 - Σ_y g_λ(z - y) v(y) μ(y) h²` at points away from the support,
/// from a support solution of [`solve_mu_support`]. The kernel is smooth
/// there, so the grid quadrature is spectrally accurate.
pub fn mu_at_points<T: Real>(
    v: &Potential<T>,
    lambda: Complex<T>,
    mu: &ComplexField<T>,
    points: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    let g = v.grid();
    mu.grid().ensure_same(g)?;
    let margin = v.support_radius + T::lit(4.0) * g.cell();
    if let Some(p) = points.iter().find(|p| p.norm() < margin) {
        return Err(Error::invalid(format!("point {p} is within four cells of the support of v")));
    }
    let lam = Complex::new(lambda.re.f64(), lambda.im.f64());
    let src: Vec<(Complex<f64>, Complex<f64>)> = v
        .field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, vv)| vv.re != T::zero())
        .map(|(k, vv)| {
            let y = g.node_at(k);
            let s = mu.values()[k] * vv.re;
            (Complex::new(y.re.f64(), y.im.f64()), Complex::new(s.re.f64(), s.im.f64()))
        })
        .collect();
    let area = g.cell_area().f64();
    Ok(points
        .iter()
        .map(|p| {
            let z = Complex::new(p.re.f64(), p.im.f64());
            let acc: Complex<f64> = src.iter().map(|(y, s)| crate::special::faddeev_green(lam, z - y) * s).sum();
            let r = Complex::new(1.0, 0.0) - acc * area;
            Complex::new(T::lit(r.re), T::lit(r.im))
        })
        .collect())
}
