//! Experiment harness for the logarithmic stability estimates: pairs of
//! phantoms (or a phantom and a perturbed DtN map) are pushed through the
//! whole pipeline and every intermediate error is recorded against the
//! operator-norm distance `δ` of their DtN maps.
//!
//! The lab works in `f64`; the pipeline underneath is generic.

use crate::dbar::{DbarConfig, DbarSolver, Reconstruction};
use crate::error::{Error, Result, Stage};
use crate::faddeev::{scattering_grid, FaddeevConfig, Provenance, ScatteringAmplitude};
use crate::field::ComplexField;
use crate::forward::{dtn_schrodinger, op_norm_h12_hm12, read_bop, write_bop, BoundaryOperator, ForwardConfig};
use crate::phantom::{GridRecipe, PhantomRecipe, Potential};
use crate::scalar::Real;
use crate::scatter::{h_from_dtn, PsiSource};
use num_complex::{Complex, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Largest admissible ratio between the bound constants of two records.
pub const BOUND_SLACK: f64 = 100.0;

/// Fits below this r² are flagged.
pub const R2_FLAG: f64 = 0.8;

fn default_p_values() -> Vec<f64> {
    vec![4.0 / 3.0, 2.0, 4.0]
}

fn default_lambda_grid() -> GridRecipe {
    GridRecipe { s: 8.0, n: 32, offset: true }
}

fn default_zgrid() -> GridRecipe {
    GridRecipe { s: 1.5, n: 16, offset: false }
}

fn default_probes() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [0.2, 0.1], [-0.4, 0.3]]
}

fn default_support() -> f64 {
    1.0
}

/// Everything an experiment needs besides the phantoms.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub faddeev: FaddeevConfig,
    #[serde(default)]
    pub dbar: DbarConfig,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: GridRecipe,
    #[serde(default = "default_zgrid")]
    pub zgrid: GridRecipe,
    /// Exponents of the λ-grid norms.
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// z points at which whole μ(z, ·) slices are compared.
    #[serde(default = "default_probes")]
    pub mu_probes: Vec<[f64; 2]>,
    /// Radius `l` of a disk containing every support.
    #[serde(default = "default_support")]
    pub support_bound: f64,
    /// Directory memoizing forward solves; `None` disables the cache.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            forward: ForwardConfig::default(),
            faddeev: FaddeevConfig::default(),
            dbar: DbarConfig::default(),
            lambda_grid: default_lambda_grid(),
            zgrid: default_zgrid(),
            p_values: default_p_values(),
            mu_probes: default_probes(),
            support_bound: default_support(),
            cache_dir: None,
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        self.forward.validate()?;
        self.lambda_grid.to_grid::<f64>()?;
        self.zgrid.to_grid::<f64>()?;
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(*p >= 1.0) || !p.is_finite()) {
            return Err(Error::invalid("p values must be finite and ≥ 1"));
        }
        for p in &self.mu_probes {
            if p[0].hypot(p[1]) > crate::dbar::DOMAIN_RADIUS {
                return Err(Error::invalid(format!("μ probe {p:?} lies outside the unit disk")));
            }
        }
        if !(self.support_bound > 0.0) {
            return Err(Error::invalid("support bound must be positive"));
        }
        Ok(())
    }
}

/// `log(3 + 1/δ)`.
pub fn log_term(delta: f64) -> f64 {
    (3.0 + 1.0 / delta).ln()
}

/// Canonical key for an exponent: `4/3 → "1.3333"`, `2 → "2"`.
pub fn p_label(p: f64) -> String {
    let s = format!("{p:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// λ-grid norms of one amplitude difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HLpError {
    /// `‖(h₂ - h₁)/λ̄‖_{L^p}`.
    pub over_lambda: f64,
    /// `‖h₂ - h₁‖_{L^p}`.
    pub plain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub phantom_grid: Option<GridRecipe>,
    pub lambda_grid: GridRecipe,
    pub zgrid: GridRecipe,
    pub n_modes: usize,
    /// Amplitude differences are only kept for `|λ| ≤ truncation`.
    pub truncation: Option<f64>,
}

/// One stability datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub phantoms: [String; 2],
    pub m: u32,
    /// `max ‖v_j‖_{m,1}`.
    #[serde(rename = "N")]
    pub n_bound: f64,
    pub delta: f64,
    pub err_v_sup: f64,
    pub err_v_asymptotic_sup: f64,
    pub err_sigma_sup: f64,
    pub err_h_lp: BTreeMap<String, HLpError>,
    pub err_mu0_sup: f64,
    /// `sup_z ‖μ₂(z, ·) - μ₁(z, ·)‖_{L⁴}` over the probe points.
    pub err_mu_l4: f64,
    pub grid: GridMeta,
}

impl ExperimentRecord {
    fn check(&self) -> Result<()> {
        let mut all = vec![
            self.n_bound,
            self.delta,
            self.err_v_sup,
            self.err_v_asymptotic_sup,
            self.err_sigma_sup,
            self.err_mu0_sup,
            self.err_mu_l4,
        ];
        all.extend(self.err_h_lp.values().flat_map(|e| [e.over_lambda, e.plain]));
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::numerical(Stage::StabilityLab, "record has a negative or non-finite entry"));
        }
        Ok(())
    }

    pub fn h_error(&self, p: f64) -> Option<HLpError> {
        self.err_h_lp.get(&p_label(p)).copied()
    }
}

/// Pipeline artifacts of one phantom, reused across all pairs it enters.
pub struct PhantomRun {
    pub id: String,
    pub m: u32,
    pub norm_m1: f64,
    pub phi: BoundaryOperator<f64>,
    pub h: ScatteringAmplitude<f64>,
    pub sigma: ComplexField<f64>,
    pub v_explicit: ComplexField<f64>,
    pub v_asymptotic: ComplexField<f64>,
    pub mu0: ComplexField<f64>,
    pub mu_probes: Vec<ComplexField<f64>>,
    pub phantom_grid: Option<GridRecipe>,
    pub truncation: Option<f64>,
}

impl PhantomRun {
    /// Forward map, direct scattering amplitude and reconstructions of `v`.
    pub fn from_potential(id: impl Into<String>, v: &Potential<f64>, cfg: &LabConfig) -> Result<Self> {
        cfg.validate()?;
        let phi = dtn_schrodinger(v, &cfg.forward)?;
        Self::with_phi(id.into(), v, phi, None, cfg)
    }

    /// As [`PhantomRun::from_potential`], with the forward solve memoized in
    /// `cfg.cache_dir`.
    pub fn from_recipe(recipe: &PhantomRecipe, cfg: &LabConfig) -> Result<Self> {
        cfg.validate()?;
        let v = recipe.potential::<f64>()?;
        let phi = cached_dtn(recipe, &v, &cfg.forward, cfg.cache_dir.as_deref())?;
        Self::with_phi(recipe.id(), &v, phi, Some(recipe.grid()), cfg)
    }

    fn with_phi(
        id: String,
        v: &Potential<f64>,
        phi: BoundaryOperator<f64>,
        phantom_grid: Option<GridRecipe>,
        cfg: &LabConfig,
    ) -> Result<Self> {
        let lgrid = cfg.lambda_grid.to_grid()?;
        let h = scattering_grid(v, &lgrid, &cfg.faddeev)?;
        Self::from_amplitude(id, phi, h, v.norm_m1, phantom_grid, None, cfg)
    }

    /// Reconstructions from a given amplitude.
    pub fn from_amplitude(
        id: String,
        phi: BoundaryOperator<f64>,
        h: ScatteringAmplitude<f64>,
        norm_m1: f64,
        phantom_grid: Option<GridRecipe>,
        truncation: Option<f64>,
        cfg: &LabConfig,
    ) -> Result<Self> {
        let zgrid = cfg.zgrid.to_grid()?;
        let rec = Reconstruction::new(&h, &zgrid, &cfg.dbar)?;
        let solver = DbarSolver::new(&h, cfg.dbar)?;
        let mu_probes = cfg
            .mu_probes
            .iter()
            .map(|p| solver.solve(Complex64::new(p[0], p[1])).map(|s| s.values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id,
            m: h.m,
            norm_m1,
            sigma: rec.sigma()?.field,
            v_explicit: rec.v_explicit()?.field,
            v_asymptotic: rec.v_asymptotic()?.field,
            mu0: rec.mu0_field()?,
            mu_probes,
            phi,
            h,
            phantom_grid,
            truncation,
        })
    }
}

fn cache_key(recipe: &PhantomRecipe, fwd: &ForwardConfig) -> Result<String> {
    let payload = serde_json::to_string(&(recipe, fwd, env!("CARGO_PKG_VERSION")))?;
    let digest = Sha256::digest(payload.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Φ for `v`, read from or written to `dir` under a hash of the recipe and
/// the forward configuration.
pub fn cached_dtn(
    recipe: &PhantomRecipe,
    v: &Potential<f64>,
    fwd: &ForwardConfig,
    dir: Option<&Path>,
) -> Result<BoundaryOperator<f64>> {
    let Some(dir) = dir else {
        return dtn_schrodinger(v, fwd);
    };
    let path = dir.join(format!("{}.bop", cache_key(recipe, fwd)?));
    if path.exists() {
        match read_bop(&path) {
            Ok(op) if op.n_modes == fwd.n_modes => return Ok(op),
            Ok(_) | Err(_) => log::warn!("ignoring unusable cache entry {}", path.display()),
        }
    }
    let op = dtn_schrodinger(v, fwd)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    write_bop(&op, &tmp)?;
    std::fs::rename(&tmp, &path)?;
    Ok(op)
}

fn lp_over_lambda(d: &ComplexField<f64>, p: f64) -> Result<f64> {
    Ok(d.map(|l, x| x / l.conj())?.lp_norm(p))
}

/// Compares two pipeline runs. Fails when their DtN maps coincide.
pub fn compare(a: &PhantomRun, b: &PhantomRun, cfg: &LabConfig) -> Result<ExperimentRecord> {
    if a.m != b.m {
        return Err(Error::invalid(format!("phantoms declare different m ({} vs {})", a.m, b.m)));
    }
    if a.phantom_grid != b.phantom_grid {
        return Err(Error::GridMismatch("phantoms live on different grids".into()));
    }
    let delta = op_norm_h12_hm12(&a.phi, &b.phi)?;
    let scale = op_norm_h12_hm12(&a.phi, &BoundaryOperator::laplace(a.phi.n_modes, a.phi.kind))?.max(1.0);
    if !(delta > 1e-14 * scale) {
        return Err(Error::invalid("the two phantoms have the same DtN map (δ = 0)"));
    }
    let dh = b.h.field.axpby(Complex64::new(-1.0, 0.0), &a.h.field, Complex64::new(1.0, 0.0))?;
    let mut err_h_lp = BTreeMap::new();
    for &p in &cfg.p_values {
        err_h_lp.insert(p_label(p), HLpError { over_lambda: lp_over_lambda(&dh, p)?, plain: dh.lp_norm(p) });
    }
    let err_mu_l4 = a
        .mu_probes
        .iter()
        .zip(&b.mu_probes)
        .map(|(x, y)| Ok(x.zip_with(y, |s, t| s - t)?.lp_norm(4.0)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let truncation = match (a.truncation, b.truncation) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let rec = ExperimentRecord {
        phantoms: [a.id.clone(), b.id.clone()],
        m: a.m,
        n_bound: a.norm_m1.max(b.norm_m1),
        delta,
        err_v_sup: a.v_explicit.max_abs_diff(&b.v_explicit)?,
        err_v_asymptotic_sup: a.v_asymptotic.max_abs_diff(&b.v_asymptotic)?,
        err_sigma_sup: a.sigma.max_abs_diff(&b.sigma)?,
        err_h_lp,
        err_mu0_sup: a.mu0.max_abs_diff(&b.mu0)?,
        err_mu_l4,
        grid: GridMeta {
            phantom_grid: a.phantom_grid,
            lambda_grid: cfg.lambda_grid,
            zgrid: cfg.zgrid,
            n_modes: a.phi.n_modes,
            truncation,
        },
    };
    rec.check()?;
    Ok(rec)
}

/// The full pipeline for two potentials on the same grid.
pub fn run_pair(v1: &Potential<f64>, v2: &Potential<f64>, cfg: &LabConfig) -> Result<ExperimentRecord> {
    v1.grid().ensure_same(v2.grid())?;
    if v1.m != v2.m {
        return Err(Error::invalid(format!("phantoms declare different m ({} vs {})", v1.m, v2.m)));
    }
    if v1.field == v2.field {
        return Err(Error::invalid("the two phantoms are identical (δ = 0)"));
    }
    let a = PhantomRun::from_potential("v1", v1, cfg)?;
    let b = PhantomRun::from_potential("v2", v2, cfg)?;
    compare(&a, &b, cfg)
}

/// As [`run_pair`] for conductivities, through their potentials.
pub fn run_pair_conductivity(
    s1: &crate::phantom::Conductivity<f64>,
    s2: &crate::phantom::Conductivity<f64>,
    m: u32,
    cfg: &LabConfig,
) -> Result<ExperimentRecord> {
    let v1 = crate::phantom::potential_from_conductivity(s1, m)?;
    let v2 = crate::phantom::potential_from_conductivity(s2, m)?;
    run_pair(&v1, &v2, cfg)
}

/// Synthetic perturbations of the base phantom's DtN map.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// A base phantom paired with each member, plus optional synthetic
/// perturbations of the base.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub base: PhantomRecipe,
    pub members: Vec<PhantomRecipe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

/// Radius `log(3 + 1/δ)/(4l)` inside which a synthetic amplitude
/// perturbation is kept: there the pairing's `e^{2l|λ|}` growth amplifies
/// `δ` to at most `√δ`-size.
pub fn truncation_radius(delta: f64, support_bound: f64) -> f64 {
    log_term(delta) / (4.0 * support_bound)
}

/// `Φ′ = perturb_dtn(Φ, δ)` fed through the Born-trace pairing: the
/// amplitude of the base shifted by the pairing of `Φ′ - Φ`, kept on
/// `|λ| ≤` [`truncation_radius`].
pub fn synthetic_run(base: &PhantomRun, delta: f64, seed: u64, cfg: &LabConfig) -> Result<PhantomRun> {
    let phi = perturb_dtn(&base.phi, delta, seed)?;
    let r = truncation_radius(delta, cfg.support_bound);
    let g = *base.h.grid();
    let mut values = base.h.field.values().to_vec();
    let nb = phi.n_modes;
    let shifts: Vec<(usize, Complex64)> = {
        use rayon::prelude::*;
        (0..g.len())
            .into_par_iter()
            .filter(|&k| g.node_at(k).norm() <= r)
            .map(|k| {
                let l = g.node_at(k);
                Ok((k, h_from_dtn(&phi, &base.phi, l, &PsiSource::<f64>::Born.trace(l, nb)?)?))
            })
            .collect::<Result<_>>()?
    };
    for (k, d) in shifts {
        values[k] += d;
    }
    let mut h = ScatteringAmplitude::new(ComplexField::new(g, values)?, base.m, Provenance::FromDtnBorn)?;
    h.phantom_recipe = base.h.phantom_recipe.clone();
    PhantomRun::from_amplitude(
        format!("{}+perturb(δ={delta:e},seed={seed})", base.id),
        phi,
        h,
        base.norm_m1,
        base.phantom_grid,
        Some(r),
        cfg,
    )
}

/// One record per member (paired with the base) followed by one per
/// synthetic δ. Phantom runs are computed once each, in order, with the
/// parallelism inside each run; the output does not depend on the thread
/// count.
pub fn run_family(family: &Family, cfg: &LabConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let base = PhantomRun::from_recipe(&family.base, cfg)?;
    let mut records = Vec::new();
    for member in &family.members {
        log::info!("family member {}", member.id());
        let run = PhantomRun::from_recipe(member, cfg)?;
        records.push(compare(&base, &run, cfg)?);
    }
    if let Some(syn) = &family.synthetic {
        for (k, &delta) in syn.deltas.iter().enumerate() {
            if !(delta > 0.0) {
                return Err(Error::invalid("synthetic δ must be positive"));
            }
            log::info!("synthetic δ = {delta:e}");
            let run = synthetic_run(&base, delta, syn.seed.wrapping_add(k as u64), cfg)?;
            records.push(compare(&base, &run, cfg)?);
        }
    }
    Ok(records)
}

/// `Φ + E` with `E` a seeded random direction that is self-adjoint and maps
/// real data to real data, scaled so that `op_norm_h12_hm12(Φ + E, Φ) = δ`.
pub fn perturb_dtn<T: Real>(phi: &BoundaryOperator<T>, delta: f64, seed: u64) -> Result<BoundaryOperator<T>> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("perturbation size must be a finite δ ≥ 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(phi.clone());
    }
    let n = phi.n_modes as i64;
    let d = phi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..d * d)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let at = |j: i64, k: i64| raw[((j + n) as usize) * d + (k + n) as usize];
    // Average over the group generated by A ↦ A* and A ↦ conj(A(-·,-·)).
    let sym: Vec<Complex<T>> = (0..d * d)
        .map(|idx| {
            let (j, k) = ((idx / d) as i64 - n, (idx % d) as i64 - n);
            let e = (at(j, k) + at(k, j).conj() + at(-j, -k).conj() + at(-k, -j)) * 0.25;
            Complex::new(T::lit(e.re), T::lit(e.im))
        })
        .collect();
    let dir = BoundaryOperator::new(phi.n_modes, phi.kind, sym)?;
    let zero = BoundaryOperator::new(phi.n_modes, phi.kind, vec![Complex::new(T::zero(), T::zero()); d * d])?;
    let norm = op_norm_h12_hm12(&dir, &zero)?.f64();
    phi.add_scaled(&dir, T::lit(delta / norm))
}

/// Least-squares fit of `err ≈ C·log(3 + 1/δ)^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn flagged(&self) -> bool {
        !(self.r_squared >= R2_FLAG)
    }
}

/// Fits `log err = log C - α log log(3 + 1/δ)` over `(δ, err)` points with
/// `err > 0`. Needs ≥ 4 such points spanning ≥ 2 decades of δ.
pub fn fit_log_modulus(points: &[(f64, f64)]) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0 && d.is_finite() && e.is_finite())
        .map(|&(d, e)| (log_term(d).ln(), e.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::invalid(format!("need at least 4 records with positive δ and error, got {}", pts.len())));
    }
    let (lo, hi) = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (d, _)| (lo.min(*d), hi.max(*d)));
    if hi / lo < 100.0 {
        return Err(Error::invalid(format!("δ spans {:.2} decades; need at least 2", (hi / lo).log10())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-12 * n) {
        return Err(Error::invalid("degenerate spread of log log(3 + 1/δ)"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(FitResult { c: intercept.exp(), alpha: -slope, r_squared, n_points: pts.len() })
}

/// One-sided check of `err ≤ C·log(3 + 1/δ)^{-α}` at a fixed α: every
/// record has its own smallest admissible constant `C_k`; the bound holds
/// with bounded slack when `max C_k ≤ BOUND_SLACK · min C_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub alpha: f64,
    /// Smallest constant valid for every record.
    pub c_bound: f64,
    pub c_min: f64,
    pub slack: f64,
    pub holds: bool,
    pub n_points: usize,
}

pub fn check_bound_form(points: &[(f64, f64)], alpha: f64) -> Result<BoundCheck> {
    let cs: Vec<f64> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > 0.0)
        .map(|&(d, e)| e * log_term(d).powf(alpha))
        .collect();
    if cs.is_empty() {
        return Err(Error::invalid("no record with positive error"));
    }
    let c_bound = cs.iter().cloned().fold(0.0, f64::max);
    let c_min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let slack = c_bound / c_min;
    Ok(BoundCheck { alpha, c_bound, c_min, slack, holds: slack <= BOUND_SLACK, n_points: cs.len() })
}

/// Free fit and fixed-exponent bound check of one error quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityReport {
    pub name: String,
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    pub bound: Option<BoundCheck>,
}

impl QuantityReport {
    pub fn new(name: impl Into<String>, points: &[(f64, f64)], alpha: Option<f64>) -> Self {
        let (fit, fit_error) = match fit_log_modulus(points) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let bound = alpha.and_then(|a| check_bound_form(points, a).ok());
        Self { name: name.into(), fit, fit_error, bound }
    }

    /// Bound holds (vacuously when every error is 0).
    pub fn bound_holds(&self) -> bool {
        self.bound.map_or(true, |b| b.holds)
    }

    pub fn flagged(&self) -> bool {
        self.fit.map_or(true, |f| f.flagged())
    }
}

fn points(records: &[ExperimentRecord], f: impl Fn(&ExperimentRecord) -> f64) -> Vec<(f64, f64)> {
    records.iter().map(|r| (r.delta, f(r))).collect()
}

fn common_m(records: &[ExperimentRecord]) -> Result<u32> {
    let m = records.first().ok_or_else(|| Error::invalid("no records"))?.m;
    if records.iter().any(|r| r.m != m) {
        return Err(Error::invalid("records mix different m"));
    }
    Ok(m)
}

/// Ratio `sup_z ‖Δμ‖_{L⁴} / ‖Δh/λ̄‖_{L^{4/3}}` per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratios: Vec<f64>,
    pub median: f64,
    pub max_deviation: f64,
    /// Every ratio within the tolerance of the median.
    pub stable: bool,
    pub tolerance: f64,
}

fn ratio_report(ratios: Vec<f64>, tolerance: f64) -> RatioReport {
    let mut sorted: Vec<f64> = ratios.iter().cloned().filter(|r| r.is_finite()).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if sorted.is_empty() {
        f64::NAN
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let max_deviation = sorted.iter().map(|r| (r / median - 1.0).abs()).fold(0.0, f64::max);
    RatioReport { stable: max_deviation <= tolerance, ratios, median, max_deviation, tolerance }
}

/// Amplitude and Faddeev-function stability over a family of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HStabilityReport {
    pub m: u32,
    pub quantities: Vec<QuantityReport>,
    pub mu_companion: RatioReport,
}

impl HStabilityReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.quantities.iter().all(|q| q.bound_holds())
    }
}

/// Fits and bound checks of `‖Δh/λ̄‖_{L^p}` (α = m + 1 - 2/p) and
/// `‖Δh‖_{L^p}` (α = m - 2/p), and the ratio of `sup_z ‖Δμ‖_{L⁴}` to
/// `‖Δh/λ̄‖_{L^{4/3}}`.
pub fn check_h_stability(records: &[ExperimentRecord], p_values: &[f64]) -> Result<HStabilityReport> {
    let m = common_m(records)? as f64;
    let mut quantities = Vec::new();
    for &p in p_values {
        let key = p_label(p);
        let get = |r: &ExperimentRecord| r.err_h_lp.get(&key).copied();
        if records.iter().any(|r| get(r).is_none()) {
            return Err(Error::invalid(format!("records lack the L^{key} amplitude errors")));
        }
        let over = points(records, |r| get(r).unwrap().over_lambda);
        let plain = points(records, |r| get(r).unwrap().plain);
        quantities.push(QuantityReport::new(format!("h_over_lambda_L{key}"), &over, Some(m + 1.0 - 2.0 / p)));
        quantities.push(QuantityReport::new(format!("h_L{key}"), &plain, Some(m - 2.0 / p)));
    }
    let key = p_label(4.0 / 3.0);
    let ratios = records
        .iter()
        .filter_map(|r| {
            let d = r.err_h_lp.get(&key)?.over_lambda;
            (d > 0.0).then(|| r.err_mu_l4 / d)
        })
        .collect();
    Ok(HStabilityReport { m: m as u32, quantities, mu_companion: ratio_report(ratios, 0.5) })
}

/// `‖Δμ(·, 0)‖_∞ / max(‖Δh/λ̄‖_{L^{4/3}}, ‖Δh/λ̄‖_{L⁴})` per record.
pub fn check_mu0_stability(records: &[ExperimentRecord]) -> Result<RatioReport> {
    common_m(records)?;
    let (k1, k2) = (p_label(4.0 / 3.0), p_label(4.0));
    let mut ratios = Vec::new();
    for r in records {
        let (Some(a), Some(b)) = (r.err_h_lp.get(&k1), r.err_h_lp.get(&k2)) else {
            return Err(Error::invalid("records lack the L^{4/3} and L^4 amplitude errors"));
        };
        let d = a.over_lambda.max(b.over_lambda);
        if d > 0.0 {
            ratios.push(r.err_mu0_sup / d);
        }
    }
    let mut rep = ratio_report(ratios, f64::INFINITY);
    rep.stable = rep.ratios.iter().all(|r| r.is_finite());
    Ok(rep)
}

/// Everything written to `fits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub m: u32,
    pub n_records: usize,
    pub v: QuantityReport,
    pub v_asymptotic: QuantityReport,
    pub sigma: QuantityReport,
    pub h: HStabilityReport,
    pub mu0: RatioReport,
}

impl StabilityReport {
    /// The v-error (α = m - 2) and amplitude bounds.
    pub fn bounds_hold(&self) -> bool {
        self.v.bound_holds() && self.h.all_bounds_hold()
    }

    pub fn flagged(&self) -> Vec<&str> {
        let mut out: Vec<&str> = [&self.v, &self.v_asymptotic, &self.sigma]
            .into_iter()
            .chain(&self.h.quantities)
            .filter(|q| q.flagged())
            .map(|q| q.name.as_str())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Theorem-form report: v-error against α = m - 2; σ-error fitted (any
/// α < m is admissible, so its bound is checked at α = m - 1); amplitude
/// and μ reports as in [`check_h_stability`] and [`check_mu0_stability`].
pub fn analyze(records: &[ExperimentRecord], p_values: &[f64]) -> Result<StabilityReport> {
    let m = common_m(records)?;
    let mf = m as f64;
    Ok(StabilityReport {
        m,
        n_records: records.len(),
        v: QuantityReport::new("v", &points(records, |r| r.err_v_sup), Some(mf - 2.0)),
        v_asymptotic: QuantityReport::new("v_asymptotic", &points(records, |r| r.err_v_asymptotic_sup), Some(mf - 2.0)),
        sigma: QuantityReport::new("sigma", &points(records, |r| r.err_sigma_sup), Some(mf - 1.0)),
        h: check_h_stability(records, p_values)?,
        mu0: check_mu0_stability(records)?,
    })
}

/// Shape of `|h|` at large `|λ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub m: u32,
    /// Slope of `log max_{ring} |h|` against `log |λ|` on `[Λ/4, Λ]`.
    pub ring_slope: Option<f64>,
    pub ring_r_squared: Option<f64>,
    /// `(R, ‖h‖_{L²(|λ|>R)}, ‖h/λ̄‖_{L²(|λ|>R)})`.
    pub tails: Vec<(f64, f64, f64)>,
    pub tail_exponent: Option<f64>,
    pub tail_r_squared: Option<f64>,
    pub tail_exponent_over_lambda: Option<f64>,
    pub ring_ok: bool,
    pub tail_ok: bool,
}

fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Some((slope, if syy > 0.0 { 1.0 - res / syy } else { 1.0 }))
}

/// Number of dyadic-ish radii in the tail sweep `R ∈ [Λ/8, Λ/2]`.
const TAIL_RADII: usize = 5;

/// Ring fit of `log|h|` and L² tail exponents. The λ-grid must reach
/// `|λ| ≥ 8`.
pub fn check_h_decay<T: Real>(h: &ScatteringAmplitude<T>, m: u32) -> Result<DecayReport> {
    let g = h.grid();
    let reach = (g.half_width - g.center.re.abs().max(g.center.im.abs())).f64();
    if reach < 8.0 {
        return Err(Error::invalid(format!("λ-grid reaches |λ| = {reach:.2}; decay fits need at least 8")));
    }
    let nodes: Vec<(f64, f64, f64)> = (0..g.len())
        .map(|k| {
            let l = g.node_at(k);
            let v = h.field.values()[k];
            let (r, a) = (l.norm().f64(), v.norm().f64());
            (r, a, a / r)
        })
        .collect();
    let area = g.cell_area().f64();
    let tails: Vec<(f64, f64, f64)> = (0..TAIL_RADII)
        .map(|j| {
            let r = reach / 8.0 * 2f64.powf(2.0 * j as f64 / (TAIL_RADII - 1) as f64);
            let (a, b) = nodes
                .iter()
                .filter(|n| n.0 > r)
                .fold((0.0, 0.0), |(a, b), n| (a + n.1 * n.1, b + n.2 * n.2));
            (r, (a * area).sqrt(), (b * area).sqrt())
        })
        .collect();
    if h.is_zero() {
        return Ok(DecayReport {
            m,
            ring_slope: None,
            ring_r_squared: None,
            tails,
            tail_exponent: None,
            tail_r_squared: None,
            tail_exponent_over_lambda: None,
            ring_ok: true,
            tail_ok: true,
        });
    }
    let cell = g.cell().f64();
    let n_bins = ((reach - reach / 4.0) / cell).floor().max(1.0) as usize;
    let width = (reach - reach / 4.0) / n_bins as f64;
    let mut ring_max = vec![0.0f64; n_bins];
    for n in &nodes {
        if n.0 >= reach / 4.0 && n.0 < reach {
            let b = (((n.0 - reach / 4.0) / width) as usize).min(n_bins - 1);
            ring_max[b] = ring_max[b].max(n.1);
        }
    }
    let ring_pts: Vec<(f64, f64)> = ring_max
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(b, v)| ((reach / 4.0 + (b as f64 + 0.5) * width).ln(), v.ln()))
        .collect();
    let ring = line_fit(&ring_pts);
    let tail_fit = |sel: fn(&(f64, f64, f64)) -> f64| {
        let pts: Vec<(f64, f64)> = tails.iter().filter(|t| sel(t) > 0.0).map(|t| (t.0.ln(), sel(t).ln())).collect();
        line_fit(&pts)
    };
    let tail = tail_fit(|t| t.1);
    let tail_over = tail_fit(|t| t.2);
    let mf = m as f64;
    Ok(DecayReport {
        m,
        ring_slope: ring.map(|r| r.0),
        ring_r_squared: ring.map(|r| r.1),
        tail_exponent: tail.map(|t| t.0),
        tail_r_squared: tail.map(|t| t.1),
        tail_exponent_over_lambda: tail_over.map(|t| t.0),
        ring_ok: ring.map_or(false, |r| r.0 <= -mf + 0.5),
        tail_ok: tail.map_or(false, |t| (t.0 + (mf - 1.0)).abs() <= 0.5),
        tails,
    })
}

/// `bound` column of the plot data: `C·log(3 + 1/δ)^{-α}` with the v-fit's
/// bound constant.
pub fn plot_rows(records: &[ExperimentRecord], report: &StabilityReport) -> Vec<[f64; 5]> {
    let (c, alpha) = report.v.bound.map_or((f64::NAN, (report.m as f64) - 2.0), |b| (b.c_bound, b.alpha));
    let mut rows: Vec<[f64; 5]> = records
        .iter()
        .map(|r| {
            let l = log_term(r.delta);
            [r.delta, l.ln(), r.err_v_sup, r.err_sigma_sup, c * l.powf(-alpha)]
        })
        .collect();
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(p_label(4.0 / 3.0), "1.3333");
        assert_eq!(p_label(2.0), "2");
        assert_eq!(p_label(4.0), "4");
    }
}
