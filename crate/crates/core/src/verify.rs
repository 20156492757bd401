//! Self-checks behind `calderon verify`: the identity cases, the kernel
//! conventions, and (outside quick mode) a cross-pipeline oracle.

use crate::dbar::{DbarConfig, DbarSolver, Reconstruction};
use crate::error::Result;
use crate::faddeev::{scattering_direct, scattering_grid, solve_mu_support, FaddeevConfig, Provenance, ScatteringAmplitude};
use crate::field::{apply_multiplier, solid_cauchy, ComplexField, FaddeevKernel, GridSpec};
use crate::forward::{dtn_conductivity, dtn_schrodinger, op_norm_h12_hm12, BoundaryOperator, ForwardConfig, OperatorKind};
use crate::phantom::{Conductivity, GridRecipe, PhantomRecipe, Potential};
use crate::scatter::{h_from_dtn, h_from_dtn_at, PsiSource};
use crate::stability::{fit_log_modulus, log_term, perturb_dtn};
use num_complex::Complex64 as C;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check { name, passed, detail, seconds: t.elapsed().as_secs_f64() }
}

/// `max |A_{jk} - |k| δ_{jk}|`.
pub fn laplace_defect(op: &BoundaryOperator<f64>) -> f64 {
    op.max_abs_diff(&BoundaryOperator::laplace(op.n_modes, op.kind)).unwrap_or(f64::INFINITY)
}

/// `v ≡ 0`, `σ ≡ 1` through every stage.
pub fn identity_suite() -> Vec<Check> {
    let fwd = ForwardConfig { n_modes: 16, n_r: 256, n_theta: 256, ..ForwardConfig::default() };
    let grid = || GridSpec::<f64>::centered(2.1, 64, false);
    let lgrid = || GridSpec::<f64>::centered(8.0, 16, true);
    let zgrid = || GridSpec::<f64>::centered(1.5, 16, false);
    vec![
        run("Φ(v ≡ 0) = diag|k|", || {
            let e = laplace_defect(&dtn_schrodinger(&Potential::zero(grid()?, 4)?, &fwd)?);
            Ok((e <= 5e-3, format!("max deviation {e:.2e} (≤ 5e-3)")))
        }),
        run("Λ(σ ≡ 1) = diag|k|", || {
            let e = laplace_defect(&dtn_conductivity(&Conductivity::constant_one(grid()?)?, &fwd)?);
            Ok((e <= 5e-3, format!("max deviation {e:.2e} (≤ 5e-3)")))
        }),
        run("h(v ≡ 0) ≡ 0", || {
            let h = scattering_grid(&Potential::zero(grid()?, 4)?, &lgrid()?, &FaddeevConfig::default())?;
            Ok((h.is_zero(), format!("sup |h| = {:.1e}", h.field.sup_norm())))
        }),
        run("μ(v ≡ 0) ≡ 1", || {
            let v = Potential::zero(grid()?, 4)?;
            let mut worst = 0.0f64;
            for l in [C::new(0.5, 0.5), C::new(-3.0, 2.0)] {
                let mu = solve_mu_support(&v, l, &FaddeevConfig::default())?.mu;
                worst = worst.max(mu.values().iter().map(|m| (m - 1.0).norm()).fold(0.0, f64::max));
            }
            Ok((worst == 0.0, format!("sup |μ - 1| = {worst:.1e}")))
        }),
        run("Φ = Φ₀ pairs to h = 0", || {
            let op = BoundaryOperator::laplace(16, OperatorKind::Schrodinger);
            let l = C::new(1.0, -0.5);
            let h = h_from_dtn(&op, &op, l, &PsiSource::<f64>::Born.trace(l, 16)?)?;
            Ok((h.norm() == 0.0, format!("|h| = {:.1e}", h.norm())))
        }),
        run("h ≡ 0 reconstructs σ ≡ 1, v ≡ 0", || {
            let h = ScatteringAmplitude::zeros(lgrid()?, 4, Provenance::Direct)?;
            let rec = Reconstruction::new(&h, &zgrid()?, &DbarConfig::default())?;
            let s = rec.sigma()?.field.values().iter().map(|x| (x - 1.0).norm()).fold(0.0, f64::max);
            let v = rec.v_explicit()?.field.sup_norm().max(rec.v_asymptotic()?.field.sup_norm());
            let mu = DbarSolver::new(&h, DbarConfig::default())?.solve(C::new(0.3, 0.1))?;
            let m = mu.values.values().iter().map(|x| (x - 1.0).norm()).fold(0.0, f64::max);
            Ok((s <= 1e-6 && v <= 1e-6 && m == 0.0, format!("|σ - 1| = {s:.1e}, |v| = {v:.1e}, |μ - 1| = {m:.1e}")))
        }),
    ]
}

fn disk_bump(z: C, c: C, rho: f64) -> f64 {
    crate::phantom::bump_profile((z - c).norm_sqr() / (rho * rho))
}

/// Relative residual of `(-Δ - 4iλ∂̄)(g_λ ∗ f) = f` on the inner half of
/// the grid, with the operator applied spectrally.
pub fn faddeev_apply_residual(lambda: C, g: GridSpec<f64>) -> Result<f64> {
    let f = ComplexField::from_fn(g, |z| {
        C::new(disk_bump(z, C::new(0.1, -0.05), 0.9), 0.5 * disk_bump(z, C::new(-0.2, 0.1), 0.6))
    })?;
    let kern = FaddeevKernel::new(&g, lambda, None)?;
    let mut u = kern.apply_padded(f.values());
    let pg = kern.padded_grid();
    apply_multiplier(kern.fft(), &mut u, pg.cell(), |x1, x2| {
        C::new(x1 * x1 + x2 * x2, 0.0) + lambda * C::new(x1, x2) * 2.0
    });
    let (big, n) = (pg.n_side, g.n_side);
    let (mut num, mut den) = (0.0, 0.0);
    for i in n / 4..3 * n / 4 {
        for j in n / 4..3 * n / 4 {
            num += (u[i * big + j] - f.get(i, j)).norm_sqr();
            den += f.get(i, j).norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

/// Kernel conventions, the ∂̄ residual gate, and the lab's fit and
/// perturbation plumbing.
pub fn convention_suite() -> Vec<Check> {
    vec![
        run("solid Cauchy of the unit disk = z̄", || {
            let g = GridSpec::<f64>::centered(4.0, 512, false)?;
            let f = ComplexField::from_real_fn(g, |z| if z.norm() < 1.0 { 1.0 } else { 0.0 })?;
            let u = solid_cauchy(&f)?;
            let worst = (0..g.len())
                .filter(|&k| g.node_at(k).norm() < 0.75)
                .map(|k| (u.values()[k] - g.node_at(k).conj()).norm() / g.node_at(k).norm().max(0.1))
                .fold(0.0, f64::max);
            Ok((worst <= 1e-2, format!("max relative deviation {worst:.2e} (≤ 1e-2)")))
        }),
        run("Faddeev convolution inverts -Δ - 4iλ∂̄", || {
            let g = GridSpec::<f64>::centered(2.1, 256, false)?;
            let mut worst = 0.0f64;
            for l in [C::new(0.0, 0.0), C::new(2.0, 1.0), C::new(-7.5, 3.0), C::new(0.0, -64.0)] {
                worst = worst.max(faddeev_apply_residual(l, g)?);
            }
            Ok((worst <= 1e-6, format!("max residual {worst:.2e} (≤ 1e-6)")))
        }),
        run("∂̄ slices pass the residual gate", || {
            // Amplitude of a weak Gaussian: smooth, with a known solution.
            let g = GridSpec::<f64>::centered(8.0, 32, true)?;
            let f = ComplexField::from_fn(g, |l| {
                let w = 0.5;
                C::new(0.2 * std::f64::consts::PI * w * w * (-w * w * l.norm_sqr()).exp(), 0.0)
            })?;
            let h = ScatteringAmplitude::new(f, 4, Provenance::Direct)?;
            let cfg = DbarConfig::default();
            let solver = DbarSolver::new(&h, cfg)?;
            let mut worst = 0.0f64;
            for z in [C::new(0.0, 0.0), C::new(0.4, -0.3), C::new(-0.7, 0.5)] {
                worst = worst.max(solver.solve(z)?.residual);
            }
            Ok((worst <= cfg.residual_tol, format!("max residual {worst:.2e} (≤ {:.0e})", cfg.residual_tol)))
        }),
        run("perturbation has the requested norm", || {
            let phi = BoundaryOperator::<f64>::laplace(8, OperatorKind::Schrodinger);
            let p = perturb_dtn(&phi, 1e-3, 1)?;
            let d = op_norm_h12_hm12(&p, &phi)?;
            let sym = p.hermitian_defect().max(p.realness_defect());
            Ok(((d - 1e-3).abs() <= 1e-13 && sym <= 1e-15, format!("δ = {d:.12e}, symmetry defect {sym:.1e}")))
        }),
        run("log-modulus fit recovers an exact model", || {
            let pts: Vec<(f64, f64)> =
                (0..8).map(|k| 10f64.powi(-k - 1)).map(|d| (d, 2.0 * log_term(d).powi(-3))).collect();
            let f = fit_log_modulus(&pts)?;
            Ok(((f.c - 2.0).abs() <= 1e-10 && (f.alpha - 3.0).abs() <= 1e-10, format!("C = {:.12}, α = {:.12}", f.c, f.alpha)))
        }),
    ]
}

/// The amplitude from the DtN map against the direct amplitude.
pub fn oracle_suite() -> Vec<Check> {
    vec![run("Alessandrini identity matches direct h", || {
        let recipe = PhantomRecipe::radial_bump(0.5, [0.0, 0.0], 0.8, GridRecipe { s: 2.1, n: 256, offset: false });
        let v: Potential<f64> = recipe.potential()?;
        let phi = dtn_schrodinger(&v, &ForwardConfig::default())?;
        let phi0 = BoundaryOperator::laplace(phi.n_modes, OperatorKind::Schrodinger);
        let cfg = FaddeevConfig::default();
        let lams = [C::new(1.0, 0.5), C::new(-3.0, 2.0), C::new(0.0, 4.0)];
        let got = h_from_dtn_at(&phi, &phi0, &lams, &PsiSource::Oracle { v: &v, cfg })?;
        let mut worst = 0.0f64;
        for (l, h) in lams.iter().zip(got) {
            let d = scattering_direct(&v, *l, &cfg)?;
            worst = worst.max((h - d).norm() / d.norm());
        }
        Ok((worst <= 3e-2, format!("max relative deviation {worst:.2e} (≤ 3e-2)")))
    })]
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let pad = width - c.name.chars().count();
        out.push_str(&format!(
            "{}  {}{}  {:>7.2}s  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            " ".repeat(pad),
            c.seconds,
            c.detail
        ));
    }
    out
}
